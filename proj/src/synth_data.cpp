#include "mssr/synth_data.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "fmt_compat.hpp"
#include "json.hpp"
#include "rng.hpp"

using nlohmann::json;

namespace mssr {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kNoiseBandWidth = 0.30;
constexpr int kToneHarmonics = 30;

// Stream tags; arbitrary but fixed so every consumer draws independently.
enum : std::uint64_t {
  kTagBank = 1,
  kTagEvent = 2,
  kTagSensor = 3,
  kTagInterference = 4,
  kTagNoise = 5,
};

Eigen::VectorXd damped_sum(long len, long onset, const std::array<double, 3>& freqs,
                           const std::array<double, 3>& damps, const std::array<double, 3>& amps,
                           const std::array<double, 3>& phases) {
  Eigen::VectorXd x = Eigen::VectorXd::Zero(len);
  for (long t = onset; t < len; ++t) {
    const double dt = static_cast<double>(t - onset);
    double v = 0.0;
    for (int k = 0; k < 3; ++k)
      v += amps[k] * std::exp(-damps[k] * dt) * std::sin(2.0 * kPi * freqs[k] * dt + phases[k]);
    x[t] = v;
  }
  return x;
}

void normalize_energy(Eigen::VectorXd& x) {
  const double nrm = x.norm();
  if (nrm > 0.0) x /= nrm;
}

void validate_synth_config(const SynthConfig& cfg) {
  if (cfg.classes < 2) throw ConfigError("need at least two classes");
  if (cfg.sensors < 1) throw ConfigError("need at least one sensor");
  if (cfg.train_per_class < 1 || cfg.test_per_class < 0)
    throw ConfigError("sample counts must be positive (test may be zero)");
  if (cfg.signal_len < 64) throw ConfigError("signal_len is too short");
  if (cfg.awgn_ratio < 0.0) throw ConfigError("awgn_ratio must be non-negative");
  if (cfg.features.keep < 1) throw ConfigError("features.keep must be positive");
  if (cfg.features.plan.segment_len > cfg.signal_len)
    throw ConfigError("segment_len exceeds signal_len");
  if (cfg.features.detect_window > cfg.signal_len)
    throw ConfigError("detect_window exceeds signal_len");
}

}  // namespace

const char* interference_name(InterferenceKind k) {
  switch (k) {
    case InterferenceKind::tone: return "tone";
    case InterferenceKind::chirp: return "chirp";
    case InterferenceKind::noise_band: return "noise_band";
  }
  return "?";
}

std::optional<InterferenceKind> interference_from_name(const std::string& name) {
  if (name == "tone") return InterferenceKind::tone;
  if (name == "chirp") return InterferenceKind::chirp;
  if (name == "noise_band") return InterferenceKind::noise_band;
  return std::nullopt;
}

ClassBank make_class_bank(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  ClassBank bank;
  bank.freqs.resize(cfg.classes);
  bank.damps.resize(cfg.classes);
  bank.amps.resize(cfg.classes);

  const long tmpl_len = std::min<long>(cfg.signal_len, 2048);
  for (int c = 0; c < cfg.classes; ++c) {
    bool accepted = false;
    for (int attempt = 0; attempt < 200 && !accepted; ++attempt) {
      Rng rng(cfg.seed, kTagBank, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(attempt));
      for (int k = 0; k < 3; ++k) {
        bank.freqs[c][k] = rng.uniform(0.03, 0.42);
        bank.damps[c][k] = rng.uniform(0.002, 0.008);
        bank.amps[c][k] = rng.uniform(0.25, 1.0);
      }
      std::sort(bank.freqs[c].begin(), bank.freqs[c].end());
      if (bank.freqs[c][1] - bank.freqs[c][0] < 0.02 || bank.freqs[c][2] - bank.freqs[c][1] < 0.02)
        continue;

      // Templates of distinct classes must stay decorrelated, otherwise the
      // classification task is ill-posed by construction.
      accepted = true;
      const Eigen::VectorXd tc = class_template(bank, c, tmpl_len);
      for (int prev = 0; prev < c && accepted; ++prev) {
        const Eigen::VectorXd tp = class_template(bank, prev, tmpl_len);
        if (std::abs(tc.dot(tp)) >= 0.5) accepted = false;
      }
    }
    if (!accepted)
      throw ConfigError(format_msg("could not draw a decorrelated template for class %d", c));
  }
  return bank;
}

Eigen::VectorXd class_template(const ClassBank& bank, int class_id, long len) {
  Eigen::VectorXd x = damped_sum(len, 0, bank.freqs[class_id], bank.damps[class_id],
                                 bank.amps[class_id], {0.0, 0.0, 0.0});
  normalize_energy(x);
  return x;
}

Eigen::VectorXd gen_event(const SynthConfig& cfg, const ClassBank& bank, int class_id, int sensor,
                          int sample_index, long* onset_out) {
  if (class_id < 0 || class_id >= cfg.classes)
    throw ConfigError(format_msg("class id %d out of range", class_id));
  if (sensor < 0 || sensor >= cfg.sensors)
    throw ConfigError(format_msg("sensor %d out of range", sensor));

  // Event-level draws are shared by all sensors: one physical event, one
  // onset, one base phase set.
  Rng ev(cfg.seed, kTagEvent, static_cast<std::uint64_t>(class_id),
         static_cast<std::uint64_t>(sample_index));
  const double onset_jitter = ev.uniform(-1.0, 1.0);
  const long onset =
      std::lround(0.4373 * static_cast<double>(cfg.signal_len) +
                  onset_jitter * 0.02 * static_cast<double>(cfg.signal_len));
  std::array<double, 3> base_phase;
  for (int k = 0; k < 3; ++k) base_phase[k] = ev.uniform(0.0, 2.0 * kPi);

  Rng sj(cfg.seed, kTagSensor, static_cast<std::uint64_t>(class_id),
         static_cast<std::uint64_t>(sample_index), static_cast<std::uint64_t>(sensor));
  // Distinct sensors see the same event through different couplings and
  // paths, so each gets its own spectral coloring of the class template:
  // component gains, small peak-frequency shifts, and decay rates all move.
  std::array<double, 3> freqs, damps, amps, phases;
  for (int k = 0; k < 3; ++k) {
    amps[k] = bank.amps[class_id][k] * (1.0 + 0.2 * sj.uniform(-1.0, 1.0));
    phases[k] = base_phase[k] + 0.2 * kPi * sj.uniform(-1.0, 1.0);
    freqs[k] = bank.freqs[class_id][k] * (1.0 + 0.05 * sj.uniform(-1.0, 1.0));
    damps[k] = bank.damps[class_id][k] * (1.0 + 0.3 * sj.uniform(-1.0, 1.0));
  }

  Eigen::VectorXd x = damped_sum(cfg.signal_len, onset, freqs, damps, amps, phases);
  // Small per-sensor broadband perturbation: sensor self-noise plus the
  // rough broadband crack of a physical transient. Without it the damped
  // sinusoids have a near-zero spectral valley floor and the log spectrum
  // (hence the cepstrum) becomes hypersensitive to any added corruption.
  const double floor_amp = std::sqrt(1e-2 * x.squaredNorm() / static_cast<double>(cfg.signal_len));
  for (long t = 0; t < cfg.signal_len; ++t) x[t] += floor_amp * sj.normal();
  normalize_energy(x);
  if (onset_out) *onset_out = onset;
  return x;
}

Eigen::VectorXd RawEvent::observed(int sensor) const {
  Eigen::VectorXd x = clean[sensor];
  if (!interference.empty()) x += interference[sensor];
  if (!noise.empty()) x += noise[sensor];
  return x;
}

namespace {

Eigen::VectorXd draw_interference(const SynthConfig& cfg, int class_id, int sample_index) {
  Rng rng(cfg.seed, kTagInterference, static_cast<std::uint64_t>(class_id),
          static_cast<std::uint64_t>(sample_index));
  const long n = cfg.signal_len;
  Eigen::VectorXd w(n);
  switch (cfg.interference) {
    case InterferenceKind::tone: {
      // Engine-like tonal interferer: a low fundamental with a stack of
      // decaying harmonics. The comb imprints a strong periodic ripple on the
      // log spectrum, which is what makes this kind of interference so
      // damaging for cepstral classifiers.
      const double f0 = rng.uniform(0.02, 0.05);
      w.setZero();
      for (int k = 1; k <= kToneHarmonics; ++k) {
        const double f = f0 * k;
        if (f >= 0.48) break;
        const double amp = (1.0 + 0.3 * rng.uniform(-1.0, 1.0)) / std::sqrt(double(k));
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        for (long t = 0; t < n; ++t) w[t] += amp * std::sin(2.0 * kPi * f * t + phi);
      }
      break;
    }
    case InterferenceKind::chirp: {
      const double f0 = rng.uniform(0.05, 0.40);
      const double f1 = rng.uniform(0.05, 0.40);
      const double phi = rng.uniform(0.0, 2.0 * kPi);
      for (long t = 0; t < n; ++t) {
        const double tau = static_cast<double>(t);
        w[t] = std::sin(2.0 * kPi * (f0 * tau + 0.5 * (f1 - f0) * tau * tau / n) + phi);
      }
      break;
    }
    case InterferenceKind::noise_band: {
      // Wind/rain-like interferer: dense random-phase sinusoids over a band
      // wide enough to blanket the event templates, so the corruption hits
      // the whole operating spectrum the way recorded background audio does.
      const double width = kNoiseBandWidth;
      const double f0 = rng.uniform(0.03, std::max(0.03, 0.44 - width));
      w.setZero();
      for (int k = 0; k < 192; ++k) {
        const double f = f0 + width * (k + 0.5) / 192.0;
        const double phi = rng.uniform(0.0, 2.0 * kPi);
        for (long t = 0; t < n; ++t) w[t] += std::sin(2.0 * kPi * f * t + phi);
      }
      break;
    }
  }
  // Real-world interferers (a vehicle passing, a gust of wind or rain) swell
  // and fade rather than holding a constant level, so the waveform gets a
  // raised-cosine amplitude envelope whose bump overlaps the event. The
  // envelope is applied before normalization, so the total energy target is
  // unaffected.
  const double width = 0.5 * static_cast<double>(n);
  const double center = static_cast<double>(n) * rng.uniform(0.48, 0.54);
  const double lo = center - 0.5 * width;
  for (long t = 0; t < n; ++t) {
    const double u = (static_cast<double>(t) - lo) / width;
    const double env = (u > 0.0 && u < 1.0) ? std::sin(kPi * u) * std::sin(kPi * u) : 0.0;
    w[t] *= env;
  }
  // Exact energy target: clean events are unit-energy, so the energy ratio is
  // the SNR definition.
  const double target = std::pow(10.0, -cfg.snr_db / 10.0);
  w *= std::sqrt(target) / w.norm();
  return w;
}

RawEvent make_event(const SynthConfig& cfg, const ClassBank& bank, int class_id, int sample_index,
                    bool corrupted) {
  RawEvent ev;
  ev.class_id = class_id;
  ev.sample_index = sample_index;
  ev.clean.resize(cfg.sensors);
  for (int m = 0; m < cfg.sensors; ++m)
    ev.clean[m] = gen_event(cfg, bank, class_id, m, sample_index, &ev.onset);

  if (corrupted) {
    // The same interference waveform, gain 1, hits every sensor: the stacked
    // interference matrix has rank one by construction.
    const Eigen::VectorXd w = draw_interference(cfg, class_id, sample_index);
    ev.interference.assign(cfg.sensors, w);

    const double interference_energy = w.squaredNorm();
    const double sigma =
        std::sqrt(cfg.awgn_ratio * interference_energy / static_cast<double>(cfg.signal_len));
    ev.noise.resize(cfg.sensors);
    for (int m = 0; m < cfg.sensors; ++m) {
      Rng rng(cfg.seed, kTagNoise, static_cast<std::uint64_t>(class_id),
              static_cast<std::uint64_t>(sample_index), static_cast<std::uint64_t>(m));
      Eigen::VectorXd g(cfg.signal_len);
      for (long t = 0; t < cfg.signal_len; ++t) g[t] = sigma * rng.normal();
      ev.noise[m] = std::move(g);
    }
  }
  return ev;
}

}  // namespace

SynthDataset make_dataset(const SynthConfig& cfg) {
  validate_synth_config(cfg);
  SynthDataset ds;
  ds.cfg = cfg;
  const ClassBank bank = make_class_bank(cfg);
  // Train and test draw disjoint sample indices, so no test event duplicates
  // a training event.
  for (int c = 0; c < cfg.classes; ++c)
    for (int i = 0; i < cfg.train_per_class; ++i)
      ds.train.push_back(make_event(cfg, bank, c, i, false));
  for (int c = 0; c < cfg.classes; ++c)
    for (int i = 0; i < cfg.test_per_class; ++i)
      ds.test.push_back(make_event(cfg, bank, c, cfg.train_per_class + i, true));
  return ds;
}

Dataset featurize(const SynthDataset& raw) {
  const SynthConfig& cfg = raw.cfg;
  Dataset ds;
  ds.feature_dim = cfg.features.keep;
  ds.segments = cfg.features.plan.count;
  ds.sampling_rate_hz = cfg.sampling_rate_hz;
  for (int m = 0; m < cfg.sensors; ++m) ds.sensor_names.push_back(format_msg("S%d", m + 1));
  for (int c = 0; c < cfg.classes; ++c) ds.class_labels.push_back(format_msg("class_%d", c));

  auto convert = [&](const std::vector<RawEvent>& events, const char* prefix) {
    std::vector<SampleRecord> out;
    for (const RawEvent& ev : events) {
      SampleRecord s;
      s.id = format_msg("%s_c%d_%03d", prefix, ev.class_id, ev.sample_index);
      s.class_index = ev.class_id;
      for (int m = 0; m < cfg.sensors; ++m)
        s.features.push_back(event_features(ev.observed(m), cfg.features));
      out.push_back(std::move(s));
    }
    return out;
  };
  ds.train = convert(raw.train, "tr");
  ds.test = convert(raw.test, "te");
  return ds;
}

namespace {

json features_to_json(const FeatureParams& f) {
  return json{{"keep", f.keep},
              {"segments", f.plan.count},
              {"segment_len", f.plan.segment_len},
              {"overlap", f.plan.overlap},
              {"detect_window", f.detect_window}};
}

FeatureParams features_from_json(const json& j) {
  static const std::set<std::string> known{"keep", "segments", "segment_len", "overlap",
                                           "detect_window"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in features");
  FeatureParams f;
  f.keep = j.at("keep").get<int>();
  f.plan.count = j.value("segments", 1);
  f.plan.segment_len = j.at("segment_len").get<int>();
  f.plan.overlap = j.value("overlap", 0.75);
  f.detect_window = j.value("detect_window", 4096);
  return f;
}

json synth_config_to_json(const SynthConfig& cfg) {
  return json{{"schema_version", 1},
              {"classes", cfg.classes},
              {"sensors", cfg.sensors},
              {"train_per_class", cfg.train_per_class},
              {"test_per_class", cfg.test_per_class},
              {"signal_len", cfg.signal_len},
              {"snr_db", cfg.snr_db},
              {"awgn_ratio", cfg.awgn_ratio},
              {"interference", interference_name(cfg.interference)},
              {"seed", cfg.seed},
              {"sampling_rate_hz", cfg.sampling_rate_hz},
              {"features", features_to_json(cfg.features)}};
}

SynthConfig synth_config_from_json(const json& j, const std::string& where) {
  static const std::set<std::string> known{
      "schema_version", "classes",   "sensors", "train_per_class", "test_per_class",
      "signal_len",     "snr_db",    "awgn_ratio", "interference", "seed",
      "sampling_rate_hz", "features"};
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
  const int version = j.value("schema_version", 1);
  if (version != 1)
    throw ConfigError(format_msg("%s: schema_version %d is not supported", where.c_str(), version));

  SynthConfig cfg;
  cfg.classes = j.value("classes", cfg.classes);
  cfg.sensors = j.value("sensors", cfg.sensors);
  cfg.train_per_class = j.value("train_per_class", cfg.train_per_class);
  cfg.test_per_class = j.value("test_per_class", cfg.test_per_class);
  cfg.signal_len = j.value("signal_len", cfg.signal_len);
  cfg.snr_db = j.value("snr_db", cfg.snr_db);
  cfg.awgn_ratio = j.value("awgn_ratio", cfg.awgn_ratio);
  if (j.contains("interference")) {
    const auto kind = interference_from_name(j.at("interference").get<std::string>());
    if (!kind)
      throw ConfigError("unknown interference kind \"" + j.at("interference").get<std::string>() +
                        "\"");
    cfg.interference = *kind;
  }
  cfg.seed = j.value("seed", cfg.seed);
  cfg.sampling_rate_hz = j.value("sampling_rate_hz", cfg.sampling_rate_hz);
  if (j.contains("features")) cfg.features = features_from_json(j.at("features"));
  validate_synth_config(cfg);
  return cfg;
}

}  // namespace

SynthConfig load_synth_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  try {
    return synth_config_from_json(j, path);
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

void save_synth_config(const SynthConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << synth_config_to_json(cfg).dump(2) << '\n';
  if (!out) throw IoError("write failed for " + path);
}

void write_synth_dataset(const SynthDataset& raw, const std::string& dir) {
  write_dataset(featurize(raw), dir);
  save_synth_config(raw.cfg, (std::filesystem::path(dir) / "synth.json").string());
}

}  // namespace mssr
