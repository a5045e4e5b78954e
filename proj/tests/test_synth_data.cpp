#include <unistd.h>

#include <filesystem>
#include <random>

#include "doctest.h"
#include "mssr/admm_solver.hpp"
#include "mssr/classifier.hpp"
#include "mssr/synth_data.hpp"

using namespace mssr;
namespace fs = std::filesystem;

namespace {

// Short signals keep the fft work negligible; the feature plan must fit.
SynthConfig quick_config() {
  SynthConfig cfg;
  cfg.classes = 2;
  cfg.sensors = 2;
  cfg.train_per_class = 2;
  cfg.test_per_class = 2;
  cfg.signal_len = 512;
  cfg.snr_db = 0.0;
  cfg.seed = 42;
  cfg.features.keep = 20;
  cfg.features.plan = SegmentPlan{2, 128, 0.75};
  cfg.features.detect_window = 128;
  return cfg;
}

}  // namespace

TEST_SUITE("synth_data") {

TEST_CASE("interference kind names round-trip") {
  for (InterferenceKind k :
       {InterferenceKind::tone, InterferenceKind::chirp, InterferenceKind::noise_band})
    CHECK(interference_from_name(interference_name(k)) == k);
  CHECK_FALSE(interference_from_name("sine").has_value());
}

TEST_CASE("config validation rejects impossible setups") {
  SynthConfig cfg = quick_config();
  cfg.classes = 1;
  CHECK_THROWS_AS(make_class_bank(cfg), ConfigError);
  cfg = quick_config();
  cfg.sensors = 0;
  CHECK_THROWS_AS(make_class_bank(cfg), ConfigError);
  cfg = quick_config();
  cfg.signal_len = 32;
  CHECK_THROWS_AS(make_class_bank(cfg), ConfigError);
  cfg = quick_config();
  cfg.awgn_ratio = -0.5;
  CHECK_THROWS_AS(make_class_bank(cfg), ConfigError);
  cfg = quick_config();
  cfg.features.plan.segment_len = 4096;
  CHECK_THROWS_AS(make_class_bank(cfg), ConfigError);
  cfg = quick_config();
  cfg.features.detect_window = 4096;
  CHECK_THROWS_AS(make_class_bank(cfg), ConfigError);
  cfg = quick_config();
  cfg.train_per_class = 0;
  CHECK_THROWS_AS(make_dataset(cfg), ConfigError);
}

TEST_CASE("class templates are unit energy and mutually decorrelated") {
  const SynthConfig cfg = quick_config();
  const ClassBank bank = make_class_bank(cfg);
  std::vector<Eigen::VectorXd> tmpl;
  for (int c = 0; c < cfg.classes; ++c) {
    tmpl.push_back(class_template(bank, c, cfg.signal_len));
    CHECK(tmpl.back().squaredNorm() == doctest::Approx(1.0).epsilon(1e-9));
  }
  for (int a = 0; a < cfg.classes; ++a)
    for (int b = a + 1; b < cfg.classes; ++b)
      CHECK(std::abs(tmpl[a].dot(tmpl[b])) < 0.5);
}

TEST_CASE("events are unit energy with onsets in the jitter band") {
  const SynthConfig cfg = quick_config();
  const ClassBank bank = make_class_bank(cfg);
  for (int c = 0; c < cfg.classes; ++c)
    for (int i = 0; i < 3; ++i) {
      long onset = -1;
      const Eigen::VectorXd x = gen_event(cfg, bank, c, 0, i, &onset);
      CHECK(x.squaredNorm() == doctest::Approx(1.0).epsilon(1e-9));
      CHECK(onset >= std::lround(0.30 * cfg.signal_len));
      CHECK(onset <= std::lround(0.40 * cfg.signal_len));
    }
  CHECK_THROWS_AS(gen_event(cfg, bank, cfg.classes, 0, 0), ConfigError);
  CHECK_THROWS_AS(gen_event(cfg, bank, 0, cfg.sensors, 0), ConfigError);
}

TEST_CASE("every sensor of one event shares the onset") {
  const SynthConfig cfg = quick_config();
  const ClassBank bank = make_class_bank(cfg);
  long o0 = -1, o1 = -1;
  gen_event(cfg, bank, 1, 0, 5, &o0);
  gen_event(cfg, bank, 1, 1, 5, &o1);
  CHECK(o0 == o1);
}

TEST_CASE("generation is deterministic in the seed") {
  const SynthConfig cfg = quick_config();
  const SynthDataset a = make_dataset(cfg);
  const SynthDataset b = make_dataset(cfg);
  REQUIRE(a.train.size() == b.train.size());
  REQUIRE(a.test.size() == b.test.size());
  for (size_t i = 0; i < a.test.size(); ++i)
    for (int m = 0; m < cfg.sensors; ++m) {
      CHECK(a.test[i].observed(m) == b.test[i].observed(m));
      CHECK(a.test[i].noise[m] == b.test[i].noise[m]);
    }

  SynthConfig other = cfg;
  other.seed = 43;
  const SynthDataset c = make_dataset(other);
  CHECK(a.train[0].clean[0] != c.train[0].clean[0]);
}

TEST_CASE("train events are clean and test events are corrupted") {
  const SynthConfig cfg = quick_config();
  const SynthDataset ds = make_dataset(cfg);
  REQUIRE(ds.train.size() == size_t(cfg.classes * cfg.train_per_class));
  REQUIRE(ds.test.size() == size_t(cfg.classes * cfg.test_per_class));
  for (const RawEvent& ev : ds.train) {
    CHECK(ev.interference.empty());
    CHECK(ev.noise.empty());
    CHECK(ev.observed(0) == ev.clean[0]);
  }
  for (const RawEvent& ev : ds.test) {
    CHECK(ev.interference.size() == size_t(cfg.sensors));
    CHECK(ev.noise.size() == size_t(cfg.sensors));
    // Sample indices continue past the training block, so no event repeats.
    CHECK(ev.sample_index >= cfg.train_per_class);
  }
}

TEST_CASE("interference is identical across sensors and hits the energy target") {
  SynthConfig cfg = quick_config();
  cfg.snr_db = 3.0;
  const SynthDataset ds = make_dataset(cfg);
  const double target = std::pow(10.0, -cfg.snr_db / 10.0);
  for (const RawEvent& ev : ds.test) {
    for (int m = 1; m < cfg.sensors; ++m) CHECK(ev.interference[m] == ev.interference[0]);
    CHECK(ev.interference[0].squaredNorm() == doctest::Approx(target).epsilon(1e-12));
  }
}

TEST_CASE("white noise energy tracks awgn_ratio statistically") {
  SynthConfig cfg = quick_config();
  cfg.test_per_class = 25;  // 100 noise draws of length 512
  cfg.awgn_ratio = 0.2;
  const SynthDataset ds = make_dataset(cfg);
  const double interference_energy = ds.test[0].interference[0].squaredNorm();
  double total = 0.0;
  long draws = 0;
  for (const RawEvent& ev : ds.test)
    for (int m = 0; m < cfg.sensors; ++m) {
      total += ev.noise[m].squaredNorm();
      ++draws;
    }
  const double mean_energy = total / static_cast<double>(draws);
  CHECK(mean_energy == doctest::Approx(cfg.awgn_ratio * interference_energy).epsilon(0.05));
}

TEST_CASE("featurizing produces the on-disk dataset layout") {
  const SynthConfig cfg = quick_config();
  const SynthDataset raw = make_dataset(cfg);
  const Dataset ds = featurize(raw);
  CHECK(ds.feature_dim == cfg.features.keep);
  CHECK(ds.segments == cfg.features.plan.count);
  CHECK(ds.sensor_names == std::vector<std::string>{"S1", "S2"});
  CHECK(ds.class_labels == std::vector<std::string>{"class_0", "class_1"});
  REQUIRE(ds.train.size() == raw.train.size());
  CHECK(ds.train[0].id == "tr_c0_000");
  CHECK(ds.test[0].id == "te_c0_002");  // test indices continue past train
  CHECK(ds.train[0].features[0].rows() == cfg.features.keep);
  CHECK(ds.train[0].features[0].cols() == cfg.features.plan.count);

  // Column k is exactly the feature pipeline on the observed signal.
  const Eigen::MatrixXd expect = event_features(raw.train[0].observed(1), cfg.features);
  CHECK(ds.train[0].features[1] == expect);
}

TEST_CASE("the config file round-trips") {
  SynthConfig cfg = quick_config();
  cfg.interference = InterferenceKind::chirp;
  cfg.snr_db = -6.0;
  cfg.awgn_ratio = 0.25;
  cfg.seed = 777;
  const fs::path path =
      fs::temp_directory_path() / ("mssr_synth_cfg_" + std::to_string(::getpid()) + ".json");
  save_synth_config(cfg, path.string());
  const SynthConfig back = load_synth_config(path.string());
  fs::remove(path);

  CHECK(back.classes == cfg.classes);
  CHECK(back.sensors == cfg.sensors);
  CHECK(back.train_per_class == cfg.train_per_class);
  CHECK(back.test_per_class == cfg.test_per_class);
  CHECK(back.signal_len == cfg.signal_len);
  CHECK(back.snr_db == cfg.snr_db);
  CHECK(back.awgn_ratio == cfg.awgn_ratio);
  CHECK(back.interference == cfg.interference);
  CHECK(back.seed == cfg.seed);
  CHECK(back.sampling_rate_hz == cfg.sampling_rate_hz);
  CHECK(back.features.keep == cfg.features.keep);
  CHECK(back.features.plan.count == cfg.features.plan.count);
  CHECK(back.features.plan.segment_len == cfg.features.plan.segment_len);
  CHECK(back.features.plan.overlap == cfg.features.plan.overlap);
  CHECK(back.features.detect_window == cfg.features.detect_window);

  CHECK_THROWS_AS(load_synth_config("/nonexistent/synth.json"), IoError);
}

TEST_CASE("a written dataset directory reloads with a config echo") {
  const SynthConfig cfg = quick_config();
  const SynthDataset raw = make_dataset(cfg);
  const fs::path dir =
      fs::temp_directory_path() / ("mssr_synth_ds_" + std::to_string(::getpid()));
  write_synth_dataset(raw, dir.string());
  const Dataset ds = load_dataset(dir.string());
  CHECK(ds.train.size() == raw.train.size());
  const SynthConfig echo = load_synth_config((dir / "synth.json").string());
  CHECK(echo.seed == cfg.seed);
  std::error_code ec;
  fs::remove_all(dir, ec);
}

TEST_CASE("nearly clean data is classified reliably end to end") {
  // +60 dB drives the interference to a millionth of the event energy; the
  // pipeline should then recover the class from the cepstral features.
  SynthConfig cfg;
  cfg.classes = 3;
  cfg.sensors = 2;
  cfg.train_per_class = 3;
  cfg.test_per_class = 4;
  cfg.signal_len = 1024;
  cfg.snr_db = 60.0;
  cfg.seed = 7;
  cfg.features.keep = 30;
  cfg.features.plan = SegmentPlan{1, 256, 0.75};
  cfg.features.detect_window = 256;

  const Dataset ds = featurize(make_dataset(cfg));
  const StructuredDictionary dict = dictionary_from(ds);
  SolverConfig scfg;
  int correct = 0;
  for (const SampleRecord& s : ds.test) {
    const MultiSensorObservation obs = observation_from(s);
    const Decomposition dec = solve(dict, obs, scfg);
    const ClassDecision d = classify_linear(dict, obs, dec, scfg.variant);
    if (d.label == s.class_index) ++correct;
  }
  MESSAGE("correct = " << correct << " of " << ds.test.size());
  CHECK(correct >= 10);  // 12 samples; allow two stragglers
}

}  // TEST_SUITE
