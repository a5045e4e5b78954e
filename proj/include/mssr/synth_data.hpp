#pragma once

#include <array>
#include <cstdint>
#include <optional>

#include "mssr/dataset_io.hpp"
#include "mssr/features.hpp"

namespace mssr {

enum class InterferenceKind { tone, chirp, noise_band };

const char* interference_name(InterferenceKind k);
std::optional<InterferenceKind> interference_from_name(const std::string& name);

struct SynthConfig {
  int classes = 4;
  int sensors = 4;
  int train_per_class = 25;
  int test_per_class = 25;
  long signal_len = 6000;
  double snr_db = 0.0;      // clean-event energy over interference energy, in dB
  double awgn_ratio = 0.1;  // white-noise energy as a fraction of interference energy
  InterferenceKind interference = InterferenceKind::tone;
  std::uint64_t seed = 1;
  double sampling_rate_hz = 1001.6;  // metadata only; frequencies are per-sample
  FeatureParams features;
};

SynthConfig load_synth_config(const std::string& path);
void save_synth_config(const SynthConfig& cfg, const std::string& path);

// Per-class waveform parameters (three damped sinusoids each), drawn
// deterministically from the seed and redrawn until no two class templates
// have a normalized correlation of 0.5 or more.
struct ClassBank {
  std::vector<std::array<double, 3>> freqs;  // cycles per sample
  std::vector<std::array<double, 3>> damps;
  std::vector<std::array<double, 3>> amps;
};

ClassBank make_class_bank(const SynthConfig& cfg);

// Canonical template of one class (onset 0, no jitter), unit energy.
Eigen::VectorXd class_template(const ClassBank& bank, int class_id, long len);

// One sensor's clean recording of one event: the class template with
// per-sensor gain/phase jitter (within 20%) and a small frequency
// perturbation, onset jittered per event (shared by all sensors), normalized
// to unit energy. Deterministic in (seed, class, sensor, sample).
Eigen::VectorXd gen_event(const SynthConfig& cfg, const ClassBank& bank, int class_id, int sensor,
                          int sample_index, long* onset_out = nullptr);

// One raw event observed by every sensor, split into its components.
// Train events carry only `clean`; test events add the shared interference
// waveform (identical across sensors, scaled to snr_db against the unit
// event energy) and per-sensor white noise at awgn_ratio of the
// interference energy.
struct RawEvent {
  int class_id = 0;
  int sample_index = 0;
  long onset = 0;
  std::vector<Eigen::VectorXd> clean;
  std::vector<Eigen::VectorXd> interference;
  std::vector<Eigen::VectorXd> noise;

  Eigen::VectorXd observed(int sensor) const;
};

struct SynthDataset {
  SynthConfig cfg;
  std::vector<RawEvent> train;
  std::vector<RawEvent> test;
};

SynthDataset make_dataset(const SynthConfig& cfg);

// Feature pipeline over the raw signals; produces the on-disk dataset form.
Dataset featurize(const SynthDataset& raw);

// featurize + write_dataset + a synth.json echo of the generating config.
void write_synth_dataset(const SynthDataset& raw, const std::string& dir);

}  // namespace mssr
