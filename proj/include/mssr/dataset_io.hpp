#pragma once

#include <string>
#include <vector>

#include "mssr/core_model.hpp"

namespace mssr {

// One labeled event: an N x T feature matrix per sensor.
struct SampleRecord {
  std::string id;
  int class_index = -1;
  std::vector<Eigen::MatrixXd> features;
};

// In-memory image of a dataset directory: manifest.json plus one CSV per
// (sample, sensor) holding N rows of T comma-separated values. Numbers are
// written with 17 significant digits so a write/load round trip is bit-exact.
struct Dataset {
  std::vector<std::string> sensor_names;
  std::vector<std::string> class_labels;
  int feature_dim = 0;
  int segments = 1;                // T, observation columns per sample
  double sampling_rate_hz = 0.0;   // metadata only
  bool normalize_atoms = true;     // whether dictionaries built from this dataset
                                   // get unit-norm columns
  std::vector<SampleRecord> train;
  std::vector<SampleRecord> test;
};

void write_dataset(const Dataset& ds, const std::string& dir);
Dataset load_dataset(const std::string& dir);

// Training dictionary: every train sample contributes its T segment columns
// as atoms, grouped class-by-class in manifest order. The subset overload
// restricts to the given train indices (cross-validation folds).
StructuredDictionary dictionary_from(const Dataset& ds);
StructuredDictionary dictionary_from(const Dataset& ds, const std::vector<int>& train_indices);

MultiSensorObservation observation_from(const SampleRecord& sample);

}  // namespace mssr
