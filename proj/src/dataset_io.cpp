#include "mssr/dataset_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fmt_compat.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mssr {

namespace {

std::string sample_file_name(const SampleRecord& s, const std::string& sensor) {
  return "data/" + s.id + "_" + sensor + ".csv";
}

void write_matrix_csv(const Eigen::MatrixXd& m, const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  char buf[64];
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      std::snprintf(buf, sizeof buf, "%.17g", m(r, c));
      out << buf;
      if (c + 1 < m.cols()) out << ',';
    }
    out << '\n';
  }
  if (!out) throw IoError("write failed for " + path.string());
}

Eigen::MatrixXd read_matrix_csv(const fs::path& path, int rows, int cols) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  Eigen::MatrixXd m(rows, cols);
  std::string line;
  for (int r = 0; r < rows; ++r) {
    if (!std::getline(in, line))
      throw IoError(format_msg("%s: expected %d rows, got %d", path.string().c_str(), rows, r));
    const char* p = line.c_str();
    for (int c = 0; c < cols; ++c) {
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p)
        throw IoError(format_msg("%s row %d: expected %d values", path.string().c_str(), r, cols));
      m(r, c) = v;
      p = end;
      if (*p == ',') ++p;
    }
  }
  return m;
}

void check_known_keys(const json& obj, const std::set<std::string>& known,
                      const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

json sample_to_json(const SampleRecord& s, const std::vector<std::string>& sensors) {
  json files = json::array();
  for (const auto& name : sensors) files.push_back(sample_file_name(s, name));
  return json{{"id", s.id}, {"class", s.class_index}, {"files", files}};
}

SampleRecord sample_from_json(const json& j, const Dataset& ds, const fs::path& dir,
                              const std::string& where) {
  check_known_keys(j, {"id", "class", "files"}, where);
  SampleRecord s;
  s.id = j.at("id").get<std::string>();
  s.class_index = j.at("class").get<int>();
  if (s.class_index < 0 || s.class_index >= static_cast<int>(ds.class_labels.size()))
    throw ConfigError(format_msg("%s: class index %d out of range", where.c_str(), s.class_index));
  const auto& files = j.at("files");
  if (files.size() != ds.sensor_names.size())
    throw ConfigError(format_msg("%s: %zu files for %zu sensors", where.c_str(), files.size(),
                                 ds.sensor_names.size()));
  for (const auto& f : files)
    s.features.push_back(
        read_matrix_csv(dir / f.get<std::string>(), ds.feature_dim, ds.segments));
  return s;
}

}  // namespace

void write_dataset(const Dataset& ds, const std::string& dir) {
  if (ds.feature_dim < 1 || ds.segments < 1)
    throw ConfigError("dataset needs positive feature_dim and segments");
  std::error_code ec;
  fs::create_directories(fs::path(dir) / "data", ec);
  if (ec) throw IoError("cannot create " + dir + ": " + ec.message());

  json manifest{
      {"schema_version", 1},
      {"feature_dim", ds.feature_dim},
      {"segments_per_sample", ds.segments},
      {"sampling_rate_hz", ds.sampling_rate_hz},
      {"normalize_atoms", ds.normalize_atoms},
      {"sensors", ds.sensor_names},
      {"classes", ds.class_labels},
      {"train", json::array()},
      {"test", json::array()},
  };
  for (const auto* group : {&ds.train, &ds.test}) {
    const bool is_train = group == &ds.train;
    for (const SampleRecord& s : *group) {
      if (static_cast<int>(s.features.size()) != static_cast<int>(ds.sensor_names.size()))
        throw DimensionError("sample " + s.id + " does not cover every sensor");
      for (size_t m = 0; m < s.features.size(); ++m) {
        if (s.features[m].rows() != ds.feature_dim || s.features[m].cols() != ds.segments)
          throw DimensionError("sample " + s.id + " has a mis-shaped feature matrix");
        write_matrix_csv(s.features[m], fs::path(dir) / sample_file_name(s, ds.sensor_names[m]));
      }
      manifest[is_train ? "train" : "test"].push_back(sample_to_json(s, ds.sensor_names));
    }
  }

  std::ofstream out(fs::path(dir) / "manifest.json");
  if (!out) throw IoError("cannot write manifest.json in " + dir);
  out << manifest.dump(2) << '\n';
  if (!out) throw IoError("write failed for manifest.json in " + dir);
}

Dataset load_dataset(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "manifest.json");
  if (!in) throw IoError("cannot read manifest.json in " + dir);
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest.json: ") + e.what());
  }

  try {
    check_known_keys(manifest,
                     {"schema_version", "feature_dim", "segments_per_sample", "sampling_rate_hz",
                      "normalize_atoms", "sensors", "classes", "train", "test"},
                     "manifest.json");
    const int version = manifest.at("schema_version").get<int>();
    if (version != 1)
      throw ConfigError(format_msg("manifest schema_version %d is not supported", version));

    Dataset ds;
    ds.feature_dim = manifest.at("feature_dim").get<int>();
    ds.segments = manifest.at("segments_per_sample").get<int>();
    ds.sampling_rate_hz = manifest.value("sampling_rate_hz", 0.0);
    ds.normalize_atoms = manifest.value("normalize_atoms", true);
    ds.sensor_names = manifest.at("sensors").get<std::vector<std::string>>();
    ds.class_labels = manifest.at("classes").get<std::vector<std::string>>();
    if (ds.sensor_names.empty()) throw ConfigError("manifest lists no sensors");
    if (ds.class_labels.empty()) throw ConfigError("manifest lists no classes");
    if (ds.feature_dim < 1 || ds.segments < 1)
      throw ConfigError("manifest needs positive feature_dim and segments_per_sample");

    int i = 0;
    for (const auto& j : manifest.at("train"))
      ds.train.push_back(sample_from_json(j, ds, dir, format_msg("manifest train[%d]", i++)));
    i = 0;
    for (const auto& j : manifest.at("test"))
      ds.test.push_back(sample_from_json(j, ds, dir, format_msg("manifest test[%d]", i++)));
    return ds;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("manifest.json: ") + e.what());
  }
}

StructuredDictionary dictionary_from(const Dataset& ds) {
  std::vector<int> all(ds.train.size());
  for (size_t i = 0; i < all.size(); ++i) all[i] = static_cast<int>(i);
  return dictionary_from(ds, all);
}

StructuredDictionary dictionary_from(const Dataset& ds, const std::vector<int>& train_indices) {
  const int classes = static_cast<int>(ds.class_labels.size());
  const int sensors = static_cast<int>(ds.sensor_names.size());
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> samples(
      classes, std::vector<std::vector<Eigen::VectorXd>>(sensors));
  for (int idx : train_indices) {
    if (idx < 0 || idx >= static_cast<int>(ds.train.size()))
      throw ConfigError(format_msg("train index %d out of range", idx));
    const SampleRecord& s = ds.train[idx];
    for (int m = 0; m < sensors; ++m)
      for (int t = 0; t < ds.segments; ++t)
        samples[s.class_index][m].push_back(s.features[m].col(t));
  }
  for (int c = 0; c < classes; ++c)
    if (samples[c][0].empty())
      throw ConfigError("class " + ds.class_labels[c] + " has no training samples in the selection");
  return build_dictionary(samples, ds.class_labels, ds.normalize_atoms);
}

MultiSensorObservation observation_from(const SampleRecord& sample) {
  MultiSensorObservation obs;
  obs.sensors = sample.features;
  return obs;
}

}  // namespace mssr
