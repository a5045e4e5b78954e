#include "mssr/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fmt_compat.hpp"

namespace mssr {

StructuredDictionary::StructuredDictionary(std::vector<Eigen::MatrixXd> sensor_mats,
                                           std::vector<int> class_sizes,
                                           std::vector<std::string> class_labels,
                                           std::vector<std::vector<bool>> zero_atom)
    : sensors_(std::move(sensor_mats)),
      class_sizes_(std::move(class_sizes)),
      class_labels_(std::move(class_labels)),
      zero_atom_(std::move(zero_atom)) {
  class_offsets_.resize(class_sizes_.size());
  int off = 0;
  for (size_t c = 0; c < class_sizes_.size(); ++c) {
    class_offsets_[c] = off;
    off += class_sizes_[c];
  }
}

bool StructuredDictionary::atom_usable(int atom) const {
  for (int m = 0; m < sensor_count(); ++m)
    if (!zero_atom_[m][atom]) return true;
  return false;
}

StructuredDictionary StructuredDictionary::subset(const std::vector<int>& sensor_indices) const {
  if (sensor_indices.empty()) throw ConfigError("sensor subset is empty");
  std::vector<Eigen::MatrixXd> mats;
  std::vector<std::vector<bool>> zeros;
  for (int m : sensor_indices) {
    if (m < 0 || m >= sensor_count())
      throw ConfigError(format_msg("sensor index %d out of range [0, %d)", m, sensor_count()));
    mats.push_back(sensors_[m]);
    zeros.push_back(zero_atom_[m]);
  }
  return StructuredDictionary(std::move(mats), class_sizes_, class_labels_, std::move(zeros));
}

StructuredDictionary build_dictionary(
    const std::vector<std::vector<std::vector<Eigen::VectorXd>>>& samples,
    std::vector<std::string> class_labels, bool normalize) {
  const int classes = static_cast<int>(samples.size());
  if (classes == 0) throw ConfigError("dictionary needs at least one class");
  const int sensors = static_cast<int>(samples[0].size());
  if (sensors == 0) throw ConfigError("dictionary needs at least one sensor");

  std::vector<int> class_sizes(classes);
  int feature_dim = -1;
  for (int c = 0; c < classes; ++c) {
    if (static_cast<int>(samples[c].size()) != sensors)
      throw DimensionError(
          format_msg("class %d lists %zu sensors, class 0 lists %d", c, samples[c].size(), sensors));
    const int count = static_cast<int>(samples[c][0].size());
    if (count == 0) throw ConfigError(format_msg("class %d has no training samples", c));
    class_sizes[c] = count;
    for (int m = 0; m < sensors; ++m) {
      if (static_cast<int>(samples[c][m].size()) != count)
        throw DimensionError(format_msg("class %d sensor %d has %zu samples, sensor 0 has %d", c, m,
                                        samples[c][m].size(), count));
      for (const auto& v : samples[c][m]) {
        if (feature_dim < 0) feature_dim = static_cast<int>(v.size());
        if (static_cast<int>(v.size()) != feature_dim)
          throw DimensionError(format_msg("class %d sensor %d sample length %zd, expected %d", c, m,
                                          static_cast<ptrdiff_t>(v.size()), feature_dim));
      }
    }
  }
  if (feature_dim == 0) throw ConfigError("feature vectors are empty");

  const int atoms = std::accumulate(class_sizes.begin(), class_sizes.end(), 0);
  std::vector<Eigen::MatrixXd> mats(sensors, Eigen::MatrixXd(feature_dim, atoms));
  std::vector<std::vector<bool>> zero_atom(sensors, std::vector<bool>(atoms, false));
  for (int m = 0; m < sensors; ++m) {
    int col = 0;
    for (int c = 0; c < classes; ++c) {
      for (const auto& v : samples[c][m]) {
        const double nrm = v.norm();
        if (nrm == 0.0) {
          zero_atom[m][col] = true;
          mats[m].col(col).setZero();
        } else {
          mats[m].col(col) = normalize ? Eigen::VectorXd(v / nrm) : v;
        }
        ++col;
      }
    }
  }

  if (class_labels.empty()) {
    for (int c = 0; c < classes; ++c) class_labels.push_back(format_msg("class_%d", c));
  } else if (static_cast<int>(class_labels.size()) != classes) {
    throw ConfigError(
        format_msg("%zu class labels for %d classes", class_labels.size(), classes));
  }

  return StructuredDictionary(std::move(mats), std::move(class_sizes), std::move(class_labels),
                              std::move(zero_atom));
}

MultiSensorObservation MultiSensorObservation::subset(
    const std::vector<int>& sensor_indices) const {
  if (sensor_indices.empty()) throw ConfigError("sensor subset is empty");
  MultiSensorObservation out;
  for (int m : sensor_indices) {
    if (m < 0 || m >= sensor_count())
      throw ConfigError(format_msg("sensor index %d out of range [0, %d)", m, sensor_count()));
    out.sensors.push_back(sensors[m]);
  }
  return out;
}

ProblemDims validate_pair(const StructuredDictionary& dict, const MultiSensorObservation& obs) {
  ProblemDims dims;
  dims.sensors = dict.sensor_count();
  if (dims.sensors == 0) throw DimensionError("dictionary has no sensors");
  if (obs.sensor_count() != dims.sensors)
    throw DimensionError(format_msg("observation has %d sensors, dictionary has %d",
                                    obs.sensor_count(), dims.sensors));
  dims.rows = dict.feature_dim();
  dims.atoms = dict.atom_count();
  dims.classes = dict.class_count();
  if (dims.atoms == 0) throw DimensionError("dictionary has no atoms");

  dims.obs_cols = static_cast<int>(obs.sensors[0].cols());
  if (dims.obs_cols == 0) throw DimensionError("observation sensor 0 has no columns");
  for (int m = 0; m < dims.sensors; ++m) {
    if (dict.matrix(m).rows() != dims.rows || dict.matrix(m).cols() != dims.atoms)
      throw DimensionError(format_msg("dictionary sensor %d is %zdx%zd, sensor 0 is %dx%d", m,
                                      static_cast<ptrdiff_t>(dict.matrix(m).rows()),
                                      static_cast<ptrdiff_t>(dict.matrix(m).cols()), dims.rows,
                                      dims.atoms));
    if (obs.sensors[m].rows() != dims.rows)
      throw DimensionError(format_msg("observation sensor %d has %zd rows, dictionary has %d", m,
                                      static_cast<ptrdiff_t>(obs.sensors[m].rows()), dims.rows));
    if (obs.sensors[m].cols() != dims.obs_cols)
      throw DimensionError(format_msg("observation sensor %d has %zd columns, sensor 0 has %d", m,
                                      static_cast<ptrdiff_t>(obs.sensors[m].cols()),
                                      dims.obs_cols));
  }
  return dims;
}

const char* variant_name(Variant v) {
  switch (v) {
    case Variant::jsr: return "jsr";
    case Variant::jsr_e: return "jsr+e";
    case Variant::jsr_l: return "jsr+l";
    case Variant::gjsr_l: return "gjsr+l";
  }
  return "?";
}

std::optional<Variant> variant_from_name(const std::string& name) {
  if (name == "jsr") return Variant::jsr;
  if (name == "jsr+e") return Variant::jsr_e;
  if (name == "jsr+l") return Variant::jsr_l;
  if (name == "gjsr+l") return Variant::gjsr_l;
  return std::nullopt;
}

void validate_config(const SolverConfig& cfg) {
  if (cfg.q != 2) throw ConfigError(format_msg("row-norm exponent q=%d is not supported (only q=2)", cfg.q));
  if (cfg.mu <= 0.0) throw ConfigError("mu must be positive");
  if (cfg.max_iters < 1) throw ConfigError("max_iters must be at least 1");
  if (cfg.tol_feas <= 0.0 || cfg.tol_change <= 0.0)
    throw ConfigError("tolerances must be positive");
  if (cfg.theta && *cfg.theta <= 0.0) throw ConfigError("theta must be positive");
  if (cfg.extra_sparse_err && !cfg.uses_lowrank())
    throw ConfigError("extra_sparse_err only combines with a +L variant; use jsr+e instead");
  if (cfg.uses_lowrank() && cfg.lambda_l <= 0.0)
    throw ConfigError(
        "lambda_l must be positive for a +L variant: with zero weight the low-rank term "
        "absorbs the whole observation and the coefficients are meaningless");
  if (cfg.uses_sparse_err() && cfg.lambda_e <= 0.0)
    throw ConfigError("lambda_e must be positive when a sparse-error term is enabled");
  if (cfg.uses_group() && cfg.lambda_g < 0.0) throw ConfigError("lambda_g must be non-negative");
}

CoefficientBlocks::CoefficientBlocks(int atoms, int sensors, int obs_cols_,
                                     const StructuredDictionary& dict)
    : data(Eigen::MatrixXd::Zero(atoms, sensors * obs_cols_)), obs_cols(obs_cols_) {
  class_sizes = dict.class_sizes();
  class_offsets.resize(class_sizes.size());
  int off = 0;
  for (size_t c = 0; c < class_sizes.size(); ++c) {
    class_offsets[c] = off;
    off += class_sizes[c];
  }
}

std::vector<int> support_rows(const Eigen::MatrixXd& coeffs, double tol) {
  std::vector<int> rows;
  for (int i = 0; i < coeffs.rows(); ++i)
    if (coeffs.row(i).norm() > tol) rows.push_back(i);
  return rows;
}

std::vector<int> support_rows(const Eigen::MatrixXd& coeffs, double tol,
                              const StructuredDictionary& dict) {
  std::vector<int> rows;
  for (int i = 0; i < coeffs.rows(); ++i)
    if (dict.atom_usable(i) && coeffs.row(i).norm() > tol) rows.push_back(i);
  return rows;
}

}  // namespace mssr
