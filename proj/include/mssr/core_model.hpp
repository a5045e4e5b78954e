#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "mssr/errors.hpp"

namespace mssr {

// Problem dimensions shared by every solver entry point:
//   sensors  M   parallel observation channels
//   rows     N   feature dimension (per sensor)
//   atoms    P   dictionary columns per sensor, grouped class-by-class
//   classes  C
//   obs_cols T   observation columns per sensor (segments of one event)
struct ProblemDims {
  int sensors = 0;
  int rows = 0;
  int atoms = 0;
  int classes = 0;
  int obs_cols = 0;
};

// Per-sensor dictionaries with a common class-block column layout. Column p of
// every sensor matrix describes the same training segment, so the class
// grouping is identical across sensors.
class StructuredDictionary {
 public:
  StructuredDictionary() = default;
  StructuredDictionary(std::vector<Eigen::MatrixXd> sensor_mats,
                       std::vector<int> class_sizes,
                       std::vector<std::string> class_labels,
                       std::vector<std::vector<bool>> zero_atom);

  int sensor_count() const { return static_cast<int>(sensors_.size()); }
  int feature_dim() const { return sensors_.empty() ? 0 : static_cast<int>(sensors_[0].rows()); }
  int atom_count() const { return sensors_.empty() ? 0 : static_cast<int>(sensors_[0].cols()); }
  int class_count() const { return static_cast<int>(class_sizes_.size()); }
  int class_size(int c) const { return class_sizes_[c]; }
  int class_offset(int c) const { return class_offsets_[c]; }
  const std::vector<int>& class_sizes() const { return class_sizes_; }
  const std::vector<std::string>& class_labels() const { return class_labels_; }

  const Eigen::MatrixXd& matrix(int sensor) const { return sensors_[sensor]; }
  // Columns of one class within one sensor.
  Eigen::Block<const Eigen::MatrixXd, Eigen::Dynamic, Eigen::Dynamic, true> class_block(
      int sensor, int c) const {
    return sensors_[sensor].middleCols(class_offsets_[c], class_sizes_[c]);
  }

  // Atoms that were all-zero before normalization are kept (as zero columns)
  // but flagged so support reporting can skip them.
  bool atom_is_zero(int sensor, int atom) const { return zero_atom_[sensor][atom]; }
  bool atom_usable(int atom) const;

  StructuredDictionary subset(const std::vector<int>& sensor_indices) const;

 private:
  std::vector<Eigen::MatrixXd> sensors_;
  std::vector<int> class_sizes_;
  std::vector<int> class_offsets_;
  std::vector<std::string> class_labels_;
  std::vector<std::vector<bool>> zero_atom_;
};

// samples[class][sensor][k] is the k-th training feature vector; sample k of a
// class is the same physical event in every sensor, so counts must agree
// across sensors. Atoms are laid out class-by-class in sample order. With
// normalize=true every column is scaled to unit Euclidean norm (zero columns
// are kept and flagged instead).
StructuredDictionary build_dictionary(
    const std::vector<std::vector<std::vector<Eigen::VectorXd>>>& samples,
    std::vector<std::string> class_labels = {},
    bool normalize = true);

// One test event: an N x T feature matrix per sensor.
struct MultiSensorObservation {
  std::vector<Eigen::MatrixXd> sensors;

  int sensor_count() const { return static_cast<int>(sensors.size()); }
  int rows() const { return sensors.empty() ? 0 : static_cast<int>(sensors[0].rows()); }
  int cols() const { return sensors.empty() ? 0 : static_cast<int>(sensors[0].cols()); }
  MultiSensorObservation subset(const std::vector<int>& sensor_indices) const;
};

// Checks dictionary/observation compatibility; never brings the process down
// on bad shapes, always either returns dims or throws DimensionError naming
// the offending sensor.
ProblemDims validate_pair(const StructuredDictionary& dict, const MultiSensorObservation& obs);

enum class Variant { jsr, jsr_e, jsr_l, gjsr_l };

const char* variant_name(Variant v);
std::optional<Variant> variant_from_name(const std::string& name);

struct SolverConfig {
  Variant variant = Variant::jsr;
  // Adds an entrywise-sparse error term on top of a +L variant (two prox
  // steps per iteration). Not one of the four named models; off by default.
  bool extra_sparse_err = false;

  double lambda_l = 1.0;  // nuclear-norm weight (low-rank interference)
  double lambda_g = 0.0;  // class-group Frobenius weight
  double lambda_e = 0.1;  // entrywise l1 weight (sparse error)

  double mu = 1.0;   // augmented-Lagrangian penalty; the fixed point does not depend on it
  int q = 2;         // row-norm exponent of the l_{1,q} term; only 2 is supported
  std::optional<double> theta;  // linearization step; default 0.99 / max_m sigma_max((D^m)^T D^m)

  int max_iters = 500;
  double tol_feas = 1e-5;    // relative per-sensor constraint residual
  double tol_change = 1e-6;  // relative coefficient change
  // Keep per-iteration A and Z snapshots (diagnostics; memory grows with iters).
  bool record_iterates = false;

  bool uses_lowrank() const { return variant == Variant::jsr_l || variant == Variant::gjsr_l; }
  bool uses_sparse_err() const { return variant == Variant::jsr_e || extra_sparse_err; }
  bool uses_group() const { return variant == Variant::gjsr_l; }
};

// Throws ConfigError on invalid settings (q != 2, non-positive tolerances,
// lambda_l <= 0 with a +L variant, lambda_e <= 0 with a sparse-error term,
// extra_sparse_err without a +L variant).
void validate_config(const SolverConfig& cfg);

// Stacked coefficient matrix, P x (M*T); sensor m owns columns [m*T, (m+1)*T)
// and class c owns the row band [class_offset(c), +class_size(c)).
struct CoefficientBlocks {
  Eigen::MatrixXd data;
  int obs_cols = 0;
  std::vector<int> class_offsets;
  std::vector<int> class_sizes;

  CoefficientBlocks() = default;
  CoefficientBlocks(int atoms, int sensors, int obs_cols_, const StructuredDictionary& dict);

  int sensor_count() const { return obs_cols == 0 ? 0 : static_cast<int>(data.cols()) / obs_cols; }
  int class_count() const { return static_cast<int>(class_sizes.size()); }

  Eigen::Block<Eigen::MatrixXd, Eigen::Dynamic, Eigen::Dynamic, true> sensor(int m) {
    return data.middleCols(m * obs_cols, obs_cols);
  }
  Eigen::Block<const Eigen::MatrixXd, Eigen::Dynamic, Eigen::Dynamic, true> sensor(int m) const {
    return data.middleCols(m * obs_cols, obs_cols);
  }
  Eigen::Block<Eigen::MatrixXd> class_rows(int c) {
    return data.middleRows(class_offsets[c], class_sizes[c]);
  }
  Eigen::Block<const Eigen::MatrixXd> class_rows(int c) const {
    return data.middleRows(class_offsets[c], class_sizes[c]);
  }
  Eigen::Block<const Eigen::MatrixXd> class_sensor(int c, int m) const {
    return data.block(class_offsets[c], m * obs_cols, class_sizes[c], obs_cols);
  }
};

struct TraceRecord {
  int iter = 0;
  double objective = 0.0;
  double feas_residual = 0.0;  // max over sensors of relative constraint residual
  double dA = 0.0;             // Frobenius norm of the coefficient step
  double dZ = 0.0;             // Frobenius norm of the multiplier step
};

struct Decomposition {
  CoefficientBlocks coeffs;
  Eigen::MatrixXd lowrank;     // N x (M*T); empty when the variant has no L term
  Eigen::MatrixXd sparse_err;  // N x (M*T); empty when the variant has no E term
  std::vector<TraceRecord> trace;
  bool converged = false;
  int iterations = 0;
  Variant variant = Variant::jsr;
  bool extra_sparse_err = false;

  // Filled only when SolverConfig::record_iterates was set.
  std::vector<Eigen::MatrixXd> iterates_A;
  std::vector<Eigen::MatrixXd> iterates_Z;

  bool has_lowrank() const { return lowrank.size() > 0; }
  bool has_sparse_err() const { return sparse_err.size() > 0; }
};

// Rows of A with Euclidean norm above tol (ascending). The dictionary-aware
// overload skips rows whose atom is a flagged zero column in every sensor.
std::vector<int> support_rows(const Eigen::MatrixXd& coeffs, double tol);
std::vector<int> support_rows(const Eigen::MatrixXd& coeffs, double tol,
                              const StructuredDictionary& dict);

}  // namespace mssr
