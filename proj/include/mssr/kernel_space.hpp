#pragma once

#include "mssr/core_model.hpp"

namespace mssr {

enum class KernelKind { linear, rbf, poly };

struct KernelSpec {
  KernelKind kind = KernelKind::linear;
  // rbf bandwidth; <= 0 means "resolve with the median pairwise atom distance
  // heuristic when the Gram system is built".
  double eta = 0.0;
  int degree = 2;  // poly only
};

const char* kernel_kind_name(KernelKind k);

// kappa(x, y): linear x.y, rbf exp(-||x-y||^2 / eta^2), poly (x.y + 1)^degree.
// rbf requires a resolved (positive) eta here.
double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y);

// Median pairwise Euclidean distance between atoms, within sensors, pooled
// over sensors. Errors when every pair coincides (no usable bandwidth).
double median_atom_distance(const StructuredDictionary& dict);

// Per-sensor Gram matrices of one dictionary/observation pair. K_dd is
// symmetrized and clamped to the PSD cone (negative eigenvalues, which can
// only be round-off, are zeroed).
struct GramSystem {
  std::vector<Eigen::MatrixXd> K_dd;  // P x P
  std::vector<Eigen::MatrixXd> K_dy;  // P x T
  std::vector<Eigen::MatrixXd> K_yy;  // T x T
  std::vector<int> class_sizes;
  std::vector<std::string> class_labels;
  double eta_used = 0.0;  // resolved rbf bandwidth, 0 for other kernels

  int sensor_count() const { return static_cast<int>(K_dd.size()); }
  int atom_count() const { return K_dd.empty() ? 0 : static_cast<int>(K_dd[0].rows()); }
  int obs_cols() const { return K_dy.empty() ? 0 : static_cast<int>(K_dy[0].cols()); }
  int class_count() const { return static_cast<int>(class_sizes.size()); }
  int class_offset(int c) const;
};

// Dictionary-side kernel blocks, reusable across many observations.
struct DictionaryGram {
  KernelSpec spec;             // with eta resolved
  std::vector<Eigen::MatrixXd> K_dd;
  std::vector<int> class_sizes;
  std::vector<std::string> class_labels;
};

DictionaryGram build_dictionary_gram(const StructuredDictionary& dict, const KernelSpec& spec);
GramSystem build_gram(const DictionaryGram& dgram, const StructuredDictionary& dict,
                      const MultiSensorObservation& obs);
GramSystem build_gram(const StructuredDictionary& dict, const MultiSensorObservation& obs,
                      const KernelSpec& spec);

// Kernelized solve: the same ADMM engine run on the Gram system, with K_dd as
// the per-sensor dictionary and K_dy as the observation. For +L variants the
// low-rank variable lives in the Gram domain (the product of the mapped
// dictionary with the feature-space interference).
Decomposition solve_kernel(const GramSystem& gram, const SolverConfig& cfg);

}  // namespace mssr
