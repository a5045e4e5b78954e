#include "mssr/kernel_space.hpp"

#include <algorithm>
#include <cmath>

#include "fmt_compat.hpp"
#include "mssr/admm_solver.hpp"

namespace mssr {

const char* kernel_kind_name(KernelKind k) {
  switch (k) {
    case KernelKind::linear: return "linear";
    case KernelKind::rbf: return "rbf";
    case KernelKind::poly: return "poly";
  }
  return "?";
}

double kernel_eval(const KernelSpec& spec, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (x.size() != y.size())
    throw DimensionError(format_msg("kernel arguments have lengths %zd and %zd",
                                    static_cast<ptrdiff_t>(x.size()),
                                    static_cast<ptrdiff_t>(y.size())));
  switch (spec.kind) {
    case KernelKind::linear:
      return x.dot(y);
    case KernelKind::rbf: {
      if (spec.eta <= 0.0) throw ConfigError("rbf kernel needs a positive eta");
      const double d2 = (x - y).squaredNorm();
      return std::exp(-d2 / (spec.eta * spec.eta));
    }
    case KernelKind::poly: {
      if (spec.degree < 1) throw ConfigError("poly kernel needs degree >= 1");
      return std::pow(x.dot(y) + 1.0, spec.degree);
    }
  }
  throw ConfigError("unknown kernel kind");
}

double median_atom_distance(const StructuredDictionary& dict) {
  std::vector<double> dists;
  for (int m = 0; m < dict.sensor_count(); ++m) {
    const Eigen::MatrixXd& D = dict.matrix(m);
    for (int i = 0; i < D.cols(); ++i)
      for (int j = i + 1; j < D.cols(); ++j) dists.push_back((D.col(i) - D.col(j)).norm());
  }
  if (dists.empty())
    throw ConfigError("bandwidth heuristic needs at least two atoms; set eta explicitly");
  const size_t mid = dists.size() / 2;
  std::nth_element(dists.begin(), dists.begin() + mid, dists.end());
  const double med = dists[mid];
  if (med <= 0.0)
    throw ConfigError("median pairwise atom distance is zero; set eta explicitly");
  return med;
}

int GramSystem::class_offset(int c) const {
  int off = 0;
  for (int i = 0; i < c; ++i) off += class_sizes[i];
  return off;
}

namespace {

Eigen::MatrixXd cross_gram(const KernelSpec& spec, const Eigen::MatrixXd& X,
                           const Eigen::MatrixXd& Y) {
  // Bulk forms for the supported kernels; equivalent to looping kernel_eval
  // over column pairs.
  switch (spec.kind) {
    case KernelKind::linear:
      return X.transpose() * Y;
    case KernelKind::rbf: {
      if (spec.eta <= 0.0) throw ConfigError("rbf kernel needs a positive eta");
      const Eigen::VectorXd xs = X.colwise().squaredNorm();
      const Eigen::VectorXd ys = Y.colwise().squaredNorm();
      Eigen::MatrixXd d2 = (-2.0 * (X.transpose() * Y)).rowwise() + ys.transpose();
      d2.colwise() += xs;
      return (-d2.cwiseMax(0.0) / (spec.eta * spec.eta)).array().exp();
    }
    case KernelKind::poly: {
      if (spec.degree < 1) throw ConfigError("poly kernel needs degree >= 1");
      Eigen::MatrixXd g = X.transpose() * Y;
      return (g.array() + 1.0).pow(spec.degree);
    }
  }
  throw ConfigError("unknown kernel kind");
}

Eigen::MatrixXd clamp_psd(Eigen::MatrixXd K) {
  K = 0.5 * (K + K.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(K);
  if (eig.info() != Eigen::Success) throw NumericError("Gram eigendecomposition failed");
  if (eig.eigenvalues().minCoeff() >= 0.0) return K;
  Eigen::VectorXd d = eig.eigenvalues().cwiseMax(0.0);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

DictionaryGram build_dictionary_gram(const StructuredDictionary& dict, const KernelSpec& spec) {
  if (dict.sensor_count() == 0) throw DimensionError("dictionary has no sensors");
  DictionaryGram out;
  out.spec = spec;
  if (spec.kind == KernelKind::rbf && spec.eta <= 0.0) out.spec.eta = median_atom_distance(dict);
  for (int m = 0; m < dict.sensor_count(); ++m)
    out.K_dd.push_back(clamp_psd(cross_gram(out.spec, dict.matrix(m), dict.matrix(m))));
  out.class_sizes = dict.class_sizes();
  out.class_labels = dict.class_labels();
  return out;
}

GramSystem build_gram(const DictionaryGram& dgram, const StructuredDictionary& dict,
                      const MultiSensorObservation& obs) {
  validate_pair(dict, obs);
  GramSystem gram;
  gram.K_dd = dgram.K_dd;
  gram.class_sizes = dgram.class_sizes;
  gram.class_labels = dgram.class_labels;
  gram.eta_used = dgram.spec.kind == KernelKind::rbf ? dgram.spec.eta : 0.0;
  for (int m = 0; m < dict.sensor_count(); ++m) {
    gram.K_dy.push_back(cross_gram(dgram.spec, dict.matrix(m), obs.sensors[m]));
    gram.K_yy.push_back(cross_gram(dgram.spec, obs.sensors[m], obs.sensors[m]));
  }
  return gram;
}

GramSystem build_gram(const StructuredDictionary& dict, const MultiSensorObservation& obs,
                      const KernelSpec& spec) {
  return build_gram(build_dictionary_gram(dict, spec), dict, obs);
}

Decomposition solve_kernel(const GramSystem& gram, const SolverConfig& cfg) {
  if (gram.sensor_count() == 0) throw DimensionError("Gram system has no sensors");
  const int P = gram.atom_count();
  std::vector<Eigen::MatrixXd> dict_mats;
  std::vector<std::vector<bool>> zero_atom;
  MultiSensorObservation obs;
  for (int m = 0; m < gram.sensor_count(); ++m) {
    dict_mats.push_back(gram.K_dd[m]);
    zero_atom.emplace_back(P, false);
    obs.sensors.push_back(gram.K_dy[m]);
  }
  StructuredDictionary gram_dict(std::move(dict_mats), gram.class_sizes, gram.class_labels,
                                 std::move(zero_atom));
  return solve(gram_dict, obs, cfg);
}

}  // namespace mssr
