#include "mssr/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "fmt_compat.hpp"
#include "mssr/admm_solver.hpp"

namespace mssr {

namespace {

void finish_decision(ClassDecision& d) {
  const int C = static_cast<int>(d.residuals.size());
  d.label = 0;
  for (int c = 1; c < C; ++c)
    if (d.residuals[c] < d.residuals[d.label]) d.label = c;
  double runner_up = std::numeric_limits<double>::infinity();
  for (int c = 0; c < C; ++c)
    if (c != d.label) runner_up = std::min(runner_up, d.residuals[c]);
  d.margin = C > 1 ? runner_up - d.residuals[d.label] : 0.0;
}

void check_variant(const Decomposition& dec, Variant variant) {
  if (dec.variant != variant)
    throw ConfigError(format_msg("decomposition was produced by variant %s, classifier asked for %s",
                                 variant_name(dec.variant), variant_name(variant)));
}

}  // namespace

ClassDecision classify_linear(const StructuredDictionary& dict, const MultiSensorObservation& obs,
                              const Decomposition& dec, Variant variant) {
  check_variant(dec, variant);
  const ProblemDims dims = validate_pair(dict, obs);
  if (dec.coeffs.data.rows() != dims.atoms ||
      dec.coeffs.data.cols() != static_cast<Eigen::Index>(dims.sensors) * dims.obs_cols)
    throw DimensionError("decomposition does not match the dictionary/observation pair");

  const int T = dims.obs_cols;
  ClassDecision d;
  d.residuals.assign(dims.classes, 0.0);
  for (int m = 0; m < dims.sensors; ++m) {
    Eigen::MatrixXd base = obs.sensors[m];
    if (dec.has_lowrank()) base -= dec.lowrank.middleCols(m * T, T);
    if (dec.has_sparse_err()) base -= dec.sparse_err.middleCols(m * T, T);
    for (int c = 0; c < dims.classes; ++c) {
      const Eigen::MatrixXd rec = dict.class_block(m, c) * dec.coeffs.class_sensor(c, m);
      d.residuals[c] += (base - rec).squaredNorm();
    }
  }
  finish_decision(d);
  return d;
}

double kernel_class_residual(const GramSystem& gram, const Decomposition& dec, int c) {
  if (c < 0 || c >= gram.class_count())
    throw ConfigError(format_msg("class index %d out of range [0, %d)", c, gram.class_count()));
  const int off = gram.class_offset(c);
  const int sz = gram.class_sizes[c];
  const int T = gram.obs_cols();
  double r = 0.0;
  for (int m = 0; m < gram.sensor_count(); ++m) {
    const Eigen::MatrixXd Ac = dec.coeffs.data.block(off, m * T, sz, T);
    r += gram.K_yy[m].trace();
    r -= 2.0 * (Ac.transpose() * gram.K_dy[m].middleRows(off, sz)).trace();
    r += (Ac.transpose() * gram.K_dd[m].block(off, off, sz, sz) * Ac).trace();
  }
  return std::max(r, 0.0);
}

ClassDecision classify_kernel(const GramSystem& gram, const Decomposition& dec, Variant variant) {
  check_variant(dec, variant);
  if (dec.coeffs.data.rows() != gram.atom_count() ||
      dec.coeffs.data.cols() != static_cast<Eigen::Index>(gram.sensor_count()) * gram.obs_cols())
    throw DimensionError("decomposition does not match the Gram system");
  ClassDecision d;
  d.residuals.resize(gram.class_count());
  for (int c = 0; c < gram.class_count(); ++c) d.residuals[c] = kernel_class_residual(gram, dec, c);
  finish_decision(d);
  return d;
}

ClassDecision majority_vote_baseline(const StructuredDictionary& dict,
                                     const MultiSensorObservation& obs, const SolverConfig& cfg) {
  const ProblemDims dims = validate_pair(dict, obs);
  SolverConfig per_sensor = cfg;
  per_sensor.variant = Variant::jsr;
  per_sensor.extra_sparse_err = false;
  per_sensor.record_iterates = false;
  validate_config(per_sensor);

  std::vector<int> votes(dims.classes, 0);
  for (int m = 0; m < dims.sensors; ++m) {
    const std::vector<int> one{m};
    const StructuredDictionary dm = dict.subset(one);
    const MultiSensorObservation om = obs.subset(one);
    const Decomposition dec = solve(dm, om, per_sensor);
    votes[classify_linear(dm, om, dec, Variant::jsr).label] += 1;
  }

  ClassDecision d;
  d.residuals.resize(dims.classes);
  for (int c = 0; c < dims.classes; ++c) d.residuals[c] = -static_cast<double>(votes[c]);
  finish_decision(d);
  return d;
}

}  // namespace mssr
