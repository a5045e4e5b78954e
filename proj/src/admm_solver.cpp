#include "mssr/admm_solver.hpp"

#include <algorithm>
#include <cmath>

#include "fmt_compat.hpp"
#include "mssr/prox_ops.hpp"

namespace mssr {

namespace {

// Power iteration for the top eigenvalue of D^T D, driven through matrix-vector
// products with D so the Gram matrix is never formed.
double top_gram_eigenvalue(const Eigen::MatrixXd& D) {
  const int p = static_cast<int>(D.cols());
  Eigen::VectorXd v = Eigen::VectorXd::Constant(p, 1.0 / std::sqrt(static_cast<double>(p)));
  double lambda = 0.0;
  const int max_rounds = 10000;
  for (int k = 0; k < max_rounds; ++k) {
    Eigen::VectorXd w = D.transpose() * (D * v);
    const double next = v.dot(w);  // Rayleigh quotient, ||v|| == 1
    const double wn = w.norm();
    if (wn == 0.0) return 0.0;  // v is in the null space; Gram acts as zero on it
    v = w / wn;
    if (k > 0 && std::abs(next - lambda) <= 1e-8 * std::max(1.0, std::abs(next))) return next;
    lambda = next;
  }
  throw NumericError("power iteration on the dictionary Gram did not converge in 10000 rounds");
}

// Soft-threshold the singular values; also reports the nuclear norm of the
// result so the trace objective gets it without a second decomposition.
Eigen::MatrixXd svt_tracked(const Eigen::MatrixXd& R, double tau, double* nuclear) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("singular value decomposition failed");
  Eigen::VectorXd s = svd.singularValues();
  double sum = 0.0;
  for (int i = 0; i < s.size(); ++i) {
    s[i] = std::max(s[i] - tau, 0.0);
    sum += s[i];
  }
  if (nuclear) *nuclear = sum;
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

double row_group_norm(const Eigen::MatrixXd& A) {
  double sum = 0.0;
  for (int i = 0; i < A.rows(); ++i) sum += A.row(i).norm();
  return sum;
}

}  // namespace

double max_gram_eigen(const StructuredDictionary& dict) {
  if (dict.sensor_count() == 0) throw DimensionError("dictionary has no sensors");
  double best = 0.0;
  for (int m = 0; m < dict.sensor_count(); ++m)
    best = std::max(best, top_gram_eigenvalue(dict.matrix(m)));
  return best;
}

double objective_value(const StructuredDictionary& dict, const MultiSensorObservation& obs,
                       const Decomposition& dec, const SolverConfig& cfg) {
  const ProblemDims dims = validate_pair(dict, obs);
  double value = row_group_norm(dec.coeffs.data);
  if (cfg.uses_group())
    for (int c = 0; c < dec.coeffs.class_count(); ++c)
      value += cfg.lambda_g * dec.coeffs.class_rows(c).norm();
  if (dec.has_lowrank()) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(dec.lowrank);
    value += cfg.lambda_l * svd.singularValues().sum();
  }
  if (dec.has_sparse_err()) value += cfg.lambda_e * dec.sparse_err.cwiseAbs().sum();

  const int T = dims.obs_cols;
  for (int m = 0; m < dims.sensors; ++m) {
    Eigen::MatrixXd resid = obs.sensors[m] - dict.matrix(m) * dec.coeffs.sensor(m);
    if (dec.has_lowrank()) resid -= dec.lowrank.middleCols(m * T, T);
    if (dec.has_sparse_err()) resid -= dec.sparse_err.middleCols(m * T, T);
    value += 0.5 * cfg.mu * resid.squaredNorm();
  }
  return value;
}

Decomposition solve(const StructuredDictionary& dict, const MultiSensorObservation& obs,
                    const SolverConfig& cfg) {
  validate_config(cfg);
  const ProblemDims dims = validate_pair(dict, obs);
  const int M = dims.sensors, N = dims.rows, P = dims.atoms, T = dims.obs_cols;
  const int MT = M * T;

  for (int m = 0; m < M; ++m) {
    if (!dict.matrix(m).allFinite())
      throw ConfigError(format_msg("dictionary sensor %d contains non-finite values", m));
    if (!obs.sensors[m].allFinite())
      throw ConfigError(format_msg("observation sensor %d contains non-finite values", m));
  }

  const double sigma_max = max_gram_eigen(dict);
  double theta;
  if (cfg.theta) {
    theta = *cfg.theta;
    if (theta * sigma_max >= 1.0)
      throw ConfigError(format_msg(
          "theta=%g violates the convergence bound theta * sigma_max < 1 (sigma_max=%g)", theta,
          sigma_max));
  } else {
    if (sigma_max <= 0.0) throw ConfigError("dictionary is identically zero");
    theta = 0.99 / sigma_max;
  }

  const bool use_l = cfg.uses_lowrank();
  const bool use_e = cfg.uses_sparse_err();
  const double lambda_g = cfg.uses_group() ? cfg.lambda_g : 0.0;
  const double mu = cfg.mu;
  const double alpha1 = theta / mu;
  const double alpha2 = lambda_g * theta / mu;

  Eigen::MatrixXd Y(N, MT);
  Eigen::VectorXd y_norm(M);
  for (int m = 0; m < M; ++m) {
    Y.middleCols(m * T, T) = obs.sensors[m];
    const double n = obs.sensors[m].norm();
    y_norm[m] = n > 0.0 ? n : 1.0;
  }

  CoefficientBlocks A(P, M, T, dict);
  Eigen::MatrixXd Z = Eigen::MatrixXd::Zero(N, MT);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(N, MT);
  Eigen::MatrixXd E = Eigen::MatrixXd::Zero(N, MT);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(N, MT);  // stacked D^m A^m
  Eigen::MatrixXd A_next(P, MT), R(P, MT), resid(N, MT);

  Decomposition dec;
  dec.variant = cfg.variant;
  dec.extra_sparse_err = cfg.extra_sparse_err;
  dec.trace.reserve(cfg.max_iters);
  if (cfg.record_iterates) {
    dec.iterates_A.push_back(A.data);
    dec.iterates_Z.push_back(Z);
  }

  double l_nuclear = 0.0;
  for (int j = 0; j < cfg.max_iters; ++j) {
    if (use_l) L = svt_tracked(Y - G - E + Z / mu, cfg.lambda_l / mu, &l_nuclear);
    if (use_e) E = entry_shrink(Y - G - L + Z / mu, cfg.lambda_e / mu);

    // Linearized coefficient step: gradient of the smooth penalty at A_j,
    // then the class-wise prox of the row/group regularizer.
    for (int m = 0; m < M; ++m) {
      const auto Am = A.data.middleCols(m * T, T);
      R.middleCols(m * T, T).noalias() =
          Am - theta * (dict.matrix(m).transpose() *
                        (G.middleCols(m * T, T) - Y.middleCols(m * T, T) +
                         L.middleCols(m * T, T) + E.middleCols(m * T, T) - Z.middleCols(m * T, T) / mu));
    }
    for (int c = 0; c < dict.class_count(); ++c) {
      const int off = dict.class_offset(c), sz = dict.class_size(c);
      A_next.middleRows(off, sz) = group_row_shrink(R.middleRows(off, sz), alpha1, alpha2);
    }

    const double a_prev_norm = A.data.norm();
    const double dA = (A_next - A.data).norm();
    A.data.swap(A_next);
    for (int m = 0; m < M; ++m)
      G.middleCols(m * T, T).noalias() = dict.matrix(m) * A.data.middleCols(m * T, T);

    resid = Y - G - L - E;
    const double dZ = mu * resid.norm();
    Z.noalias() += mu * resid;

    if (!A.data.allFinite() || !Z.allFinite())
      throw NumericError(format_msg("non-finite values at iteration %d", j + 1));

    double feas = 0.0;
    for (int m = 0; m < M; ++m)
      feas = std::max(feas, resid.middleCols(m * T, T).norm() / y_norm[m]);

    double objective = row_group_norm(A.data);
    if (cfg.uses_group())
      for (int c = 0; c < dict.class_count(); ++c) {
        const int off = dict.class_offset(c), sz = dict.class_size(c);
        objective += lambda_g * A.data.middleRows(off, sz).norm();
      }
    if (use_l) objective += cfg.lambda_l * l_nuclear;
    if (use_e) objective += cfg.lambda_e * E.cwiseAbs().sum();
    objective += 0.5 * mu * resid.squaredNorm();

    dec.trace.push_back({j + 1, objective, feas, dA, dZ});
    if (cfg.record_iterates) {
      dec.iterates_A.push_back(A.data);
      dec.iterates_Z.push_back(Z);
    }
    dec.iterations = j + 1;

    if (feas < cfg.tol_feas && dA / std::max(1.0, a_prev_norm) < cfg.tol_change) {
      dec.converged = true;
      break;
    }
  }

  dec.coeffs = std::move(A);
  if (use_l) dec.lowrank = std::move(L);
  if (use_e) dec.sparse_err = std::move(E);
  return dec;
}

}  // namespace mssr
