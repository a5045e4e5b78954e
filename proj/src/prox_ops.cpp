#include "mssr/prox_ops.hpp"

#include <algorithm>
#include <cmath>

#include "mssr/errors.hpp"

namespace mssr {

double soft_threshold(double x, double tau) {
  if (x > tau) return x - tau;
  if (x < -tau) return x + tau;
  return 0.0;
}

Eigen::MatrixXd entry_shrink(const Eigen::MatrixXd& R, double tau) {
  if (tau < 0.0) throw ConfigError("entry_shrink threshold must be non-negative");
  return R.unaryExpr([tau](double x) { return soft_threshold(x, tau); });
}

Eigen::MatrixXd row_shrink(const Eigen::MatrixXd& R, double alpha) {
  if (alpha < 0.0) throw ConfigError("row_shrink threshold must be non-negative");
  Eigen::MatrixXd out(R.rows(), R.cols());
  for (int i = 0; i < R.rows(); ++i) {
    const double nrm = R.row(i).norm();
    if (nrm > alpha)
      out.row(i) = ((nrm - alpha) / nrm) * R.row(i);
    else
      out.row(i).setZero();
  }
  return out;
}

Eigen::MatrixXd group_row_shrink(const Eigen::MatrixXd& R, double alpha1, double alpha2) {
  if (alpha2 < 0.0) throw ConfigError("group_row_shrink thresholds must be non-negative");
  Eigen::MatrixXd S = row_shrink(R, alpha1);
  if (alpha2 == 0.0) return S;
  const double nrm = S.norm();
  if (nrm > alpha2) return ((nrm - alpha2) / nrm) * S;
  S.setZero();
  return S;
}

Eigen::MatrixXd svt(const Eigen::MatrixXd& R, double tau) {
  if (tau < 0.0) throw ConfigError("svt threshold must be non-negative");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(R, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericError("svt: singular value decomposition failed");
  Eigen::VectorXd s = svd.singularValues();
  for (int i = 0; i < s.size(); ++i) s[i] = std::max(s[i] - tau, 0.0);
  return svd.matrixU() * s.asDiagonal() * svd.matrixV().transpose();
}

}  // namespace mssr
