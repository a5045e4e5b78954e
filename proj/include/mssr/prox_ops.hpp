#pragma once

#include <Eigen/Dense>

namespace mssr {

// Closed-form proximal maps used by the linearized ADMM engine. All of them
// solve  min_X  reg(X) + (1/2)||X - R||_F^2  for their respective regularizer
// and are non-expansive.

// Scalar soft threshold: sign(x) * max(|x| - tau, 0).
double soft_threshold(double x, double tau);

// Entrywise l1 prox: soft threshold applied to every entry.
Eigen::MatrixXd entry_shrink(const Eigen::MatrixXd& R, double tau);

// Row-wise group shrink (l_{1,2} prox): row i maps to
//   (1 - alpha/||R_i||) R_i  when ||R_i|| > alpha, else zero.
Eigen::MatrixXd row_shrink(const Eigen::MatrixXd& R, double alpha);

// Two-stage prox for the row-sparsity plus per-class Frobenius regularizer
//   alpha1 ||X||_{1,2} + alpha2 ||X||_F :
// first shrink the rows at alpha1, then scale the whole block by
// (1 - alpha2/||S||_F) or zero it when ||S||_F <= alpha2.
// With alpha2 = 0 this is exactly row_shrink.
Eigen::MatrixXd group_row_shrink(const Eigen::MatrixXd& R, double alpha1, double alpha2);

// Nuclear-norm prox: soft-threshold the singular values at tau, keeping the
// singular vectors.
Eigen::MatrixXd svt(const Eigen::MatrixXd& R, double tau);

}  // namespace mssr
