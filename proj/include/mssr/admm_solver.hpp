#pragma once

#include "mssr/core_model.hpp"

namespace mssr {

// Largest eigenvalue of (D^m)^T D^m, maximized over sensors. Power iteration
// from a fixed all-ones start vector, relative tolerance 1e-8, at most 1e4
// iterations per sensor (NumericError beyond that). Deterministic.
double max_gram_eigen(const StructuredDictionary& dict);

// Model objective at a given decomposition: the regularizer sum plus
// (mu/2) * sum_m ||Y^m - D^m A^m - L^m - E^m||_F^2. Missing L/E blocks count
// as zero.
double objective_value(const StructuredDictionary& dict, const MultiSensorObservation& obs,
                       const Decomposition& dec, const SolverConfig& cfg);

// Linearized ADMM for the whole model family. One iteration is:
//   1. low-rank step    L <- svt(Y - G - E + Z/mu, lambda_l/mu)        (+L variants)
//   2. sparse-error step E <- entry_shrink(Y - G - L + Z/mu, lambda_e/mu)
//   3. coefficient step  per class c:
//        R = A - theta * T,  T^m = (D^m)^T (D^m A^m - (Y^m - L^m - E^m + Z^m/mu))
//        A_c <- group_row_shrink(R_c, theta/mu, lambda_g*theta/mu)
//   4. multiplier step   Z <- Z + mu * (Y - G - L - E)
// where G stacks D^m A^m. Stops when the worst relative per-sensor constraint
// residual falls below tol_feas and the relative coefficient change below
// tol_change, or after max_iters (converged=false, not an error). The default
// step theta = 0.99 / max_gram_eigen(dict) satisfies the convergence bound
// theta * sigma_max < 1 for any mu > 0.
Decomposition solve(const StructuredDictionary& dict, const MultiSensorObservation& obs,
                    const SolverConfig& cfg);

}  // namespace mssr
