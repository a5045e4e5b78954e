#pragma once

#include "mssr/core_model.hpp"
#include "mssr/kernel_space.hpp"

namespace mssr {

struct ClassDecision {
  int label = -1;
  std::vector<double> residuals;  // per class, the quantity that was minimized
  double margin = 0.0;            // runner-up minus winner; 0 on a tie
};

// Class-conditional reconstruction energy:
//   sum_m || Y^m - D^m_c A^m_c - L^m - E^m ||_F^2
// using only class c's coefficient rows but always subtracting the full
// recovered low-rank / sparse-error blocks (those model class-independent
// corruption). Label is the argmin; ties go to the lowest class index. The
// decomposition must come from the same solver variant.
ClassDecision classify_linear(const StructuredDictionary& dict, const MultiSensorObservation& obs,
                              const Decomposition& dec, Variant variant);

// Gram-domain version of the class residual for sensor m and class c:
//   trace(K_yy) - 2 trace(A_c^T K_dy[class rows]) + trace(A_c^T K_dd[c,c] A_c)
// summed over sensors. Never meaningfully negative; tiny negative round-off
// is clamped to zero.
double kernel_class_residual(const GramSystem& gram, const Decomposition& dec, int c);

ClassDecision classify_kernel(const GramSystem& gram, const Decomposition& dec, Variant variant);

// Per-sensor baseline: a single-sensor jsr solve+classify for every sensor,
// then a majority vote (ties to the lowest class index). The residual slots
// hold negated vote counts so the argmin/margin conventions carry over.
ClassDecision majority_vote_baseline(const StructuredDictionary& dict,
                                     const MultiSensorObservation& obs, const SolverConfig& cfg);

}  // namespace mssr
