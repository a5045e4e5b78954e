#pragma once

#include <Eigen/Dense>

#include "mssr/errors.hpp"

namespace mssr {

// Center of the rectangular window (hop = window/4) with the highest signal
// energy; the earliest window wins ties. Needs signal length >= window.
long detect_event(const Eigen::VectorXd& signal, int window = 4096);

struct SegmentPlan {
  int count = 1;         // segments per event
  int segment_len = 0;
  double overlap = 0.75;  // fraction shared by consecutive segments
};

// `count` windows of segment_len around `center`: consecutive starts are
// segment_len*(1-overlap) apart and the covered span is centered on `center`.
// Out-of-range indices are reflected at the signal edges.
std::vector<Eigen::VectorXd> segment_signal(const Eigen::VectorXd& signal, long center,
                                            const SegmentPlan& plan);

// Power cepstrum: |inverse-DFT(log10 |DFT(segment)|^2)|^2, with the spectrum
// floored at 1e-12 of its maximum before the log. Coefficient zero (overall
// level) is dropped; the next `keep` coefficients are returned. An all-zero
// segment has no spectrum to take a log of and raises NumericError.
Eigen::VectorXd power_cepstrum(const Eigen::VectorXd& segment, int keep);

struct FeatureParams {
  int keep = 50;  // cepstral coefficients kept per segment = feature dimension
  SegmentPlan plan{1, 1024, 0.75};
  int detect_window = 4096;
};

// detect -> segment -> cepstrum per segment; columns are segments.
Eigen::MatrixXd event_features(const Eigen::VectorXd& signal, const FeatureParams& params);

}  // namespace mssr
