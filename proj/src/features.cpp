#include "mssr/features.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <mutex>
#include <vector>

#include "fmt_compat.hpp"

namespace mssr {

long detect_event(const Eigen::VectorXd& signal, int window) {
  const long n = signal.size();
  if (window < 1) throw ConfigError("detection window must be positive");
  if (n < window)
    throw DimensionError(
        format_msg("signal length %ld is shorter than the detection window %d", n, window));
  const long hop = std::max(window / 4, 1);

  std::vector<double> prefix(static_cast<size_t>(n) + 1, 0.0);
  for (long i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + signal[i] * signal[i];

  long best_start = 0;
  double best_energy = -1.0;
  for (long s = 0; s + window <= n; s += hop) {
    const double e = prefix[s + window] - prefix[s];
    if (e > best_energy) {
      best_energy = e;
      best_start = s;
    }
  }
  return best_start + window / 2;
}

namespace {

long reflect_index(long i, long n) {
  if (n == 1) return 0;
  const long period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

}  // namespace

std::vector<Eigen::VectorXd> segment_signal(const Eigen::VectorXd& signal, long center,
                                            const SegmentPlan& plan) {
  if (signal.size() == 0) throw DimensionError("cannot segment an empty signal");
  if (plan.count < 1) throw ConfigError("segment count must be positive");
  if (plan.segment_len < 1) throw ConfigError("segment length must be positive");
  if (plan.overlap < 0.0 || plan.overlap >= 1.0)
    throw ConfigError("segment overlap must lie in [0, 1)");

  const long len = plan.segment_len;
  const long spacing = std::max(std::lround(len * (1.0 - plan.overlap)), 1l);
  const long span = len + (plan.count - 1) * spacing;
  const long first = center - span / 2;

  std::vector<Eigen::VectorXd> out;
  out.reserve(plan.count);
  for (int k = 0; k < plan.count; ++k) {
    Eigen::VectorXd seg(len);
    const long start = first + k * spacing;
    for (long t = 0; t < len; ++t) seg[t] = signal[reflect_index(start + t, signal.size())];
    out.push_back(std::move(seg));
  }
  return out;
}

namespace {

// fftw planning is not thread-safe; execution of a local plan is.
std::mutex fftw_plan_mutex;

std::vector<std::complex<double>> dft(const std::vector<std::complex<double>>& in, int sign) {
  const int n = static_cast<int>(in.size());
  std::vector<std::complex<double>> out(in.size());
  fftw_plan plan;
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    plan = fftw_plan_dft_1d(
        n,
        reinterpret_cast<fftw_complex*>(const_cast<std::complex<double>*>(in.data())),
        reinterpret_cast<fftw_complex*>(out.data()), sign, FFTW_ESTIMATE | FFTW_PRESERVE_INPUT);
  }
  if (!plan) throw NumericError("fftw plan creation failed");
  fftw_execute(plan);
  {
    std::lock_guard<std::mutex> lock(fftw_plan_mutex);
    fftw_destroy_plan(plan);
  }
  return out;
}

}  // namespace

Eigen::VectorXd power_cepstrum(const Eigen::VectorXd& segment, int keep) {
  const long n = segment.size();
  if (keep < 1) throw ConfigError("must keep at least one cepstral coefficient");
  if (keep + 1 > n)
    throw DimensionError(
        format_msg("segment length %ld cannot provide %d cepstral coefficients", n, keep));

  std::vector<std::complex<double>> buf(static_cast<size_t>(n));
  for (long t = 0; t < n; ++t) buf[t] = {segment[t], 0.0};
  const std::vector<std::complex<double>> spectrum = dft(buf, FFTW_FORWARD);

  std::vector<double> power(static_cast<size_t>(n));
  double peak = 0.0;
  for (long k = 0; k < n; ++k) {
    power[k] = std::norm(spectrum[k]);
    peak = std::max(peak, power[k]);
  }
  if (peak == 0.0) throw NumericError("all-zero segment has no spectrum to take a log of");
  const double floor_val = 1e-12 * peak;
  for (long k = 0; k < n; ++k) buf[k] = {std::log10(std::max(power[k], floor_val)), 0.0};

  const std::vector<std::complex<double>> cep = dft(buf, FFTW_BACKWARD);
  Eigen::VectorXd out(keep);
  for (int i = 0; i < keep; ++i) out[i] = std::norm(cep[i + 1] / static_cast<double>(n));
  return out;
}

Eigen::MatrixXd event_features(const Eigen::VectorXd& signal, const FeatureParams& params) {
  const long center = detect_event(signal, params.detect_window);
  const std::vector<Eigen::VectorXd> segments = segment_signal(signal, center, params.plan);
  Eigen::MatrixXd out(params.keep, static_cast<Eigen::Index>(segments.size()));
  for (size_t k = 0; k < segments.size(); ++k) out.col(k) = power_cepstrum(segments[k], params.keep);
  return out;
}

}  // namespace mssr
