#include <random>

#include "doctest.h"
#include "mssr/admm_solver.hpp"
#include "mssr/classifier.hpp"

using namespace mssr;

namespace {

// Well-separated two-class dictionary: class 0 atoms live in the first half
// of the coordinates, class 1 atoms in the second half.
StructuredDictionary split_dict(std::mt19937& rng, int sensors, int half, int per_class) {
  std::uniform_real_distribution<double> uni(0.5, 1.5);
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> samples(2);
  for (int c = 0; c < 2; ++c) {
    samples[c].resize(sensors);
    for (auto& s : samples[c])
      for (int k = 0; k < per_class; ++k) {
        Eigen::VectorXd v = Eigen::VectorXd::Zero(2 * half);
        for (int i = 0; i < half; ++i) v[c * half + i] = uni(rng);
        s.push_back(v);
      }
  }
  return build_dictionary(samples);
}

}  // namespace

TEST_SUITE("classifier") {

TEST_CASE("an observation equal to a class atom is labeled with that class") {
  std::mt19937 rng(3);
  const auto dict = split_dict(rng, 2, 5, 3);
  for (int c = 0; c < 2; ++c) {
    MultiSensorObservation obs;
    for (int m = 0; m < 2; ++m)
      obs.sensors.push_back(dict.matrix(m).col(dict.class_offset(c)));
    SolverConfig cfg;
    const Decomposition dec = solve(dict, obs, cfg);
    const ClassDecision d = classify_linear(dict, obs, dec, cfg.variant);
    CHECK(d.label == c);
    REQUIRE(d.residuals.size() == 2);
    CHECK(d.residuals[c] < d.residuals[1 - c]);
    CHECK(d.margin == doctest::Approx(d.residuals[1 - c] - d.residuals[c]));
    CHECK(d.margin > 0.0);
  }
}

TEST_CASE("reported residuals recompute from the decomposition") {
  std::mt19937 rng(7);
  const auto dict = split_dict(rng, 2, 4, 3);
  MultiSensorObservation obs;
  for (int m = 0; m < 2; ++m)
    obs.sensors.push_back(dict.matrix(m).col(1) + 0.1 * Eigen::MatrixXd::Random(8, 1));

  SolverConfig cfg;
  cfg.variant = Variant::jsr_l;
  cfg.lambda_l = 2.0;
  const Decomposition dec = solve(dict, obs, cfg);
  const ClassDecision d = classify_linear(dict, obs, dec, cfg.variant);

  const int t_cols = 1;
  for (int c = 0; c < dict.class_count(); ++c) {
    double expect = 0.0;
    for (int m = 0; m < dict.sensor_count(); ++m) {
      Eigen::MatrixXd r = obs.sensors[m] -
                          dict.class_block(m, c) * dec.coeffs.class_sensor(c, m) -
                          dec.lowrank.middleCols(m * t_cols, t_cols);
      expect += r.squaredNorm();
    }
    CHECK(d.residuals[c] == doctest::Approx(expect).epsilon(1e-12));
  }
}

TEST_CASE("exact ties resolve to the lowest class index") {
  // Mirror-symmetric dictionary and a zero observation: every class residual
  // is identical, so the tie rule decides.
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> samples(3);
  Eigen::VectorXd v(2);
  v << 1.0, 0.0;
  for (auto& cls : samples) {
    cls.resize(1);
    cls[0] = {v};
  }
  const auto dict = build_dictionary(samples);
  MultiSensorObservation obs;
  obs.sensors = {Eigen::MatrixXd::Zero(2, 1)};
  const Decomposition dec = solve(dict, obs, SolverConfig{});
  const ClassDecision d = classify_linear(dict, obs, dec, Variant::jsr);
  CHECK(d.label == 0);
  CHECK(d.margin == 0.0);
}

TEST_CASE("variant mismatch between solve and classify is rejected") {
  std::mt19937 rng(11);
  const auto dict = split_dict(rng, 1, 3, 2);
  MultiSensorObservation obs;
  obs.sensors = {dict.matrix(0).col(0)};
  const Decomposition dec = solve(dict, obs, SolverConfig{});
  CHECK_THROWS_AS(classify_linear(dict, obs, dec, Variant::jsr_l), ConfigError);
}

TEST_CASE("a single class yields margin zero") {
  std::vector<std::vector<std::vector<Eigen::VectorXd>>> samples(1);
  samples[0].resize(1);
  Eigen::VectorXd v(3);
  v << 1.0, 2.0, 3.0;
  samples[0][0] = {v};
  const auto dict = build_dictionary(samples);
  MultiSensorObservation obs;
  obs.sensors = {dict.matrix(0).col(0)};
  const Decomposition dec = solve(dict, obs, SolverConfig{});
  const ClassDecision d = classify_linear(dict, obs, dec, Variant::jsr);
  CHECK(d.label == 0);
  CHECK(d.margin == 0.0);
  CHECK(d.residuals.size() == 1);
}

TEST_CASE("kernel residual equals the linear residual under the linear kernel") {
  std::mt19937 rng(13);
  const auto dict = split_dict(rng, 2, 4, 3);
  MultiSensorObservation obs;
  for (int m = 0; m < 2; ++m)
    obs.sensors.push_back(dict.matrix(m).col(2) + 0.05 * Eigen::MatrixXd::Random(8, 1));

  const GramSystem gram = build_gram(dict, obs, KernelSpec{});
  SolverConfig cfg;
  cfg.tol_feas = 1e-8;
  cfg.tol_change = 1e-9;
  cfg.max_iters = 5000;
  const Decomposition kdec = solve_kernel(gram, cfg);
  const ClassDecision kd = classify_kernel(gram, kdec, cfg.variant);

  // Recompute each class residual in signal space from the gram coefficients.
  for (int c = 0; c < 2; ++c) {
    double expect = 0.0;
    for (int m = 0; m < 2; ++m) {
      Eigen::MatrixXd r =
          obs.sensors[m] - dict.class_block(m, c) * kdec.coeffs.class_sensor(c, m);
      expect += r.squaredNorm();
    }
    CHECK(kd.residuals[c] == doctest::Approx(expect).epsilon(1e-6));
  }
  CHECK(kd.residuals[kd.label] <= kd.residuals[1 - kd.label]);
}

TEST_CASE("kernel residual is clamped against round-off negatives") {
  // y identical to a dictionary atom makes the winning residual exactly zero
  // in exact arithmetic; the computed value must not dip below zero.
  std::mt19937 rng(17);
  const auto dict = split_dict(rng, 1, 3, 2);
  MultiSensorObservation obs;
  obs.sensors = {dict.matrix(0).col(0)};
  const GramSystem gram = build_gram(dict, obs, KernelSpec{});
  SolverConfig cfg;
  cfg.tol_feas = 1e-9;
  cfg.tol_change = 1e-10;
  cfg.max_iters = 20000;
  const Decomposition dec = solve_kernel(gram, cfg);
  for (int c = 0; c < 2; ++c) CHECK(kernel_class_residual(gram, dec, c) >= 0.0);
  CHECK(kernel_class_residual(gram, dec, 0) < 1e-6);
}

TEST_CASE("majority vote reports negated counts and breaks ties low") {
  std::mt19937 rng(19);
  const auto dict = split_dict(rng, 3, 4, 3);
  MultiSensorObservation obs;
  // Two sensors see class 1, one sees class 0: vote 2-1 for class 1.
  obs.sensors.push_back(dict.matrix(0).col(dict.class_offset(0)));
  obs.sensors.push_back(dict.matrix(1).col(dict.class_offset(1)));
  obs.sensors.push_back(dict.matrix(2).col(dict.class_offset(1) + 1));

  const ClassDecision d = majority_vote_baseline(dict, obs, SolverConfig{});
  CHECK(d.label == 1);
  REQUIRE(d.residuals.size() == 2);
  CHECK(d.residuals[0] == doctest::Approx(-1.0));
  CHECK(d.residuals[1] == doctest::Approx(-2.0));
  CHECK(d.margin == doctest::Approx(1.0));
}

TEST_CASE("majority vote with an even split picks the lowest index") {
  std::mt19937 rng(23);
  const auto dict = split_dict(rng, 2, 4, 3);
  MultiSensorObservation obs;
  obs.sensors.push_back(dict.matrix(0).col(dict.class_offset(1)));  // votes class 1
  obs.sensors.push_back(dict.matrix(1).col(dict.class_offset(0)));  // votes class 0
  const ClassDecision d = majority_vote_baseline(dict, obs, SolverConfig{});
  CHECK(d.label == 0);
  CHECK(d.margin == 0.0);
}

}  // TEST_SUITE
