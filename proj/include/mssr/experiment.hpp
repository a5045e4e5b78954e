#pragma once

#include <map>
#include <optional>

#include "mssr/classifier.hpp"
#include "mssr/dataset_io.hpp"
#include "mssr/synth_data.hpp"

namespace mssr {

// The six classification methods the harness can run: the four linear solver
// variants plus the two kernelized ones.
enum class Method { jsr, jsr_e, jsr_l, gjsr_l, kerjsr, kergjsr_l };

const char* method_name(Method m);
std::optional<Method> method_from_name(const std::string& name);
bool method_is_kernel(Method m);
Variant method_variant(Method m);

struct MethodLambdas {
  double lambda_l = 0.0;
  double lambda_g = 0.0;
  double lambda_e = 0.0;
};

struct TraceTarget {
  std::string dataset;  // label; empty = first
  std::string method;   // empty = first listed
  int sensor_set = 0;   // index into sensor_sets
  int sample = 0;       // test sample index
};

struct ExperimentConfig {
  std::vector<std::pair<std::string, std::string>> datasets;  // (label, path)
  std::vector<Method> methods;
  std::optional<KernelSpec> kernel;           // required when a kernel method is listed
  std::vector<std::vector<int>> sensor_sets;  // 0-based; empty = one set of all sensors

  // Per-method weights, keyed by method name with a "default" fallback row.
  std::map<std::string, std::map<std::string, double>> lambdas;

  std::vector<double> lambda_l_grid{0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  std::vector<double> lambda_g_grid{0.0, 0.25, 0.5, 1.0, 2.0};
  std::vector<double> lambda_e_grid{0.05, 0.1, 0.2, 0.4};
  int cv_folds = 2;

  std::uint64_t seed = 0;
  int jobs = 1;

  double mu = 1.0;
  int max_iters = 500;
  double tol_feas = 1e-5;
  double tol_change = 1e-6;

  TraceTarget trace;
  std::string config_dir;  // directory of the config file, for relative paths
};

ExperimentConfig load_experiment_config(const std::string& path);

// Weights a method needs, resolved from the lambda table (method row over
// "default" row). Missing required entries raise ConfigError.
MethodLambdas resolve_lambdas(const ExperimentConfig& cfg, Method m);

SolverConfig solver_config_for(const ExperimentConfig& cfg, Method m, const MethodLambdas& lam);

// Per-sample evaluation of one method on one dictionary.
struct MethodEval {
  std::vector<int> predicted;  // -1 where the solver failed numerically
  std::vector<bool> failed;
  std::vector<double> margins;
  std::vector<std::vector<double>> residuals;
};

// `dict` must already be restricted to `sensors` (0-based; empty = all); the
// sample observations are restricted here. Numeric solver failures set the
// failed flag; any other error aborts the whole evaluation.
MethodEval evaluate_samples(const StructuredDictionary& dict,
                            const std::vector<const SampleRecord*>& samples,
                            const std::vector<int>& sensors, Method m, const SolverConfig& scfg,
                            const std::optional<KernelSpec>& kernel, int jobs);

struct ResultRow {
  std::string dataset, method, sensor_set, cls;
  int correct = 0, total = 0, failed = 0;
  double accuracy = 0.0;
};

struct DecisionRow {
  std::string dataset, method, sensor_set, sample_id;
  int true_class = -1, predicted = -1;
  bool failed = false;
  double margin = 0.0;
  std::vector<double> residuals;
};

struct RunOutput {
  std::vector<ResultRow> results;
  std::vector<DecisionRow> decisions;
};

RunOutput run_experiment(const ExperimentConfig& cfg);

struct CvPoint {
  MethodLambdas lambdas;
  double accuracy = 0.0;
  bool selected = false;
};

struct CvResult {
  Method method = Method::jsr;
  std::vector<CvPoint> grid;
  MethodLambdas selected;
};

// Stratified k-fold cross-validation on the training samples of the first
// dataset. Ties keep the earliest grid point, so with ascending grids the
// smallest weights win.
std::vector<CvResult> cross_validate(const ExperimentConfig& cfg);

// CLI verbs. `gen` reads a synthesis config; the others read an experiment
// config. Outputs land in out_dir (created if needed).
void cmd_gen(const std::string& config_path, const std::string& out_dir,
             std::optional<std::uint64_t> seed_override);
void cmd_cv(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::optional<int> jobs_override);
void cmd_run(const std::string& config_path, const std::string& out_dir,
             std::optional<std::uint64_t> seed_override, std::optional<int> jobs_override);
void cmd_trace(const std::string& config_path, const std::string& out_dir);

}  // namespace mssr
