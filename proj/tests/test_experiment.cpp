#include <unistd.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "mssr/experiment.hpp"

using namespace mssr;
namespace fs = std::filesystem;

namespace {

struct TempTree {
  fs::path root;
  TempTree() {
    root = fs::temp_directory_path() /
           ("mssr_exp_" + std::to_string(::getpid()) + "_" + std::to_string(counter()++));
    fs::create_directories(root);
  }
  ~TempTree() {
    std::error_code ec;
    fs::remove_all(root, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  fs::path file(const std::string& name, const std::string& content) const {
    const fs::path p = root / name;
    std::ofstream out(p);
    out << content;
    return p;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Small but learnable synthetic dataset on disk, shared by the end-to-end
// cases. Generated once per process.
const fs::path& shared_dataset() {
  static const fs::path dir = [] {
    SynthConfig cfg;
    cfg.classes = 2;
    cfg.sensors = 3;
    cfg.train_per_class = 3;
    cfg.test_per_class = 3;
    cfg.signal_len = 512;
    cfg.snr_db = 10.0;
    cfg.seed = 11;
    cfg.features.keep = 16;
    cfg.features.plan = SegmentPlan{1, 128, 0.75};
    cfg.features.detect_window = 128;
    const fs::path out =
        fs::temp_directory_path() / ("mssr_exp_data_" + std::to_string(::getpid()));
    write_synth_dataset(make_dataset(cfg), out.string());
    return out;
  }();
  return dir;
}

std::string base_config_json(const std::string& extra = "") {
  std::string s = R"({
  "schema_version": 1,
  "dataset": ")" + shared_dataset().string() + R"(",
  "methods": ["jsr", "jsr+l"],
  "lambdas": {"default": {"lambda_l": 2.0}})";
  if (!extra.empty()) s += ",\n" + extra;
  s += "\n}\n";
  return s;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("method names round-trip and know their solver variant") {
  for (Method m : {Method::jsr, Method::jsr_e, Method::jsr_l, Method::gjsr_l, Method::kerjsr,
                   Method::kergjsr_l})
    CHECK(method_from_name(method_name(m)) == m);
  CHECK_FALSE(method_from_name("nope").has_value());
  CHECK(std::string(method_name(Method::gjsr_l)) == "gjsr+l");
  CHECK(method_is_kernel(Method::kerjsr));
  CHECK_FALSE(method_is_kernel(Method::gjsr_l));
  CHECK(method_variant(Method::kergjsr_l) == Variant::gjsr_l);
  CHECK(method_variant(Method::jsr_e) == Variant::jsr_e);
}

TEST_CASE("the config loader fills defaults and resolves paths") {
  TempTree t;
  const fs::path cfg_path = t.file("exp.json", base_config_json());
  const ExperimentConfig cfg = load_experiment_config(cfg_path.string());
  REQUIRE(cfg.datasets.size() == 1);
  CHECK(cfg.datasets[0].second == shared_dataset().string());
  CHECK(cfg.methods == std::vector<Method>{Method::jsr, Method::jsr_l});
  CHECK(cfg.sensor_sets.empty());
  CHECK(cfg.cv_folds == 2);
  CHECK(cfg.jobs == 1);
  CHECK(cfg.lambda_l_grid == std::vector<double>{0.5, 1.0, 2.0, 4.0, 8.0, 16.0});
  CHECK(cfg.lambda_g_grid == std::vector<double>{0.0, 0.25, 0.5, 1.0, 2.0});
  CHECK(cfg.lambda_e_grid == std::vector<double>{0.05, 0.1, 0.2, 0.4});

  // A relative dataset path resolves against the config directory.
  fs::create_directories(t.root / "ds");
  std::ofstream(t.root / "ds" / "manifest.json") << "{}";
  const fs::path rel = t.file("rel.json", R"({
    "schema_version": 1,
    "dataset": "ds",
    "methods": ["jsr"]
  })");
  const ExperimentConfig rcfg = load_experiment_config(rel.string());
  CHECK(rcfg.datasets[0].second == (t.root / "ds").string());
}

TEST_CASE("config errors are specific") {
  TempTree t;
  auto load = [&](const std::string& body) {
    return load_experiment_config(t.file("bad.json", body).string());
  };

  CHECK_THROWS_AS(load_experiment_config((t.root / "missing.json").string()), IoError);
  CHECK_THROWS_AS(load("{not json"), ConfigError);
  CHECK_THROWS_AS(load(R"({"schema_version": 2, "dataset": "d", "methods": ["jsr"]})"),
                  ConfigError);
  CHECK_THROWS_AS(load(R"({"schema_version": 1, "methods": ["jsr"]})"), ConfigError);
  CHECK_THROWS_AS(load(R"({"schema_version": 1, "dataset": "d"})"), ConfigError);
  CHECK_THROWS_AS(load(R"({"schema_version": 1, "dataset": "d", "datasets": [], "methods": ["jsr"]})"),
                  ConfigError);
  CHECK_THROWS_AS(load(R"({"schema_version": 1, "dataset": "d", "methods": ["zfc"]})"),
                  ConfigError);
  CHECK_THROWS_AS(load(R"({"schema_version": 1, "dataset": "d", "methods": ["jsr"], "zzz": 1})"),
                  ConfigError);
  // Kernel methods need a kernel block.
  CHECK_THROWS_AS(load(R"({"schema_version": 1, "dataset": "d", "methods": ["kerjsr"]})"),
                  ConfigError);
  // Sensor indices are 1-based and non-empty.
  CHECK_THROWS_AS(
      load(R"({"schema_version": 1, "dataset": "d", "methods": ["jsr"], "sensor_sets": [[0]]})"),
      ConfigError);
  CHECK_THROWS_AS(
      load(R"({"schema_version": 1, "dataset": "d", "methods": ["jsr"], "sensor_sets": [[]]})"),
      ConfigError);
  CHECK_THROWS_AS(
      load(R"({"schema_version": 1, "dataset": "d", "methods": ["jsr"], "sensor_sets": [[1, 1]]})"),
      ConfigError);
}

TEST_CASE("one-based sensor sets convert to zero-based") {
  TempTree t;
  const fs::path p = t.file("exp.json", base_config_json(R"("sensor_sets": [[1], [2, 3]])"));
  const ExperimentConfig cfg = load_experiment_config(p.string());
  REQUIRE(cfg.sensor_sets.size() == 2);
  CHECK(cfg.sensor_sets[0] == std::vector<int>{0});
  CHECK(cfg.sensor_sets[1] == std::vector<int>{1, 2});
}

TEST_CASE("lambda resolution prefers the method row over the default") {
  TempTree t;
  const fs::path p = t.file("exp.json", R"({
    "schema_version": 1,
    "dataset": ")" + shared_dataset().string() + R"(",
    "methods": ["jsr", "jsr+l", "gjsr+l", "jsr+e"],
    "lambdas": {
      "default": {"lambda_l": 2.0, "lambda_g": 0.5, "lambda_e": 0.1},
      "gjsr+l": {"lambda_l": 8.0, "lambda_g": 1.0}
    }
  })");
  const ExperimentConfig cfg = load_experiment_config(p.string());

  CHECK(resolve_lambdas(cfg, Method::jsr_l).lambda_l == 2.0);
  const MethodLambdas g = resolve_lambdas(cfg, Method::gjsr_l);
  CHECK(g.lambda_l == 8.0);
  CHECK(g.lambda_g == 1.0);
  CHECK(resolve_lambdas(cfg, Method::jsr_e).lambda_e == 0.1);
  // jsr needs no weights at all.
  CHECK_NOTHROW(resolve_lambdas(cfg, Method::jsr));

  const SolverConfig scfg = solver_config_for(cfg, Method::gjsr_l, g);
  CHECK(scfg.variant == Variant::gjsr_l);
  CHECK(scfg.lambda_l == 8.0);
  CHECK(scfg.lambda_g == 1.0);
  CHECK(scfg.max_iters == cfg.max_iters);
}

TEST_CASE("a missing required weight names the method") {
  TempTree t;
  const fs::path p = t.file("exp.json", R"({
    "schema_version": 1,
    "dataset": ")" + shared_dataset().string() + R"(",
    "methods": ["jsr+l"]
  })");
  const ExperimentConfig cfg = load_experiment_config(p.string());
  bool threw = false;
  try {
    resolve_lambdas(cfg, Method::jsr_l);
  } catch (const ConfigError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("jsr+l") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("a full run writes per-class and overall rows") {
  TempTree t;
  const fs::path p = t.file("exp.json", base_config_json(R"("sensor_sets": [[1], [1, 2, 3]])"));
  const ExperimentConfig cfg = load_experiment_config(p.string());
  const RunOutput out = run_experiment(cfg);

  // 2 methods x 2 sensor sets x (2 classes + overall)
  CHECK(out.results.size() == 2 * 2 * 3);
  // Decisions: one row per (method, sensor set, test sample)
  CHECK(out.decisions.size() == 2 * 2 * 6);

  int overall_rows = 0;
  for (const ResultRow& r : out.results) {
    CHECK((r.method == "jsr" || r.method == "jsr+l"));
    CHECK((r.sensor_set == "S1" || r.sensor_set == "S1+S2+S3"));
    if (r.cls == "overall") {
      ++overall_rows;
      CHECK(r.total == 6);
    } else {
      CHECK(r.total == 3);
    }
    CHECK(r.correct + r.failed <= r.total);
    const int scored = r.total - r.failed;
    const double expect = scored > 0 ? static_cast<double>(r.correct) / scored : 0.0;
    CHECK(r.accuracy == doctest::Approx(expect).epsilon(1e-12));
  }
  CHECK(overall_rows == 4);

  for (const DecisionRow& d : out.decisions) {
    CHECK(d.true_class >= 0);
    if (!d.failed) {
      CHECK(d.predicted >= 0);
      REQUIRE(d.residuals.size() == 2);
      CHECK(d.residuals[d.predicted] <= d.residuals[1 - d.predicted]);
    }
  }
}

TEST_CASE("worker count never changes the outcome") {
  TempTree t;
  const fs::path p = t.file("exp.json", base_config_json());
  ExperimentConfig cfg = load_experiment_config(p.string());
  cfg.jobs = 1;
  const RunOutput one = run_experiment(cfg);
  cfg.jobs = 3;
  const RunOutput three = run_experiment(cfg);
  REQUIRE(one.decisions.size() == three.decisions.size());
  for (size_t i = 0; i < one.decisions.size(); ++i) {
    CHECK(one.decisions[i].predicted == three.decisions[i].predicted);
    CHECK(one.decisions[i].margin == three.decisions[i].margin);
    CHECK(one.decisions[i].residuals == three.decisions[i].residuals);
  }
}

TEST_CASE("cross-validation covers the grid and keeps the earliest tie") {
  TempTree t;
  const fs::path p = t.file("exp.json", R"({
    "schema_version": 1,
    "dataset": ")" + shared_dataset().string() + R"(",
    "methods": ["jsr+l"],
    "lambda_l_grid": [1.0, 2.0],
    "cv_folds": 2
  })");
  const ExperimentConfig cfg = load_experiment_config(p.string());
  const std::vector<CvResult> res = cross_validate(cfg);
  REQUIRE(res.size() == 1);
  CHECK(res[0].method == Method::jsr_l);
  REQUIRE(res[0].grid.size() == 2);
  CHECK(res[0].grid[0].lambdas.lambda_l == 1.0);
  CHECK(res[0].grid[1].lambdas.lambda_l == 2.0);

  int selected = 0;
  double best = -1.0;
  size_t best_idx = 0;
  for (size_t i = 0; i < res[0].grid.size(); ++i) {
    if (res[0].grid[i].selected) ++selected;
    if (res[0].grid[i].accuracy > best) {
      best = res[0].grid[i].accuracy;
      best_idx = i;
    }
  }
  CHECK(selected == 1);
  CHECK(res[0].grid[best_idx].selected);  // earliest strict maximum wins
  CHECK(res[0].selected.lambda_l == res[0].grid[best_idx].lambdas.lambda_l);
}

TEST_CASE("a method with no tunable weight cross-validates to a single point") {
  TempTree t;
  const fs::path p = t.file("exp.json", R"({
    "schema_version": 1,
    "dataset": ")" + shared_dataset().string() + R"(",
    "methods": ["jsr"]
  })");
  const std::vector<CvResult> res = cross_validate(load_experiment_config(p.string()));
  REQUIRE(res.size() == 1);
  CHECK(res[0].grid.size() == 1);
  CHECK(res[0].grid[0].selected);
}

TEST_CASE("cross-validation needs enough samples per class for the folds") {
  TempTree t;
  const fs::path p = t.file("exp.json", R"({
    "schema_version": 1,
    "dataset": ")" + shared_dataset().string() + R"(",
    "methods": ["jsr"],
    "cv_folds": 7
  })");
  CHECK_THROWS_AS(cross_validate(load_experiment_config(p.string())), ConfigError);
}

TEST_CASE("the gen command honors the seed override deterministically") {
  TempTree t;
  const fs::path cfg = t.file("synth.json", R"({
    "schema_version": 1,
    "classes": 2,
    "sensors": 2,
    "train_per_class": 2,
    "test_per_class": 1,
    "signal_len": 512,
    "snr_db": 6.0,
    "seed": 5,
    "features": {"keep": 12, "segments": 1, "segment_len": 128, "detect_window": 128}
  })");
  cmd_gen(cfg.string(), (t.root / "a").string(), std::nullopt);
  cmd_gen(cfg.string(), (t.root / "b").string(), std::nullopt);
  cmd_gen(cfg.string(), (t.root / "c").string(), 99);

  CHECK(slurp(t.root / "a" / "manifest.json") == slurp(t.root / "b" / "manifest.json"));
  const std::string a0 = slurp(t.root / "a" / "data" / "tr_c0_000_S1.csv");
  CHECK(a0 == slurp(t.root / "b" / "data" / "tr_c0_000_S1.csv"));
  CHECK(a0 != slurp(t.root / "c" / "data" / "tr_c0_000_S1.csv"));

  const SynthConfig echo = load_synth_config((t.root / "c" / "synth.json").string());
  CHECK(echo.seed == 99);
}

TEST_CASE("run and cv commands write the documented csv files") {
  TempTree t;
  const fs::path p = t.file("exp.json", base_config_json(R"("lambda_l_grid": [1.0, 2.0])"));
  cmd_run(p.string(), (t.root / "run").string(), std::nullopt, std::nullopt);

  const std::string results = slurp(t.root / "run" / "results.csv");
  CHECK(results.rfind("dataset,method,sensor_set,class,correct,total,failed,accuracy\n", 0) == 0);
  const std::string decisions = slurp(t.root / "run" / "decisions.csv");
  CHECK(decisions.rfind(
            "dataset,method,sensor_set,sample,true_class,predicted,failed,margin,residuals\n",
            0) == 0);

  cmd_cv(p.string(), (t.root / "cv").string(), std::nullopt, std::nullopt);
  const std::string cv = slurp(t.root / "cv" / "cv.csv");
  CHECK(cv.rfind("method,lambda_l,lambda_g,lambda_e,accuracy,selected\n", 0) == 0);
  CHECK(fs::exists(t.root / "cv" / "selected.json"));

  // The selection file feeds straight back into a run.
  const fs::path p2 = t.file("exp2.json", R"({
    "schema_version": 1,
    "dataset": ")" + shared_dataset().string() + R"(",
    "methods": ["jsr", "jsr+l"],
    "lambdas": ")" + (t.root / "cv" / "selected.json").string() + R"("
  })");
  cmd_run(p2.string(), (t.root / "run2").string(), std::nullopt, std::nullopt);
  CHECK(fs::exists(t.root / "run2" / "results.csv"));
}

TEST_CASE("repeated runs are byte-identical") {
  TempTree t;
  const fs::path p = t.file("exp.json", base_config_json(R"("sensor_sets": [[1], [1, 2]])"));
  cmd_run(p.string(), (t.root / "r1").string(), std::nullopt, std::nullopt);
  cmd_run(p.string(), (t.root / "r2").string(), std::nullopt, 3);
  CHECK(slurp(t.root / "r1" / "results.csv") == slurp(t.root / "r2" / "results.csv"));
  CHECK(slurp(t.root / "r1" / "decisions.csv") == slurp(t.root / "r2" / "decisions.csv"));
}

TEST_CASE("the trace command reports the solver trajectory") {
  TempTree t;
  const fs::path p = t.file("exp.json", base_config_json(R"("trace": {"method": "jsr+l", "sample": 1})"));
  cmd_trace(p.string(), (t.root / "tr").string());
  const std::string trace = slurp(t.root / "tr" / "trace.csv");
  CHECK(trace.rfind("iter,objective,feas_residual,dA,dZ\n", 0) == 0);
  // At least a handful of iterations were logged.
  CHECK(std::count(trace.begin(), trace.end(), '\n') > 3);
}

}  // TEST_SUITE
