#include "mssr/experiment.hpp"

#include "mssr/admm_solver.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <set>
#include <thread>

#include "fmt_compat.hpp"
#include "json.hpp"
#include "rng.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace mssr {

namespace {

constexpr std::uint64_t kTagCvFold = 6;

const Method kAllMethods[] = {Method::jsr,    Method::jsr_e,  Method::jsr_l,
                              Method::gjsr_l, Method::kerjsr, Method::kergjsr_l};

void check_known_keys(const json& obj, const std::set<std::string>& known,
                      const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it)
    if (!known.count(it.key()))
      throw ConfigError("unknown key \"" + it.key() + "\" in " + where);
}

json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return j;
}

std::string path_label(const std::string& path) {
  const std::string stem = fs::path(path).filename().string();
  return stem.empty() ? path : stem;
}

std::string resolve_path(const std::string& base_dir, const std::string& p) {
  fs::path fp(p);
  if (fp.is_absolute() || base_dir.empty()) return p;
  return (fs::path(base_dir) / fp).string();
}

KernelSpec kernel_from_json(const json& j, const std::string& where) {
  check_known_keys(j, {"kind", "eta", "degree"}, where);
  KernelSpec spec;
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "linear")
    spec.kind = KernelKind::linear;
  else if (kind == "rbf")
    spec.kind = KernelKind::rbf;
  else if (kind == "poly")
    spec.kind = KernelKind::poly;
  else
    throw ConfigError(where + ": unknown kernel kind \"" + kind + "\"");
  if (j.contains("eta")) spec.eta = j.at("eta").get<double>();
  if (j.contains("degree")) spec.degree = j.at("degree").get<int>();
  if (spec.kind == KernelKind::poly && spec.degree < 1)
    throw ConfigError(where + ": poly degree must be at least 1");
  return spec;
}

std::map<std::string, double> lambda_row_from_json(const json& j, const std::string& where) {
  check_known_keys(j, {"lambda_l", "lambda_g", "lambda_e"}, where);
  std::map<std::string, double> row;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const double v = it.value().get<double>();
    if (!std::isfinite(v)) throw ConfigError(where + ": " + it.key() + " is not finite");
    row[it.key()] = v;
  }
  return row;
}

std::map<std::string, std::map<std::string, double>> lambda_table_from_json(
    const json& j, const std::string& where) {
  std::map<std::string, std::map<std::string, double>> table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    if (key != "default" && !method_from_name(key))
      throw ConfigError(where + ": unknown method \"" + key + "\"");
    table[key] = lambda_row_from_json(it.value(), where + "." + key);
  }
  return table;
}

std::vector<double> grid_from_json(const json& j, const std::string& where) {
  std::vector<double> g;
  for (const auto& v : j) {
    const double x = v.get<double>();
    if (!std::isfinite(x)) throw ConfigError(where + " contains a non-finite entry");
    g.push_back(x);
  }
  if (g.empty()) throw ConfigError(where + " must not be empty");
  return g;
}

std::vector<int> all_sensor_indices(int m) {
  std::vector<int> v(m);
  for (int i = 0; i < m; ++i) v[i] = i;
  return v;
}

std::string sensor_set_name(const std::vector<int>& set) {
  std::string s;
  for (int idx : set) {
    if (!s.empty()) s += '+';
    s += "S" + std::to_string(idx + 1);
  }
  return s;
}

// The effective sensor sets for a dataset with M sensors: the configured ones
// (validated against M) or the single all-sensors set.
std::vector<std::vector<int>> effective_sensor_sets(const ExperimentConfig& cfg, int m) {
  if (cfg.sensor_sets.empty()) return {all_sensor_indices(m)};
  for (const auto& set : cfg.sensor_sets)
    for (int idx : set)
      if (idx < 0 || idx >= m)
        throw ConfigError(
            format_msg("sensor index %d out of range for a %d-sensor dataset", idx + 1, m));
  return cfg.sensor_sets;
}

double safe_accuracy(int correct, int scored) {
  return scored > 0 ? static_cast<double>(correct) / scored : 0.0;
}

bool is_identity_set(const std::vector<int>& set, int m) {
  if (static_cast<int>(set.size()) != m) return false;
  for (int i = 0; i < m; ++i)
    if (set[i] != i) return false;
  return true;
}

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string format_g17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_f6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::jsr: return "jsr";
    case Method::jsr_e: return "jsr+e";
    case Method::jsr_l: return "jsr+l";
    case Method::gjsr_l: return "gjsr+l";
    case Method::kerjsr: return "kerjsr";
    case Method::kergjsr_l: return "kergjsr+l";
  }
  return "?";
}

std::optional<Method> method_from_name(const std::string& name) {
  for (Method m : kAllMethods)
    if (name == method_name(m)) return m;
  return std::nullopt;
}

bool method_is_kernel(Method m) { return m == Method::kerjsr || m == Method::kergjsr_l; }

Variant method_variant(Method m) {
  switch (m) {
    case Method::jsr: return Variant::jsr;
    case Method::jsr_e: return Variant::jsr_e;
    case Method::jsr_l: return Variant::jsr_l;
    case Method::gjsr_l: return Variant::gjsr_l;
    case Method::kerjsr: return Variant::jsr;
    case Method::kergjsr_l: return Variant::gjsr_l;
  }
  return Variant::jsr;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  const json j = parse_file(path);
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  check_known_keys(j,
                   {"schema_version", "dataset", "datasets", "methods", "kernel", "sensor_sets",
                    "lambdas", "lambda_l_grid", "lambda_g_grid", "lambda_e_grid", "cv_folds",
                    "seed", "jobs", "solver", "trace"},
                   path);
  if (j.value("schema_version", 0) != 1)
    throw ConfigError(path + ": schema_version must be 1");

  ExperimentConfig cfg;
  cfg.config_dir = fs::path(path).parent_path().string();

  if (j.contains("dataset") == j.contains("datasets"))
    throw ConfigError(path + ": give exactly one of \"dataset\" or \"datasets\"");
  if (j.contains("dataset")) {
    const std::string p = resolve_path(cfg.config_dir, j.at("dataset").get<std::string>());
    cfg.datasets.emplace_back(path_label(p), p);
  } else {
    for (const auto& entry : j.at("datasets")) {
      if (entry.is_string()) {
        const std::string p = resolve_path(cfg.config_dir, entry.get<std::string>());
        cfg.datasets.emplace_back(path_label(p), p);
      } else {
        check_known_keys(entry, {"label", "path"}, path + ".datasets[]");
        const std::string p = resolve_path(cfg.config_dir, entry.at("path").get<std::string>());
        cfg.datasets.emplace_back(entry.at("label").get<std::string>(), p);
      }
    }
    if (cfg.datasets.empty()) throw ConfigError(path + ": \"datasets\" must not be empty");
  }
  {
    std::set<std::string> labels;
    for (const auto& [label, p] : cfg.datasets)
      if (!labels.insert(label).second)
        throw ConfigError(path + ": duplicate dataset label \"" + label + "\"");
  }

  if (!j.contains("methods") || j.at("methods").empty())
    throw ConfigError(path + ": \"methods\" must list at least one method");
  for (const auto& name : j.at("methods")) {
    const auto m = method_from_name(name.get<std::string>());
    if (!m)
      throw ConfigError(path + ": unknown method \"" + name.get<std::string>() + "\"");
    cfg.methods.push_back(*m);
  }

  if (j.contains("kernel")) cfg.kernel = kernel_from_json(j.at("kernel"), path + ".kernel");
  for (Method m : cfg.methods)
    if (method_is_kernel(m) && !cfg.kernel)
      throw ConfigError(format_msg("%s: method %s needs a \"kernel\" entry", path.c_str(),
                                   method_name(m)));

  if (j.contains("sensor_sets")) {
    for (const auto& set_json : j.at("sensor_sets")) {
      std::vector<int> set;
      for (const auto& v : set_json) {
        const int idx = v.get<int>();
        if (idx < 1) throw ConfigError(path + ": sensor indices are 1-based and positive");
        set.push_back(idx - 1);
      }
      if (set.empty()) throw ConfigError(path + ": empty sensor set");
      std::set<int> uniq(set.begin(), set.end());
      if (uniq.size() != set.size())
        throw ConfigError(path + ": sensor set repeats an index");
      cfg.sensor_sets.push_back(std::move(set));
    }
    if (cfg.sensor_sets.empty()) throw ConfigError(path + ": \"sensor_sets\" must not be empty");
  }

  if (j.contains("lambdas")) {
    const auto& lam = j.at("lambdas");
    if (lam.is_string()) {
      // A path to a selection file produced by the cv verb.
      const std::string sel_path = resolve_path(cfg.config_dir, lam.get<std::string>());
      const json sel = parse_file(sel_path);
      check_known_keys(sel, {"schema_version", "lambdas"}, sel_path);
      if (sel.value("schema_version", 0) != 1)
        throw ConfigError(sel_path + ": schema_version must be 1");
      cfg.lambdas = lambda_table_from_json(sel.at("lambdas"), sel_path);
    } else {
      cfg.lambdas = lambda_table_from_json(lam, path + ".lambdas");
    }
  }

  if (j.contains("lambda_l_grid"))
    cfg.lambda_l_grid = grid_from_json(j.at("lambda_l_grid"), path + ".lambda_l_grid");
  if (j.contains("lambda_g_grid"))
    cfg.lambda_g_grid = grid_from_json(j.at("lambda_g_grid"), path + ".lambda_g_grid");
  if (j.contains("lambda_e_grid"))
    cfg.lambda_e_grid = grid_from_json(j.at("lambda_e_grid"), path + ".lambda_e_grid");

  cfg.cv_folds = j.value("cv_folds", 2);
  if (cfg.cv_folds < 2) throw ConfigError(path + ": cv_folds must be at least 2");
  cfg.seed = j.value("seed", std::uint64_t{0});
  cfg.jobs = j.value("jobs", 1);
  if (cfg.jobs < 1) throw ConfigError(path + ": jobs must be at least 1");

  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    check_known_keys(s, {"mu", "max_iters", "tol_feas", "tol_change"}, path + ".solver");
    cfg.mu = s.value("mu", cfg.mu);
    cfg.max_iters = s.value("max_iters", cfg.max_iters);
    cfg.tol_feas = s.value("tol_feas", cfg.tol_feas);
    cfg.tol_change = s.value("tol_change", cfg.tol_change);
  }

  if (j.contains("trace")) {
    const auto& t = j.at("trace");
    check_known_keys(t, {"dataset", "method", "sensor_set", "sample"}, path + ".trace");
    cfg.trace.dataset = t.value("dataset", std::string());
    cfg.trace.method = t.value("method", std::string());
    cfg.trace.sensor_set = t.value("sensor_set", 0);
    cfg.trace.sample = t.value("sample", 0);
  }
  return cfg;
}

MethodLambdas resolve_lambdas(const ExperimentConfig& cfg, Method m) {
  const auto lookup = [&](const char* key) -> std::optional<double> {
    const auto row = cfg.lambdas.find(method_name(m));
    if (row != cfg.lambdas.end()) {
      const auto it = row->second.find(key);
      if (it != row->second.end()) return it->second;
    }
    const auto def = cfg.lambdas.find("default");
    if (def != cfg.lambdas.end()) {
      const auto it = def->second.find(key);
      if (it != def->second.end()) return it->second;
    }
    return std::nullopt;
  };
  const auto need = [&](const char* key) {
    const auto v = lookup(key);
    if (!v)
      throw ConfigError(format_msg("no %s configured for method %s (add a \"lambdas\" entry)",
                                   key, method_name(m)));
    return *v;
  };

  MethodLambdas lam;
  const SolverConfig probe{.variant = method_variant(m)};
  if (probe.uses_lowrank()) lam.lambda_l = need("lambda_l");
  if (probe.uses_group()) lam.lambda_g = need("lambda_g");
  if (probe.uses_sparse_err()) lam.lambda_e = need("lambda_e");
  return lam;
}

SolverConfig solver_config_for(const ExperimentConfig& cfg, Method m, const MethodLambdas& lam) {
  SolverConfig scfg;
  scfg.variant = method_variant(m);
  scfg.lambda_l = lam.lambda_l;
  scfg.lambda_g = lam.lambda_g;
  scfg.lambda_e = lam.lambda_e;
  scfg.mu = cfg.mu;
  scfg.max_iters = cfg.max_iters;
  scfg.tol_feas = cfg.tol_feas;
  scfg.tol_change = cfg.tol_change;
  return scfg;
}

MethodEval evaluate_samples(const StructuredDictionary& dict,
                            const std::vector<const SampleRecord*>& samples,
                            const std::vector<int>& sensors, Method m, const SolverConfig& scfg,
                            const std::optional<KernelSpec>& kernel, int jobs) {
  const bool kernelized = method_is_kernel(m);
  if (kernelized && !kernel)
    throw ConfigError(format_msg("method %s needs a kernel spec", method_name(m)));

  std::optional<DictionaryGram> dgram;
  if (kernelized) dgram = build_dictionary_gram(dict, *kernel);

  const int n = static_cast<int>(samples.size());
  MethodEval eval;
  eval.predicted.assign(n, -1);
  eval.failed.assign(n, false);
  eval.margins.assign(n, 0.0);
  eval.residuals.assign(n, {});

  std::atomic<int> next{0};
  std::mutex err_mutex;
  std::exception_ptr first_error;

  const auto worker = [&]() {
    for (;;) {
      const int i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (first_error) return;
      }
      try {
        MultiSensorObservation obs = observation_from(*samples[i]);
        if (!sensors.empty()) obs = obs.subset(sensors);
        ClassDecision decision;
        if (kernelized) {
          const GramSystem gram = build_gram(*dgram, dict, obs);
          const Decomposition dec = solve_kernel(gram, scfg);
          decision = classify_kernel(gram, dec, scfg.variant);
        } else {
          const Decomposition dec = solve(dict, obs, scfg);
          decision = classify_linear(dict, obs, dec, scfg.variant);
        }
        eval.predicted[i] = decision.label;
        eval.margins[i] = decision.margin;
        eval.residuals[i] = decision.residuals;
      } catch (const NumericError&) {
        eval.failed[i] = true;
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int workers = std::max(1, std::min(jobs, n));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);
  return eval;
}

RunOutput run_experiment(const ExperimentConfig& cfg) {
  RunOutput out;
  for (const auto& [label, path] : cfg.datasets) {
    const Dataset ds = load_dataset(path);
    const StructuredDictionary full_dict = dictionary_from(ds);
    const auto sets = effective_sensor_sets(cfg, static_cast<int>(ds.sensor_names.size()));

    std::vector<const SampleRecord*> test;
    test.reserve(ds.test.size());
    for (const auto& s : ds.test) test.push_back(&s);

    for (const auto& set : sets) {
      const int m_count = static_cast<int>(ds.sensor_names.size());
      const StructuredDictionary dict =
          is_identity_set(set, m_count) ? full_dict : full_dict.subset(set);
      const std::string set_name = sensor_set_name(set);
      for (Method m : cfg.methods) {
        const MethodLambdas lam = resolve_lambdas(cfg, m);
        const SolverConfig scfg = solver_config_for(cfg, m, lam);
        const MethodEval eval =
            evaluate_samples(dict, test, set, m, scfg, cfg.kernel, cfg.jobs);

        const int classes = static_cast<int>(ds.class_labels.size());
        std::vector<int> correct(classes, 0), total(classes, 0), failed(classes, 0);
        for (size_t i = 0; i < test.size(); ++i) {
          const int c = test[i]->class_index;
          ++total[c];
          if (eval.failed[i])
            ++failed[c];
          else if (eval.predicted[i] == c)
            ++correct[c];

          DecisionRow d;
          d.dataset = label;
          d.method = method_name(m);
          d.sensor_set = set_name;
          d.sample_id = test[i]->id;
          d.true_class = c;
          d.predicted = eval.predicted[i];
          d.failed = eval.failed[i];
          d.margin = eval.margins[i];
          d.residuals = eval.residuals[i];
          out.decisions.push_back(std::move(d));
        }

        int csum = 0, tsum = 0, fsum = 0;
        for (int c = 0; c < classes; ++c) {
          ResultRow r;
          r.dataset = label;
          r.method = method_name(m);
          r.sensor_set = set_name;
          r.cls = ds.class_labels[c];
          r.correct = correct[c];
          r.total = total[c];
          r.failed = failed[c];
          r.accuracy = safe_accuracy(correct[c], total[c] - failed[c]);
          out.results.push_back(std::move(r));
          csum += correct[c];
          tsum += total[c];
          fsum += failed[c];
        }
        ResultRow overall;
        overall.dataset = label;
        overall.method = method_name(m);
        overall.sensor_set = set_name;
        overall.cls = "overall";
        overall.correct = csum;
        overall.total = tsum;
        overall.failed = fsum;
        overall.accuracy = safe_accuracy(csum, tsum - fsum);
        out.results.push_back(std::move(overall));
      }
    }
  }
  return out;
}

namespace {

struct GridAxes {
  bool use_l = false, use_g = false, use_e = false;
};

GridAxes axes_for(Method m) {
  const SolverConfig probe{.variant = method_variant(m)};
  return {probe.uses_lowrank(), probe.uses_group(), probe.uses_sparse_err()};
}

std::vector<MethodLambdas> grid_points(const ExperimentConfig& cfg, Method m) {
  const GridAxes ax = axes_for(m);
  const std::vector<double> one{0.0};
  const auto& ls = ax.use_l ? cfg.lambda_l_grid : one;
  const auto& gs = ax.use_g ? cfg.lambda_g_grid : one;
  const auto& es = ax.use_e ? cfg.lambda_e_grid : one;
  std::vector<MethodLambdas> pts;
  for (double l : ls)
    for (double g : gs)
      for (double e : es) pts.push_back({l, g, e});
  return pts;
}

}  // namespace

std::vector<CvResult> cross_validate(const ExperimentConfig& cfg) {
  const auto& [label, path] = cfg.datasets.front();
  (void)label;
  const Dataset ds = load_dataset(path);
  if (ds.train.empty()) throw ConfigError(path + ": no training samples to cross-validate on");

  const auto sets = effective_sensor_sets(cfg, static_cast<int>(ds.sensor_names.size()));
  const std::vector<int>& sensors = sets.front();

  const int k = cfg.cv_folds;
  const int classes = static_cast<int>(ds.class_labels.size());

  // Stratified fold assignment: shuffle each class's train indices with a
  // seed-keyed stream, then deal them round-robin.
  std::vector<int> fold_of(ds.train.size(), 0);
  for (int c = 0; c < classes; ++c) {
    std::vector<int> idx;
    for (size_t i = 0; i < ds.train.size(); ++i)
      if (ds.train[i].class_index == c) idx.push_back(static_cast<int>(i));
    if (static_cast<int>(idx.size()) < k)
      throw ConfigError(format_msg("class %s has %zu training samples, fewer than cv_folds=%d",
                                   ds.class_labels[c].c_str(), idx.size(), k));
    Rng rng(cfg.seed, kTagCvFold, static_cast<std::uint64_t>(c));
    for (size_t i = idx.size(); i > 1; --i)
      std::swap(idx[i - 1], idx[rng.word() % i]);
    for (size_t pos = 0; pos < idx.size(); ++pos)
      fold_of[idx[pos]] = static_cast<int>(pos % k);
  }

  // Per-fold dictionaries are shared by every method and grid point.
  std::vector<StructuredDictionary> fold_dicts;
  std::vector<std::vector<const SampleRecord*>> fold_val;
  for (int f = 0; f < k; ++f) {
    std::vector<int> keep;
    std::vector<const SampleRecord*> val;
    for (size_t i = 0; i < ds.train.size(); ++i) {
      if (fold_of[i] == f)
        val.push_back(&ds.train[i]);
      else
        keep.push_back(static_cast<int>(i));
    }
    StructuredDictionary d = dictionary_from(ds, keep);
    if (!is_identity_set(sensors, static_cast<int>(ds.sensor_names.size())))
      d = d.subset(sensors);
    fold_dicts.push_back(std::move(d));
    fold_val.push_back(std::move(val));
  }

  std::vector<CvResult> results;
  for (Method m : cfg.methods) {
    CvResult res;
    res.method = m;
    double best = -1.0;
    int best_idx = -1;
    const auto pts = grid_points(cfg, m);
    for (const MethodLambdas& lam : pts) {
      const SolverConfig scfg = solver_config_for(cfg, m, lam);
      double acc_sum = 0.0;
      for (int f = 0; f < k; ++f) {
        const MethodEval eval = evaluate_samples(fold_dicts[f], fold_val[f], sensors, m, scfg,
                                                 cfg.kernel, cfg.jobs);
        int correct = 0, failed = 0;
        for (size_t i = 0; i < fold_val[f].size(); ++i) {
          if (eval.failed[i])
            ++failed;
          else if (eval.predicted[i] == fold_val[f][i]->class_index)
            ++correct;
        }
        acc_sum += safe_accuracy(correct, static_cast<int>(fold_val[f].size()) - failed);
      }
      CvPoint point;
      point.lambdas = lam;
      point.accuracy = acc_sum / k;
      // Strict improvement keeps the earliest point on ties; with ascending
      // grids that selects the smallest weights.
      if (point.accuracy > best) {
        best = point.accuracy;
        best_idx = static_cast<int>(res.grid.size());
      }
      res.grid.push_back(point);
    }
    res.grid[best_idx].selected = true;
    res.selected = res.grid[best_idx].lambdas;
    results.push_back(std::move(res));
  }
  return results;
}

namespace {

std::string results_csv(const std::vector<ResultRow>& rows) {
  std::string s = "dataset,method,sensor_set,class,correct,total,failed,accuracy\n";
  for (const auto& r : rows) {
    s += r.dataset + ',' + r.method + ',' + r.sensor_set + ',' + r.cls + ',' +
         std::to_string(r.correct) + ',' + std::to_string(r.total) + ',' +
         std::to_string(r.failed) + ',' + format_f6(r.accuracy) + '\n';
  }
  return s;
}

std::string decisions_csv(const std::vector<DecisionRow>& rows,
                          const std::map<std::string, std::vector<std::string>>& labels_by_ds) {
  std::string s = "dataset,method,sensor_set,sample,true_class,predicted,failed,margin,residuals\n";
  for (const auto& r : rows) {
    const auto& labels = labels_by_ds.at(r.dataset);
    const std::string truth = labels[r.true_class];
    const std::string pred = r.predicted >= 0 ? labels[r.predicted] : std::string();
    std::string resid;
    for (size_t i = 0; i < r.residuals.size(); ++i) {
      if (i) resid += ';';
      resid += format_g17(r.residuals[i]);
    }
    s += r.dataset + ',' + r.method + ',' + r.sensor_set + ',' + r.sample_id + ',' + truth + ',' +
         pred + ',' + (r.failed ? "1" : "0") + ',' + format_g17(r.margin) + ',' + resid + '\n';
  }
  return s;
}

void ensure_out_dir(const std::string& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir + ": " + ec.message());
}

}  // namespace

void cmd_gen(const std::string& config_path, const std::string& out_dir,
             std::optional<std::uint64_t> seed_override) {
  SynthConfig cfg = load_synth_config(config_path);
  if (seed_override) cfg.seed = *seed_override;
  const SynthDataset raw = make_dataset(cfg);
  write_synth_dataset(raw, out_dir);
  std::printf("wrote %s: %d classes x %d sensors, %zu train / %zu test samples\n",
              out_dir.c_str(), cfg.classes, cfg.sensors, raw.train.size(), raw.test.size());
}

void cmd_cv(const std::string& config_path, const std::string& out_dir,
            std::optional<std::uint64_t> seed_override, std::optional<int> jobs_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_override) cfg.seed = *seed_override;
  if (jobs_override) cfg.jobs = *jobs_override;
  const auto results = cross_validate(cfg);

  ensure_out_dir(out_dir);
  std::string csv = "method,lambda_l,lambda_g,lambda_e,accuracy,selected\n";
  json selected;
  for (const auto& res : results) {
    const GridAxes ax = axes_for(res.method);
    for (const auto& p : res.grid) {
      csv += std::string(method_name(res.method)) + ',';
      csv += (ax.use_l ? format_g17(p.lambdas.lambda_l) : std::string()) + ',';
      csv += (ax.use_g ? format_g17(p.lambdas.lambda_g) : std::string()) + ',';
      csv += (ax.use_e ? format_g17(p.lambdas.lambda_e) : std::string()) + ',';
      csv += format_f6(p.accuracy) + ',' + (p.selected ? "1" : "0") + '\n';
    }
    json row = json::object();
    if (ax.use_l) row["lambda_l"] = res.selected.lambda_l;
    if (ax.use_g) row["lambda_g"] = res.selected.lambda_g;
    if (ax.use_e) row["lambda_e"] = res.selected.lambda_e;
    selected[method_name(res.method)] = row;
  }
  write_text_file(fs::path(out_dir) / "cv.csv", csv);
  const json sel{{"schema_version", 1}, {"lambdas", selected}};
  write_text_file(fs::path(out_dir) / "selected.json", sel.dump(2) + "\n");
  std::printf("wrote %s/cv.csv and %s/selected.json\n", out_dir.c_str(), out_dir.c_str());
}

void cmd_run(const std::string& config_path, const std::string& out_dir,
             std::optional<std::uint64_t> seed_override, std::optional<int> jobs_override) {
  ExperimentConfig cfg = load_experiment_config(config_path);
  if (seed_override) cfg.seed = *seed_override;
  if (jobs_override) cfg.jobs = *jobs_override;
  const RunOutput out = run_experiment(cfg);

  std::map<std::string, std::vector<std::string>> labels_by_ds;
  for (const auto& [label, path] : cfg.datasets) {
    const Dataset ds = load_dataset(path);
    labels_by_ds[label] = ds.class_labels;
  }

  ensure_out_dir(out_dir);
  write_text_file(fs::path(out_dir) / "results.csv", results_csv(out.results));
  write_text_file(fs::path(out_dir) / "decisions.csv", decisions_csv(out.decisions, labels_by_ds));
  std::printf("wrote %s/results.csv (%zu rows) and %s/decisions.csv (%zu rows)\n", out_dir.c_str(),
              out.results.size(), out_dir.c_str(), out.decisions.size());
}

void cmd_trace(const std::string& config_path, const std::string& out_dir) {
  const ExperimentConfig cfg = load_experiment_config(config_path);

  size_t ds_idx = 0;
  if (!cfg.trace.dataset.empty()) {
    ds_idx = cfg.datasets.size();
    for (size_t i = 0; i < cfg.datasets.size(); ++i)
      if (cfg.datasets[i].first == cfg.trace.dataset) ds_idx = i;
    if (ds_idx == cfg.datasets.size())
      throw ConfigError("trace.dataset \"" + cfg.trace.dataset + "\" is not a configured dataset");
  }
  Method m = cfg.methods.front();
  if (!cfg.trace.method.empty()) {
    const auto parsed = method_from_name(cfg.trace.method);
    if (!parsed) throw ConfigError("trace.method \"" + cfg.trace.method + "\" is unknown");
    m = *parsed;
  }

  const Dataset ds = load_dataset(cfg.datasets[ds_idx].second);
  const auto sets = effective_sensor_sets(cfg, static_cast<int>(ds.sensor_names.size()));
  if (cfg.trace.sensor_set < 0 || cfg.trace.sensor_set >= static_cast<int>(sets.size()))
    throw ConfigError(format_msg("trace.sensor_set %d out of range", cfg.trace.sensor_set));
  const auto& sensors = sets[cfg.trace.sensor_set];
  if (cfg.trace.sample < 0 || cfg.trace.sample >= static_cast<int>(ds.test.size()))
    throw ConfigError(format_msg("trace.sample %d out of range (%zu test samples)",
                                 cfg.trace.sample, ds.test.size()));

  StructuredDictionary dict = dictionary_from(ds);
  MultiSensorObservation obs = observation_from(ds.test[cfg.trace.sample]);
  if (!is_identity_set(sensors, static_cast<int>(ds.sensor_names.size()))) {
    dict = dict.subset(sensors);
    obs = obs.subset(sensors);
  }

  const MethodLambdas lam = resolve_lambdas(cfg, m);
  const SolverConfig scfg = solver_config_for(cfg, m, lam);
  Decomposition dec;
  if (method_is_kernel(m)) {
    if (!cfg.kernel) throw ConfigError("trace of a kernel method needs a \"kernel\" entry");
    dec = solve_kernel(build_gram(dict, obs, *cfg.kernel), scfg);
  } else {
    dec = solve(dict, obs, scfg);
  }

  ensure_out_dir(out_dir);
  std::string csv = "iter,objective,feas_residual,dA,dZ\n";
  for (const auto& t : dec.trace) {
    csv += std::to_string(t.iter) + ',' + format_g17(t.objective) + ',' +
           format_g17(t.feas_residual) + ',' + format_g17(t.dA) + ',' + format_g17(t.dZ) + '\n';
  }
  write_text_file(fs::path(out_dir) / "trace.csv", csv);
  std::printf("wrote %s/trace.csv: %s on %s sample %d, %d iterations, %s\n", out_dir.c_str(),
              method_name(m), cfg.datasets[ds_idx].first.c_str(), cfg.trace.sample,
              dec.iterations, dec.converged ? "converged" : "iteration cap hit");
}

}  // namespace mssr
