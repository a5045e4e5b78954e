#include "mssr.h"

#include <cstring>
#include <string>

#include "mssr/admm_solver.hpp"
#include "mssr/classifier.hpp"
#include "mssr/experiment.hpp"
#include "mssr/features.hpp"

using namespace mssr;

struct mssr_dict {
  StructuredDictionary d;
};
struct mssr_obs {
  MultiSensorObservation o;
};
struct mssr_result {
  Decomposition dec;
};
struct mssr_gram {
  GramSystem g;
};
struct mssr_dataset {
  Dataset ds;
};

namespace {

thread_local std::string g_last_error;

mssr_status status_of(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::config: return MSSR_CONFIG_ERROR;
    case ErrorKind::dimension: return MSSR_CONFIG_ERROR;
    case ErrorKind::numeric: return MSSR_NUMERIC_ERROR;
    case ErrorKind::io: return MSSR_IO_ERROR;
  }
  return MSSR_ERROR;
}

template <typename F>
mssr_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MSSR_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e);
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MSSR_ERROR;
  } catch (...) {
    g_last_error = "unknown error";
    return MSSR_ERROR;
  }
}

void require(bool ok, const char* what) {
  if (!ok) throw ConfigError(what);
}

Variant variant_from_int(int v) {
  switch (v) {
    case MSSR_VARIANT_JSR: return Variant::jsr;
    case MSSR_VARIANT_JSR_E: return Variant::jsr_e;
    case MSSR_VARIANT_JSR_L: return Variant::jsr_l;
    case MSSR_VARIANT_GJSR_L: return Variant::gjsr_l;
  }
  throw ConfigError("unknown variant code " + std::to_string(v));
}

SolverConfig config_from(const mssr_solver_opts* opts) {
  require(opts != nullptr, "opts is null");
  SolverConfig cfg;
  cfg.variant = variant_from_int(opts->variant);
  cfg.extra_sparse_err = opts->extra_sparse_err != 0;
  cfg.lambda_l = opts->lambda_l;
  cfg.lambda_g = opts->lambda_g;
  cfg.lambda_e = opts->lambda_e;
  cfg.mu = opts->mu;
  cfg.q = opts->q;
  if (opts->theta > 0.0) cfg.theta = opts->theta;
  cfg.max_iters = opts->max_iters;
  cfg.tol_feas = opts->tol_feas;
  cfg.tol_change = opts->tol_change;
  return cfg;
}

KernelSpec spec_from(const mssr_kernel_spec* spec) {
  require(spec != nullptr, "kernel spec is null");
  KernelSpec ks;
  switch (spec->kind) {
    case MSSR_KERNEL_LINEAR: ks.kind = KernelKind::linear; break;
    case MSSR_KERNEL_RBF: ks.kind = KernelKind::rbf; break;
    case MSSR_KERNEL_POLY: ks.kind = KernelKind::poly; break;
    default: throw ConfigError("unknown kernel code " + std::to_string(spec->kind));
  }
  ks.eta = spec->eta;
  ks.degree = spec->degree;
  return ks;
}

void copy_out(const Eigen::MatrixXd& m, double* out) {
  require(out != nullptr, "output buffer is null");
  std::memcpy(out, m.data(), sizeof(double) * static_cast<size_t>(m.size()));
}

void decision_out(const ClassDecision& d, int* label, double* residuals, double* margin) {
  require(label != nullptr, "label output is null");
  *label = d.label;
  if (residuals)
    std::memcpy(residuals, d.residuals.data(), sizeof(double) * d.residuals.size());
  if (margin) *margin = d.margin;
}

const std::vector<SampleRecord>& sample_list(const mssr_dataset* ds, int which) {
  require(which == 0 || which == 1, "sample group must be 0 (train) or 1 (test)");
  return which == 0 ? ds->ds.train : ds->ds.test;
}

}  // namespace

extern "C" {

const char* mssr_version(void) { return "1.0.0"; }

const char* mssr_last_error(void) { return g_last_error.c_str(); }

void mssr_solver_opts_init(mssr_solver_opts* opts) {
  if (!opts) return;
  const SolverConfig def;
  opts->variant = MSSR_VARIANT_JSR;
  opts->extra_sparse_err = 0;
  opts->lambda_l = def.lambda_l;
  opts->lambda_g = def.lambda_g;
  opts->lambda_e = def.lambda_e;
  opts->mu = def.mu;
  opts->q = def.q;
  opts->theta = 0.0;
  opts->max_iters = def.max_iters;
  opts->tol_feas = def.tol_feas;
  opts->tol_change = def.tol_change;
}

void mssr_kernel_spec_init(mssr_kernel_spec* spec) {
  if (!spec) return;
  const KernelSpec def;
  spec->kind = MSSR_KERNEL_LINEAR;
  spec->eta = def.eta;
  spec->degree = def.degree;
}

mssr_status mssr_dict_create(int sensors, int rows, int atoms, int classes,
                             const int* class_sizes, const char* const* class_labels,
                             const double* data, int normalize, mssr_dict** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    require(data != nullptr, "data is null");
    require(class_sizes != nullptr, "class_sizes is null");
    require(sensors > 0 && rows > 0 && atoms > 0 && classes > 0, "counts must be positive");
    int total = 0;
    for (int c = 0; c < classes; ++c) {
      require(class_sizes[c] > 0, "class sizes must be positive");
      total += class_sizes[c];
    }
    require(total == atoms, "class sizes must sum to the atom count");

    std::vector<std::vector<std::vector<Eigen::VectorXd>>> samples(classes);
    std::vector<std::string> labels;
    for (int c = 0; c < classes; ++c) {
      samples[c].resize(sensors);
      if (class_labels) labels.emplace_back(class_labels[c]);
    }
    for (int m = 0; m < sensors; ++m) {
      const Eigen::Map<const Eigen::MatrixXd> block(
          data + static_cast<size_t>(m) * rows * atoms, rows, atoms);
      int off = 0;
      for (int c = 0; c < classes; ++c) {
        for (int k = 0; k < class_sizes[c]; ++k)
          samples[c][m].push_back(block.col(off + k));
        off += class_sizes[c];
      }
    }
    *out = new mssr_dict{build_dictionary(samples, std::move(labels), normalize != 0)};
  });
}

void mssr_dict_free(mssr_dict* dict) { delete dict; }

int mssr_dict_sensors(const mssr_dict* dict) { return dict ? dict->d.sensor_count() : 0; }
int mssr_dict_rows(const mssr_dict* dict) { return dict ? dict->d.feature_dim() : 0; }
int mssr_dict_atoms(const mssr_dict* dict) { return dict ? dict->d.atom_count() : 0; }
int mssr_dict_classes(const mssr_dict* dict) { return dict ? dict->d.class_count() : 0; }

int mssr_dict_class_size(const mssr_dict* dict, int c) {
  if (!dict || c < 0 || c >= dict->d.class_count()) return 0;
  return dict->d.class_size(c);
}

const char* mssr_dict_class_label(const mssr_dict* dict, int c) {
  if (!dict || c < 0 || c >= dict->d.class_count()) return "";
  return dict->d.class_labels()[c].c_str();
}

mssr_status mssr_dict_subset(const mssr_dict* dict, const int* sensor_indices, int count,
                             mssr_dict** out) {
  return guarded([&] {
    require(dict != nullptr, "dict is null");
    require(out != nullptr, "out is null");
    require(sensor_indices != nullptr && count > 0, "sensor index list is empty");
    *out = new mssr_dict{dict->d.subset({sensor_indices, sensor_indices + count})};
  });
}

mssr_status mssr_obs_create(int sensors, int rows, int cols, const double* data, mssr_obs** out) {
  return guarded([&] {
    require(out != nullptr, "out is null");
    require(data != nullptr, "data is null");
    require(sensors > 0 && rows > 0 && cols > 0, "counts must be positive");
    MultiSensorObservation obs;
    for (int m = 0; m < sensors; ++m)
      obs.sensors.emplace_back(Eigen::Map<const Eigen::MatrixXd>(
          data + static_cast<size_t>(m) * rows * cols, rows, cols));
    *out = new mssr_obs{std::move(obs)};
  });
}

void mssr_obs_free(mssr_obs* obs) { delete obs; }

mssr_status mssr_solve(const mssr_dict* dict, const mssr_obs* obs, const mssr_solver_opts* opts,
                       mssr_result** out) {
  return guarded([&] {
    require(dict != nullptr && obs != nullptr, "dict/obs is null");
    require(out != nullptr, "out is null");
    *out = new mssr_result{solve(dict->d, obs->o, config_from(opts))};
  });
}

void mssr_result_free(mssr_result* result) { delete result; }

int mssr_result_converged(const mssr_result* result) {
  return result && result->dec.converged ? 1 : 0;
}

int mssr_result_iterations(const mssr_result* result) {
  return result ? result->dec.iterations : 0;
}

void mssr_result_coeff_dims(const mssr_result* result, int* rows, int* cols) {
  if (rows) *rows = result ? static_cast<int>(result->dec.coeffs.data.rows()) : 0;
  if (cols) *cols = result ? static_cast<int>(result->dec.coeffs.data.cols()) : 0;
}

mssr_status mssr_result_copy_coeffs(const mssr_result* result, double* out) {
  return guarded([&] {
    require(result != nullptr, "result is null");
    copy_out(result->dec.coeffs.data, out);
  });
}

int mssr_result_has_lowrank(const mssr_result* result) {
  return result && result->dec.has_lowrank() ? 1 : 0;
}

int mssr_result_has_sparse_err(const mssr_result* result) {
  return result && result->dec.has_sparse_err() ? 1 : 0;
}

void mssr_result_aux_dims(const mssr_result* result, int* rows, int* cols) {
  const Eigen::MatrixXd* m = nullptr;
  if (result && result->dec.has_lowrank())
    m = &result->dec.lowrank;
  else if (result && result->dec.has_sparse_err())
    m = &result->dec.sparse_err;
  if (rows) *rows = m ? static_cast<int>(m->rows()) : 0;
  if (cols) *cols = m ? static_cast<int>(m->cols()) : 0;
}

mssr_status mssr_result_copy_lowrank(const mssr_result* result, double* out) {
  return guarded([&] {
    require(result != nullptr, "result is null");
    require(result->dec.has_lowrank(), "this decomposition has no low-rank part");
    copy_out(result->dec.lowrank, out);
  });
}

mssr_status mssr_result_copy_sparse_err(const mssr_result* result, double* out) {
  return guarded([&] {
    require(result != nullptr, "result is null");
    require(result->dec.has_sparse_err(), "this decomposition has no sparse-error part");
    copy_out(result->dec.sparse_err, out);
  });
}

int mssr_result_trace_len(const mssr_result* result) {
  return result ? static_cast<int>(result->dec.trace.size()) : 0;
}

mssr_status mssr_result_trace_row(const mssr_result* result, int i, int* iter, double* objective,
                                  double* feas_residual, double* dA, double* dZ) {
  return guarded([&] {
    require(result != nullptr, "result is null");
    require(i >= 0 && i < static_cast<int>(result->dec.trace.size()), "trace index out of range");
    const TraceRecord& t = result->dec.trace[i];
    if (iter) *iter = t.iter;
    if (objective) *objective = t.objective;
    if (feas_residual) *feas_residual = t.feas_residual;
    if (dA) *dA = t.dA;
    if (dZ) *dZ = t.dZ;
  });
}

mssr_status mssr_classify(const mssr_dict* dict, const mssr_obs* obs, const mssr_result* result,
                          int variant, int* label, double* residuals, double* margin) {
  return guarded([&] {
    require(dict != nullptr && obs != nullptr && result != nullptr, "dict/obs/result is null");
    decision_out(classify_linear(dict->d, obs->o, result->dec, variant_from_int(variant)), label,
                 residuals, margin);
  });
}

mssr_status mssr_majority_vote(const mssr_dict* dict, const mssr_obs* obs,
                               const mssr_solver_opts* opts, int* label, double* residuals,
                               double* margin) {
  return guarded([&] {
    require(dict != nullptr && obs != nullptr, "dict/obs is null");
    decision_out(majority_vote_baseline(dict->d, obs->o, config_from(opts)), label, residuals,
                 margin);
  });
}

mssr_status mssr_gram_create(const mssr_dict* dict, const mssr_obs* obs,
                             const mssr_kernel_spec* spec, mssr_gram** out) {
  return guarded([&] {
    require(dict != nullptr && obs != nullptr, "dict/obs is null");
    require(out != nullptr, "out is null");
    *out = new mssr_gram{build_gram(dict->d, obs->o, spec_from(spec))};
  });
}

void mssr_gram_free(mssr_gram* gram) { delete gram; }

double mssr_gram_eta(const mssr_gram* gram) { return gram ? gram->g.eta_used : 0.0; }

mssr_status mssr_solve_kernel(const mssr_gram* gram, const mssr_solver_opts* opts,
                              mssr_result** out) {
  return guarded([&] {
    require(gram != nullptr, "gram is null");
    require(out != nullptr, "out is null");
    *out = new mssr_result{solve_kernel(gram->g, config_from(opts))};
  });
}

mssr_status mssr_classify_kernel(const mssr_gram* gram, const mssr_result* result, int variant,
                                 int* label, double* residuals, double* margin) {
  return guarded([&] {
    require(gram != nullptr && result != nullptr, "gram/result is null");
    decision_out(classify_kernel(gram->g, result->dec, variant_from_int(variant)), label,
                 residuals, margin);
  });
}

mssr_status mssr_detect_event(const double* signal, int len, int window, long* center) {
  return guarded([&] {
    require(signal != nullptr && center != nullptr, "signal/center is null");
    require(len > 0, "signal is empty");
    const Eigen::Map<const Eigen::VectorXd> v(signal, len);
    *center = detect_event(v, window);
  });
}

mssr_status mssr_power_cepstrum(const double* segment, int len, int keep, double* out) {
  return guarded([&] {
    require(segment != nullptr && out != nullptr, "segment/out is null");
    require(len > 0, "segment is empty");
    const Eigen::Map<const Eigen::VectorXd> v(segment, len);
    const Eigen::VectorXd c = power_cepstrum(v, keep);
    std::memcpy(out, c.data(), sizeof(double) * static_cast<size_t>(c.size()));
  });
}

mssr_status mssr_event_features(const double* signal, int len, int keep, int segments,
                                int segment_len, double overlap, int detect_window, double* out) {
  return guarded([&] {
    require(signal != nullptr && out != nullptr, "signal/out is null");
    require(len > 0, "signal is empty");
    FeatureParams params;
    params.keep = keep;
    params.plan.count = segments;
    params.plan.segment_len = segment_len;
    params.plan.overlap = overlap;
    params.detect_window = detect_window;
    const Eigen::Map<const Eigen::VectorXd> v(signal, len);
    copy_out(event_features(v, params), out);
  });
}

mssr_status mssr_dataset_load(const char* dir, mssr_dataset** out) {
  return guarded([&] {
    require(dir != nullptr, "dir is null");
    require(out != nullptr, "out is null");
    *out = new mssr_dataset{load_dataset(dir)};
  });
}

void mssr_dataset_free(mssr_dataset* ds) { delete ds; }

int mssr_dataset_sensors(const mssr_dataset* ds) {
  return ds ? static_cast<int>(ds->ds.sensor_names.size()) : 0;
}

int mssr_dataset_classes(const mssr_dataset* ds) {
  return ds ? static_cast<int>(ds->ds.class_labels.size()) : 0;
}

int mssr_dataset_feature_dim(const mssr_dataset* ds) { return ds ? ds->ds.feature_dim : 0; }
int mssr_dataset_segments(const mssr_dataset* ds) { return ds ? ds->ds.segments : 0; }

const char* mssr_dataset_sensor_name(const mssr_dataset* ds, int m) {
  if (!ds || m < 0 || m >= static_cast<int>(ds->ds.sensor_names.size())) return "";
  return ds->ds.sensor_names[m].c_str();
}

const char* mssr_dataset_class_label(const mssr_dataset* ds, int c) {
  if (!ds || c < 0 || c >= static_cast<int>(ds->ds.class_labels.size())) return "";
  return ds->ds.class_labels[c].c_str();
}

int mssr_dataset_sample_count(const mssr_dataset* ds, int which) {
  if (!ds || (which != 0 && which != 1)) return 0;
  return static_cast<int>((which == 0 ? ds->ds.train : ds->ds.test).size());
}

const char* mssr_dataset_sample_id(const mssr_dataset* ds, int which, int index) {
  if (!ds || (which != 0 && which != 1)) return "";
  const auto& list = which == 0 ? ds->ds.train : ds->ds.test;
  if (index < 0 || index >= static_cast<int>(list.size())) return "";
  return list[index].id.c_str();
}

int mssr_dataset_sample_class(const mssr_dataset* ds, int which, int index) {
  if (!ds || (which != 0 && which != 1)) return -1;
  const auto& list = which == 0 ? ds->ds.train : ds->ds.test;
  if (index < 0 || index >= static_cast<int>(list.size())) return -1;
  return list[index].class_index;
}

mssr_status mssr_dataset_dictionary(const mssr_dataset* ds, mssr_dict** out) {
  return guarded([&] {
    require(ds != nullptr, "dataset is null");
    require(out != nullptr, "out is null");
    *out = new mssr_dict{dictionary_from(ds->ds)};
  });
}

mssr_status mssr_dataset_observation(const mssr_dataset* ds, int which, int index,
                                     mssr_obs** out) {
  return guarded([&] {
    require(ds != nullptr, "dataset is null");
    require(out != nullptr, "out is null");
    const auto& list = sample_list(ds, which);
    require(index >= 0 && index < static_cast<int>(list.size()), "sample index out of range");
    *out = new mssr_obs{observation_from(list[index])};
  });
}

mssr_status mssr_cmd_gen(const char* config_path, const char* out_dir, const uint64_t* seed) {
  return guarded([&] {
    require(config_path != nullptr && out_dir != nullptr, "config/out path is null");
    cmd_gen(config_path, out_dir,
            seed ? std::optional<std::uint64_t>(*seed) : std::nullopt);
  });
}

mssr_status mssr_cmd_cv(const char* config_path, const char* out_dir, const uint64_t* seed,
                        const int* jobs) {
  return guarded([&] {
    require(config_path != nullptr && out_dir != nullptr, "config/out path is null");
    cmd_cv(config_path, out_dir, seed ? std::optional<std::uint64_t>(*seed) : std::nullopt,
           jobs ? std::optional<int>(*jobs) : std::nullopt);
  });
}

mssr_status mssr_cmd_run(const char* config_path, const char* out_dir, const uint64_t* seed,
                         const int* jobs) {
  return guarded([&] {
    require(config_path != nullptr && out_dir != nullptr, "config/out path is null");
    cmd_run(config_path, out_dir, seed ? std::optional<std::uint64_t>(*seed) : std::nullopt,
            jobs ? std::optional<int>(*jobs) : std::nullopt);
  });
}

mssr_status mssr_cmd_trace(const char* config_path, const char* out_dir) {
  return guarded([&] {
    require(config_path != nullptr && out_dir != nullptr, "config/out path is null");
    cmd_trace(config_path, out_dir);
  });
}

}  // extern "C"
