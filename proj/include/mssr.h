/* C interface to the multi-sensor sparse-representation library.
 *
 * Every object is an opaque handle created and freed here. Functions return
 * mssr_status; on failure mssr_last_error() holds a thread-local message.
 * Matrices cross the boundary as flat column-major double arrays.
 */
#ifndef MSSR_H
#define MSSR_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mssr_status {
  MSSR_OK = 0,
  MSSR_ERROR = 1,         /* unexpected failure */
  MSSR_CONFIG_ERROR = 2,  /* bad settings or shapes */
  MSSR_NUMERIC_ERROR = 3, /* solver diverged or produced non-finite values */
  MSSR_IO_ERROR = 4
} mssr_status;

const char* mssr_version(void);
/* Message of the most recent failing call on this thread; "" if none. */
const char* mssr_last_error(void);

typedef struct mssr_dict mssr_dict;
typedef struct mssr_obs mssr_obs;
typedef struct mssr_result mssr_result;
typedef struct mssr_gram mssr_gram;
typedef struct mssr_dataset mssr_dataset;

enum {
  MSSR_VARIANT_JSR = 0,
  MSSR_VARIANT_JSR_E = 1,
  MSSR_VARIANT_JSR_L = 2,
  MSSR_VARIANT_GJSR_L = 3
};

enum { MSSR_KERNEL_LINEAR = 0, MSSR_KERNEL_RBF = 1, MSSR_KERNEL_POLY = 2 };

typedef struct mssr_solver_opts {
  int variant;          /* MSSR_VARIANT_* */
  int extra_sparse_err; /* adds an entrywise error term to a +L variant */
  double lambda_l;
  double lambda_g;
  double lambda_e;
  double mu;
  int q;        /* row-norm exponent; only 2 is supported */
  double theta; /* <= 0: automatic step from the dictionary spectrum */
  int max_iters;
  double tol_feas;
  double tol_change;
} mssr_solver_opts;

/* Fills the documented defaults (jsr, mu=1, q=2, automatic theta, 500
 * iterations, tol_feas=1e-5, tol_change=1e-6). */
void mssr_solver_opts_init(mssr_solver_opts* opts);

typedef struct mssr_kernel_spec {
  int kind;   /* MSSR_KERNEL_* */
  double eta; /* rbf bandwidth; <= 0: median pairwise atom distance */
  int degree; /* poly only */
} mssr_kernel_spec;

void mssr_kernel_spec_init(mssr_kernel_spec* spec);

/* Dictionary from atoms grouped class-by-class. `data` holds `sensors`
 * consecutive column-major rows x atoms blocks; class c owns columns
 * [sum(class_sizes[0..c)), +class_sizes[c]) of every block. `class_labels`
 * may be NULL for default names. With normalize != 0 columns are scaled to
 * unit norm (all-zero columns are kept and flagged). */
mssr_status mssr_dict_create(int sensors, int rows, int atoms, int classes,
                             const int* class_sizes, const char* const* class_labels,
                             const double* data, int normalize, mssr_dict** out);
void mssr_dict_free(mssr_dict* dict);
int mssr_dict_sensors(const mssr_dict* dict);
int mssr_dict_rows(const mssr_dict* dict);
int mssr_dict_atoms(const mssr_dict* dict);
int mssr_dict_classes(const mssr_dict* dict);
int mssr_dict_class_size(const mssr_dict* dict, int c);
const char* mssr_dict_class_label(const mssr_dict* dict, int c);
/* New dictionary restricted to the given 0-based sensors, in the given order. */
mssr_status mssr_dict_subset(const mssr_dict* dict, const int* sensor_indices, int count,
                             mssr_dict** out);

/* Observation: `sensors` consecutive column-major rows x cols blocks. */
mssr_status mssr_obs_create(int sensors, int rows, int cols, const double* data, mssr_obs** out);
void mssr_obs_free(mssr_obs* obs);

/* Joint-sparse decomposition of obs against dict. */
mssr_status mssr_solve(const mssr_dict* dict, const mssr_obs* obs, const mssr_solver_opts* opts,
                       mssr_result** out);
void mssr_result_free(mssr_result* result);
int mssr_result_converged(const mssr_result* result);
int mssr_result_iterations(const mssr_result* result);
/* Coefficient matrix is atoms x (sensors*cols); sensor m owns column band
 * [m*cols, +cols). The low-rank and sparse-error parts are rows x
 * (sensors*cols); their copy functions fail if the variant lacks the term. */
void mssr_result_coeff_dims(const mssr_result* result, int* rows, int* cols);
mssr_status mssr_result_copy_coeffs(const mssr_result* result, double* out);
int mssr_result_has_lowrank(const mssr_result* result);
int mssr_result_has_sparse_err(const mssr_result* result);
void mssr_result_aux_dims(const mssr_result* result, int* rows, int* cols);
mssr_status mssr_result_copy_lowrank(const mssr_result* result, double* out);
mssr_status mssr_result_copy_sparse_err(const mssr_result* result, double* out);
int mssr_result_trace_len(const mssr_result* result);
mssr_status mssr_result_trace_row(const mssr_result* result, int i, int* iter, double* objective,
                                  double* feas_residual, double* dA, double* dZ);

/* Smallest class-conditional reconstruction residual wins; ties go to the
 * lowest class index. `variant` must match the one that produced `result`.
 * residuals (length classes) and margin may be NULL. */
mssr_status mssr_classify(const mssr_dict* dict, const mssr_obs* obs, const mssr_result* result,
                          int variant, int* label, double* residuals, double* margin);
/* Independent per-sensor solve + majority vote; residuals hold negated vote
 * counts. */
mssr_status mssr_majority_vote(const mssr_dict* dict, const mssr_obs* obs,
                               const mssr_solver_opts* opts, int* label, double* residuals,
                               double* margin);

/* Kernelized path: Gram system of (dict, obs) under the kernel, solved by the
 * same engine in the feature space. */
mssr_status mssr_gram_create(const mssr_dict* dict, const mssr_obs* obs,
                             const mssr_kernel_spec* spec, mssr_gram** out);
void mssr_gram_free(mssr_gram* gram);
double mssr_gram_eta(const mssr_gram* gram); /* resolved rbf bandwidth, 0 otherwise */
mssr_status mssr_solve_kernel(const mssr_gram* gram, const mssr_solver_opts* opts,
                              mssr_result** out);
mssr_status mssr_classify_kernel(const mssr_gram* gram, const mssr_result* result, int variant,
                                 int* label, double* residuals, double* margin);

/* Feature pipeline. mssr_detect_event returns the center of the highest-energy
 * window. mssr_power_cepstrum writes `keep` coefficients (coefficient 0 is
 * dropped). mssr_event_features writes a keep x segments column-major block. */
mssr_status mssr_detect_event(const double* signal, int len, int window, long* center);
mssr_status mssr_power_cepstrum(const double* segment, int len, int keep, double* out);
mssr_status mssr_event_features(const double* signal, int len, int keep, int segments,
                                int segment_len, double overlap, int detect_window, double* out);

/* Dataset directories written by the generator / accepted by the harness. */
mssr_status mssr_dataset_load(const char* dir, mssr_dataset** out);
void mssr_dataset_free(mssr_dataset* ds);
int mssr_dataset_sensors(const mssr_dataset* ds);
int mssr_dataset_classes(const mssr_dataset* ds);
int mssr_dataset_feature_dim(const mssr_dataset* ds);
int mssr_dataset_segments(const mssr_dataset* ds);
const char* mssr_dataset_sensor_name(const mssr_dataset* ds, int m);
const char* mssr_dataset_class_label(const mssr_dataset* ds, int c);
/* which: 0 train, 1 test. */
int mssr_dataset_sample_count(const mssr_dataset* ds, int which);
const char* mssr_dataset_sample_id(const mssr_dataset* ds, int which, int index);
int mssr_dataset_sample_class(const mssr_dataset* ds, int which, int index);
mssr_status mssr_dataset_dictionary(const mssr_dataset* ds, mssr_dict** out);
mssr_status mssr_dataset_observation(const mssr_dataset* ds, int which, int index,
                                     mssr_obs** out);

/* Harness verbs behind the command-line tool. Seed/jobs pointers are optional
 * overrides; NULL keeps the config file's values. */
mssr_status mssr_cmd_gen(const char* config_path, const char* out_dir, const uint64_t* seed);
mssr_status mssr_cmd_cv(const char* config_path, const char* out_dir, const uint64_t* seed,
                        const int* jobs);
mssr_status mssr_cmd_run(const char* config_path, const char* out_dir, const uint64_t* seed,
                         const int* jobs);
mssr_status mssr_cmd_trace(const char* config_path, const char* out_dir);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* MSSR_H */
