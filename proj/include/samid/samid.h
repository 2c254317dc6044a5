/* samid: identification of switched affine models from unlabeled data.
 *
 * C interface. All objects are opaque handles created by the library and
 * released with the matching *_free function. Every fallible call returns a
 * samid_status; on failure samid_last_error() describes the problem for the
 * calling thread. Strings returned through char** are owned by the caller and
 * released with samid_string_free.
 *
 * Matrices are passed column-major with one column per observation:
 * x[n * nx + i] is input component i of observation n.
 */
#ifndef SAMID_SAMID_H
#define SAMID_SAMID_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(SAMID_BUILDING_LIBRARY)
#define SAMID_API __declspec(dllexport)
#else
#define SAMID_API __declspec(dllimport)
#endif
#else
#define SAMID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum samid_status {
  SAMID_OK = 0,
  SAMID_ERR_CONFIG = 1,    /* invalid input, configuration or shapes */
  SAMID_ERR_NUMERICAL = 2, /* degenerate data or model for the computation */
  SAMID_ERR_IO = 3,
  SAMID_ERR_ARGUMENT = 4,  /* null handle or pointer */
  SAMID_ERR_INTERNAL = 5
} samid_status;

typedef enum samid_method {
  SAMID_METHOD_SCS = 0,
  SAMID_METHOD_CML = 1,
  SAMID_METHOD_FEATURE_KMEANS = 2,
  SAMID_METHOD_GPCA_LITE = 3
} samid_method;

typedef enum samid_weight_mode {
  SAMID_WEIGHT_NONE = 0,
  SAMID_WEIGHT_ADJACENCY_DIAGONAL = 1
} samid_weight_mode;

typedef struct samid_model samid_model;
typedef struct samid_dataset samid_dataset;
typedef struct samid_identification samid_identification;
typedef struct samid_sweep_result samid_sweep_result;

SAMID_API const char* samid_version(void);

/* Message of the last failed call on this thread; empty when none. */
SAMID_API const char* samid_last_error(void);

SAMID_API void samid_string_free(char* s);

/* ---- models ---------------------------------------------------------- */

/* JSON schema: {"K", "Nx", "Ny", "submodels": [{"theta": row-major, "gamma"}]} */
SAMID_API samid_status samid_model_from_json(const char* json, samid_model** out);
SAMID_API samid_status samid_model_load(const char* path, samid_model** out);

/* thetas: K blocks of Ny*Nx row-major entries; gammas: K blocks of Ny. */
SAMID_API samid_status samid_model_create(int num_submodels, int input_dim, int output_dim,
                                          const double* thetas, const double* gammas, samid_model** out);
SAMID_API samid_status samid_model_dims(const samid_model* model, int* num_submodels, int* input_dim,
                                        int* output_dim);
SAMID_API samid_status samid_model_to_json(const samid_model* model, char** out);
SAMID_API samid_status samid_model_check_identifiability(const samid_model* model, int* identifiable,
                                                         int* rank);
SAMID_API void samid_model_free(samid_model* model);

/* ---- simulation ------------------------------------------------------ */

/* Draws n standard-normal inputs, labels them with the switching rule
 * (switching JSON as accepted by the CLI; NULL means the sign split on the
 * first input) and adds noise at the requested SNR with
 * sigma_x = sigma_ratio * sigma_y. */
SAMID_API samid_status samid_simulate_snr(const samid_model* model, const char* switching_json, size_t n,
                                          double snr_db, double sigma_ratio, uint64_t seed,
                                          samid_dataset** out);
SAMID_API samid_status samid_simulate_sigma(const samid_model* model, const char* switching_json, size_t n,
                                            double sigma_x, double sigma_y, uint64_t seed,
                                            samid_dataset** out);

/* ---- datasets -------------------------------------------------------- */

SAMID_API samid_status samid_dataset_load_csv(const char* path, samid_dataset** out);
SAMID_API samid_status samid_dataset_save_csv(const samid_dataset* data, const char* path, int with_labels);

/* labels may be NULL. */
SAMID_API samid_status samid_dataset_create(int input_dim, int output_dim, size_t n, const double* x,
                                            const double* y, const int* labels, samid_dataset** out);
SAMID_API samid_status samid_dataset_dims(const samid_dataset* data, int* input_dim, int* output_dim,
                                          size_t* n, int* has_labels);
/* Copies the observations out; any of x, y, labels may be NULL. */
SAMID_API samid_status samid_dataset_copy(const samid_dataset* data, double* x, double* y, int* labels);
SAMID_API void samid_dataset_free(samid_dataset* data);

/* ---- identification -------------------------------------------------- */

typedef struct samid_identify_options {
  int method;            /* samid_method */
  int num_submodels;
  uint64_t seed;
  int restarts;          /* k-means restarts */
  int neighborhood;      /* feature-kmeans c; 0 picks 7 (Nx = 1) or 10 */
  int weight_mode;       /* samid_weight_mode */
  double diag_threshold; /* in [0, 1) */
  double sigma_ratio;    /* cml: sigma_x / sigma_y; negative means unknown */
} samid_identify_options;

SAMID_API void samid_identify_options_init(samid_identify_options* options);

/* "scs", "cml", "feature-kmeans", "gpca-lite". */
SAMID_API samid_status samid_method_from_name(const char* name, int* method);

SAMID_API samid_status samid_identify(const samid_dataset* data, const samid_identify_options* options,
                                      samid_identification** out);
SAMID_API size_t samid_identification_size(const samid_identification* result);
/* Writes samid_identification_size() labels. */
SAMID_API samid_status samid_identification_labels(const samid_identification* result, int* labels);
/* Estimates in the model JSON schema. */
SAMID_API samid_status samid_identification_model_json(const samid_identification* result, char** out);
SAMID_API samid_status samid_identification_diagnostics_json(const samid_identification* result, char** out);
SAMID_API void samid_identification_free(samid_identification* result);

/* ---- Monte Carlo sweeps ---------------------------------------------- */

typedef void (*samid_progress_fn)(size_t done, size_t total, void* user);

typedef struct samid_result_row {
  double snr_db;
  const char* method; /* static string */
  int submodel;
  double mse_theta;
  double mse_gamma;
  double misclassification;
  int failures;
  int runs_used;
} samid_result_row;

/* threads = 0 uses SAMID_THREADS or the hardware concurrency. A relative
 * model path inside the config resolves against base_dir (may be NULL). */
SAMID_API samid_status samid_sweep_run(const char* config_json, const char* base_dir, unsigned threads,
                                       samid_progress_fn progress, void* user, samid_sweep_result** out);
SAMID_API samid_status samid_sweep_run_file(const char* config_path, unsigned threads,
                                            samid_progress_fn progress, void* user, samid_sweep_result** out);
SAMID_API size_t samid_sweep_row_count(const samid_sweep_result* result);
SAMID_API samid_status samid_sweep_row(const samid_sweep_result* result, size_t index, samid_result_row* row);
SAMID_API samid_status samid_sweep_csv(const samid_sweep_result* result, char** out);
SAMID_API void samid_sweep_free(samid_sweep_result* result);

#ifdef __cplusplus
}
#endif

#endif /* SAMID_SAMID_H */
