#ifndef BDSIM_H
#define BDSIM_H

/* C interface to the birth-and-death simulator. All objects are opaque and
 * owned by the caller, who releases them with the matching *_free function.
 * Strings returned through char** are released with bds_string_free.
 * On failure every function returns a nonzero bds_status and the message is
 * available from bds_last_error() on the same thread. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BDS_API __declspec(dllexport)
#elif defined(__GNUC__)
#define BDS_API __attribute__((visibility("default")))
#else
#define BDS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bds_status {
  BDS_OK = 0,
  BDS_INVALID_ARGUMENT = 1,
  BDS_DIMENSION_MISMATCH = 2,
  BDS_PRECONDITION = 3,
  BDS_PREMISE_VIOLATION = 4,
  BDS_PARSE_ERROR = 5,
  BDS_IO_ERROR = 6,
  BDS_INTRACTABLE = 7,
  BDS_INTERNAL = 99
} bds_status;

typedef enum bds_event_kind { BDS_BIRTH = 0, BDS_DEATH = 1 } bds_event_kind;

typedef enum bds_termination { BDS_COMPLETED = 0, BDS_ABSORBED = 1, BDS_CAP_HIT = 2 } bds_termination;

typedef struct bds_experiment bds_experiment;
typedef struct bds_model bds_model;
typedef struct bds_configuration bds_configuration;
typedef struct bds_trajectory bds_trajectory;

BDS_API const char* bds_version(void);
BDS_API const char* bds_last_error(void);
BDS_API const char* bds_status_name(bds_status s);
BDS_API void bds_string_free(char* s);

/* Experiments: parsed and validated configuration documents. */
BDS_API bds_status bds_experiment_parse(const char* json_text, bds_experiment** out);
BDS_API bds_status bds_experiment_load(const char* path, bds_experiment** out);
BDS_API void bds_experiment_free(bds_experiment* e);
BDS_API bds_status bds_experiment_set_seed(bds_experiment* e, uint64_t seed);
BDS_API bds_status bds_experiment_to_json(const bds_experiment* e, char** out);
BDS_API bds_status bds_experiment_hash(const bds_experiment* e, char** out);

/* Commands. Summaries are JSON documents. */
BDS_API bds_status bds_run_simulate(const bds_experiment* e, const char* out_dir, unsigned jobs, char** summary);
/* *violations receives the number of false inclusion flags; *refused is set
 * when check_premise is nonzero and the premise search found a witness. */
BDS_API bds_status bds_run_couple(const bds_experiment* e, const char* out_dir, unsigned jobs, int check_premise,
                                  char** summary, size_t* violations, int* refused);
/* seed_or_null overrides the default verification seed. */
BDS_API bds_status bds_run_verify(const char* suite, const uint64_t* seed_or_null, unsigned jobs, char** report,
                                  size_t* failures);
BDS_API bds_status bds_verify_suites(char** json_array);
BDS_API bds_status bds_metric_files(const char* path_a, const char* path_b, char** result);

/* Configurations: finite point sets in R^d. coords holds n * dimension values row by row. */
BDS_API bds_status bds_configuration_create(size_t dimension, const double* coords, size_t n, bds_configuration** out);
BDS_API void bds_configuration_free(bds_configuration* c);
BDS_API size_t bds_configuration_size(const bds_configuration* c);
BDS_API size_t bds_configuration_dimension(const bds_configuration* c);
BDS_API bds_status bds_configuration_point(const bds_configuration* c, size_t slot, int64_t* id, double* coords);
BDS_API bds_status bds_dist(const bds_configuration* a, const bds_configuration* b, double* out);

/* Models from a JSON descriptor {"name", "birth": [...], "death": [...]}. */
BDS_API bds_status bds_model_parse(const char* json_text, size_t dimension, bds_model** out);
BDS_API void bds_model_free(bds_model* m);
BDS_API bds_status bds_model_rates(const bds_model* m, const bds_configuration* eta, double* birth_total,
                                   double* death_total);
BDS_API bds_status bds_model_birth_rate(const bds_model* m, const double* x, const bds_configuration* eta, double* out);

/* Single trajectories. */
BDS_API bds_status bds_simulate(const bds_model* m, const bds_configuration* eta0, double horizon, size_t max_population,
                                size_t max_events, uint64_t seed, uint64_t trajectory, bds_trajectory** out);
BDS_API void bds_trajectory_free(bds_trajectory* t);
BDS_API size_t bds_trajectory_event_count(const bds_trajectory* t);
/* coords must hold dimension values. */
BDS_API bds_status bds_trajectory_event(const bds_trajectory* t, size_t i, double* time, bds_event_kind* kind,
                                        int64_t* id, double* coords);
BDS_API bds_status bds_trajectory_status(const bds_trajectory* t, bds_termination* kind, double* time);
BDS_API bds_status bds_trajectory_state_at(const bds_trajectory* t, double time, bds_configuration** out);
BDS_API bds_status bds_trajectory_to_jsonl(const bds_trajectory* t, char** out);

#ifdef __cplusplus
}
#endif

#endif
