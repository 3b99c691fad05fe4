/* Phase segmentation and reproduction toolkit: C interface.
 *
 * All functions return ps_status unless noted; PS_OK means success and any
 * other value leaves a description in ps_last_error() (thread local). Handles
 * are opaque and must be released with the matching *_free call. Output
 * pointer arguments are written only on success.
 *
 * Conventions: states are position [m] plus an optional rotation-vector part
 * [rad]; wrenches are force [N] plus optional torque [N*m]; phase and regime
 * indices are 0-based here, 1-based in exported files.
 */
#ifndef PHASESEG_H
#define PHASESEG_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ps_status {
  PS_OK = 0,
  PS_ERR_INVALID_ARGUMENT = 1,
  PS_ERR_VALIDATION = 2,
  PS_ERR_NUMERIC = 3,
  PS_ERR_IO = 4,
  PS_ERR_INSTABILITY = 5,
  PS_ERR_INTERNAL = 6
} ps_status;

/* Message from the most recent failing call on this thread. */
const char* ps_last_error(void);

typedef struct ps_demo ps_demo;
typedef struct ps_model ps_model;
typedef struct ps_em_report ps_em_report;
typedef struct ps_bic_table ps_bic_table;
typedef struct ps_segmentation ps_segmentation;
typedef struct ps_filter ps_filter;
typedef struct ps_world ps_world;
typedef struct ps_primitives ps_primitives;
typedef struct ps_trace ps_trace;

/* ------------------------------------------------------------------ demos */

/* Reads .csv or .jsonl by extension. */
ps_status ps_demo_read(const char* path, ps_demo** out);
ps_status ps_demo_write_csv(const ps_demo* demo, const char* path);

/* Builds a demo from row-major arrays: t has n entries, s is n*m, wrench is
 * n*dw. The sample period is inferred from the timestamps. */
ps_status ps_demo_create(const double* t, const double* s, int m, const double* wrench, int dw,
                         int n, const char* label, ps_demo** out);
void ps_demo_free(ps_demo* demo);

int ps_demo_length(const ps_demo* demo);
int ps_demo_state_dim(const ps_demo* demo);
int ps_demo_wrench_dim(const ps_demo* demo);
double ps_demo_dt(const ps_demo* demo);
const char* ps_demo_label(const ps_demo* demo);
ps_status ps_demo_point(const ps_demo* demo, int index, double* t, double* s, double* wrench);

/* Ground-truth regime labels (0-based), one per sample; present only when the
 * demo came from the generator or a sidecar file. */
int ps_demo_has_labels(const ps_demo* demo);
ps_status ps_demo_labels(const ps_demo* demo, int* out);
ps_status ps_demo_load_labels(ps_demo* demo, const char* path);
ps_status ps_demo_save_labels(const ps_demo* demo, const char* path);

/* Number of validation violations; messages are retrievable by index. */
int ps_demo_validate(const ps_demo* demo);
const char* ps_demo_violation(const ps_demo* demo, int index);

/* ----------------------------------------------------------------- models */

typedef struct ps_em_config {
  int max_iters;
  double loglik_tol;
  double lr_lambda;
  int lr_iters;
  double ridge;
  uint64_t seed;
} ps_em_config;

void ps_em_config_init(ps_em_config* config);

typedef enum ps_feature_source { PS_FEATURE_WRENCH = 0, PS_FEATURE_STATE = 1 } ps_feature_source;

ps_status ps_train(const ps_demo* const* demos, int n_demos, int n_phases,
                   const ps_em_config* config, ps_feature_source source, ps_model** out_model,
                   ps_em_report** out_report);

ps_status ps_model_load(const char* path, ps_model** out);
ps_status ps_model_save(const ps_model* model, const char* path);
void ps_model_free(ps_model* model);

int ps_model_n_phases(const ps_model* model);
int ps_model_state_dim(const ps_model* model);
int ps_model_feature_dim(const ps_model* model);
ps_feature_source ps_model_feature_source(const ps_model* model);

int ps_em_report_iterations(const ps_em_report* report);
int ps_em_report_converged(const ps_em_report* report);
double ps_em_report_loglik(const ps_em_report* report, int iteration);
void ps_em_report_free(ps_em_report* report);

/* -------------------------------------------------------------- selection */

ps_status ps_bic_sweep(const ps_demo* const* demos, int n_demos, int n_min, int n_max,
                       const ps_em_config* config, int full_count, ps_feature_source source,
                       ps_bic_table** out);
int ps_bic_rows(const ps_bic_table* table);
int ps_bic_selected(const ps_bic_table* table);
/* Returns PS_ERR_NUMERIC for a failed candidate; message describes why. */
ps_status ps_bic_row(const ps_bic_table* table, int index, int* n_phases, double* loglik,
                     long long* n_params, long long* n_obs, double* bic);
const char* ps_bic_message(const ps_bic_table* table, int index);
void ps_bic_table_free(ps_bic_table* table);

/* ------------------------------------------------------------- inference */

/* Causal segmentation of a demo: one label per chain position (length T-1). */
ps_status ps_segment(const ps_model* model, const ps_demo* demo, ps_segmentation** out);
int ps_segmentation_length(const ps_segmentation* seg);
int ps_segmentation_label(const ps_segmentation* seg, int index);
/* Normalized forward probability of phase j at chain position index. */
double ps_segmentation_prob(const ps_segmentation* seg, int index, int j);
void ps_segmentation_free(ps_segmentation* seg);

/* Online filter over raw measurements; wrench arrays have length dw = d-1. */
ps_status ps_filter_create(const ps_model* model, const double* s1, const double* wrench1,
                           const double* s2, ps_filter** out);
ps_status ps_filter_step(ps_filter* filter, const double* s_t, const double* wrench_t,
                         const double* s_next);
int ps_filter_phase(const ps_filter* filter);
ps_status ps_filter_log_alpha(const ps_filter* filter, double* out);
void ps_filter_free(ps_filter* filter);

/* Mean squared one-step prediction error of phase j's dynamics on the demo. */
ps_status ps_prediction_error(const ps_model* model, const ps_demo* demo, int j, double* out);

/* ------------------------------------------------------------- simulation */

typedef enum ps_scenario {
  PS_SCENARIO_FREE = 0,
  PS_SCENARIO_VALLEY = 1,
  PS_SCENARIO_HOSE = 2
} ps_scenario;

/* Fixture world with standard contact parameters and the given measurement
 * noise levels. */
ps_status ps_world_fixture(ps_scenario scenario, double noise_pos, double noise_force,
                           ps_world** out);
/* World from a JSON object; see the README for the schema. */
ps_status ps_world_from_json(const char* json_text, ps_world** out);
int ps_world_state_dim(const ps_world* world);
void ps_world_free(ps_world* world);

/* Scripted demonstration. script_json is an array of segments, each
 * {"dir": [...], "speed": v, "duration": s}; start has the world state size. */
ps_status ps_generate(const ps_world* world, const double* start, const char* script_json,
                      double dt, uint64_t seed, const char* label, ps_demo** out);
/* Built-in fixture scripts; variant selects the valley side (0 left, 1 right)
 * and is ignored elsewhere. */
ps_status ps_generate_fixture(const ps_world* world, int variant, double dt, uint64_t seed,
                              ps_demo** out);

ps_status ps_extract_primitives(const ps_model* model, const ps_demo* const* demos, int n_demos,
                                ps_primitives** out);
int ps_primitives_count(const ps_primitives* prims);
ps_status ps_primitive(const ps_primitives* prims, int j, double* v_dir, double* speed,
                       int* low_confidence);
void ps_primitives_free(ps_primitives* prims);

ps_status ps_reproduce(const ps_model* model, const ps_primitives* prims, const ps_world* world,
                       const double* start, double dt, int max_steps, double dwell_s,
                       uint64_t seed, ps_trace** out);
int ps_trace_length(const ps_trace* trace);
ps_status ps_trace_step(const ps_trace* trace, int index, double* t, double* x_star, double* x,
                        double* wrench, int* phase, int* primitive);
void ps_trace_free(ps_trace* trace);

/* Wrench-feature vs state-feature comparison; returns a JSON report string
 * that must be released with ps_string_free. */
ps_status ps_compare_features(const ps_demo* const* demos, int n_demos, int n_phases,
                              const ps_em_config* config, char** out_json);
void ps_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* PHASESEG_H */
