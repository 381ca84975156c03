/* C interface to the sepagg library.
 *
 * Objects are opaque handles created by sepagg_*_create-style calls and
 * released with the matching *_free. Every fallible call returns a
 * sepagg_status; on failure sepagg_last_error() describes the problem for the
 * calling thread. Strings returned through char** are heap allocated and must
 * be released with sepagg_string_free.
 */
#ifndef SEPAGG_H
#define SEPAGG_H

#include <stddef.h>
#include <stdint.h>

#if defined(SEPAGG_BUILDING_LIBRARY)
#define SEPAGG_API __attribute__((visibility("default")))
#else
#define SEPAGG_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sepagg_status {
  SEPAGG_OK = 0,
  SEPAGG_ERR_DOMAIN = 1,
  SEPAGG_ERR_SINGULAR = 2,
  SEPAGG_ERR_NUMERIC = 3,
  SEPAGG_ERR_PARSE = 4,
  SEPAGG_ERR_IO = 5,
  SEPAGG_ERR_TRAINING = 6,
  SEPAGG_ERR_INVALID_ARGUMENT = 7,
  SEPAGG_ERR_INTERNAL = 99
} sepagg_status;

typedef enum sepagg_loss {
  SEPAGG_LOSS_CE = 0,
  SEPAGG_LOSS_BACKWARD = 1,
  SEPAGG_LOSS_PEER = 2
} sepagg_loss;

typedef enum sepagg_method { SEPAGG_METHOD_MV = 0, SEPAGG_METHOD_EM = 1 } sepagg_method;

typedef enum sepagg_noise_model { SEPAGG_NOISE_SYMMETRIC = 0, SEPAGG_NOISE_INSTANCE = 1 } sepagg_noise_model;

SEPAGG_API const char* sepagg_version(void);
/* Message of the most recent failure on this thread; "" if none. */
SEPAGG_API const char* sepagg_last_error(void);
SEPAGG_API void sepagg_string_free(char* s);

/* ---- transition matrices ---- */

typedef struct sepagg_transition sepagg_transition;

SEPAGG_API sepagg_status sepagg_transition_symmetric(double epsilon, int m, sepagg_transition** out);
SEPAGG_API sepagg_status sepagg_transition_binary(double rho0, double rho1, sepagg_transition** out);
/* rows: m*m row-major entries. */
SEPAGG_API sepagg_status sepagg_transition_from_rows(int m, const double* rows, sepagg_transition** out);
/* Exact majority-vote matrix; binary and odd k only. */
SEPAGG_API sepagg_status sepagg_transition_aggregate_majority(const sepagg_transition* t, int k,
                                                               sepagg_transition** out);
/* Monte Carlo majority-vote matrix for k identical annotators. */
SEPAGG_API sepagg_status sepagg_transition_aggregate_mc(const sepagg_transition* t, int k, uint64_t trials,
                                                         uint64_t seed, sepagg_transition** out);
SEPAGG_API int sepagg_transition_classes(const sepagg_transition* t);
SEPAGG_API sepagg_status sepagg_transition_get(const sepagg_transition* t, int i, int j, double* out);
/* out receives m*m row-major entries of the inverse. */
SEPAGG_API sepagg_status sepagg_transition_inverse(const sepagg_transition* t, double* out);
SEPAGG_API sepagg_status sepagg_transition_min_eigenvalue(const sepagg_transition* t, double* out);
SEPAGG_API void sepagg_transition_free(sepagg_transition* t);

/* ---- datasets ---- */

typedef struct sepagg_dataset sepagg_dataset;

/* m = 0 infers the class count from the labels. */
SEPAGG_API sepagg_status sepagg_dataset_load_csv(const char* path, int m, sepagg_dataset** out);
SEPAGG_API sepagg_status sepagg_dataset_save_csv(const sepagg_dataset* ds, const char* path);
SEPAGG_API sepagg_status sepagg_dataset_gen_blobs(int m, size_t n, size_t dim, double separation, uint64_t seed,
                                                  sepagg_dataset** out);
/* Replaces any noisy label columns with k freshly sampled ones. */
SEPAGG_API sepagg_status sepagg_dataset_annotate(sepagg_dataset* ds, sepagg_noise_model model, double epsilon,
                                                 size_t k, uint64_t seed);
/* Adds y_hat and p0..p{M-1} columns. diagnostics may be NULL. */
SEPAGG_API sepagg_status sepagg_dataset_aggregate(sepagg_dataset* ds, sepagg_method method, char** diagnostics);
SEPAGG_API size_t sepagg_dataset_rows(const sepagg_dataset* ds);
SEPAGG_API size_t sepagg_dataset_dim(const sepagg_dataset* ds);
SEPAGG_API size_t sepagg_dataset_annotators(const sepagg_dataset* ds);
SEPAGG_API int sepagg_dataset_classes(const sepagg_dataset* ds);
SEPAGG_API void sepagg_dataset_free(sepagg_dataset* ds);

/* ---- advisor ---- */

typedef struct sepagg_problem {
  double rho0;
  double rho1;
  int k;
  double n;
  double delta;
  double vc_dim;
  double p0;
  double loss_lo;
  double loss_hi;
  double lipschitz;
} sepagg_problem;

/* Fills defaults: no noise, k=1, n=1000, delta=0.05, vc_dim=1, p0=0.5,
 * loss range [0,1], lipschitz 1. */
SEPAGG_API void sepagg_problem_init(sepagg_problem* p);
/* *separate is 1 when separation is recommended, 0 for aggregation.
 * report may be NULL; otherwise it receives the decision as JSON. */
SEPAGG_API sepagg_status sepagg_advise(const sepagg_problem* p, sepagg_loss loss, int* separate, char** report);

/* ---- training and experiments ---- */

/* Splits ds, applies the treatment and trains. config is a JSON object with
 * optional fields loss (ce|bw|pl), treatment (sep|mv|em), seed, model
 * (linear|mlp), hidden, learning_rate, momentum, weight_decay, epochs,
 * batch_size, test_fraction, and for bw either epsilon or rho0/rho1 giving
 * each annotator's noise. metrics receives the Metrics JSON. */
SEPAGG_API sepagg_status sepagg_train(const sepagg_dataset* ds, const char* config, char** metrics);

/* which: 1, 2 or 3. exact_lhs selects the exact condition form for figure 3. */
SEPAGG_API sepagg_status sepagg_figure_csv(int which, int exact_lhs, char** csv);

/* Runs the sweep in the JSON config file and writes sweep.csv, summary.csv and
 * timing.csv. output_dir overrides the config when non-NULL. *failed receives
 * the number of failed runs. */
SEPAGG_API sepagg_status sepagg_experiment_run(const char* config_path, const char* output_dir, size_t* failed);

#ifdef __cplusplus
}
#endif

#endif
