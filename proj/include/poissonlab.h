/*
 * poissonlab C API.
 *
 * A shared-library surface over the poissonlab core: intensity models from a
 * built-in catalog, Poisson window simulation, and the experiment harness
 * subcommands. All objects are opaque handles; every function returns a
 * plab_status, with a thread-local message available via plab_last_error().
 */
#ifndef POISSONLAB_H
#define POISSONLAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum plab_status {
  PLAB_OK = 0,
  PLAB_ERR_INVALID_ARGUMENT = 1,
  PLAB_ERR_DOMAIN = 2,          /* request outside the declared region */
  PLAB_ERR_CONFIG = 3,          /* invalid experiment configuration */
  PLAB_ERR_CONTRACT = 4,        /* runtime invariant violated */
  PLAB_ERR_BUFFER_OVERFLOW = 5, /* transport escaped the padded window */
  PLAB_ERR_INTERNAL = 6
} plab_status;

const char* plab_version(void);
const char* plab_status_name(plab_status s);
/* Message for the most recent failure on this thread. */
const char* plab_last_error(void);

/* ---- intensity models ---------------------------------------------------- */

typedef struct plab_model plab_model;

/*
 * Creates a catalog model. `name` is one of "lebesgue", "exp_decay",
 * "gaussian_bump"; `param` is the rate/sigma (ignored for "lebesgue").
 * The declared window [lo, hi] per axis bounds the region the model will be
 * evaluated on; it is expanded to contain the origin.
 */
plab_status plab_model_create(const char* name, double param, int dim, const double* lo,
                              const double* hi, plab_model** out);
void plab_model_free(plab_model* m);

plab_status plab_model_dimension(const plab_model* m, int* out_dim);
plab_status plab_model_density(const plab_model* m, const double* point, double* out);

/* nu(box) * (t1 - t0) by deterministic adaptive quadrature. */
plab_status plab_model_window_mass(const plab_model* m, const double* lo, const double* hi,
                                   double t0, double t1, double* out);

/*
 * Poisson sample on the window. On success *out_points holds
 * (*out_count) * (dim + 1) doubles, each point as (coords..., time), to be
 * released with plab_buffer_free. Streams are a pure function of
 * (seed, replicate): equal keys reproduce equal samples.
 */
plab_status plab_simulate(const plab_model* m, const double* lo, const double* hi, double t0,
                          double t1, unsigned long long seed, unsigned long long replicate,
                          double** out_points, int* out_count);
void plab_buffer_free(double* buf);

/* ---- experiment harness -------------------------------------------------- */

/*
 * Runs a harness subcommand ("simulate", "clark-ocone", "girsanov-check",
 * "transport-check", "duality") on a JSON configuration document. Writes CSV
 * results and a manifest into the output directory.
 *
 * exit_code: 0 when all asserted tolerances pass, 1 on a tolerance failure,
 * 2 on an invalid configuration (the call then returns PLAB_ERR_CONFIG).
 * out_dir may be NULL (uses the config's "out"); seed_override < 0 keeps the
 * config seed; workers <= 0 keeps the config worker count.
 * report, when non-NULL, receives a summary string (plab_string_free).
 */
plab_status plab_run(const char* subcommand, const char* config_json, const char* out_dir,
                     long long seed_override, int workers, int* exit_code, char** report);
void plab_string_free(char* s);

#ifdef __cplusplus
}
#endif

#endif /* POISSONLAB_H */
