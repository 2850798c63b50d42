/* C interface to the qbloch quantum-box Bloch-equation simulator. */

#ifndef QBLOCH_H
#define QBLOCH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum QblochStatus {
  QBLOCH_STATUS_OK = 0,
  QBLOCH_STATUS_NULL_POINTER = 1,
  QBLOCH_STATUS_INVALID_ARGUMENT = 2,
  QBLOCH_STATUS_INVALID_CONFIG = 3,
  QBLOCH_STATUS_SIMULATION_FAILED = 4,
  QBLOCH_STATUS_VERIFICATION_FAILED = 5,
  QBLOCH_STATUS_INVALID_UTF8 = 6,
} QblochStatus;

/**
 * Opaque handle to a validated scenario.
 */
typedef struct QblochScenario QblochScenario;

/**
 * Opaque handle to a simulated trajectory.
 */
typedef struct QblochTrajectory QblochTrajectory;

/**
 * Diagnostics of one recorded state.
 */
typedef struct QblochDiagnostics {
  double hermiticity_defect;
  double trace_re;
  double trace_im;
  double min_eigenvalue;
  double coherence_bound_defect;
  double population_min;
  double population_max;
  /**
   * Meaningful only when `has_degeneracy_bound` is true.
   */
  double degeneracy_bound_defect;
  bool has_degeneracy_bound;
} QblochDiagnostics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message describing the most recent error on this thread. The pointer is
 * valid until the next failing qbloch call on the same thread.
 */
const char *qbloch_last_error(void);

/**
 * Parses and validates a scenario from TOML text.
 *
 * On success writes a new handle to `out`; free it with
 * [`qbloch_scenario_free`].
 */
enum QblochStatus qbloch_scenario_from_toml(const char *text, struct QblochScenario **out);

/**
 * Loads a scenario from a TOML file on disk.
 */
enum QblochStatus qbloch_scenario_from_file(const char *path, struct QblochScenario **out);

void qbloch_scenario_free(struct QblochScenario *scenario);

/**
 * Runs the scenario's simulation and returns a trajectory handle; free it
 * with [`qbloch_trajectory_free`].
 */
enum QblochStatus qbloch_scenario_run(const struct QblochScenario *scenario,
                                      struct QblochTrajectory **out);

void qbloch_trajectory_free(struct QblochTrajectory *trajectory);

/**
 * Number of recorded states.
 */
size_t qbloch_trajectory_records(const struct QblochTrajectory *trajectory);

/**
 * Number of complex entries in one flattened state.
 *
 * Layouts (all matrices row-major): density models expose the full density
 * matrix (`n*n`); the electron-hole model concatenates `rho_c`, `rho_h`,
 * `rho_ch`; the reduced model concatenates `n_e`, `n_h` (imaginary parts
 * zero) and the polarization block.
 */
size_t qbloch_trajectory_state_len(const struct QblochTrajectory *trajectory);

/**
 * Time stamp of one record.
 */
enum QblochStatus qbloch_trajectory_time(const struct QblochTrajectory *trajectory,
                                         size_t record,
                                         double *out);

/**
 * Copies the flattened state of one record into `out_re`/`out_im`, each of
 * length `len` (which must equal [`qbloch_trajectory_state_len`]).
 */
enum QblochStatus qbloch_trajectory_state(const struct QblochTrajectory *trajectory,
                                          size_t record,
                                          double *out_re,
                                          double *out_im,
                                          size_t len);

/**
 * Diagnostics of one record.
 */
enum QblochStatus qbloch_trajectory_diagnostics(const struct QblochTrajectory *trajectory,
                                                size_t record,
                                                struct QblochDiagnostics *out);

/**
 * Runs the symbolic re-derivation checks on seeded random systems.
 *
 * `out_max_deviations`, when non-null, must point to four doubles; they
 * receive the per-check maximum relative deviations (one-species generator,
 * boson equivalence, two-species generator, electron-hole chain rule).
 * Returns `Ok` when every deviation is below 1e-10.
 */
enum QblochStatus qbloch_verify(uint32_t levels,
                                uint64_t seed,
                                uint32_t trials,
                                double *out_max_deviations);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QBLOCH_H */
