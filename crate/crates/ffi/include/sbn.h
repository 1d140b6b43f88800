#ifndef SBN_H
#define SBN_H

#include <stddef.h>
#include <stdint.h>

typedef enum SbnStatus {
  SBN_STATUS_OK = 0,
  SBN_STATUS_NULL_POINTER = 1,
  SBN_STATUS_INVALID_ARGUMENT = 2,
  SBN_STATUS_GEOMETRY = 3,
  SBN_STATUS_PARSE = 4,
  SBN_STATUS_SEQUENCING = 5,
  SBN_STATUS_USAGE = 6,
  SBN_STATUS_SOLVER = 7,
  SBN_STATUS_IO = 8,
  SBN_STATUS_PANIC = 9,
} SbnStatus;

typedef enum SbnIntegrator {
  SBN_INTEGRATOR_DECOUPLED = 0,
  SBN_INTEGRATOR_MONOLITHIC = 1,
} SbnIntegrator;

typedef enum SbnField {
  SBN_FIELD_VELOCITY = 0,
  SBN_FIELD_FLUID_PRESSURE = 1,
  SBN_FIELD_DISPLACEMENT = 2,
  SBN_FIELD_XI = 3,
  SBN_FIELD_FLUX = 4,
  SBN_FIELD_ETA = 5,
  SBN_FIELD_PORE_PRESSURE = 6,
} SbnField;

/**
 * Opaque simulation handle.
 */
typedef struct SbnSimulation SbnSimulation;

typedef struct SbnPseudoCoefficients {
  double k1;
  double k2;
  double k3;
} SbnPseudoCoefficients;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Pseudo-pressure coefficients for the given Lamé parameter, storage and Biot-Willis constants.
 *
 * # Safety
 * `out` must be null or point to writable memory for one struct.
 */
enum SbnStatus sbn_pseudo_coefficients(double lambda_p,
                                       double s0,
                                       double alpha,
                                       struct SbnPseudoCoefficients *out);

/**
 * The manufactured-source benchmark on an `n`×`n` per-region channel.
 *
 * # Safety
 * `out` must be null or point to writable memory for one pointer.
 */
enum SbnStatus sbn_simulation_new_test1(uint32_t n,
                                        enum SbnIntegrator integrator,
                                        double dt,
                                        struct SbnSimulation **out);

/**
 * Builds a simulation from an INI run configuration.
 *
 * # Safety
 * `path` must be null or a NUL-terminated string; `out` must be null or writable.
 */
enum SbnStatus sbn_simulation_from_config(const char *path, struct SbnSimulation **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `sim` must be null or a handle from a constructor, not yet freed.
 */
void sbn_simulation_free(struct SbnSimulation *sim);

/**
 * Advances `steps` time steps. On failure the handle keeps the last good state.
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
enum SbnStatus sbn_simulation_step(struct SbnSimulation *sim, uint32_t steps);

/**
 * Current time and step index.
 *
 * # Safety
 * `sim` must be null or a live handle; the outputs must be null or writable.
 */
enum SbnStatus sbn_simulation_time(const struct SbnSimulation *sim, double *time, uint64_t *step);

/**
 * Discrete poroelastic energy of the current state.
 *
 * # Safety
 * `sim` must be null or a live handle; `energy` must be null or writable.
 */
enum SbnStatus sbn_simulation_energy(const struct SbnSimulation *sim, double *energy);

/**
 * Number of coefficients of `field`; vector fields interleave their components.
 *
 * # Safety
 * `sim` must be null or a live handle; `len` must be null or writable.
 */
enum SbnStatus sbn_simulation_field_len(const struct SbnSimulation *sim,
                                        enum SbnField field,
                                        size_t *len);

/**
 * Copies the coefficients of `field` into `buf`, which must hold exactly the field length.
 *
 * # Safety
 * `sim` must be null or a live handle; `buf` must be null or valid for `len` writes.
 */
enum SbnStatus sbn_simulation_field_copy(const struct SbnSimulation *sim,
                                         enum SbnField field,
                                         double *buf,
                                         size_t len);

/**
 * Copies the calling thread's last error message, NUL-terminated and truncated to fit.
 * Returns the full message length excluding the terminator.
 *
 * # Safety
 * `buf` must be null or valid for `cap` writes.
 */
size_t sbn_last_error_message(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sbn_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SBN_H */
