#ifndef PJBSVD_H
#define PJBSVD_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

#define PJBD_FIELD_REAL 0

#define PJBD_FIELD_COMPLEX 1

#define PJBD_UPDATING_GS 0

#define PJBD_UPDATING_JACOBI 1

#define PJBD_ACCEL_NONE 0

#define PJBD_ACCEL_LOCG 1

typedef enum PjbdStatus {
  PJBD_STATUS_OK = 0,
  PJBD_STATUS_NULL_POINTER = 1,
  PJBD_STATUS_INVALID_INPUT = 2,
  PJBD_STATUS_DIMENSION = 3,
  PJBD_STATUS_CONTRACT = 4,
  PJBD_STATUS_NON_FINITE = 5,
  PJBD_STATUS_IO = 6,
  PJBD_STATUS_FORMAT = 7,
  PJBD_STATUS_BUFFER_TOO_SMALL = 8,
  PJBD_STATUS_PANIC = 9,
} PjbdStatus;

/*
 A set of matrices with its block partition.
 */
typedef struct PjbdProblem PjbdProblem;

/*
 The outcome of one solve.
 */
typedef struct PjbdResult PjbdResult;

typedef struct PjbdSolveParams {
  /*
   `PJBD_UPDATING_*`.
   */
  uint32_t updating;
  /*
   `PJBD_ACCEL_*`.
   */
  uint32_t accel;
  double tol;
  size_t max_iter;
  size_t inner_max_iter;
  /*
   Nonzero starts from the leading identity columns and ignores `init_seed`.
   */
  uint8_t identity_init;
  uint64_t init_seed;
} PjbdSolveParams;

typedef struct PjbdGeneratorParams {
  size_t n2;
  /*
   `n1 = round(ratio·n2)`.
   */
  double ratio;
  size_t num_matrices;
  const size_t *blocks;
  size_t num_blocks;
  double eta;
  double scale;
  /*
   `PJBD_FIELD_*`.
   */
  uint32_t field;
  uint64_t seed;
} PjbdGeneratorParams;

typedef struct PjbdSummary {
  uint8_t converged;
  uint32_t field;
  size_t iterations;
  size_t n1;
  size_t n2;
  size_t k;
  double initial_objective;
  double final_objective;
  double final_kkt;
  double elapsed_seconds;
} PjbdSummary;

/*
 Library version as a static NUL-terminated string.
 */
const char *pjbd_version(void);

/*
 Copies the calling thread's last error message into `buf` (NUL-terminated,
 truncated to `len`) and returns the full message length without the NUL.
 */
size_t pjbd_last_error_message(char *buf, size_t len);

/*
 Fills `params` with the library defaults for a GS solve.
 */
enum PjbdStatus pjbd_solve_params_default(struct PjbdSolveParams *params);

enum PjbdStatus pjbd_problem_generate(const struct PjbdGeneratorParams *params,
                                      struct PjbdProblem **out);

/*
 Builds a problem from `num_matrices` consecutive column-major `n1 × n2`
 matrices in `data` (`2·n1·n2` doubles per matrix when complex).
 */
enum PjbdStatus pjbd_problem_from_data(uint32_t field,
                                       size_t n1,
                                       size_t n2,
                                       size_t num_matrices,
                                       const double *data,
                                       size_t data_len,
                                       const size_t *blocks,
                                       size_t num_blocks,
                                       struct PjbdProblem **out);

enum PjbdStatus pjbd_problem_load(const char *dir, struct PjbdProblem **out);

enum PjbdStatus pjbd_problem_save(const struct PjbdProblem *problem, const char *dir);

/*
 Any output pointer may be null.
 */
enum PjbdStatus pjbd_problem_dims(const struct PjbdProblem *problem,
                                  size_t *n1,
                                  size_t *n2,
                                  size_t *k,
                                  size_t *num_matrices,
                                  uint32_t *field);

void pjbd_problem_free(struct PjbdProblem *problem);

/*
 Solves with `params`, or the defaults when `params` is null.
 */
enum PjbdStatus pjbd_solve(const struct PjbdProblem *problem,
                           const struct PjbdSolveParams *params,
                           struct PjbdResult **out);

enum PjbdStatus pjbd_result_summary(const struct PjbdResult *result, struct PjbdSummary *out);

/*
 Writes up to `capacity` per-iteration objective and KKT values (either
 array may be null) and stores the trace length in `len`.
 */
enum PjbdStatus pjbd_result_trace(const struct PjbdResult *result,
                                  double *objective,
                                  double *kkt,
                                  size_t capacity,
                                  size_t *len);

/*
 Copies `U` column-major into `buf`. Passing a null `buf` with `len = 0`
 only reports the required number of doubles in `needed`.
 */
enum PjbdStatus pjbd_result_copy_u(const struct PjbdResult *result,
                                   double *buf,
                                   size_t len,
                                   size_t *needed);

enum PjbdStatus pjbd_result_copy_v(const struct PjbdResult *result,
                                   double *buf,
                                   size_t len,
                                   size_t *needed);

void pjbd_result_free(struct PjbdResult *result);

#endif  /* PJBSVD_H */
