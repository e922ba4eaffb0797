#ifndef IGA_MAJORANT_H
#define IGA_MAJORANT_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IgaStatus {
  IGA_STATUS_OK = 0,
  IGA_STATUS_NULL_POINTER = 1,
  IGA_STATUS_INVALID_ARGUMENT = 2,
  IGA_STATUS_UNKNOWN_EXAMPLE = 3,
  IGA_STATUS_NUMERICAL = 4,
  IGA_STATUS_IO = 5,
  IGA_STATUS_OUT_OF_RANGE = 6,
  IGA_STATUS_BUFFER_TOO_SMALL = 7,
  IGA_STATUS_PANIC = 99,
} IgaStatus;

typedef struct IgaProblem IgaProblem;

typedef struct IgaStudy IgaStudy;

/**
 * Study options. `quad = 0` picks the default rule and `c_omega <= 0`
 * derives the constant from the problem.
 */
typedef struct IgaConfig {
  double psi;
  double c_plus;
  size_t iterations;
  double beta0;
  size_t quad;
  bool iterative;
  double c_omega;
} IgaConfig;

/**
 * One table row. Missing exact error and efficiency index are NaN.
 */
typedef struct IgaRow {
  size_t level;
  size_t spans_s;
  size_t spans_t;
  size_t dof_u;
  size_t dof_y;
  double a1b1;
  double a2b2;
  double majorant;
  double exact_error;
  double ieff;
  double ratio;
  bool criterion;
  double t_asm_pde;
  double t_solve_pde;
  double t_asm_est;
  double t_solve_est;
} IgaRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default options: ψ = 20, C⊕ = 5, two iterations, β₀ = 0.01.
 */
struct IgaConfig iga_config_default(void);

/**
 * Creates a builtin benchmark problem by id ("1", "2", "3", "4a", "4b",
 * "5", "6", "7").
 *
 * # Safety
 * `name` must be a valid NUL-terminated string; `out` must be writable.
 */
enum IgaStatus iga_problem_new(const char *name, struct IgaProblem **out);

/**
 * # Safety
 * `problem` must come from [`iga_problem_new`] and not be used afterwards.
 */
void iga_problem_free(struct IgaProblem *problem);

/**
 * Whether the problem carries an analytic solution.
 *
 * # Safety
 * `problem` must be a live handle or null.
 */
bool iga_problem_has_exact(const struct IgaProblem *problem);

/**
 * Solves and estimates on `levels + 1` uniformly refined meshes. `flux_case`
 * is "0" or "K,k".
 *
 * # Safety
 * Pointers must be valid; `config` may be null for the defaults.
 */
enum IgaStatus iga_study_uniform(const struct IgaProblem *problem,
                                 const char *flux_case,
                                 size_t levels,
                                 const struct IgaConfig *config,
                                 struct IgaStudy **out);

/**
 * Runs `steps` adaptive steps with the given flux case; Example 5 uses its
 * own case schedule and ignores `flux_case`.
 *
 * # Safety
 * Pointers must be valid; `config` may be null for the defaults.
 */
enum IgaStatus iga_study_adaptive(const struct IgaProblem *problem,
                                  const char *flux_case,
                                  size_t steps,
                                  const struct IgaConfig *config,
                                  struct IgaStudy **out);

/**
 * # Safety
 * `study` must come from a study function and not be used afterwards.
 */
void iga_study_free(struct IgaStudy *study);

/**
 * Number of levels (rows); 0 for a null handle.
 *
 * # Safety
 * `study` must be a live handle or null.
 */
size_t iga_study_len(const struct IgaStudy *study);

/**
 * # Safety
 * `study` must be a live handle; `out` must be writable.
 */
enum IgaStatus iga_study_row(const struct IgaStudy *study, size_t index, struct IgaRow *out);

/**
 * Writes the cell-map codes of level `index` (0 unmarked, 1 estimator,
 * 2 exact, 3 both; row-major with the first parameter fastest) into
 * `codes`. `dims` receives the two cell counts. With `codes` null or too
 * short, only `dims` is filled and `BufferTooSmall` is returned.
 *
 * # Safety
 * `study` must be a live handle; `dims` must point to two writable values;
 * `codes` must hold `len` bytes when not null.
 */
enum IgaStatus iga_study_cell_map(const struct IgaStudy *study,
                                  size_t index,
                                  uint8_t *codes,
                                  size_t len,
                                  size_t *dims);

/**
 * Writes `study.csv` and the cell maps into `dir`.
 *
 * # Safety
 * `study` must be a live handle and `dir` a valid NUL-terminated string.
 */
enum IgaStatus iga_study_write(const struct IgaStudy *study, const char *dir);

/**
 * Copies the calling thread's last error message, NUL-terminated and
 * truncated to `len`. Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must hold `len` bytes when not null.
 */
size_t iga_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *iga_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IGA_MAJORANT_H */
