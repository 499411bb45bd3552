#ifndef BLOCKSPARSE_H
#define BLOCKSPARSE_H

/* Generated by cbindgen from the blocksparse-capi crate — do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Data-fidelity constraint.
 */
typedef enum BsConstraint {
  /**
   * `y = Bc` exactly.
   */
  BsConstraint_Equality = 0,
  /**
   * `‖y − Bc‖₂ ≤ delta`.
   */
  BsConstraint_Ball = 1,
} BsConstraint;

/**
 * Objective family of the convex program.
 */
typedef enum BsFamily {
  /**
   * Minimize the sum of coefficient-block norms Σᵢ ‖c[i]‖_q.
   */
  BsFamily_CoefficientNorm = 0,
  /**
   * Minimize the sum of reconstruction norms Σᵢ ‖B[i] c[i]‖_q.
   */
  BsFamily_ReconstructionNorm = 1,
} BsFamily;

/**
 * Block norm used inside the objective.
 */
typedef enum BsNorm {
  /**
   * ℓ₁: sum of absolute values.
   */
  BsNorm_L1 = 0,
  /**
   * ℓ₂: Euclidean norm.
   */
  BsNorm_L2 = 1,
  /**
   * ℓ∞: maximum absolute value.
   */
  BsNorm_LInf = 2,
} BsNorm;

/**
 * Outcome of a fallible call. `Ok` is zero; everything else is a failure
 * whose detail text is available via [`bs_last_error_message`].
 */
typedef enum BsStatus {
  /**
   * The call succeeded.
   */
  BsStatus_Ok = 0,
  /**
   * A required pointer argument was null.
   */
  BsStatus_NullPointer = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  BsStatus_InvalidUtf8 = 2,
  /**
   * A caller-provided buffer is too short for the data.
   */
  BsStatus_BufferTooSmall = 3,
  /**
   * A parameter is outside its documented domain.
   */
  BsStatus_InvalidArgument = 4,
  /**
   * Array or matrix dimensions do not agree.
   */
  BsStatus_DimensionMismatch = 5,
  /**
   * A matrix block (or training covariance) has too low a rank.
   */
  BsStatus_RankDeficient = 6,
  /**
   * Random dictionary generation exhausted its retry budget.
   */
  BsStatus_GenerationFailed = 7,
  /**
   * An enumeration would exceed its configured work cap.
   */
  BsStatus_WorkCapExceeded = 8,
  /**
   * An operating-system I/O error.
   */
  BsStatus_Io = 9,
  /**
   * A file exists but its contents are malformed or corrupted.
   */
  BsStatus_MalformedFile = 10,
  /**
   * A panic was caught at the language boundary.
   */
  BsStatus_Panic = 11,
  /**
   * Any error not covered by a more specific code.
   */
  BsStatus_Unknown = 12,
} BsStatus;

/**
 * Opaque handle to a block-structured dictionary.
 */
typedef struct BsDictionary BsDictionary;

/**
 * Opaque handle to the outcome of one solve.
 */
typedef struct BsResult BsResult;

/**
 * Opaque handle to a solver prepared for one dictionary and one set of
 * options (factorizations are cached, so repeated solves are cheap).
 */
typedef struct BsSolver BsSolver;

/**
 * Everything configurable about one solve. Obtain defaults from
 * [`bs_solve_options_default`] and override fields as needed.
 */
typedef struct BsSolveOptions {
  /**
   * Objective family.
   */
  enum BsFamily family;
  /**
   * Block norm q.
   */
  enum BsNorm q;
  /**
   * Data-fidelity constraint kind.
   */
  enum BsConstraint constraint;
  /**
   * Ball radius δ ≥ 0; ignored under an equality constraint.
   */
  double delta;
  /**
   * When true, one identity block per measurement is appended and the
   * solution is split into coefficients and a sparse error vector.
   */
  bool corrupt;
  /**
   * Relative primal stopping tolerance (> 0).
   */
  double tol_primal;
  /**
   * Relative dual stopping tolerance (> 0).
   */
  double tol_dual;
  /**
   * Iteration budget; exhausting it yields a non-converged result.
   */
  size_t max_iter;
  /**
   * Initial splitting penalty (> 0; adapted during the run).
   */
  double rho;
  /**
   * A block is counted in the recovered support when its contribution
   * exceeds this fraction of the largest block's (in (0, 1]).
   */
  double support_rel_tol;
} BsSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the library version as a static NUL-terminated string.
 */
const char *bs_version(void);

/**
 * Copies the message of the most recent failure on this thread into `buf`
 * (NUL-terminated, truncating if needed) and returns the capacity required
 * to hold the full message including its NUL. `buf` may be null (or `cap`
 * zero) to query the length alone.
 *
 * # Safety
 * `buf`, unless null, must point to at least `cap` writable bytes.
 */
size_t bs_last_error_message(char *buf, size_t cap);

/**
 * Draws a random dictionary of `n_blocks` blocks of `block_len` unit
 * columns spanning pairwise-disjoint `subspace_dim`-dimensional subspaces
 * of R^`ambient_dim`. The draw is fully determined by `seed`.
 *
 * # Safety
 * `out` must point to a writable `BsDictionary*`; on success it receives a
 * handle to release with [`bs_dictionary_free`].
 */
enum BsStatus bs_dictionary_generate(size_t ambient_dim,
                                     size_t n_blocks,
                                     size_t subspace_dim,
                                     size_t block_len,
                                     uint64_t seed,
                                     struct BsDictionary **out);

/**
 * Builds a dictionary from a dense column-major matrix: `data` holds
 * `ambient_dim × total_cols` values, and `block_sizes` (length `n_blocks`,
 * summing to `total_cols`) partitions the columns into blocks. Columns
 * must have unit length; each block's subspace dimension is inferred from
 * its rank.
 *
 * # Safety
 * `data` must point to `ambient_dim * total_cols` readable doubles,
 * `block_sizes` to `n_blocks` readable values, and `out` to a writable
 * `BsDictionary*`.
 */
enum BsStatus bs_dictionary_from_columns(const double *data,
                                         size_t ambient_dim,
                                         size_t total_cols,
                                         const size_t *block_sizes,
                                         size_t n_blocks,
                                         struct BsDictionary **out);

/**
 * Loads a dictionary from a `.bsd` file written by [`bs_dictionary_save`].
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a writable
 * `BsDictionary*`.
 */
enum BsStatus bs_dictionary_load(const char *path, struct BsDictionary **out);

/**
 * Writes the dictionary to `path` atomically (temp file + rename).
 *
 * # Safety
 * `dict` must be a live dictionary handle and `path` a NUL-terminated
 * string.
 */
enum BsStatus bs_dictionary_save(const struct BsDictionary *dict, const char *path);

/**
 * Ambient dimension D, or 0 if `dict` is null.
 *
 * # Safety
 * `dict` must be null or a live dictionary handle.
 */
size_t bs_dictionary_ambient_dim(const struct BsDictionary *dict);

/**
 * Number of blocks n, or 0 if `dict` is null.
 *
 * # Safety
 * `dict` must be null or a live dictionary handle.
 */
size_t bs_dictionary_n_blocks(const struct BsDictionary *dict);

/**
 * Total number of columns N, or 0 if `dict` is null.
 *
 * # Safety
 * `dict` must be null or a live dictionary handle.
 */
size_t bs_dictionary_total_cols(const struct BsDictionary *dict);

/**
 * Number of columns in block `i`, or 0 if `dict` is null or `i` is out of
 * range.
 *
 * # Safety
 * `dict` must be null or a live dictionary handle.
 */
size_t bs_dictionary_block_size(const struct BsDictionary *dict, size_t i);

/**
 * Dimension of the subspace spanned by block `i`, or 0 if `dict` is null
 * or `i` is out of range.
 *
 * # Safety
 * `dict` must be null or a live dictionary handle.
 */
size_t bs_dictionary_subspace_dim(const struct BsDictionary *dict, size_t i);

/**
 * Copies the dictionary matrix into `buf` in column-major order.
 * `cap` is the buffer's capacity in doubles; `ambient_dim × total_cols`
 * values are written.
 *
 * # Safety
 * `dict` must be a live dictionary handle and `buf` must point to at
 * least `cap` writable doubles.
 */
enum BsStatus bs_dictionary_copy_matrix(const struct BsDictionary *dict, double *buf, size_t cap);

/**
 * Computes the mutual subspace coherence μ_S (the largest cosine of the
 * smallest principal angle between any two blocks' subspaces) and stores
 * it in `*out`.
 *
 * # Safety
 * `dict` must be a live dictionary handle and `out` a writable double.
 */
enum BsStatus bs_dictionary_mutual_coherence(const struct BsDictionary *dict, double *out);

/**
 * Releases a dictionary handle. Null is ignored.
 *
 * # Safety
 * `dict` must be null or a handle from this library not yet freed.
 */
void bs_dictionary_free(struct BsDictionary *dict);

/**
 * The default solve options for one family/norm pair: equality
 * constraint, no corruption handling, tolerances 1e-6, 10000 iterations,
 * rho 1, support threshold 1e-3.
 */
struct BsSolveOptions bs_solve_options_default(enum BsFamily family, enum BsNorm q);

/**
 * Prepares a solver for `dict` under `options`, caching every
 * factorization the iteration needs. The solver keeps its own copy of the
 * dictionary.
 *
 * # Safety
 * `dict` must be a live dictionary handle, `options` a readable options
 * struct, and `out` a writable `BsSolver*`; on success it receives a
 * handle to release with [`bs_solver_free`].
 */
enum BsStatus bs_solver_new(const struct BsDictionary *dict,
                            const struct BsSolveOptions *options,
                            struct BsSolver **out);

/**
 * Solves for the signal `y` (length `y_len`, which must equal the
 * dictionary's ambient dimension). Non-convergence within the iteration
 * budget is not an error: the call succeeds and the result reports
 * `converged = false`.
 *
 * # Safety
 * `solver` must be a live solver handle, `y` must point to `y_len`
 * readable doubles, and `out` must be a writable `BsResult*`; on success
 * it receives a handle to release with [`bs_result_free`].
 */
enum BsStatus bs_solver_solve(const struct BsSolver *solver,
                              const double *y,
                              size_t y_len,
                              struct BsResult **out);

/**
 * Releases a solver handle. Null is ignored.
 *
 * # Safety
 * `solver` must be null or a handle from this library not yet freed.
 */
void bs_solver_free(struct BsSolver *solver);

/**
 * One-shot convenience: prepare a solver, run it on `y`, and release it.
 * Prefer [`bs_solver_new`] when solving many signals against one
 * dictionary.
 *
 * # Safety
 * As for [`bs_solver_new`] and [`bs_solver_solve`].
 */
enum BsStatus bs_solve(const struct BsDictionary *dict,
                       const struct BsSolveOptions *options,
                       const double *y,
                       size_t y_len,
                       struct BsResult **out);

/**
 * Whether the solve met its tolerances (false for null handles).
 *
 * # Safety
 * `result` must be null or a live result handle.
 */
bool bs_result_converged(const struct BsResult *result);

/**
 * Number of iterations performed, or 0 for null handles.
 *
 * # Safety
 * `result` must be null or a live result handle.
 */
size_t bs_result_iterations(const struct BsResult *result);

/**
 * Objective value of the returned iterate, or NaN for null handles.
 *
 * # Safety
 * `result` must be null or a live result handle.
 */
double bs_result_objective(const struct BsResult *result);

/**
 * Largest block dual norm of the certificate, or NaN when the solve
 * produced none (or for null handles). Values at most 1 (within solver
 * tolerance) witness optimality.
 *
 * # Safety
 * `result` must be null or a live result handle.
 */
double bs_result_max_block_dual_norm(const struct BsResult *result);

/**
 * Length of the coefficient vector (the dictionary's total column count),
 * or 0 for null handles.
 *
 * # Safety
 * `result` must be null or a live result handle.
 */
size_t bs_result_coefficient_count(const struct BsResult *result);

/**
 * Copies the recovered coefficients into `buf` (capacity `cap` doubles).
 *
 * # Safety
 * `result` must be a live result handle and `buf` must point to at least
 * `cap` writable doubles.
 */
enum BsStatus bs_result_copy_coefficients(const struct BsResult *result, double *buf, size_t cap);

/**
 * Length of the recovered sparse error vector: the ambient dimension when
 * the solve modeled corruption, otherwise 0.
 *
 * # Safety
 * `result` must be null or a live result handle.
 */
size_t bs_result_error_vector_len(const struct BsResult *result);

/**
 * Copies the recovered sparse error vector into `buf` (capacity `cap`
 * doubles). Succeeds trivially when no corruption was modeled.
 *
 * # Safety
 * `result` must be a live result handle and `buf` must point to at least
 * `cap` writable doubles.
 */
enum BsStatus bs_result_copy_error_vector(const struct BsResult *result, double *buf, size_t cap);

/**
 * Number of blocks in the recovered support, or 0 for null handles.
 *
 * # Safety
 * `result` must be null or a live result handle.
 */
size_t bs_result_support_size(const struct BsResult *result);

/**
 * Copies the recovered support (ascending block indices) into `buf`
 * (capacity `cap` values).
 *
 * # Safety
 * `result` must be a live result handle and `buf` must point to at least
 * `cap` writable values.
 */
enum BsStatus bs_result_copy_support(const struct BsResult *result, size_t *buf, size_t cap);

/**
 * Releases a result handle. Null is ignored.
 *
 * # Safety
 * `result` must be null or a handle from this library not yet freed.
 */
void bs_result_free(struct BsResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLOCKSPARSE_H */
