//! C interface to the block-sparse recovery toolkit.
//!
//! The surface follows the usual conventions for a C library written in
//! Rust:
//!
//! - **Opaque handles**: [`BsDictionary`], [`BsSolver`], and [`BsResult`]
//!   are allocated by this library, passed around as pointers, and released
//!   with their matching `*_free` function. Handles are independent — a
//!   solver keeps its own copy of the dictionary it was prepared for, so
//!   the dictionary handle may be freed first.
//! - **Status codes**: every fallible function returns a [`BsStatus`];
//!   `Ok` is zero. On failure a human-readable message is stored in
//!   thread-local storage and can be fetched with [`bs_last_error_message`].
//! - **No unwinding**: panics are caught at the boundary and reported as
//!   [`BsStatus::Panic`] instead of crossing into C frames.
//! - **Caller-owned buffers**: functions that return arrays copy into a
//!   caller-provided buffer and fail with [`BsStatus::BufferTooSmall`]
//!   (after reporting the needed length) when it cannot hold the data.
//!
//! Passing an integer that is not a declared enum value, a dangling or
//! aliased handle, or a buffer shorter than its stated capacity is
//! undefined behavior, exactly as it would be for any C library.
//!
//! The matching header, `include/blocksparse.h`, is regenerated by the
//! build script on every build.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;

use libc::c_char;
use nalgebra::{DMatrix, DVector};

use blocksparse::model::{load_dictionary, save_dictionary};
use blocksparse::solver::{recovered_support, Constraint, Corruption, PreparedSolver};
use blocksparse::{coherence, generate_dictionary, Dictionary, Error, Family, Norm, SolveSpec};

/// Outcome of a fallible call. `Ok` is zero; everything else is a failure
/// whose detail text is available via [`bs_last_error_message`].
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// A string argument was not valid UTF-8.
    InvalidUtf8 = 2,
    /// A caller-provided buffer is too short for the data.
    BufferTooSmall = 3,
    /// A parameter is outside its documented domain.
    InvalidArgument = 4,
    /// Array or matrix dimensions do not agree.
    DimensionMismatch = 5,
    /// A matrix block (or training covariance) has too low a rank.
    RankDeficient = 6,
    /// Random dictionary generation exhausted its retry budget.
    GenerationFailed = 7,
    /// An enumeration would exceed its configured work cap.
    WorkCapExceeded = 8,
    /// An operating-system I/O error.
    Io = 9,
    /// A file exists but its contents are malformed or corrupted.
    MalformedFile = 10,
    /// A panic was caught at the language boundary.
    Panic = 11,
    /// Any error not covered by a more specific code.
    Unknown = 12,
}

/// Objective family of the convex program.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsFamily {
    /// Minimize the sum of coefficient-block norms Σᵢ ‖c[i]‖_q.
    CoefficientNorm = 0,
    /// Minimize the sum of reconstruction norms Σᵢ ‖B[i] c[i]‖_q.
    ReconstructionNorm = 1,
}

/// Block norm used inside the objective.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsNorm {
    /// ℓ₁: sum of absolute values.
    L1 = 0,
    /// ℓ₂: Euclidean norm.
    L2 = 1,
    /// ℓ∞: maximum absolute value.
    LInf = 2,
}

/// Data-fidelity constraint.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsConstraint {
    /// `y = Bc` exactly.
    Equality = 0,
    /// `‖y − Bc‖₂ ≤ delta`.
    Ball = 1,
}

/// Everything configurable about one solve. Obtain defaults from
/// [`bs_solve_options_default`] and override fields as needed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsSolveOptions {
    /// Objective family.
    pub family: BsFamily,
    /// Block norm q.
    pub q: BsNorm,
    /// Data-fidelity constraint kind.
    pub constraint: BsConstraint,
    /// Ball radius δ ≥ 0; ignored under an equality constraint.
    pub delta: f64,
    /// When true, one identity block per measurement is appended and the
    /// solution is split into coefficients and a sparse error vector.
    pub corrupt: bool,
    /// Relative primal stopping tolerance (> 0).
    pub tol_primal: f64,
    /// Relative dual stopping tolerance (> 0).
    pub tol_dual: f64,
    /// Iteration budget; exhausting it yields a non-converged result.
    pub max_iter: usize,
    /// Initial splitting penalty (> 0; adapted during the run).
    pub rho: f64,
    /// A block is counted in the recovered support when its contribution
    /// exceeds this fraction of the largest block's (in (0, 1]).
    pub support_rel_tol: f64,
}

/// Opaque handle to a block-structured dictionary.
pub struct BsDictionary {
    inner: Dictionary,
}

/// Opaque handle to a solver prepared for one dictionary and one set of
/// options (factorizations are cached, so repeated solves are cheap).
pub struct BsSolver {
    dict: Dictionary,
    prepared: PreparedSolver,
    family: Family,
    q: Norm,
    support_rel_tol: f64,
}

/// Opaque handle to the outcome of one solve.
pub struct BsResult {
    coefficients: Vec<f64>,
    error_vector: Vec<f64>,
    support: Vec<usize>,
    objective: f64,
    iterations: usize,
    converged: bool,
    max_block_dual_norm: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(message: &str) {
    let owned = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = owned);
}

fn status_for(err: &Error) -> BsStatus {
    match err {
        Error::DimensionMismatch(_) => BsStatus::DimensionMismatch,
        Error::InvalidParameter(_)
        | Error::MissingInput(_)
        | Error::NonRedundantOnly(_)
        | Error::UnequalBlockLengths(_)
        | Error::NonDivisibleDownsample(_) => BsStatus::InvalidArgument,
        Error::NonOrthonormalBasis(_)
        | Error::RankDeficientBlock { .. }
        | Error::RankDeficientCovariance { .. } => BsStatus::RankDeficient,
        Error::DisjointnessViolation { .. } => BsStatus::GenerationFailed,
        Error::WorkCapExceeded(_) => BsStatus::WorkCapExceeded,
        Error::Io(_) => BsStatus::Io,
        Error::MalformedFile { .. } | Error::ChecksumMismatch { .. } => BsStatus::MalformedFile,
        _ => BsStatus::Unknown,
    }
}

fn fail(err: &Error) -> BsStatus {
    set_error(&err.to_string());
    status_for(err)
}

fn fail_with(status: BsStatus, message: &str) -> BsStatus {
    set_error(message);
    status
}

/// Runs `body`, converting a panic into [`BsStatus::Panic`] instead of
/// letting it unwind into C frames.
fn guarded(body: impl FnOnce() -> BsStatus) -> BsStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(_) => fail_with(BsStatus::Panic, "internal panic caught at the C boundary"),
    }
}

impl BsFamily {
    fn to_core(self) -> Family {
        match self {
            BsFamily::CoefficientNorm => Family::CoefficientNorm,
            BsFamily::ReconstructionNorm => Family::ReconstructionNorm,
        }
    }
}

impl BsNorm {
    fn to_core(self) -> Norm {
        match self {
            BsNorm::L1 => Norm::L1,
            BsNorm::L2 => Norm::L2,
            BsNorm::LInf => Norm::LInf,
        }
    }
}

fn spec_from(options: &BsSolveOptions) -> Result<SolveSpec, BsStatus> {
    let constraint = match options.constraint {
        BsConstraint::Equality => Constraint::Equality,
        BsConstraint::Ball => {
            if !(options.delta >= 0.0) {
                return Err(fail_with(
                    BsStatus::InvalidArgument,
                    "ball radius delta must be nonnegative",
                ));
            }
            Constraint::Ball {
                delta: options.delta,
            }
        }
    };
    if !(options.support_rel_tol > 0.0 && options.support_rel_tol <= 1.0) {
        return Err(fail_with(
            BsStatus::InvalidArgument,
            "support_rel_tol must lie in (0, 1]",
        ));
    }
    Ok(SolveSpec {
        constraint,
        corruption: if options.corrupt {
            Corruption::IdentityAppended
        } else {
            Corruption::None
        },
        tol_primal: options.tol_primal,
        tol_dual: options.tol_dual,
        max_iter: options.max_iter,
        rho: options.rho,
        ..SolveSpec::new(options.family.to_core(), options.q.to_core())
    })
}

/// Copies `src` into the caller's buffer, demanding enough capacity.
fn copy_into<T: Copy>(src: &[T], buf: *mut T, cap: usize) -> BsStatus {
    if buf.is_null() {
        return fail_with(BsStatus::NullPointer, "output buffer is null");
    }
    if cap < src.len() {
        return fail_with(
            BsStatus::BufferTooSmall,
            &format!("buffer holds {cap} elements but {} are needed", src.len()),
        );
    }
    // SAFETY: the caller guarantees `buf` points to at least `cap` writable
    // elements, and `cap >= src.len()` was just checked.
    unsafe { std::ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len()) };
    BsStatus::Ok
}

unsafe fn path_from(ptr: *const c_char) -> Result<PathBuf, BsStatus> {
    if ptr.is_null() {
        return Err(fail_with(BsStatus::NullPointer, "path is null"));
    }
    match CStr::from_ptr(ptr).to_str() {
        Ok(s) => Ok(PathBuf::from(s)),
        Err(_) => Err(fail_with(BsStatus::InvalidUtf8, "path is not valid UTF-8")),
    }
}

/// Returns the library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr() as *const c_char
}

/// Copies the message of the most recent failure on this thread into `buf`
/// (NUL-terminated, truncating if needed) and returns the capacity required
/// to hold the full message including its NUL. `buf` may be null (or `cap`
/// zero) to query the length alone.
///
/// # Safety
/// `buf`, unless null, must point to at least `cap` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bs_last_error_message(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let stored = slot.borrow();
        let message = stored.to_bytes();
        if !buf.is_null() && cap > 0 {
            let n = message.len().min(cap - 1);
            std::ptr::copy_nonoverlapping(message.as_ptr() as *const c_char, buf, n);
            *buf.add(n) = 0;
        }
        message.len() + 1
    })
}

/// Draws a random dictionary of `n_blocks` blocks of `block_len` unit
/// columns spanning pairwise-disjoint `subspace_dim`-dimensional subspaces
/// of R^`ambient_dim`. The draw is fully determined by `seed`.
///
/// # Safety
/// `out` must point to a writable `BsDictionary*`; on success it receives a
/// handle to release with [`bs_dictionary_free`].
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_generate(
    ambient_dim: usize,
    n_blocks: usize,
    subspace_dim: usize,
    block_len: usize,
    seed: u64,
    out: *mut *mut BsDictionary,
) -> BsStatus {
    guarded(|| {
        if out.is_null() {
            return fail_with(BsStatus::NullPointer, "out is null");
        }
        match generate_dictionary(ambient_dim, n_blocks, subspace_dim, block_len, seed) {
            Ok(dict) => {
                *out = Box::into_raw(Box::new(BsDictionary { inner: dict }));
                BsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Builds a dictionary from a dense column-major matrix: `data` holds
/// `ambient_dim × total_cols` values, and `block_sizes` (length `n_blocks`,
/// summing to `total_cols`) partitions the columns into blocks. Columns
/// must have unit length; each block's subspace dimension is inferred from
/// its rank.
///
/// # Safety
/// `data` must point to `ambient_dim * total_cols` readable doubles,
/// `block_sizes` to `n_blocks` readable values, and `out` to a writable
/// `BsDictionary*`.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_from_columns(
    data: *const f64,
    ambient_dim: usize,
    total_cols: usize,
    block_sizes: *const usize,
    n_blocks: usize,
    out: *mut *mut BsDictionary,
) -> BsStatus {
    guarded(|| {
        if data.is_null() || block_sizes.is_null() || out.is_null() {
            return fail_with(BsStatus::NullPointer, "data, block_sizes, and out are required");
        }
        let Some(len) = ambient_dim.checked_mul(total_cols).filter(|&l| l > 0) else {
            return fail_with(
                BsStatus::InvalidArgument,
                "ambient_dim and total_cols must be positive and not overflow",
            );
        };
        let values = std::slice::from_raw_parts(data, len);
        let sizes = std::slice::from_raw_parts(block_sizes, n_blocks).to_vec();
        let matrix = DMatrix::from_column_slice(ambient_dim, total_cols, values);
        match Dictionary::from_matrix(matrix, sizes) {
            Ok(dict) => {
                *out = Box::into_raw(Box::new(BsDictionary { inner: dict }));
                BsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Loads a dictionary from a `.bsd` file written by [`bs_dictionary_save`].
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable
/// `BsDictionary*`.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_load(
    path: *const c_char,
    out: *mut *mut BsDictionary,
) -> BsStatus {
    guarded(|| {
        if out.is_null() {
            return fail_with(BsStatus::NullPointer, "out is null");
        }
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match load_dictionary(&path) {
            Ok(dict) => {
                *out = Box::into_raw(Box::new(BsDictionary { inner: dict }));
                BsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the dictionary to `path` atomically (temp file + rename).
///
/// # Safety
/// `dict` must be a live dictionary handle and `path` a NUL-terminated
/// string.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_save(
    dict: *const BsDictionary,
    path: *const c_char,
) -> BsStatus {
    guarded(|| {
        let Some(dict) = dict.as_ref() else {
            return fail_with(BsStatus::NullPointer, "dict is null");
        };
        let path = match path_from(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        match save_dictionary(&dict.inner, &path) {
            Ok(()) => BsStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Ambient dimension D, or 0 if `dict` is null.
///
/// # Safety
/// `dict` must be null or a live dictionary handle.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_ambient_dim(dict: *const BsDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.inner.ambient_dim())
}

/// Number of blocks n, or 0 if `dict` is null.
///
/// # Safety
/// `dict` must be null or a live dictionary handle.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_n_blocks(dict: *const BsDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.inner.n_blocks())
}

/// Total number of columns N, or 0 if `dict` is null.
///
/// # Safety
/// `dict` must be null or a live dictionary handle.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_total_cols(dict: *const BsDictionary) -> usize {
    dict.as_ref().map_or(0, |d| d.inner.total_cols())
}

/// Number of columns in block `i`, or 0 if `dict` is null or `i` is out of
/// range.
///
/// # Safety
/// `dict` must be null or a live dictionary handle.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_block_size(dict: *const BsDictionary, i: usize) -> usize {
    dict.as_ref()
        .and_then(|d| d.inner.structure().sizes().get(i).copied())
        .unwrap_or(0)
}

/// Dimension of the subspace spanned by block `i`, or 0 if `dict` is null
/// or `i` is out of range.
///
/// # Safety
/// `dict` must be null or a live dictionary handle.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_subspace_dim(dict: *const BsDictionary, i: usize) -> usize {
    dict.as_ref()
        .filter(|d| i < d.inner.n_blocks())
        .map_or(0, |d| d.inner.subspace_dim(i))
}

/// Copies the dictionary matrix into `buf` in column-major order.
/// `cap` is the buffer's capacity in doubles; `ambient_dim × total_cols`
/// values are written.
///
/// # Safety
/// `dict` must be a live dictionary handle and `buf` must point to at
/// least `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_copy_matrix(
    dict: *const BsDictionary,
    buf: *mut f64,
    cap: usize,
) -> BsStatus {
    guarded(|| {
        let Some(dict) = dict.as_ref() else {
            return fail_with(BsStatus::NullPointer, "dict is null");
        };
        copy_into(dict.inner.matrix().as_slice(), buf, cap)
    })
}

/// Computes the mutual subspace coherence μ_S (the largest cosine of the
/// smallest principal angle between any two blocks' subspaces) and stores
/// it in `*out`.
///
/// # Safety
/// `dict` must be a live dictionary handle and `out` a writable double.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_mutual_coherence(
    dict: *const BsDictionary,
    out: *mut f64,
) -> BsStatus {
    guarded(|| {
        let Some(dict) = dict.as_ref() else {
            return fail_with(BsStatus::NullPointer, "dict is null");
        };
        if out.is_null() {
            return fail_with(BsStatus::NullPointer, "out is null");
        }
        match coherence::profile(&dict.inner) {
            Ok(profile) => {
                *out = profile.mu_s();
                BsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a dictionary handle. Null is ignored.
///
/// # Safety
/// `dict` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_dictionary_free(dict: *mut BsDictionary) {
    if !dict.is_null() {
        drop(Box::from_raw(dict));
    }
}

/// The default solve options for one family/norm pair: equality
/// constraint, no corruption handling, tolerances 1e-6, 10000 iterations,
/// rho 1, support threshold 1e-3.
#[no_mangle]
pub extern "C" fn bs_solve_options_default(family: BsFamily, q: BsNorm) -> BsSolveOptions {
    let spec = SolveSpec::new(family.to_core(), q.to_core());
    BsSolveOptions {
        family,
        q,
        constraint: BsConstraint::Equality,
        delta: 0.0,
        corrupt: false,
        tol_primal: spec.tol_primal,
        tol_dual: spec.tol_dual,
        max_iter: spec.max_iter,
        rho: spec.rho,
        support_rel_tol: 1e-3,
    }
}

/// Prepares a solver for `dict` under `options`, caching every
/// factorization the iteration needs. The solver keeps its own copy of the
/// dictionary.
///
/// # Safety
/// `dict` must be a live dictionary handle, `options` a readable options
/// struct, and `out` a writable `BsSolver*`; on success it receives a
/// handle to release with [`bs_solver_free`].
#[no_mangle]
pub unsafe extern "C" fn bs_solver_new(
    dict: *const BsDictionary,
    options: *const BsSolveOptions,
    out: *mut *mut BsSolver,
) -> BsStatus {
    guarded(|| {
        let Some(dict) = dict.as_ref() else {
            return fail_with(BsStatus::NullPointer, "dict is null");
        };
        let Some(options) = options.as_ref() else {
            return fail_with(BsStatus::NullPointer, "options is null");
        };
        if out.is_null() {
            return fail_with(BsStatus::NullPointer, "out is null");
        }
        let spec = match spec_from(options) {
            Ok(spec) => spec,
            Err(status) => return status,
        };
        match PreparedSolver::new(&dict.inner, spec) {
            Ok(prepared) => {
                *out = Box::into_raw(Box::new(BsSolver {
                    dict: dict.inner.clone(),
                    prepared,
                    family: options.family.to_core(),
                    q: options.q.to_core(),
                    support_rel_tol: options.support_rel_tol,
                }));
                BsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Solves for the signal `y` (length `y_len`, which must equal the
/// dictionary's ambient dimension). Non-convergence within the iteration
/// budget is not an error: the call succeeds and the result reports
/// `converged = false`.
///
/// # Safety
/// `solver` must be a live solver handle, `y` must point to `y_len`
/// readable doubles, and `out` must be a writable `BsResult*`; on success
/// it receives a handle to release with [`bs_result_free`].
#[no_mangle]
pub unsafe extern "C" fn bs_solver_solve(
    solver: *const BsSolver,
    y: *const f64,
    y_len: usize,
    out: *mut *mut BsResult,
) -> BsStatus {
    guarded(|| {
        let Some(solver) = solver.as_ref() else {
            return fail_with(BsStatus::NullPointer, "solver is null");
        };
        if y.is_null() || out.is_null() {
            return fail_with(BsStatus::NullPointer, "y and out are required");
        }
        if y_len != solver.dict.ambient_dim() {
            return fail_with(
                BsStatus::DimensionMismatch,
                &format!(
                    "signal length {y_len} does not match ambient dimension {}",
                    solver.dict.ambient_dim()
                ),
            );
        }
        let signal = DVector::from_column_slice(std::slice::from_raw_parts(y, y_len));
        match solver.prepared.solve(&signal) {
            Ok(result) => {
                let support = recovered_support(
                    &solver.dict,
                    &result.coefficients,
                    solver.family,
                    solver.q,
                    solver.support_rel_tol,
                );
                *out = Box::into_raw(Box::new(BsResult {
                    coefficients: result.coefficients.values().as_slice().to_vec(),
                    error_vector: result
                        .error_vector
                        .map(|e| e.as_slice().to_vec())
                        .unwrap_or_default(),
                    support,
                    objective: result.objective,
                    iterations: result.iterations,
                    converged: result.converged,
                    max_block_dual_norm: result
                        .certificate
                        .map_or(f64::NAN, |c| c.max_block_dual_norm),
                }));
                BsStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Releases a solver handle. Null is ignored.
///
/// # Safety
/// `solver` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_solver_free(solver: *mut BsSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

/// One-shot convenience: prepare a solver, run it on `y`, and release it.
/// Prefer [`bs_solver_new`] when solving many signals against one
/// dictionary.
///
/// # Safety
/// As for [`bs_solver_new`] and [`bs_solver_solve`].
#[no_mangle]
pub unsafe extern "C" fn bs_solve(
    dict: *const BsDictionary,
    options: *const BsSolveOptions,
    y: *const f64,
    y_len: usize,
    out: *mut *mut BsResult,
) -> BsStatus {
    guarded(|| {
        let mut solver: *mut BsSolver = std::ptr::null_mut();
        let status = bs_solver_new(dict, options, &mut solver);
        if status != BsStatus::Ok {
            return status;
        }
        let status = bs_solver_solve(solver, y, y_len, out);
        bs_solver_free(solver);
        status
    })
}

/// Whether the solve met its tolerances (false for null handles).
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bs_result_converged(result: *const BsResult) -> bool {
    result.as_ref().is_some_and(|r| r.converged)
}

/// Number of iterations performed, or 0 for null handles.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bs_result_iterations(result: *const BsResult) -> usize {
    result.as_ref().map_or(0, |r| r.iterations)
}

/// Objective value of the returned iterate, or NaN for null handles.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bs_result_objective(result: *const BsResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.objective)
}

/// Largest block dual norm of the certificate, or NaN when the solve
/// produced none (or for null handles). Values at most 1 (within solver
/// tolerance) witness optimality.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bs_result_max_block_dual_norm(result: *const BsResult) -> f64 {
    result.as_ref().map_or(f64::NAN, |r| r.max_block_dual_norm)
}

/// Length of the coefficient vector (the dictionary's total column count),
/// or 0 for null handles.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bs_result_coefficient_count(result: *const BsResult) -> usize {
    result.as_ref().map_or(0, |r| r.coefficients.len())
}

/// Copies the recovered coefficients into `buf` (capacity `cap` doubles).
///
/// # Safety
/// `result` must be a live result handle and `buf` must point to at least
/// `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bs_result_copy_coefficients(
    result: *const BsResult,
    buf: *mut f64,
    cap: usize,
) -> BsStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return fail_with(BsStatus::NullPointer, "result is null");
        };
        copy_into(&result.coefficients, buf, cap)
    })
}

/// Length of the recovered sparse error vector: the ambient dimension when
/// the solve modeled corruption, otherwise 0.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bs_result_error_vector_len(result: *const BsResult) -> usize {
    result.as_ref().map_or(0, |r| r.error_vector.len())
}

/// Copies the recovered sparse error vector into `buf` (capacity `cap`
/// doubles). Succeeds trivially when no corruption was modeled.
///
/// # Safety
/// `result` must be a live result handle and `buf` must point to at least
/// `cap` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn bs_result_copy_error_vector(
    result: *const BsResult,
    buf: *mut f64,
    cap: usize,
) -> BsStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return fail_with(BsStatus::NullPointer, "result is null");
        };
        if result.error_vector.is_empty() {
            return BsStatus::Ok;
        }
        copy_into(&result.error_vector, buf, cap)
    })
}

/// Number of blocks in the recovered support, or 0 for null handles.
///
/// # Safety
/// `result` must be null or a live result handle.
#[no_mangle]
pub unsafe extern "C" fn bs_result_support_size(result: *const BsResult) -> usize {
    result.as_ref().map_or(0, |r| r.support.len())
}

/// Copies the recovered support (ascending block indices) into `buf`
/// (capacity `cap` values).
///
/// # Safety
/// `result` must be a live result handle and `buf` must point to at least
/// `cap` writable values.
#[no_mangle]
pub unsafe extern "C" fn bs_result_copy_support(
    result: *const BsResult,
    buf: *mut usize,
    cap: usize,
) -> BsStatus {
    guarded(|| {
        let Some(result) = result.as_ref() else {
            return fail_with(BsStatus::NullPointer, "result is null");
        };
        copy_into(&result.support, buf, cap)
    })
}

/// Releases a result handle. Null is ignored.
///
/// # Safety
/// `result` must be null or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_result_free(result: *mut BsResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
