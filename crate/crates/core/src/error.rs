//! Crate-wide error type.
//!
//! One enum covers every fallible path in the library. Solver
//! non-convergence is deliberately *not* an error: `solve` returns its best
//! iterate flagged as non-converged so sweeps can record the row and move on.

use thiserror::Error;

/// Errors produced by dictionary construction, analysis, solving and I/O.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix/vector dimensions do not agree with the block structure.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A parameter is outside its documented domain.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Two generated subspaces share a nontrivial intersection and the retry
    /// budget is exhausted.
    #[error(
        "subspace disjointness violated after {attempts} attempts \
         (smallest pair singular value {sigma_min:.3e})"
    )]
    DisjointnessViolation { attempts: usize, sigma_min: f64 },

    /// A claimed orthonormal basis fails the orthonormality check.
    #[error("basis is not orthonormal: {0}")]
    NonOrthonormalBasis(String),

    /// Block coherence is defined only when every block has the same length.
    #[error("unequal block lengths: {0}")]
    UnequalBlockLengths(String),

    /// No full-column-rank submatrix of the required width exists in a block.
    #[error("block {block} is rank deficient: rank {rank} < {needed}")]
    RankDeficientBlock {
        block: usize,
        rank: usize,
        needed: usize,
    },

    /// An enumeration or oracle search would exceed its work cap.
    #[error("work cap exceeded: {0}")]
    WorkCapExceeded(String),

    /// A certifier was asked for a condition whose inputs were not supplied.
    #[error("missing input: {0}")]
    MissingInput(String),

    /// A bound's denominator is ≤ 0, making the bound vacuous.
    #[error("nonpositive denominator: {0}")]
    DenominatorNonpositive(String),

    /// An operation that divides by a signal/coefficient norm received zero.
    #[error("zero signal: {0}")]
    ZeroSignal(String),

    /// Coefficient recovery error is defined only for non-redundant blocks.
    #[error("operation requires non-redundant blocks: {0}")]
    NonRedundantOnly(String),

    /// PCA asked for more components than the covariance rank provides.
    #[error("training covariance is rank deficient: rank {rank} < {needed}")]
    RankDeficientCovariance { rank: usize, needed: usize },

    /// Downsampling factor does not evenly divide the input dimension.
    #[error("downsample mismatch: {0}")]
    NonDivisibleDownsample(String),

    /// An image file could not be decoded as 8-bit grayscale.
    #[error("unreadable image {path}: {reason}")]
    UnreadableImage { path: String, reason: String },

    /// Images in one ingestion run have differing dimensions.
    #[error("inconsistent image dimensions: {0}")]
    InconsistentDimensions(String),

    /// A `.bsd` file (or other structured input) is malformed.
    #[error("malformed file {path}: {reason}")]
    MalformedFile { path: String, reason: String },

    /// Stored payload checksum does not match the bytes read.
    #[error("checksum mismatch in {path}")]
    ChecksumMismatch { path: String },

    /// The solver could not produce a usable iterate at all
    /// (distinct from ordinary non-convergence, which is flagged).
    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
