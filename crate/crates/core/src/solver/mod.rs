//! Convex block-sparse recovery programs and the combinatorial reference
//! solver.
//!
//! Two program families are supported, each with the block norm q ∈ {1, 2, ∞}:
//!
//! - **coefficient-norm family** (`Family::CoefficientNorm`): minimize
//!   Σᵢ ‖c\[i\]‖_q subject to the data constraint;
//! - **reconstruction-norm family** (`Family::ReconstructionNorm`): minimize
//!   Σᵢ ‖B\[i\] c\[i\]‖_q, which weighs each block by what it actually
//!   contributes to the signal and is the natural choice for redundant blocks.
//!
//! The data constraint is either exact (`y = Bc`) or an ℓ2 ball
//! (`‖y − Bc‖₂ ≤ δ`), and corrupted measurements can be modeled by appending
//! an identity block per measurement so the solver recovers a sparse error
//! vector alongside the coefficients.
//!
//! All four program shapes are solved by ADMM with cached factorizations
//! ([`PreparedSolver`] amortizes setup across many signals on one dictionary).
//! Non-convergence within the iteration budget is reported through
//! [`SolveResult::converged`], never as an `Err`: the best iterate found is
//! still returned. [`oracle_solve`] provides the exhaustive-search reference
//! answer for small problems.

mod admm;
mod oracle;
pub mod prox;

pub use admm::PreparedSolver;
pub use oracle::oracle_solve;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{BlockSparseCoefficients, Dictionary};
use crate::norm::Norm;

/// Which objective the program minimizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Family {
    /// Σᵢ ‖c\[i\]‖_q over the coefficient blocks.
    #[serde(rename = "p")]
    CoefficientNorm,
    /// Σᵢ ‖B\[i\] c\[i\]‖_q over the block contributions.
    #[serde(rename = "pprime")]
    ReconstructionNorm,
}

impl Family {
    /// Both families, coefficient-norm first.
    pub const ALL: [Family; 2] = [Family::CoefficientNorm, Family::ReconstructionNorm];

    /// Short label used in CSV/CLI output: `p` or `pprime`.
    pub fn label(self) -> &'static str {
        match self {
            Family::CoefficientNorm => "p",
            Family::ReconstructionNorm => "pprime",
        }
    }
}

impl std::fmt::Display for Family {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

impl std::str::FromStr for Family {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "p" => Ok(Family::CoefficientNorm),
            "pprime" | "p'" => Ok(Family::ReconstructionNorm),
            other => Err(crate::error::Error::InvalidParameter(format!(
                "unknown family '{other}' (expected p or pprime)"
            ))),
        }
    }
}

/// The data-fidelity constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Constraint {
    /// `y = Bc` exactly.
    Equality,
    /// `‖y − Bc‖₂ ≤ δ`.
    Ball {
        /// Ball radius δ ≥ 0.
        delta: f64,
    },
}

impl Constraint {
    /// The ball radius (zero for the equality constraint).
    pub fn radius(self) -> f64 {
        match self {
            Constraint::Equality => 0.0,
            Constraint::Ball { delta } => delta,
        }
    }
}

/// Whether the measurements are modeled as corrupted by a sparse error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Corruption {
    /// Solve on the dictionary as given.
    None,
    /// Append one unit block per measurement and split the solution into
    /// coefficients and a recovered error vector.
    IdentityAppended,
}

/// Full specification of one convex solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveSpec {
    /// Which objective family to minimize.
    pub family: Family,
    /// Block norm q.
    pub q: Norm,
    /// Data constraint (equality by default).
    pub constraint: Constraint,
    /// Sparse-corruption modeling (off by default).
    pub corruption: Corruption,
    /// Relative primal stopping tolerance.
    pub tol_primal: f64,
    /// Relative dual stopping tolerance.
    pub tol_dual: f64,
    /// Iteration budget; exceeding it flags the result as non-converged.
    pub max_iter: usize,
    /// Initial ADMM penalty parameter (adapted during the run).
    pub rho: f64,
}

impl SolveSpec {
    /// A spec for the given family and block norm with default equality
    /// constraint, no corruption modeling, and standard tolerances.
    pub fn new(family: Family, q: Norm) -> Self {
        SolveSpec {
            family,
            q,
            constraint: Constraint::Equality,
            corruption: Corruption::None,
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            max_iter: 10_000,
            rho: 1.0,
        }
    }
}

impl Default for SolveSpec {
    fn default() -> Self {
        SolveSpec::new(Family::ReconstructionNorm, Norm::L2)
    }
}

/// Final ADMM residuals and the measured constraint violation.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Residuals {
    /// ‖primal residual‖₂ at the last iteration.
    pub primal: f64,
    /// ‖dual residual‖₂ at the last iteration.
    pub dual: f64,
    /// `max(0, ‖y − Bc*‖₂ − δ)` of the returned coefficients.
    pub constraint_violation: f64,
}

/// Approximate dual certificate extracted from the converged ADMM state.
#[derive(Debug, Clone)]
pub struct CertificateInfo {
    /// Dual vector ν ∈ R^D.
    pub nu: DVector<f64>,
    /// Largest block dual norm of Bᵀν. For the coefficient-norm family this
    /// is maxᵢ ‖(Bᵀν)\[i\]‖_{q'} exactly; for the reconstruction-norm family
    /// with q = 2 it is maxᵢ ‖Aᵢᵀν‖₂, and for q ∈ {1, ∞} it is a sampled
    /// lower estimate of the subspace-restricted dual norm.
    pub max_block_dual_norm: f64,
}

/// The outcome of one convex solve.
#[derive(Debug, Clone)]
pub struct SolveResult {
    /// Recovered coefficients over the original dictionary's structure.
    pub coefficients: BlockSparseCoefficients,
    /// Recovered sparse error (only with `Corruption::IdentityAppended`).
    pub error_vector: Option<DVector<f64>>,
    /// Objective value of the returned iterate (includes the error blocks
    /// when corruption is modeled).
    pub objective: f64,
    /// Number of ADMM iterations performed.
    pub iterations: usize,
    /// Whether the stopping tolerances and the data constraint were met.
    /// `false` means the best iterate is returned anyway.
    pub converged: bool,
    /// Final residuals.
    pub residuals: Residuals,
    /// Dual certificate (equality and ball constraints both provide one).
    pub certificate: Option<CertificateInfo>,
}

/// Convenience wrapper: prepare a solver for `spec` and run it once on `y`.
pub fn solve(dict: &Dictionary, y: &DVector<f64>, spec: &SolveSpec) -> Result<SolveResult> {
    PreparedSolver::new(dict, spec.clone())?.solve(y)
}

/// Blocks whose score exceeds `rel_tol` times the largest block score.
///
/// The score of block i is ‖c\[i\]‖_q for the coefficient-norm family and
/// ‖B\[i\] c\[i\]‖_q for the reconstruction-norm family, so "support" means
/// the same thing the respective objective measures.
pub fn recovered_support(
    dict: &Dictionary,
    c: &BlockSparseCoefficients,
    family: Family,
    q: Norm,
    rel_tol: f64,
) -> Vec<usize> {
    let scores: Vec<f64> = match family {
        Family::CoefficientNorm => (0..c.structure().n_blocks())
            .map(|i| c.block_norm(i, q))
            .collect(),
        Family::ReconstructionNorm => dict.contribution_norms(c, q),
    };
    let max = scores.iter().cloned().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    scores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > rel_tol * max)
        .map(|(i, _)| i)
        .collect()
}
