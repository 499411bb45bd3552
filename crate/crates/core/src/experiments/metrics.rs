//! Recovery-error metrics for benchmark trials.
//!
//! Three scalar scores compare a solver's coefficients `c*` against a
//! planted instance: how well the true-support blocks of `c*` reconstruct
//! the signal, how much of the total block contribution lands inside the
//! true support, and (for non-redundant blocks only, where the planted
//! coefficients are the unique representation) the relative coefficient
//! error.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{BlockSparseCoefficients, Dictionary};
use crate::norm::Norm;

/// Relative reconstruction error restricted to the true support:
/// `‖y − Σ_{i∈Λ} B[i]c*[i]‖₂ / ‖y‖₂`.
///
/// Only the blocks in `support` contribute to the reconstruction, so mass
/// that leaks outside the true support is *not* penalized here (that is
/// [`block_contribution_error`]'s job); the score is 0 exactly when the
/// true-support part of `c*` reproduces `y`. Errors with
/// [`Error::ZeroSignal`] when `‖y‖₂ = 0`.
pub fn reconstruction_error(
    y: &DVector<f64>,
    dict: &Dictionary,
    coefficients: &BlockSparseCoefficients,
    support: &[usize],
) -> Result<f64> {
    let scale = y.norm();
    if scale <= 0.0 {
        return Err(Error::ZeroSignal(
            "reconstruction error needs ‖y‖₂ > 0".into(),
        ));
    }
    let mut residual = y.clone();
    for &i in support {
        residual -= dict.block_contribution(coefficients, i);
    }
    Ok(residual.norm() / scale)
}

/// Fraction of the total block contribution that falls outside the true
/// support: `1 − Σ_{i∈Λ}‖B[i]c*[i]‖₂ / Σ_{i}‖B[i]c*[i]‖₂`, in `[0, 1]`.
///
/// The degenerate all-zero case (denominator 0) is defined as 1: a zero
/// estimate explains none of the signal through the true blocks.
pub fn block_contribution_error(
    dict: &Dictionary,
    coefficients: &BlockSparseCoefficients,
    support: &[usize],
) -> f64 {
    let norms = dict.contribution_norms(coefficients, Norm::L2);
    let total: f64 = norms.iter().sum();
    if total <= 0.0 {
        return 1.0;
    }
    let inside: f64 = support.iter().map(|&i| norms[i]).sum();
    (1.0 - inside / total).clamp(0.0, 1.0)
}

/// Relative coefficient error `‖c* − c⁰‖₂ / ‖c⁰‖₂`.
///
/// Only defined when the dictionary's blocks are non-redundant (`m = d`),
/// where the planted coefficients are the unique block-sparse
/// representation; redundant blocks admit many coefficient vectors for the
/// same signal, so comparing them entrywise is meaningless and the call
/// errors with [`Error::NonRedundantOnly`].
pub fn coefficient_recovery_error(
    dict: &Dictionary,
    estimate: &BlockSparseCoefficients,
    truth: &BlockSparseCoefficients,
) -> Result<f64> {
    if dict.is_redundant() {
        return Err(Error::NonRedundantOnly(
            "coefficient recovery error compares against a unique representation".into(),
        ));
    }
    let scale = truth.values().norm();
    if scale <= 0.0 {
        return Err(Error::ZeroSignal(
            "coefficient recovery error needs ‖c⁰‖₂ > 0".into(),
        ));
    }
    Ok((estimate.values() - truth.values()).norm() / scale)
}
