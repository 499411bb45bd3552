//! Exhaustive reference solver: the smallest block support able to explain
//! the signal, with convex tie-breaking among equally small supports.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BlockSparseCoefficients, BlockStructure, Dictionary};
use crate::norm::Norm;

use super::{
    CertificateInfo, Family, PreparedSolver, Residuals, SolveResult, SolveSpec,
};

/// Upper bound on the number of candidate supports the oracle will test.
pub const ORACLE_WORK_CAP: u64 = 200_000;

/// A support is feasible when the least-squares residual of the restricted
/// system falls below this fraction of `max(1, ‖y‖)`.
const FEASIBILITY_TOL: f64 = 1e-8;

/// Restricted objectives closer than this count as a tie, resolved in favor
/// of the lexicographically smaller support.
const TIE_TOL: f64 = 1e-9;

/// Signals with norm below this count as zero and get the empty support.
const ZERO_TOL: f64 = 1e-12;

/// Finds the minimal-size block support that reproduces `y`, searching all
/// supports of size 1, then 2, … up to `k_max` in lexicographic order.
///
/// Among the feasible supports of minimal size, the one with the smallest
/// restricted objective of the given program family wins; objective ties go
/// to the lexicographically smallest support. If no support of size ≤
/// `k_max` is feasible the result comes back zero-filled with
/// `converged = false` and an infinite objective. The worst-case enumeration
/// size `Σₛ C(n, s)` is checked against [`ORACLE_WORK_CAP`] before any work
/// is done.
pub fn oracle_solve(
    dict: &Dictionary,
    y: &DVector<f64>,
    k_max: usize,
    family: Family,
    q: Norm,
) -> Result<SolveResult> {
    let n = dict.n_blocks();
    if y.len() != dict.ambient_dim() {
        return Err(Error::DimensionMismatch(format!(
            "signal has {} entries, dictionary expects {}",
            y.len(),
            dict.ambient_dim()
        )));
    }
    if k_max == 0 || k_max > n {
        return Err(Error::InvalidParameter(format!(
            "k_max = {k_max} must lie in 1..={n}"
        )));
    }
    let work: u64 = (1..=k_max).map(|s| binomial_saturating(n, s)).sum();
    if work > ORACLE_WORK_CAP {
        return Err(Error::WorkCapExceeded(format!(
            "enumerating {work} supports exceeds the cap of {ORACLE_WORK_CAP}"
        )));
    }

    if y.norm() <= ZERO_TOL {
        return Ok(empty_result(dict, true, 0.0));
    }

    let scale = y.norm().max(1.0);
    for size in 1..=k_max {
        let mut feasible = Vec::new();
        for_each_support(n, size, &mut |supp| {
            let stacked = stack_blocks(dict, supp);
            let ls = linalg::least_squares(&stacked, y);
            if (&stacked * ls - y).norm() <= FEASIBILITY_TOL * scale {
                feasible.push(supp.to_vec());
            }
        });
        if feasible.is_empty() {
            continue;
        }
        // Minimal size found: break ties by the restricted convex objective.
        let mut best: Option<(Vec<usize>, f64, BlockSparseCoefficients, usize)> = None;
        for supp in feasible {
            let (objective, coeffs, iterations) = restricted_solve(dict, y, &supp, family, q)?;
            let better = match &best {
                None => true,
                Some((_, obj, _, _)) => objective < obj - TIE_TOL,
            };
            if better {
                best = Some((supp, objective, coeffs, iterations));
            }
        }
        let (_, objective, coefficients, iterations) = best.expect("nonempty feasible set");
        let misfit = (y - dict.apply(&coefficients)).norm();
        return Ok(SolveResult {
            coefficients,
            error_vector: None,
            objective,
            iterations,
            converged: true,
            residuals: Residuals {
                primal: 0.0,
                dual: 0.0,
                constraint_violation: misfit,
            },
            certificate: None,
        });
    }
    Ok(empty_result(dict, false, f64::INFINITY))
}

/// Solves the program restricted to `support` exactly (a small equality
/// solve on the sub-dictionary) and embeds the answer in full length.
fn restricted_solve(
    dict: &Dictionary,
    y: &DVector<f64>,
    support: &[usize],
    family: Family,
    q: Norm,
) -> Result<(f64, BlockSparseCoefficients, usize)> {
    let sizes: Vec<usize> = support.iter().map(|&i| dict.structure().size(i)).collect();
    let bases: Vec<DMatrix<f64>> = support.iter().map(|&i| dict.basis(i).clone()).collect();
    let sub = Dictionary::new(
        stack_blocks(dict, support),
        BlockStructure::new(sizes)?,
        bases,
    )?;
    let mut spec = SolveSpec::new(family, q);
    spec.tol_primal = 1e-10;
    spec.tol_dual = 1e-10;
    spec.max_iter = 20_000;
    let res = PreparedSolver::new(&sub, spec)?.solve(y)?;
    let mut full = BlockSparseCoefficients::zeros(dict.structure().clone());
    for (pos, &i) in support.iter().enumerate() {
        full.set_block(i, res.coefficients.block(pos).as_slice());
    }
    Ok((res.objective, full, res.iterations))
}

fn empty_result(dict: &Dictionary, converged: bool, objective: f64) -> SolveResult {
    let coefficients = BlockSparseCoefficients::zeros(dict.structure().clone());
    SolveResult {
        coefficients,
        error_vector: None,
        objective,
        iterations: 0,
        converged,
        residuals: Residuals {
            primal: 0.0,
            dual: 0.0,
            constraint_violation: 0.0,
        },
        certificate: None::<CertificateInfo>,
    }
}

/// Column-stacks the chosen blocks into one `D × Σ mᵢ` matrix.
fn stack_blocks(dict: &Dictionary, support: &[usize]) -> DMatrix<f64> {
    let cols: usize = support.iter().map(|&i| dict.structure().size(i)).sum();
    let mut out = DMatrix::zeros(dict.ambient_dim(), cols);
    let mut at = 0;
    for &i in support {
        let blk = dict.block(i);
        out.columns_mut(at, blk.ncols()).copy_from(&blk);
        at += blk.ncols();
    }
    out
}

/// Visits every size-`s` subset of `0..n` in lexicographic order.
fn for_each_support(n: usize, s: usize, f: &mut impl FnMut(&[usize])) {
    if s == 0 || s > n {
        return;
    }
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        f(&idx);
        // Advance the rightmost index that still has room, resetting the
        // tail to the tightest ascending run after it.
        let mut pos = s;
        let advanced = loop {
            if pos == 0 {
                break false;
            }
            pos -= 1;
            if idx[pos] < n - (s - pos) {
                idx[pos] += 1;
                for later in pos + 1..s {
                    idx[later] = idx[later - 1] + 1;
                }
                break true;
            }
        };
        if !advanced {
            return;
        }
    }
}

fn binomial_saturating(n: usize, k: usize) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for j in 0..k {
        acc = acc * (n - j) as u128 / (j + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}
