//! Random dictionary generation and signal planting.
//!
//! Generation protocol (per block): orthonormalize a standard-Gaussian
//! `D×d` matrix to get the subspace basis `A_i`, then draw `m` columns as
//! `A_i g` with `g` standard Gaussian in `R^d`, normalized to unit length.
//! Pairwise subspace disjointness is then verified; on failure the whole
//! dictionary is redrawn (fresh attempt stream) up to a retry cap.
//!
//! Determinism: block `i` of attempt `a` draws from the stream
//! `(seed, [a, i])` (see [`crate::rng`]), so the result depends only on
//! `(params, seed)`, never on evaluation order.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::model::{BlockSparseCoefficients, BlockStructure, Dictionary, PlantedInstance};
use crate::rng;

/// Smallest admissible singular value of `[A_i A_j]`; below this the pair of
/// subspaces counts as non-disjoint and the dictionary is redrawn.
pub const DISJOINTNESS_TOL: f64 = 1e-8;

/// How many whole-dictionary redraws are attempted before giving up.
pub const RETRY_CAP: usize = 32;

/// Generates a random dictionary of `n` blocks in `R^D`, each block holding
/// `m` unit columns drawn from a random `d`-dimensional subspace.
///
/// Requires `D ≥ d ≥ 1`, `m ≥ d`, `n ≥ 1`; with `n ≥ 2` also `2d ≤ D`
/// (otherwise two `d`-dimensional subspaces of `R^D` can never be disjoint).
pub fn generate_dictionary(
    ambient_dim: usize,
    n_blocks: usize,
    subspace_dim: usize,
    block_len: usize,
    seed: u64,
) -> Result<Dictionary> {
    let (dd, n, d, m) = (ambient_dim, n_blocks, subspace_dim, block_len);
    if d == 0 || n == 0 {
        return Err(Error::InvalidParameter(
            "need d ≥ 1 and n ≥ 1".to_string(),
        ));
    }
    if dd < d {
        return Err(Error::InvalidParameter(format!(
            "ambient dimension {dd} is smaller than subspace dimension {d}"
        )));
    }
    if m < d {
        return Err(Error::InvalidParameter(format!(
            "block length {m} is smaller than subspace dimension {d} \
             (blocks must span their subspace)"
        )));
    }
    if n >= 2 && 2 * d > dd {
        return Err(Error::InvalidParameter(format!(
            "disjointness is impossible: 2d = {} exceeds D = {dd}",
            2 * d
        )));
    }

    let mut last_sigma_min = f64::INFINITY;
    for attempt in 0..RETRY_CAP {
        let attempt_seed = rng::child_seed(seed, attempt as u64);
        let dict = draw_dictionary(dd, n, d, m, attempt_seed)?;
        if n < 2 {
            return Ok(dict);
        }
        match dict.check_pairwise_disjoint(DISJOINTNESS_TOL) {
            Ok(_) => return Ok(dict),
            Err(Error::DisjointnessViolation { sigma_min, .. }) => {
                last_sigma_min = sigma_min;
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::DisjointnessViolation {
        attempts: RETRY_CAP,
        sigma_min: last_sigma_min,
    })
}

/// One unverified draw (all blocks) for a fixed attempt seed.
fn draw_dictionary(
    ambient_dim: usize,
    n_blocks: usize,
    subspace_dim: usize,
    block_len: usize,
    attempt_seed: u64,
) -> Result<Dictionary> {
    let mut matrix = DMatrix::zeros(ambient_dim, n_blocks * block_len);
    let mut bases = Vec::with_capacity(n_blocks);
    for i in 0..n_blocks {
        let mut block_rng = rng::stream_rng(attempt_seed, i as u64);
        let basis = loop {
            let g = gaussian_matrix(ambient_dim, subspace_dim, &mut block_rng);
            // A degenerate draw (rank < d) has probability zero but would
            // corrupt the basis; detect via the orthonormality check.
            let q = crate::linalg::thin_q(&g);
            if crate::linalg::is_orthonormal(&q, 1e-10) {
                break q;
            }
        };
        for col in 0..block_len {
            let column = loop {
                let g: DVector<f64> = gaussian_vector(subspace_dim, &mut block_rng);
                let v = &basis * g;
                let norm = v.norm();
                if norm > 1e-12 {
                    break v / norm;
                }
            };
            matrix.set_column(i * block_len + col, &column);
        }
        bases.push(basis);
    }
    let structure = BlockStructure::uniform(n_blocks, block_len)?;
    Dictionary::new(matrix, structure, bases)
}

/// Plants a `k`-block-sparse signal on `dict`: support drawn uniformly
/// without replacement, nonzero-block coefficients i.i.d. standard Gaussian,
/// signal `y = B c⁰`.
///
/// The support is drawn from stream `(seed, 0)` and block `i`'s coefficients
/// from stream `(seed, [attempt, 1 + i])` (attempt 0 except after a
/// measure-zero degenerate draw), so instances are reproducible per
/// `(dict, k, seed)` and independent of evaluation order.
pub fn plant_signal(dict: &Dictionary, k: usize, seed: u64) -> Result<PlantedInstance> {
    let n = dict.n_blocks();
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!(
            "block sparsity k = {k} must lie in 1..={n}"
        )));
    }

    // Partial Fisher–Yates over block indices.
    let mut support_rng = rng::stream_rng(seed, 0);
    let mut indices: Vec<usize> = (0..n).collect();
    for pos in 0..k {
        let j = support_rng.gen_range(pos..n);
        indices.swap(pos, j);
    }
    let mut support: Vec<usize> = indices[..k].to_vec();
    support.sort_unstable();

    let mut truth = BlockSparseCoefficients::zeros(dict.structure().clone());
    for attempt in 0..64u64 {
        for &i in &support {
            let mut block_rng = rng::chain_rng(seed, &[attempt, 1 + i as u64]);
            let m_i = dict.structure().size(i);
            let g: Vec<f64> = (0..m_i)
                .map(|_| block_rng.sample::<f64, _>(StandardNormal))
                .collect();
            truth.set_block(i, &g);
        }
        // Redundant blocks can map nonzero coefficients to a zero
        // contribution on a measure-zero event; redraw from the next
        // attempt stream if that happens.
        let signal = dict.apply(&truth);
        if signal.norm() > 1e-12 {
            return PlantedInstance::new(dict.clone(), signal, truth, support, k, seed);
        }
    }
    Err(Error::ZeroSignal(
        "planted coefficients collapsed to a zero signal in every redraw".into(),
    ))
}

fn gaussian_matrix(rows: usize, cols: usize, rng: &mut impl Rng) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
}

fn gaussian_vector(len: usize, rng: &mut impl Rng) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample::<f64, _>(StandardNormal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::Norm;

    #[test]
    fn generated_dictionary_satisfies_invariants() {
        let dict = generate_dictionary(20, 6, 2, 4, 7).unwrap();
        assert_eq!(dict.ambient_dim(), 20);
        assert_eq!(dict.n_blocks(), 6);
        assert_eq!(dict.total_cols(), 24);
        dict.validate().unwrap();
        // Column normalization tighter than the type-level tolerance.
        for j in 0..dict.total_cols() {
            assert!((dict.matrix().column(j).norm() - 1.0).abs() < 1e-10);
        }
        // Disjointness: rank([A_i A_j]) = d_i + d_j for every pair.
        dict.check_pairwise_disjoint(DISJOINTNESS_TOL).unwrap();
    }

    #[test]
    fn generation_is_deterministic_per_seed() {
        let a = generate_dictionary(15, 4, 2, 3, 99).unwrap();
        let b = generate_dictionary(15, 4, 2, 3, 99).unwrap();
        assert_eq!(a.matrix().as_slice(), b.matrix().as_slice());
        let c = generate_dictionary(15, 4, 2, 3, 100).unwrap();
        assert_ne!(a.matrix().as_slice(), c.matrix().as_slice());
    }

    #[test]
    fn redundant_blocks_have_rank_d() {
        let dict = generate_dictionary(20, 5, 3, 6, 11).unwrap();
        for i in 0..dict.n_blocks() {
            assert_eq!(dict.subspace_dim(i), 3);
            assert_eq!(dict.structure().size(i), 6);
        }
        assert!(dict.is_redundant());
    }

    #[test]
    fn degenerate_single_block_is_allowed() {
        // D=2, n=1, d=1, m=1: one unit column, no pairwise checks to run.
        let dict = generate_dictionary(2, 1, 1, 1, 3).unwrap();
        assert_eq!(dict.total_cols(), 1);
        assert!((dict.matrix().column(0).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn impossible_disjointness_rejected_up_front() {
        // Two 3-dim subspaces of R⁴ always intersect.
        assert!(matches!(
            generate_dictionary(4, 2, 3, 3, 1),
            Err(Error::InvalidParameter(_))
        ));
    }

    #[test]
    fn planted_instance_matches_dictionary_arithmetic() {
        let dict = generate_dictionary(20, 6, 2, 2, 5).unwrap();
        let inst = plant_signal(&dict, 3, 41).unwrap();
        assert_eq!(inst.support().len(), 3);
        assert_eq!(inst.truth().block_sparsity(0.0), 3);
        let recomputed = dict.apply(inst.truth());
        assert!((recomputed - inst.signal()).norm() < 1e-12);
        // Support blocks are exactly the nonzero blocks.
        for i in 0..dict.n_blocks() {
            let in_support = inst.support().contains(&i);
            let nz = inst.truth().block_norm(i, Norm::L2) > 0.0;
            assert_eq!(in_support, nz);
        }
    }

    #[test]
    fn planted_support_reproducible_per_seed() {
        let dict = generate_dictionary(30, 10, 2, 2, 8).unwrap();
        let a = plant_signal(&dict, 5, 1234).unwrap();
        let b = plant_signal(&dict, 5, 1234).unwrap();
        assert_eq!(a.support(), b.support());
        assert_eq!(a.truth().values().as_slice(), b.truth().values().as_slice());
    }

    #[test]
    fn full_support_planting() {
        let dict = generate_dictionary(20, 4, 2, 2, 2).unwrap();
        let inst = plant_signal(&dict, 4, 0).unwrap();
        assert_eq!(inst.support(), &[0, 1, 2, 3]);
    }
}
