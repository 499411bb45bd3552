//! Inter-block coherence: how close together the subspaces of a dictionary
//! lie, and the classical atom-level analogues.
//!
//! The central quantity is the subspace coherence
//! `μ(S_i, S_j) = σ₁(A_iᵀ A_j)` — the cosine of the smallest principal
//! angle between two subspaces, computed from orthonormal bases. From the
//! pairwise values we derive the mutual coherence `μ_S` (largest pair), the
//! cumulative series `ζ_k` (for a fixed subspace, the sum of its `k` largest
//! coherences to others, maximized over subspaces), and the intermediate
//! series `u_k` (sum of the `k` largest pairwise values overall). These obey
//! `ζ_k ≤ u_k ≤ k·μ_S` and feed the recovery certificates.
//!
//! The classical quantities treat single columns as atoms: mutual coherence
//! `μ`, its cumulative series, block-coherence `μ_B` (defined only for equal
//! block lengths), and the subcoherence `ν` (worst within-block coherence).

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Dictionary;

/// Orthonormality tolerance for bases handed to [`subspace_coherence`].
const BASIS_TOL: f64 = 1e-8;

/// `σ₁(A_iᵀ A_j)`, the cosine of the smallest principal angle between the
/// spans of two orthonormal bases. Result is clamped to `[0, 1]`.
pub fn subspace_coherence(a_i: &DMatrix<f64>, a_j: &DMatrix<f64>) -> Result<f64> {
    if a_i.nrows() != a_j.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "bases live in different ambient spaces ({} vs {} rows)",
            a_i.nrows(),
            a_j.nrows()
        )));
    }
    for (name, a) in [("first", a_i), ("second", a_j)] {
        if !linalg::is_orthonormal(a, BASIS_TOL) {
            return Err(Error::NonOrthonormalBasis(format!(
                "{name} basis has non-orthonormal columns (tolerance {BASIS_TOL:e})"
            )));
        }
    }
    let product = a_i.transpose() * a_j;
    Ok(linalg::sigma_max(&product).clamp(0.0, 1.0))
}

/// Subspace-level coherence summary of a dictionary.
///
/// `zeta[k-1]` holds `ζ_k` and `u[k-1]` holds `u_k`, for `k = 1..n−1`.
/// Beyond `k = n−1` both series saturate; [`Self::zeta_at`] and
/// [`Self::u_at`] apply that convention.
#[derive(Debug, Clone)]
pub struct CoherenceProfile {
    pairwise: DMatrix<f64>,
    mu_s: f64,
    zeta: Vec<f64>,
    u: Vec<f64>,
}

impl CoherenceProfile {
    /// Symmetric `n×n` matrix of `μ(S_i, S_j)` with zero diagonal.
    pub fn pairwise(&self) -> &DMatrix<f64> {
        &self.pairwise
    }

    /// Mutual subspace coherence `μ_S` — the largest pairwise value.
    pub fn mu_s(&self) -> f64 {
        self.mu_s
    }

    /// The series `ζ_1 .. ζ_{n−1}`.
    pub fn zeta(&self) -> &[f64] {
        &self.zeta
    }

    /// The series `u_1 .. u_{n−1}`.
    pub fn u(&self) -> &[f64] {
        &self.u
    }

    /// `ζ_k`, with `ζ_0 = 0` and saturation past `k = n−1`.
    pub fn zeta_at(&self, k: usize) -> f64 {
        series_at(&self.zeta, k)
    }

    /// `u_k`, with `u_0 = 0` and saturation past `k = n−1`.
    pub fn u_at(&self, k: usize) -> f64 {
        series_at(&self.u, k)
    }

    /// Builds a profile from raw series values (arithmetic tests only).
    #[cfg(test)]
    pub(crate) fn synthetic(mu_s: f64, zeta: Vec<f64>, u: Vec<f64>) -> Self {
        let n = zeta.len() + 1;
        CoherenceProfile {
            pairwise: DMatrix::zeros(n, n),
            mu_s,
            zeta,
            u,
        }
    }
}

fn series_at(series: &[f64], k: usize) -> f64 {
    if k == 0 {
        0.0
    } else {
        series[(k - 1).min(series.len() - 1)]
    }
}

/// Computes the full subspace-coherence profile of a dictionary with `n ≥ 2`
/// blocks.
///
/// `ζ_k` is exact: for fixed `i` the maximizing index set of size `k` picks
/// the `k` largest entries of row `i`, so one descending sort per row gives
/// the whole series.
pub fn profile(dict: &Dictionary) -> Result<CoherenceProfile> {
    let n = dict.n_blocks();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "coherence profile needs at least two blocks".into(),
        ));
    }
    let mut pairwise = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let mu = subspace_coherence(dict.basis(i), dict.basis(j))?;
            pairwise[(i, j)] = mu;
            pairwise[(j, i)] = mu;
        }
    }

    // ζ_k: per-row descending sort, prefix sums, max over rows.
    let mut zeta = vec![0.0f64; n - 1];
    for i in 0..n {
        let mut row: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| pairwise[(i, j)]).collect();
        row.sort_by(|a, b| b.partial_cmp(a).unwrap());
        let mut acc = 0.0;
        for (k, v) in row.iter().enumerate() {
            acc += v;
            if zeta[k] < acc {
                zeta[k] = acc;
            }
        }
    }

    // u_k: global descending sort of the pairwise values.
    let mut all: Vec<f64> = (0..n)
        .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
        .map(|(i, j)| pairwise[(i, j)])
        .collect();
    all.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut u = vec![0.0f64; n - 1];
    let mut acc = 0.0;
    for k in 0..(n - 1) {
        acc += all[k];
        u[k] = acc;
    }

    let mu_s = all[0];
    Ok(CoherenceProfile {
        pairwise,
        mu_s,
        zeta,
        u,
    })
}

/// Atom-level coherence summary.
#[derive(Debug, Clone, Serialize)]
pub struct ClassicalCoherence {
    /// Mutual coherence `μ = max |b_aᵀ b_b|` over distinct columns.
    pub mu: f64,
    /// Cumulative series `ζ_1 .. ζ_{k_max}` over atoms.
    pub zeta_classical: Vec<f64>,
    /// Block-coherence `μ_B = max_{i≠j} σ₁(B[i]ᵀB[j]) / m`; `None` when the
    /// block lengths differ (the definition assumes one common length).
    pub mu_b: Option<f64>,
    /// Subcoherence `ν`: the worst within-block atom coherence.
    pub nu: f64,
}

/// Computes [`ClassicalCoherence`] with the cumulative series up to `k_max`
/// (saturating once every other atom is included).
pub fn classical(dict: &Dictionary, k_max: usize) -> Result<ClassicalCoherence> {
    if k_max == 0 {
        return Err(Error::InvalidParameter(
            "classical coherence needs k_max ≥ 1".into(),
        ));
    }
    let b = dict.matrix();
    let ncols = b.ncols();
    let gram = b.transpose() * b;

    let mut mu = 0.0f64;
    let mut zeta_classical = vec![0.0f64; k_max];
    for a in 0..ncols {
        let mut others: Vec<f64> = (0..ncols)
            .filter(|&c| c != a)
            .map(|c| gram[(a, c)].abs())
            .collect();
        others.sort_by(|x, y| y.partial_cmp(x).unwrap());
        mu = mu.max(others.first().copied().unwrap_or(0.0));
        let mut acc = 0.0;
        for k in 0..k_max {
            if k < others.len() {
                acc += others[k];
            }
            if zeta_classical[k] < acc {
                zeta_classical[k] = acc;
            }
        }
    }

    let mut nu = 0.0f64;
    for i in 0..dict.n_blocks() {
        let r = dict.structure().range(i);
        for a in r.clone() {
            for c in (a + 1)..r.end {
                nu = nu.max(gram[(a, c)].abs());
            }
        }
    }

    let mu_b = block_coherence(dict).ok();
    Ok(ClassicalCoherence {
        mu,
        zeta_classical,
        mu_b,
        nu,
    })
}

/// Block-coherence `μ_B = max_{i≠j} σ₁(B[i]ᵀ B[j]) / m` for a dictionary
/// whose blocks all share one length `m`.
pub fn block_coherence(dict: &Dictionary) -> Result<f64> {
    let m = dict.structure().uniform_size().ok_or_else(|| {
        Error::UnequalBlockLengths(
            "block-coherence is defined only when every block has the same length".into(),
        )
    })?;
    if dict.n_blocks() < 2 {
        return Err(Error::InvalidParameter(
            "block-coherence needs at least two blocks".into(),
        ));
    }
    let mut mu_b = 0.0f64;
    for i in 0..dict.n_blocks() {
        for j in (i + 1)..dict.n_blocks() {
            let product = dict.block(i).transpose() * dict.block(j);
            mu_b = mu_b.max(linalg::sigma_max(&product) / m as f64);
        }
    }
    Ok(mu_b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_dictionary;
    use nalgebra::DVector;

    fn line(angle: f64) -> DMatrix<f64> {
        DMatrix::from_column_slice(2, 1, &[angle.cos(), angle.sin()])
    }

    /// Four lines in the plane: angles 0, θ, π/2, π/2+θ. The first is
    /// orthogonal to the third, the second to the fourth, and both
    /// neighboring pairs meet at θ.
    fn four_line_dictionary(theta: f64) -> Dictionary {
        let angles = [0.0, theta, std::f64::consts::FRAC_PI_2, std::f64::consts::FRAC_PI_2 + theta];
        let mut cols = Vec::with_capacity(8);
        for a in angles {
            cols.push(a.cos());
            cols.push(a.sin());
        }
        let matrix = DMatrix::from_column_slice(2, 4, &cols);
        Dictionary::from_matrix(matrix, vec![1, 1, 1, 1]).unwrap()
    }

    #[test]
    fn axis_subspaces_and_one_angle() {
        let e1 = line(0.0);
        let e2 = line(std::f64::consts::FRAC_PI_2);
        assert!(subspace_coherence(&e1, &e2).unwrap() < 1e-12);
        assert!((subspace_coherence(&e1, &e1).unwrap() - 1.0).abs() < 1e-12);

        let theta = std::f64::consts::PI / 6.0;
        let got = subspace_coherence(&e1, &line(theta)).unwrap();
        assert!((got - theta.cos()).abs() < 1e-12, "got {got}");
    }

    #[test]
    fn rejects_non_orthonormal_and_mismatched_bases() {
        let scaled = DMatrix::from_column_slice(2, 1, &[2.0, 0.0]);
        assert!(matches!(
            subspace_coherence(&scaled, &line(0.0)),
            Err(Error::NonOrthonormalBasis(_))
        ));
        let three = DMatrix::from_column_slice(3, 1, &[1.0, 0.0, 0.0]);
        assert!(matches!(
            subspace_coherence(&three, &line(0.0)),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn symmetry_and_basis_invariance() {
        let mut rng = crate::rng::stream_rng(41, 0);
        let a = linalg::thin_q(&crate::test_util::gaussian(6, 3, &mut rng));
        let b = linalg::thin_q(&crate::test_util::gaussian(6, 2, &mut rng));
        let ab = subspace_coherence(&a, &b).unwrap();
        let ba = subspace_coherence(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);

        let q = linalg::thin_q(&crate::test_util::gaussian(3, 3, &mut rng));
        let rotated = &a * &q;
        let rotated_mu = subspace_coherence(&rotated, &b).unwrap();
        assert!((rotated_mu - ab).abs() < 1e-10);
    }

    #[test]
    fn four_line_configuration_closed_forms() {
        let theta = std::f64::consts::PI / 6.0;
        let p = profile(&four_line_dictionary(theta)).unwrap();
        let (c, s) = (theta.cos(), theta.sin());

        assert!((p.mu_s() - c).abs() < 1e-12);
        assert!((p.zeta_at(1) - c).abs() < 1e-12);
        assert!((p.u_at(1) - c).abs() < 1e-12);
        assert!((p.zeta_at(2) - (c + s)).abs() < 1e-12);
        assert!((p.zeta_at(3) - (c + s)).abs() < 1e-12);
        assert!((p.u_at(3) - (2.0 * c + s)).abs() < 1e-12);

        // Pairwise matrix: symmetric, zero diagonal, the two orthogonal
        // pairs vanish.
        assert!(p.pairwise()[(0, 2)] < 1e-12);
        assert!(p.pairwise()[(1, 3)] < 1e-12);
        assert!((p.pairwise()[(0, 1)] - c).abs() < 1e-12);
        assert!((p.pairwise()[(1, 2)] - s).abs() < 1e-12);
        for i in 0..4 {
            assert_eq!(p.pairwise()[(i, i)], 0.0);
            for j in 0..4 {
                assert_eq!(p.pairwise()[(i, j)], p.pairwise()[(j, i)]);
            }
        }
    }

    #[test]
    fn orthogonal_subspaces_vanish() {
        let matrix = DMatrix::<f64>::identity(4, 4);
        let dict = Dictionary::from_matrix(matrix, vec![1, 1, 1, 1]).unwrap();
        let p = profile(&dict).unwrap();
        assert!(p.mu_s() < 1e-12);
        assert!(p.zeta().iter().all(|&z| z < 1e-12));
        assert!(p.u().iter().all(|&v| v < 1e-12));
    }

    /// Enumerates every index subset of size `k` and maximizes the sum —
    /// the definitional computation the sorted implementation must match.
    fn max_subset_sum(values: &[f64], k: usize) -> f64 {
        fn recurse(values: &[f64], start: usize, k: usize, acc: f64, best: &mut f64) {
            if k == 0 {
                *best = best.max(acc);
                return;
            }
            for i in start..values.len() {
                recurse(values, i + 1, k - 1, acc + values[i], best);
            }
        }
        let mut best = f64::NEG_INFINITY;
        recurse(values, 0, k, 0.0, &mut best);
        best
    }

    #[test]
    fn profile_matches_subset_enumeration() {
        let dict = generate_dictionary(16, 6, 2, 2, 23).unwrap();
        let p = profile(&dict).unwrap();
        let n = 6;

        for k in 1..n {
            let mut zeta_brute = f64::NEG_INFINITY;
            for i in 0..n {
                let row: Vec<f64> = (0..n)
                    .filter(|&j| j != i)
                    .map(|j| p.pairwise()[(i, j)])
                    .collect();
                zeta_brute = zeta_brute.max(max_subset_sum(&row, k));
            }
            assert!((p.zeta_at(k) - zeta_brute).abs() < 1e-12);

            let pairs: Vec<f64> = (0..n)
                .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
                .map(|(i, j)| p.pairwise()[(i, j)])
                .collect();
            let u_brute = max_subset_sum(&pairs, k);
            assert!((p.u_at(k) - u_brute).abs() < 1e-12);

            // Ordering chain and monotonicity.
            assert!(p.zeta_at(k) <= p.u_at(k) + 1e-12);
            assert!(p.u_at(k) <= k as f64 * p.mu_s() + 1e-12);
            assert!(p.zeta_at(k) + 1e-12 >= p.zeta_at(k - 1));
            assert!(p.u_at(k) + 1e-12 >= p.u_at(k - 1));
        }
    }

    #[test]
    fn single_block_profile_rejected() {
        let dict = generate_dictionary(4, 1, 2, 2, 3).unwrap();
        assert!(profile(&dict).is_err());
    }

    #[test]
    fn classical_on_orthonormal_and_duplicate_columns() {
        let dict = Dictionary::from_matrix(DMatrix::<f64>::identity(4, 4), vec![2, 2]).unwrap();
        let c = classical(&dict, 3).unwrap();
        assert_eq!(c.mu, 0.0);
        assert!(c.zeta_classical.iter().all(|&z| z == 0.0));
        assert_eq!(c.nu, 0.0);
        assert_eq!(c.mu_b, Some(0.0));

        // The same column appearing in two different blocks drives μ to 1.
        let m = DMatrix::from_column_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        let dup = Dictionary::from_matrix(m, vec![1, 1]).unwrap();
        let c = classical(&dup, 1).unwrap();
        assert!((c.mu - 1.0).abs() < 1e-12);
        assert!((c.zeta_classical[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zeta_classical_starts_at_mu_and_saturates() {
        let dict = generate_dictionary(10, 3, 2, 3, 8).unwrap();
        let c = classical(&dict, 12).unwrap();
        assert!((c.zeta_classical[0] - c.mu).abs() < 1e-12);
        for k in 1..12 {
            assert!(c.zeta_classical[k] + 1e-12 >= c.zeta_classical[k - 1]);
        }
        // Only 8 other atoms exist, so the series is flat beyond k = 8.
        assert_eq!(c.zeta_classical[8], c.zeta_classical[11]);
    }

    /// σ₁ by power iteration on `MᵀM` — an independent route to the largest
    /// singular value.
    fn sigma_max_power(m: &DMatrix<f64>) -> f64 {
        let mut v = DVector::from_element(m.ncols(), 1.0).normalize();
        for _ in 0..500 {
            let w = m.transpose() * (m * &v);
            let norm = w.norm();
            if norm == 0.0 {
                return 0.0;
            }
            v = w / norm;
        }
        (m * v).norm()
    }

    #[test]
    fn block_coherence_matches_dense_recomputation() {
        let dict = generate_dictionary(100, 40, 4, 4, 77).unwrap();
        let mu_b = block_coherence(&dict).unwrap();
        let mut brute = 0.0f64;
        for i in 0..40 {
            for j in (i + 1)..40 {
                let product = dict.block(i).transpose() * dict.block(j);
                brute = brute.max(sigma_max_power(&product) / 4.0);
            }
        }
        assert!((mu_b - brute).abs() < 1e-8, "mu_b {mu_b} vs brute {brute}");
        assert!(mu_b > 0.0 && mu_b < 1.0);
    }

    #[test]
    fn unequal_blocks_have_no_block_coherence() {
        let matrix = DMatrix::<f64>::identity(4, 4);
        let dict = Dictionary::from_matrix(matrix, vec![1, 3]).unwrap();
        assert!(matches!(
            block_coherence(&dict),
            Err(Error::UnequalBlockLengths(_))
        ));
        let c = classical(&dict, 2).unwrap();
        assert_eq!(c.mu_b, None);
    }
}
