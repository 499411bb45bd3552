//! Small dense linear-algebra helpers shared across modules.
//!
//! Thin wrappers around nalgebra factorizations with the conventions this
//! crate relies on: deterministic QR sign choice, standard numerical-rank
//! tolerance, and SVD-based least squares that tolerates rank deficiency.

use nalgebra::{DMatrix, DVector};

/// Default relative tolerance for numerical rank decisions:
/// `sigma_max * max(rows, cols) * machine-epsilon`.
pub fn rank_tolerance(sigma_max: f64, nrows: usize, ncols: usize) -> f64 {
    sigma_max * (nrows.max(ncols) as f64) * f64::EPSILON
}

/// Singular values of `m` in nonincreasing order.
pub fn singular_values(m: &DMatrix<f64>) -> DVector<f64> {
    let mut sv: Vec<f64> = m
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.partial_cmp(a).unwrap());
    DVector::from_vec(sv)
}

/// Largest singular value (spectral norm). Zero-sized matrices give 0.
pub fn sigma_max(m: &DMatrix<f64>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    singular_values(m)[0]
}

/// Smallest singular value (of `min(rows, cols)` values).
pub fn sigma_min(m: &DMatrix<f64>) -> f64 {
    let sv = singular_values(m);
    sv[sv.len() - 1]
}

/// Numerical rank with the [`rank_tolerance`] threshold.
pub fn rank(m: &DMatrix<f64>) -> usize {
    let sv = singular_values(m);
    if sv.len() == 0 {
        return 0;
    }
    let tol = rank_tolerance(sv[0], m.nrows(), m.ncols());
    sv.iter().filter(|&&s| s > tol).count()
}

/// Thin orthonormal column basis from QR, with the deterministic sign
/// convention that the diagonal of R is nonnegative.
///
/// `m` must have at least as many rows as columns and full column rank; the
/// caller is expected to check/retry on (measure-zero) degenerate draws.
pub fn thin_q(m: &DMatrix<f64>) -> DMatrix<f64> {
    let ncols = m.ncols();
    let qr = m.clone().qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..ncols {
        if r[(j, j)] < 0.0 {
            for i in 0..q.nrows() {
                q[(i, j)] = -q[(i, j)];
            }
        }
    }
    q
}

/// `true` if `m`'s columns are orthonormal within `tol`
/// (max-abs deviation of `mᵀm` from the identity).
pub fn is_orthonormal(m: &DMatrix<f64>, tol: f64) -> bool {
    let g = m.transpose() * m;
    let k = m.ncols();
    let mut dev: f64 = 0.0;
    for i in 0..k {
        for j in 0..k {
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g[(i, j)] - target).abs());
        }
    }
    dev <= tol
}

/// Minimum-residual least squares `argmin_x ‖a x − b‖₂` via SVD, usable for
/// any shape and rank (rank-deficient directions are truncated).
pub fn least_squares(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().cloned().fold(0.0f64, f64::max);
    let eps = rank_tolerance(smax, a.nrows(), a.ncols()).max(f64::MIN_POSITIVE);
    svd.solve(b, eps)
        .expect("SVD computed with U and V, solve cannot fail")
}

/// Orthogonal projection of `v` onto the column span of the orthonormal
/// basis `basis`: `basis (basisᵀ v)`.
pub fn project_onto_span(basis: &DMatrix<f64>, v: &DVector<f64>) -> DVector<f64> {
    basis * (basis.transpose() * v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thin_q_is_orthonormal_and_sign_fixed() {
        let m = DMatrix::from_row_slice(4, 2, &[1.0, 2.0, 0.5, -1.0, 3.0, 0.0, -2.0, 1.0]);
        let q = thin_q(&m);
        assert_eq!(q.shape(), (4, 2));
        assert!(is_orthonormal(&q, 1e-12));
        // Same span: projecting m's columns onto span(q) reproduces them.
        for j in 0..2 {
            let col = DVector::from_column_slice(m.column(j).as_slice());
            let proj = project_onto_span(&q, &col);
            assert!((proj - col).norm() < 1e-12);
        }
        // Determinism of the sign choice: rerun gives identical bytes.
        let q2 = thin_q(&m);
        assert_eq!(q.as_slice(), q2.as_slice());
    }

    #[test]
    fn rank_detects_dependent_columns() {
        let mut m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 1.0, 2.0, 1.0, 2.0]);
        assert_eq!(rank(&m), 1);
        m[(0, 1)] = 5.0;
        assert_eq!(rank(&m), 2);
    }

    #[test]
    fn least_squares_matches_normal_equations_on_full_rank() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, -1.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0, 0.0]);
        let x = least_squares(&a, &b);
        // Normal equations solved independently.
        let gram = a.transpose() * &a;
        let rhs = a.transpose() * &b;
        let x_ref = gram.lu().solve(&rhs).unwrap();
        assert!((x - x_ref).norm() < 1e-12);
    }

    #[test]
    fn singular_values_sorted_and_clamped_shapes() {
        let m = DMatrix::from_row_slice(2, 3, &[3.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        let sv = singular_values(&m);
        assert_eq!(sv.len(), 2);
        assert!((sv[0] - 3.0).abs() < 1e-12 && (sv[1] - 2.0).abs() < 1e-12);
    }
}
