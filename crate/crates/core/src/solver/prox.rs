//! Proximal operators of the block norms and the exact ℓ1-ball projection.

use nalgebra::DVector;

use crate::norm::Norm;

/// `argmin_u λ‖u‖_q + ½‖u − x‖₂²`.
///
/// - q = 2: block soft-threshold, `x · max(0, 1 − λ/‖x‖₂)`.
/// - q = 1: elementwise soft-threshold.
/// - q = ∞: Moreau decomposition `x − Proj_{ℓ1-ball of radius λ}(x)`.
pub fn prox_block_norm(x: &DVector<f64>, lambda: f64, q: Norm) -> DVector<f64> {
    assert!(lambda >= 0.0, "prox needs λ ≥ 0");
    if lambda == 0.0 {
        return x.clone();
    }
    match q {
        Norm::L2 => {
            let n = x.norm();
            if n <= lambda {
                DVector::zeros(x.len())
            } else {
                x * (1.0 - lambda / n)
            }
        }
        Norm::L1 => x.map(|v| v.signum() * (v.abs() - lambda).max(0.0)),
        Norm::LInf => x - project_l1_ball(x, lambda),
    }
}

/// Euclidean projection of `x` onto `{u : ‖u‖₁ ≤ radius}` by the sort-based
/// simplex algorithm (exact in O(n log n)).
pub fn project_l1_ball(x: &DVector<f64>, radius: f64) -> DVector<f64> {
    assert!(radius >= 0.0, "ℓ1 ball needs radius ≥ 0");
    if radius == 0.0 {
        return DVector::zeros(x.len());
    }
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return x.clone();
    }
    // Project |x| onto the simplex of size `radius`, then restore signs.
    let mut mags: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    mags.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (j, &m) in mags.iter().enumerate() {
        acc += m;
        let candidate = (acc - radius) / (j + 1) as f64;
        if m - candidate > 0.0 {
            theta = candidate;
        } else {
            break;
        }
    }
    x.map(|v| v.signum() * (v.abs() - theta).max(0.0))
}
