//! Intra-block restricted isometry constants ε_q, σ_q, ε'_q for q ∈ {1, 2, ∞}.
//!
//! For each block `B[i]` these constants compare `‖B[i]c‖₂` against a norm of
//! the coefficients (ε_q, σ_q) or compare norms of the reconstruction itself
//! (ε'_q):
//!
//! - `ε_q`: the best full-column-rank `d_i`-column submatrix `B̄[i]` must
//!   satisfy `(1−ε)‖c‖_q² ≤ ‖B̄[i]c‖₂² ≤ (1+ε)‖c‖_q²`; per block the
//!   submatrix minimizing the two-sided deviation is chosen, then the worst
//!   block decides the constant.
//! - `σ_q`: one-sided upper constant over the whole block,
//!   `‖B[i]c‖₂² ≤ (1+σ)‖c‖_q²`, i.e. `sup (‖B[i]c‖₂/‖c‖_q)² − 1`.
//! - `ε'_q`: norm equivalence on the subspace itself,
//!   `(1−ε')‖z‖_q² ≤ ‖z‖₂² ≤ (1+ε')‖z‖_q²` for `z ∈ range(B[i])`. For q=2
//!   this is exactly 0. For q=∞ the true constant can reach or exceed 1
//!   (e.g. the diagonal line in the plane), so it is reported as-is rather
//!   than clamped into [0,1).
//!
//! Every returned value carries a [`Method`] tag. `Exact` and `Enumerated`
//! values are mathematically exact (closed form, or optimization over a
//! finite candidate set that provably contains the optimum: cube vertices
//! for an ℓ∞ sup, cross-polytope faces for an ℓ1 inf, cube facets for an ℓ∞
//! inf). `SampledLowerBound` values come from seeded sphere sampling with
//! local refinement and can only under-estimate the true constant; the
//! certifier layer treats conclusions built on them as optimistic.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::Dictionary;
use crate::norm::Norm;
use crate::rng::stream_rng;

/// Provenance of a computed constant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Method {
    /// Closed form.
    Exact,
    /// Exhaustive optimization over a finite set containing the optimum.
    Enumerated,
    /// Seeded sampling + local refinement; never exceeds the true value.
    SampledLowerBound,
}

impl Method {
    /// The weaker of two provenances (the one with fewer guarantees).
    pub fn combine(self, other: Method) -> Method {
        self.max(other)
    }

    /// Stable string form used in JSON output.
    pub fn label(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Enumerated => "enumerated",
            Method::SampledLowerBound => "sampled(lower-bound)",
        }
    }

    /// Whether values with this provenance are mathematically exact.
    pub fn is_exact(&self) -> bool {
        !matches!(self, Method::SampledLowerBound)
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// A constant together with how it was obtained.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Tagged {
    pub value: f64,
    pub method: Method,
}

impl Tagged {
    fn new(value: f64, method: Method) -> Self {
        Self { value, method }
    }
}

/// Budgets for the enumerative and sampled code paths.
#[derive(Debug, Clone)]
pub struct IsometrySettings {
    /// Enumerate all `C(m_i, d_i)` submatrices when at most this many.
    pub submatrix_cap: usize,
    /// Enumerate ℓ∞ sign vectors when the column count is at most this.
    pub sign_bits: u32,
    /// Enumerate ℓ1 faces / ℓ∞ facets when the pattern count is at most this.
    pub ternary_cap: usize,
    /// Sphere samples per block for the sampled paths.
    pub samples: usize,
    /// Local refinement steps applied to the best samples.
    pub refine_steps: usize,
    /// Root seed for all sampling; per-block streams are derived from it.
    pub seed: u64,
}

impl Default for IsometrySettings {
    fn default() -> Self {
        Self {
            submatrix_cap: 5000,
            sign_bits: 20,
            ternary_cap: 20000,
            samples: 10_000,
            refine_steps: 50,
            seed: 7,
        }
    }
}

/// The three constants for one value of `q`.
#[derive(Debug, Clone, Serialize)]
pub struct IsometryConstants {
    pub q: Norm,
    pub eps: Tagged,
    pub sigma: Tagged,
    pub eps_prime: Tagged,
}

/// Computes ε_q, σ_q, and ε'_q in one call.
pub fn constants(dict: &Dictionary, q: Norm, settings: &IsometrySettings) -> Result<IsometryConstants> {
    Ok(IsometryConstants {
        q,
        eps: eps_q(dict, q, settings)?,
        sigma: sigma_q(dict, q, settings)?,
        eps_prime: eps_prime_q(dict, q, settings)?,
    })
}

// ---------------------------------------------------------------------------
// Small enumeration helpers.

fn binomial(m: usize, d: usize) -> usize {
    if d > m {
        return 0;
    }
    let d = d.min(m - d);
    let mut acc = 1usize;
    for i in 0..d {
        acc = acc.saturating_mul(m - i) / (i + 1);
    }
    acc
}

fn for_each_combination(m: usize, d: usize, f: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..d).collect();
    if d == 0 || d > m {
        return;
    }
    loop {
        f(&idx);
        // Advance to the next lexicographic combination.
        let mut i = d;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + m - d {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in (i + 1)..d {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn gather(gram: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(idx.len(), idx.len(), |a, b| gram[(idx[a], idx[b])])
}

fn quad(gram: &DMatrix<f64>, c: &[f64]) -> f64 {
    let n = c.len();
    let mut acc = 0.0;
    for a in 0..n {
        for b in 0..n {
            acc += c[a] * gram[(a, b)] * c[b];
        }
    }
    acc
}

// ---------------------------------------------------------------------------
// Exact extremal ratios on finite candidate sets.

/// `max_{s ∈ {±1}^m} sᵀGs` by reflected-Gray-code walk over half the cube
/// (sign symmetry), updating `v = Gs` incrementally.
fn sup_sq_linf_signs(gram: &DMatrix<f64>) -> f64 {
    let m = gram.nrows();
    let mut s = vec![1.0f64; m];
    let mut v: DVector<f64> = DVector::from_fn(m, |r, _| gram.row(r).sum());
    let mut val = s.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>();
    let mut best = val;
    if m == 1 {
        return best;
    }
    let steps = 1u64 << (m - 1);
    for g in 1..steps {
        let j = g.trailing_zeros() as usize; // bit to flip; never the last
        val += 4.0 * (gram[(j, j)] - s[j] * v[j]);
        let sj = s[j];
        for r in 0..m {
            v[r] -= 2.0 * sj * gram[(r, j)];
        }
        s[j] = -sj;
        if val > best {
            best = val;
        }
    }
    best
}

/// `min_{‖c‖∞ = 1} cᵀGc` by enumerating cube facets: one coordinate pinned
/// to +1 (sign symmetry), the rest either pinned to ±1 or solved freely;
/// every KKT pattern of the true minimizer appears in the enumeration.
fn inf_sq_linf_facets(gram: &DMatrix<f64>) -> Option<f64> {
    let d = gram.nrows();
    if d == 1 {
        return Some(gram[(0, 0)]);
    }
    let mut best = f64::INFINITY;
    let patterns = 3usize.pow((d - 1) as u32);
    let mut c = vec![0.0f64; d];
    let mut free: Vec<usize> = Vec::with_capacity(d);
    for f in 0..d {
        let others: Vec<usize> = (0..d).filter(|&j| j != f).collect();
        for p in 0..patterns {
            c.iter_mut().for_each(|x| *x = 0.0);
            c[f] = 1.0;
            free.clear();
            let mut code = p;
            for &j in &others {
                match code % 3 {
                    0 => c[j] = -1.0,
                    1 => c[j] = 1.0,
                    _ => free.push(j),
                }
                code /= 3;
            }
            if !free.is_empty() {
                let gff = gather(gram, &free);
                let rhs = DVector::from_fn(free.len(), |a, _| {
                    let fa = free[a];
                    let mut acc = 0.0;
                    for j in 0..d {
                        if !free.contains(&j) {
                            acc += gram[(fa, j)] * c[j];
                        }
                    }
                    -acc
                });
                let Some(ch) = gff.cholesky() else { return None };
                let x = ch.solve(&rhs);
                let mut ok = true;
                for (a, &fa) in free.iter().enumerate() {
                    if x[a].abs() > 1.0 + 1e-12 {
                        ok = false;
                        break;
                    }
                    c[fa] = x[a];
                }
                if !ok {
                    continue;
                }
            }
            let val = quad(gram, &c);
            if val < best {
                best = val;
            }
        }
    }
    Some(best)
}

/// `min_{‖c‖₁ = 1} cᵀGc` by enumerating cross-polytope faces: for support
/// `S` and signs `s`, the face minimum is `1 / (sᵀ G_S⁻¹ s)` attained at
/// `c_S = G_S⁻¹ s / (sᵀ G_S⁻¹ s)`, kept when the signs are self-consistent.
fn inf_sq_l1_faces(gram: &DMatrix<f64>) -> Option<f64> {
    let d = gram.nrows();
    let mut best = f64::INFINITY;
    for mask in 1u32..(1 << d) {
        let support: Vec<usize> = (0..d).filter(|&j| mask & (1 << j) != 0).collect();
        let k = support.len();
        let gss = gather(gram, &support);
        let Some(ch) = gss.cholesky() else { return None };
        for signbits in 0..(1u32 << (k - 1)) {
            // First support coordinate fixed positive (sign symmetry).
            let s = DVector::from_fn(k, |a, _| {
                if a == 0 || signbits & (1 << (a - 1)) == 0 {
                    1.0
                } else {
                    -1.0
                }
            });
            let x = ch.solve(&s);
            let t: f64 = s.dot(&x);
            if t <= 0.0 {
                continue;
            }
            // Feasible iff every coordinate of c = x/t carries its sign.
            if (0..k).all(|a| x[a] * s[a] >= -1e-12) {
                let val = 1.0 / t;
                if val < best {
                    best = val;
                }
            }
        }
    }
    Some(best)
}

// ---------------------------------------------------------------------------
// Sampled extremal ratios (lower bounds on the resulting constants).

fn normalize_q(c: &mut DVector<f64>, q: Norm) -> bool {
    let norm = q.eval(c.as_slice());
    if norm <= 1e-300 {
        return false;
    }
    *c /= norm;
    true
}

/// Sampled `min (‖Mc‖₂/‖c‖_q)²` over the q-unit sphere: random draws, then
/// projected gradient descent from the best few.
fn sampled_inf_sq(m: &DMatrix<f64>, q: Norm, settings: &IsometrySettings, rng: &mut ChaCha8Rng) -> f64 {
    let d = m.ncols();
    let gram = m.transpose() * m;
    let eval = |c: &DVector<f64>| (&gram * c).dot(c);
    let mut pool: Vec<(f64, DVector<f64>)> = Vec::new();
    for _ in 0..settings.samples {
        let mut c = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        if !normalize_q(&mut c, q) {
            continue;
        }
        let v = eval(&c);
        pool.push((v, c));
    }
    pool.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pool.truncate(10);
    let mut best = pool.first().map(|p| p.0).unwrap_or(0.0);
    let scale = linalg::sigma_max(&gram).max(1e-12);
    for (_, mut c) in pool {
        for t in 0..settings.refine_steps {
            let g = &gram * &c * 2.0;
            let eta = 0.5 / (scale * ((t + 1) as f64).sqrt());
            let mut next = &c - g * eta;
            if !normalize_q(&mut next, q) {
                break;
            }
            let v = eval(&next);
            if v < best {
                best = v;
            }
            c = next;
        }
    }
    best
}

/// Sampled `max sᵀGs` over sign vectors: random draws plus greedy
/// single-coordinate ascent on the best few.
fn sampled_sup_sq_signs(gram: &DMatrix<f64>, settings: &IsometrySettings, rng: &mut ChaCha8Rng) -> f64 {
    let m = gram.nrows();
    let eval = |s: &DVector<f64>| (gram * s).dot(s);
    let mut pool: Vec<(f64, DVector<f64>)> = Vec::new();
    for _ in 0..settings.samples {
        let s = DVector::from_fn(m, |_, _| if rng.gen::<bool>() { 1.0 } else { -1.0 });
        pool.push((eval(&s), s));
    }
    pool.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pool.truncate(5);
    let mut best = pool.first().map(|p| p.0).unwrap_or(0.0);
    for (mut val, mut s) in pool {
        for _ in 0..settings.refine_steps {
            let v = gram * &s;
            // Gain of flipping coordinate j: 4(G_jj − s_j v_j).
            let (mut arg, mut gain) = (0usize, 0.0f64);
            for j in 0..m {
                let g = 4.0 * (gram[(j, j)] - s[j] * v[j]);
                if g > gain {
                    gain = g;
                    arg = j;
                }
            }
            if gain <= 1e-15 {
                break;
            }
            s[arg] = -s[arg];
            val += gain;
        }
        if val > best {
            best = val;
        }
    }
    best
}

// ---------------------------------------------------------------------------
// σ_q: one-sided upper constant over whole blocks.

/// `σ_q = max_i sup (‖B[i]c‖₂ / ‖c‖_q)² − 1`.
pub fn sigma_q(dict: &Dictionary, q: Norm, settings: &IsometrySettings) -> Result<Tagged> {
    let mut worst = 0.0f64;
    let mut method = Method::Exact;
    for i in 0..dict.n_blocks() {
        let block = dict.block(i).clone_owned();
        let (sup_sq, m) = match q {
            // Over the cross-polytope the sup sits on a vertex ±e_j, so it
            // is the largest column norm — 1 for a dictionary's unit columns.
            Norm::L1 => {
                let max_col = (0..block.ncols())
                    .map(|j| block.column(j).norm_squared())
                    .fold(0.0f64, f64::max);
                (max_col, Method::Exact)
            }
            Norm::L2 => {
                let s = linalg::sigma_max(&block);
                (s * s, Method::Exact)
            }
            Norm::LInf => {
                let gram = block.transpose() * &block;
                if block.ncols() as u32 <= settings.sign_bits {
                    (sup_sq_linf_signs(&gram), Method::Enumerated)
                } else {
                    let mut rng = stream_rng(settings.seed, i as u64);
                    (
                        sampled_sup_sq_signs(&gram, settings, &mut rng),
                        Method::SampledLowerBound,
                    )
                }
            }
        };
        worst = worst.max(sup_sq - 1.0);
        method = method.combine(m);
    }
    Ok(Tagged::new(worst.max(0.0), method))
}

// ---------------------------------------------------------------------------
// ε_q: two-sided constant over the best full-rank submatrix per block.

/// Two-sided deviation of one full-column-rank submatrix under norm `q`.
/// Returns the value and the provenance of its extremal ratios.
fn submatrix_deviation(
    sub: &DMatrix<f64>,
    q: Norm,
    settings: &IsometrySettings,
    rng: &mut ChaCha8Rng,
) -> (f64, Method) {
    match q {
        Norm::L2 => {
            let sv = linalg::singular_values(sub);
            let smax = sv[0];
            let smin = sv[sv.len() - 1];
            (
                (smax * smax - 1.0).max(1.0 - smin * smin),
                Method::Exact,
            )
        }
        Norm::L1 => {
            let d = sub.ncols();
            let sup_sq = (0..d)
                .map(|j| sub.column(j).norm_squared())
                .fold(0.0f64, f64::max);
            let gram = sub.transpose() * sub;
            let faces = (3usize.pow(d as u32).saturating_sub(1)) / 2;
            let (inf_sq, m) = if d <= 30 && faces <= settings.ternary_cap {
                match inf_sq_l1_faces(&gram) {
                    Some(v) => (v, Method::Enumerated),
                    None => (sampled_inf_sq(sub, q, settings, rng), Method::SampledLowerBound),
                }
            } else {
                (sampled_inf_sq(sub, q, settings, rng), Method::SampledLowerBound)
            };
            ((sup_sq - 1.0).max(1.0 - inf_sq), m)
        }
        Norm::LInf => {
            let d = sub.ncols();
            let gram = sub.transpose() * sub;
            let (sup_sq, m_sup) = if d as u32 <= settings.sign_bits {
                (sup_sq_linf_signs(&gram), Method::Enumerated)
            } else {
                (
                    sampled_sup_sq_signs(&gram, settings, rng),
                    Method::SampledLowerBound,
                )
            };
            let facets = d.saturating_mul(3usize.pow((d.saturating_sub(1)) as u32));
            let (inf_sq, m_inf) = if d <= 30 && facets <= settings.ternary_cap {
                match inf_sq_linf_facets(&gram) {
                    Some(v) => (v, Method::Enumerated),
                    None => (sampled_inf_sq(sub, q, settings, rng), Method::SampledLowerBound),
                }
            } else {
                (sampled_inf_sq(sub, q, settings, rng), Method::SampledLowerBound)
            };
            ((sup_sq - 1.0).max(1.0 - inf_sq), m_sup.combine(m_inf))
        }
    }
}

/// Greedy pivoted column selection: repeatedly take the column with the
/// largest residual after projecting out the span of those already chosen.
fn greedy_columns(block: &DMatrix<f64>, d: usize) -> Vec<usize> {
    let mut residual = block.clone_owned();
    let mut chosen = Vec::with_capacity(d);
    for _ in 0..d {
        let (mut arg, mut best) = (usize::MAX, 1e-24);
        for j in 0..residual.ncols() {
            if chosen.contains(&j) {
                continue;
            }
            let n = residual.column(j).norm_squared();
            if n > best {
                best = n;
                arg = j;
            }
        }
        if arg == usize::MAX {
            break;
        }
        chosen.push(arg);
        let q_col = residual.column(arg).normalize();
        for j in 0..residual.ncols() {
            if !chosen.contains(&j) {
                let proj = q_col.dot(&residual.column(j));
                let updated = residual.column(j) - &q_col * proj;
                residual.set_column(j, &updated);
            }
        }
    }
    chosen.sort_unstable();
    chosen
}

/// `ε_q`: per block the minimum two-sided deviation over full-column-rank
/// `d_i`-column submatrices, maximized over blocks.
pub fn eps_q(dict: &Dictionary, q: Norm, settings: &IsometrySettings) -> Result<Tagged> {
    let mut worst = 0.0f64;
    let mut method = Method::Exact;
    for i in 0..dict.n_blocks() {
        let block = dict.block(i).clone_owned();
        let m_i = block.ncols();
        let d_i = dict.subspace_dim(i);
        let mut rng = stream_rng(settings.seed, i as u64);

        let mut candidates: Vec<Vec<usize>> = Vec::new();
        let mut selection_method = Method::Exact;
        if m_i == d_i {
            candidates.push((0..m_i).collect());
        } else if binomial(m_i, d_i) <= settings.submatrix_cap {
            for_each_combination(m_i, d_i, &mut |idx| candidates.push(idx.to_vec()));
        } else {
            candidates.push(greedy_columns(&block, d_i));
            selection_method = Method::SampledLowerBound;
        }

        let mut block_best: Option<(f64, Method)> = None;
        for idx in &candidates {
            let sub = block.select_columns(idx.iter());
            let tol = linalg::rank_tolerance(linalg::sigma_max(&sub), sub.nrows(), sub.ncols());
            if linalg::sigma_min(&sub) <= tol {
                continue; // not full column rank
            }
            let (dev, m) = submatrix_deviation(&sub, q, settings, &mut rng);
            let replaced = match &block_best {
                None => true,
                Some((best, _)) => dev < *best,
            };
            if replaced {
                block_best = Some((dev, m));
            }
        }
        let Some((dev, m)) = block_best else {
            return Err(Error::RankDeficientBlock {
                block: i,
                rank: 0,
                needed: d_i,
            });
        };
        worst = worst.max(dev);
        method = method.combine(m).combine(selection_method);
    }
    Ok(Tagged::new(worst.max(0.0), method))
}

// ---------------------------------------------------------------------------
// ε'_q: ℓ2-vs-ℓq equivalence on the subspaces themselves.

/// `ε'_q`: the smallest constant with
/// `(1−ε')‖z‖_q² ≤ ‖z‖₂² ≤ (1+ε')‖z‖_q²` for every `z` in any block's span.
pub fn eps_prime_q(dict: &Dictionary, q: Norm, settings: &IsometrySettings) -> Result<Tagged> {
    if q == Norm::L2 {
        return Ok(Tagged::new(0.0, Method::Exact));
    }
    let mut worst = 0.0f64;
    let mut method = Method::Exact;
    for i in 0..dict.n_blocks() {
        let basis = dict.basis(i);
        let d_i = basis.ncols();
        let (val, m) = if d_i == 1 {
            // On a line the ratio is constant: r = ‖v‖₂²/‖v‖_q² for the unit
            // basis vector v.
            let v = basis.column(0);
            let r = 1.0 / q.eval(v.as_slice()).powi(2);
            let val = match q {
                Norm::L1 => 1.0 - r,        // ‖z‖₁ ≥ ‖z‖₂ ⇒ r ≤ 1
                Norm::LInf => r - 1.0,      // ‖z‖∞ ≤ ‖z‖₂ ⇒ r ≥ 1
                Norm::L2 => unreachable!(),
            };
            (val.max(0.0), Method::Exact)
        } else {
            let mut rng = stream_rng(settings.seed ^ 0x9E37_79B9, i as u64);
            match q {
                Norm::L1 => {
                    // sup ‖Aw‖₁ over the unit sphere via the monotone
                    // fixed-point w ← normalize(Aᵀ sign(Aw)).
                    let sup = sup_l1_on_sphere(basis, settings, &mut rng);
                    ((1.0 - 1.0 / (sup * sup)).max(0.0), Method::SampledLowerBound)
                }
                Norm::LInf => {
                    // inf ‖Aw‖∞ over the unit sphere via projected
                    // subgradient descent.
                    let inf = inf_linf_on_sphere(basis, settings, &mut rng);
                    ((1.0 / (inf * inf) - 1.0).max(0.0), Method::SampledLowerBound)
                }
                Norm::L2 => unreachable!(),
            }
        };
        worst = worst.max(val);
        method = method.combine(m);
    }
    Ok(Tagged::new(worst, method))
}

fn sup_l1_on_sphere(basis: &DMatrix<f64>, settings: &IsometrySettings, rng: &mut ChaCha8Rng) -> f64 {
    let d = basis.ncols();
    let eval = |w: &DVector<f64>| (basis * w).abs().sum();
    let mut pool: Vec<(f64, DVector<f64>)> = Vec::new();
    for _ in 0..settings.samples {
        let w = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let n = w.norm();
        if n <= 1e-300 {
            continue;
        }
        let w = w / n;
        pool.push((eval(&w), w));
    }
    pool.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    pool.truncate(10);
    let mut best = pool.first().map(|p| p.0).unwrap_or(1.0);
    for (mut val, mut w) in pool {
        for _ in 0..settings.refine_steps {
            let z = basis * &w;
            let s = z.map(|x| if x >= 0.0 { 1.0 } else { -1.0 });
            let mut next = basis.transpose() * s;
            let n = next.norm();
            if n <= 1e-300 {
                break;
            }
            next /= n;
            let v = eval(&next);
            if v <= val + 1e-15 {
                val = val.max(v);
                break;
            }
            val = v;
            w = next;
        }
        if val > best {
            best = val;
        }
    }
    best
}

fn inf_linf_on_sphere(basis: &DMatrix<f64>, settings: &IsometrySettings, rng: &mut ChaCha8Rng) -> f64 {
    let d = basis.ncols();
    let eval = |w: &DVector<f64>| {
        (basis * w)
            .iter()
            .map(|x| x.abs())
            .fold(f64::NEG_INFINITY, f64::max)
    };
    let mut pool: Vec<(f64, DVector<f64>)> = Vec::new();
    for _ in 0..settings.samples {
        let w = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let n = w.norm();
        if n <= 1e-300 {
            continue;
        }
        let w = w / n;
        pool.push((eval(&w), w));
    }
    pool.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pool.truncate(10);
    let mut best = pool.first().map(|p| p.0).unwrap_or(1.0);
    for (_, mut w) in pool {
        for t in 0..settings.refine_steps {
            let z = basis * &w;
            let (mut arg, mut mag) = (0usize, f64::NEG_INFINITY);
            for (j, x) in z.iter().enumerate() {
                if x.abs() > mag {
                    mag = x.abs();
                    arg = j;
                }
            }
            let g = basis.row(arg).transpose() * z[arg].signum();
            let eta = 0.3 / ((t + 1) as f64).sqrt();
            let mut next = &w - g * eta;
            let n = next.norm();
            if n <= 1e-300 {
                break;
            }
            next /= n;
            let v = eval(&next);
            if v < best {
                best = v;
            }
            w = next;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::generate_dictionary;

    fn dict_from(cols: &[f64], rows: usize, sizes: Vec<usize>) -> Dictionary {
        let matrix = DMatrix::from_column_slice(rows, cols.len() / rows, cols);
        Dictionary::from_matrix(matrix, sizes).unwrap()
    }

    #[test]
    fn single_column_blocks_have_zero_constants() {
        let dict = dict_from(&[1.0, 0.0, 0.0, 1.0], 2, vec![1, 1]);
        let settings = IsometrySettings::default();
        for q in Norm::ALL {
            let e = eps_q(&dict, q, &settings).unwrap();
            let s = sigma_q(&dict, q, &settings).unwrap();
            assert!(e.value < 1e-12, "eps {q}: {}", e.value);
            assert!(s.value < 1e-12, "sigma {q}: {}", s.value);
            assert!(e.method.is_exact());
            // Axis-aligned lines: all norms coincide on the span.
            let p = eps_prime_q(&dict, q, &settings).unwrap();
            assert!(p.value < 1e-12, "eps' {q}: {}", p.value);
            assert_eq!(p.method, Method::Exact);
        }
    }

    #[test]
    fn orthonormal_block_is_perfectly_isometric_at_q2() {
        let dict = dict_from(&[1.0, 0.0, 0.0, 0.0, 1.0, 0.0], 3, vec![2]);
        let settings = IsometrySettings::default();
        let e = eps_q(&dict, Norm::L2, &settings).unwrap();
        let s = sigma_q(&dict, Norm::L2, &settings).unwrap();
        assert!(e.value < 1e-12);
        assert!(s.value < 1e-12);
        assert_eq!(e.method, Method::Exact);
    }

    #[test]
    fn two_columns_at_angle_phi_q2() {
        // Gram eigenvalues are 1 ± cos φ, so ε₂ = cos φ.
        let phi = std::f64::consts::PI / 3.0;
        let dict = dict_from(&[1.0, 0.0, phi.cos(), phi.sin()], 2, vec![2]);
        let settings = IsometrySettings::default();
        let e = eps_q(&dict, Norm::L2, &settings).unwrap();
        assert!((e.value - phi.cos()).abs() < 1e-12, "got {}", e.value);
        // Non-redundant block: σ₂ agrees.
        let s = sigma_q(&dict, Norm::L2, &settings).unwrap();
        assert!((s.value - phi.cos()).abs() < 1e-12);
    }

    #[test]
    fn sigma_one_is_zero_for_unit_columns() {
        let dict = generate_dictionary(12, 4, 2, 4, 5).unwrap();
        let settings = IsometrySettings::default();
        let s = sigma_q(&dict, Norm::L1, &settings).unwrap();
        assert!(s.value < 1e-12);
        assert_eq!(s.method, Method::Exact);
        // Spot-check the sup ratio directly on random coefficients.
        let mut rng = stream_rng(1, 1);
        for _ in 0..200 {
            let c = DVector::from_fn(4, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
            let l1 = c.abs().sum();
            let r = (dict.block(0) * &c).norm() / l1;
            assert!(r <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn sigma_inf_of_two_axes_is_one() {
        // ‖[e₁ e₂]s‖₂ = √2 for every sign vector, so the sup ratio² is 2.
        let dict = dict_from(&[1.0, 0.0, 0.0, 1.0], 2, vec![2]);
        let s = sigma_q(&dict, Norm::LInf, &IsometrySettings::default()).unwrap();
        assert!((s.value - 1.0).abs() < 1e-12);
        assert_eq!(s.method, Method::Enumerated);
    }

    #[test]
    fn eps_prime_q2_is_exactly_zero() {
        let dict = generate_dictionary(10, 3, 2, 3, 11).unwrap();
        let p = eps_prime_q(&dict, Norm::L2, &IsometrySettings::default()).unwrap();
        assert_eq!(p.value, 0.0);
        assert_eq!(p.method, Method::Exact);
    }

    #[test]
    fn eps_prime_on_the_diagonal_line() {
        let s = 1.0 / 2f64.sqrt();
        let dict = dict_from(&[s, s], 2, vec![1]);
        let settings = IsometrySettings::default();
        // ‖z‖₂²/‖z‖₁² = 1/2 on the line, so ε'₁ = 1/2.
        let p1 = eps_prime_q(&dict, Norm::L1, &settings).unwrap();
        assert!((p1.value - 0.5).abs() < 1e-12);
        assert_eq!(p1.method, Method::Exact);
        // ‖z‖₂²/‖z‖∞² = 2 on the line: the constant reaches 1.
        let pi = eps_prime_q(&dict, Norm::LInf, &settings).unwrap();
        assert!((pi.value - 1.0).abs() < 1e-12);
    }

    /// d = 2 oracle: exact minimum of `cᵀGc` over the ℓ1 unit sphere by
    /// minimizing the quadratic on each of the four segments in closed form.
    fn inf_sq_l1_d2_oracle(gram: &DMatrix<f64>) -> f64 {
        let mut best = f64::INFINITY;
        for (s1, s2) in [(1.0, 1.0), (1.0, -1.0), (-1.0, 1.0), (-1.0, -1.0)] {
            // c = (s1 t, s2 (1−t)), t ∈ [0, 1].
            let a = gram[(0, 0)] - 2.0 * s1 * s2 * gram[(0, 1)] + gram[(1, 1)];
            let b = 2.0 * s1 * s2 * gram[(0, 1)] - 2.0 * gram[(1, 1)];
            let c0 = gram[(1, 1)];
            let mut candidates = vec![0.0, 1.0];
            if a > 0.0 {
                candidates.push((-b / (2.0 * a)).clamp(0.0, 1.0));
            }
            for t in candidates {
                best = best.min(a * t * t + b * t + c0);
            }
        }
        best
    }

    /// d = 2 oracle: exact minimum of `cᵀGc` over the ℓ∞ unit sphere (the
    /// square's boundary) by closed-form minimization on each edge.
    fn inf_sq_linf_d2_oracle(gram: &DMatrix<f64>) -> f64 {
        let mut best = f64::INFINITY;
        // Edges c₁ = ±1 (then by symmetry c₂ = ±1 via swapping roles).
        for (fixed, free) in [(0usize, 1usize), (1, 0)] {
            for sign in [1.0, -1.0] {
                // value(t) = G_ff + 2 sign t G_f,free + t² G_free,free
                let a = gram[(free, free)];
                let b = 2.0 * sign * gram[(fixed, free)];
                let c0 = gram[(fixed, fixed)];
                let mut candidates = vec![-1.0, 1.0];
                if a > 0.0 {
                    candidates.push((-b / (2.0 * a)).clamp(-1.0, 1.0));
                }
                for t in candidates {
                    best = best.min(a * t * t + b * t + c0);
                }
            }
        }
        best
    }

    #[test]
    fn face_enumeration_matches_d2_closed_forms() {
        let mut rng = stream_rng(9, 0);
        for _ in 0..20 {
            let m = crate::test_util::gaussian(5, 2, &mut rng);
            let gram = m.transpose() * &m;
            let faces = inf_sq_l1_faces(&gram).unwrap();
            let oracle = inf_sq_l1_d2_oracle(&gram);
            assert!((faces - oracle).abs() < 1e-10, "{faces} vs {oracle}");
            let facets = inf_sq_linf_facets(&gram).unwrap();
            let oracle = inf_sq_linf_d2_oracle(&gram);
            assert!((facets - oracle).abs() < 1e-10, "{facets} vs {oracle}");
        }
    }

    #[test]
    fn redundant_block_picks_the_best_submatrix() {
        // Columns e₁, e₂, and the diagonal: the {e₁, e₂} submatrix is
        // orthonormal, so ε₂ = 0 even though other pairs deviate.
        let s = 1.0 / 2f64.sqrt();
        let dict = dict_from(&[1.0, 0.0, 0.0, 1.0, s, s], 2, vec![3]);
        let settings = IsometrySettings::default();
        let e2 = eps_q(&dict, Norm::L2, &settings).unwrap();
        assert!(e2.value < 1e-12);
        assert_eq!(e2.method, Method::Exact);
        // For q = 1 the same submatrix is optimal: inf ‖c‖₂/‖c‖₁ = 1/√2.
        let e1 = eps_q(&dict, Norm::L1, &settings).unwrap();
        assert!((e1.value - 0.5).abs() < 1e-12, "got {}", e1.value);
        assert_eq!(e1.method, Method::Enumerated);
    }

    /// For non-redundant blocks the only submatrix is the block itself, so
    /// ε₂ must equal the worst-block value of max(σ_max² − 1, 1 − σ_min²) —
    /// recomputed here directly from whole-block singular values. σ₂ is the
    /// upper part alone, so ε₂ ≥ σ₂, with equality exactly when the upper
    /// deviation dominates on the worst block.
    #[test]
    fn nonredundant_eps2_matches_whole_block_svd() {
        let settings = IsometrySettings::default();
        for seed in [4u64, 5, 6] {
            let dict = generate_dictionary(15, 3, 3, 3, seed).unwrap();
            let e = eps_q(&dict, Norm::L2, &settings).unwrap();
            let s = sigma_q(&dict, Norm::L2, &settings).unwrap();
            let mut two_sided = 0.0f64;
            let mut upper = 0.0f64;
            for i in 0..dict.n_blocks() {
                let sv = linalg::singular_values(&dict.block(i).clone_owned());
                let (smax, smin) = (sv[0], sv[sv.len() - 1]);
                two_sided = two_sided.max((smax * smax - 1.0).max(1.0 - smin * smin));
                upper = upper.max(smax * smax - 1.0);
            }
            assert!((e.value - two_sided).abs() < 1e-12, "seed {seed}");
            assert!((s.value - upper).abs() < 1e-12, "seed {seed}");
            assert!(e.value >= s.value - 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn appending_a_column_cannot_shrink_sigma() {
        let s = 1.0 / 2f64.sqrt();
        let narrow = dict_from(&[1.0, 0.0, 0.0, 1.0], 2, vec![2]);
        let wide = dict_from(&[1.0, 0.0, 0.0, 1.0, s, s], 2, vec![3]);
        let settings = IsometrySettings::default();
        for q in Norm::ALL {
            let a = sigma_q(&narrow, q, &settings).unwrap().value;
            let b = sigma_q(&wide, q, &settings).unwrap().value;
            assert!(b >= a - 1e-12, "{q}: {b} < {a}");
        }
    }

    #[test]
    fn sampled_paths_stay_below_enumerated_values() {
        let dict = generate_dictionary(12, 2, 3, 5, 21).unwrap();
        let exact = IsometrySettings::default();
        let forced = IsometrySettings {
            sign_bits: 1,
            ternary_cap: 1,
            submatrix_cap: 5000,
            ..IsometrySettings::default()
        };
        let enum_sigma = sigma_q(&dict, Norm::LInf, &exact).unwrap();
        let samp_sigma = sigma_q(&dict, Norm::LInf, &forced).unwrap();
        assert_eq!(enum_sigma.method, Method::Enumerated);
        assert_eq!(samp_sigma.method, Method::SampledLowerBound);
        assert!(samp_sigma.value <= enum_sigma.value + 1e-9);

        // Determinism of the sampled path.
        let again = sigma_q(&dict, Norm::LInf, &forced).unwrap();
        assert_eq!(samp_sigma.value, again.value);
    }

    #[test]
    fn constants_bundle_carries_all_three() {
        let dict = generate_dictionary(10, 3, 2, 3, 31).unwrap();
        let c = constants(&dict, Norm::L2, &IsometrySettings::default()).unwrap();
        assert_eq!(c.q, Norm::L2);
        assert_eq!(c.eps_prime.value, 0.0);
        assert!(c.eps.value <= c.sigma.value + 1e-9);
    }
}
