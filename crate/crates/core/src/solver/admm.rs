//! ADMM engines for the four program shapes, with factorizations cached per
//! dictionary so many signals can be solved against one preparation.
//!
//! All four shapes follow the same synthesis: an affine or least-squares
//! update for the coefficients, a blockwise proximal update for the norm
//! objective, a scaled dual ascent step, and periodic penalty rebalancing.
//! The subgradient identity `ρu ∈ ∂g(z)` of the proximal step is what makes
//! the returned dual certificates exact at convergence.

use nalgebra::linalg::Cholesky;
use nalgebra::{DMatrix, DVector, Dyn};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg;
use crate::model::{BlockSparseCoefficients, BlockStructure, Dictionary};
use crate::norm::Norm;
use crate::rng;

use super::prox::prox_block_norm;
use super::{CertificateInfo, Constraint, Corruption, Family, Residuals, SolveResult, SolveSpec};

/// Ridge added to per-block Gram matrices so redundant blocks stay factorable.
const RIDGE: f64 = 1e-8;

/// Blocks contributing less than this fraction of the largest block
/// contribution are zeroed out of a reconstruction-norm solution.
const CONTRIBUTION_FLOOR: f64 = 1e-6;

/// How often (in iterations) the penalty parameter is rebalanced.
const RHO_PERIOD: usize = 25;

/// Bounds on the adapted penalty parameter.
const RHO_MIN: f64 = 1e-4;
const RHO_MAX: f64 = 1e4;

/// Samples per block when estimating subspace-restricted dual norms.
const DUAL_NORM_SAMPLES: usize = 200;

/// A solver with all per-dictionary factorizations done up front.
///
/// Preparing is the expensive part (an SVD plus a Cholesky factorization or
/// two); each [`PreparedSolver::solve`] call then runs only matrix-vector
/// work, so one preparation amortizes over arbitrarily many signals.
pub struct PreparedSolver {
    spec: SolveSpec,
    original: BlockStructure,
    work: Dictionary,
    svd: CachedSvd,
    variant: Variant,
}

enum Variant {
    /// Equality constraint, coefficient-norm objective: alternate the affine
    /// projection onto `{c : Bc = y}` with the blockwise prox.
    CoeffEquality {
        /// Orthonormal basis of the row space of B (N×r).
        vr: DMatrix<f64>,
    },
    /// Ball constraint, coefficient-norm objective: split through `[I; B]`.
    CoeffBall {
        /// Cholesky factor of `I + BᵀB`.
        chol: Cholesky<f64, Dyn>,
    },
    /// Equality constraint, reconstruction-norm objective: one auxiliary
    /// contribution variable per block, coupled by the exact-data constraint.
    ReconEquality {
        /// Per-block Cholesky factors of `B[i]ᵀB[i] + ridge`.
        block_chols: Vec<Cholesky<f64, Dyn>>,
        /// Pseudo-inverse data for `S = Σᵢ B[i] H[i]⁻¹ B[i]ᵀ`.
        s_pinv: CachedSvd,
    },
    /// Ball constraint, reconstruction-norm objective.
    ReconBall {
        /// Cholesky factor of `blockdiag(B[i]ᵀB[i]) + BᵀB + ridge`.
        chol: Cholesky<f64, Dyn>,
    },
}

struct RawOutcome {
    coefficients: DVector<f64>,
    iterations: usize,
    converged: bool,
    primal: f64,
    dual: f64,
    certificate: Option<CertificateInfo>,
}

impl PreparedSolver {
    /// Factors everything `spec` needs to solve signals against `dict`.
    pub fn new(dict: &Dictionary, spec: SolveSpec) -> Result<Self> {
        if !(spec.tol_primal > 0.0) || !(spec.tol_dual > 0.0) {
            return Err(Error::InvalidParameter(
                "stopping tolerances must be positive".into(),
            ));
        }
        if !(spec.rho > 0.0) {
            return Err(Error::InvalidParameter(
                "the penalty parameter rho must be positive".into(),
            ));
        }
        if spec.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "max_iter must be at least 1".into(),
            ));
        }
        if spec.constraint.radius() < 0.0 {
            return Err(Error::InvalidParameter(
                "the ball radius must be nonnegative".into(),
            ));
        }
        let original = dict.structure().clone();
        let work = match spec.corruption {
            Corruption::None => dict.clone(),
            Corruption::IdentityAppended => dict.append_identity(),
        };
        let b = work.matrix();
        let svd = CachedSvd::new(b);
        let variant = match (spec.family, spec.constraint) {
            (Family::CoefficientNorm, Constraint::Equality) => Variant::CoeffEquality {
                vr: svd.vt.rows(0, svd.rank).transpose(),
            },
            (Family::CoefficientNorm, Constraint::Ball { .. }) => {
                let n = b.ncols();
                let m = DMatrix::identity(n, n) + b.tr_mul(b);
                Variant::CoeffBall {
                    chol: Cholesky::new(m).expect("I + BᵀB is positive definite"),
                }
            }
            (Family::ReconstructionNorm, Constraint::Equality) => {
                let d = work.ambient_dim();
                let mut block_chols = Vec::with_capacity(work.n_blocks());
                let mut s = DMatrix::zeros(d, d);
                for i in 0..work.n_blocks() {
                    let blk = work.block(i).clone_owned();
                    let mut h = blk.tr_mul(&blk);
                    for j in 0..h.nrows() {
                        h[(j, j)] += RIDGE;
                    }
                    let chol =
                        Cholesky::new(h).expect("block Gram plus ridge is positive definite");
                    let x = chol.solve(&blk.transpose());
                    s += &blk * &x;
                    block_chols.push(chol);
                }
                Variant::ReconEquality {
                    block_chols,
                    s_pinv: CachedSvd::new(&s),
                }
            }
            (Family::ReconstructionNorm, Constraint::Ball { .. }) => {
                let mut m = b.tr_mul(b);
                for i in 0..work.n_blocks() {
                    let blk = work.block(i);
                    let h = blk.tr_mul(&blk);
                    let start = work.structure().range(i).start;
                    for a in 0..h.nrows() {
                        for c in 0..h.ncols() {
                            m[(start + a, start + c)] += h[(a, c)];
                        }
                    }
                }
                for j in 0..m.nrows() {
                    m[(j, j)] += RIDGE;
                }
                Variant::ReconBall {
                    chol: Cholesky::new(m)
                        .expect("blockdiag Gram + BᵀB + ridge is positive definite"),
                }
            }
        };
        Ok(PreparedSolver {
            spec,
            original,
            work,
            svd,
            variant,
        })
    }

    /// The spec this solver was prepared for.
    pub fn spec(&self) -> &SolveSpec {
        &self.spec
    }

    /// Solves one signal. Non-convergence within the iteration budget is
    /// reported through the `converged` flag, not as an error.
    pub fn solve(&self, y: &DVector<f64>) -> Result<SolveResult> {
        if y.len() != self.work.ambient_dim() {
            return Err(Error::DimensionMismatch(format!(
                "signal has {} entries, dictionary expects {}",
                y.len(),
                self.work.ambient_dim()
            )));
        }
        let raw = match &self.variant {
            Variant::CoeffEquality { vr } => self.run_coeff_equality(y, vr),
            Variant::CoeffBall { chol } => self.run_coeff_ball(y, chol),
            Variant::ReconEquality {
                block_chols,
                s_pinv,
            } => self.run_recon_equality(y, block_chols, s_pinv),
            Variant::ReconBall { chol } => self.run_recon_ball(y, chol),
        };
        self.assemble(y, raw)
    }

    /// Exact-constraint, coefficient-norm ADMM: the c-update is the affine
    /// projection `v ↦ v − V_r V_rᵀ v + c₀` onto the solution set.
    fn run_coeff_equality(&self, y: &DVector<f64>, vr: &DMatrix<f64>) -> RawOutcome {
        let st = self.work.structure();
        let spec = &self.spec;
        let c0 = self.svd.min_norm_solution(y);
        let mut rho = spec.rho;
        let mut z = c0.clone();
        let mut u = DVector::zeros(c0.len());
        let mut c = c0.clone();
        let mut primal = f64::INFINITY;
        let mut dual = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=spec.max_iter {
            iterations = it;
            let v = &z - &u;
            c = &v - vr * vr.tr_mul(&v) + &c0;
            let znew = block_prox(&(&c + &u), st, 1.0 / rho, spec.q);
            u += &c - &znew;
            primal = (&c - &znew).norm();
            dual = rho * (&znew - &z).norm();
            z = znew;
            let eps_pri = spec.tol_primal * (1.0 + c.norm().max(z.norm()));
            let eps_dual = spec.tol_dual * (1.0 + rho * u.norm());
            if primal <= eps_pri && dual <= eps_dual {
                converged = true;
                break;
            }
            if it % RHO_PERIOD == 0 {
                if primal > 10.0 * dual && rho < RHO_MAX {
                    rho *= 2.0;
                    u /= 2.0;
                } else if dual > 10.0 * primal && rho > RHO_MIN {
                    rho *= 0.5;
                    u *= 2.0;
                }
            }
        }
        let nu = self.svd.lsq_transpose(&(&u * rho));
        let certificate = Some(self.certificate_from_nu(nu));
        RawOutcome {
            coefficients: c,
            iterations,
            converged,
            primal,
            dual,
            certificate,
        }
    }

    /// Ball-constraint, coefficient-norm ADMM through the stacked map `[I; B]`.
    fn run_coeff_ball(&self, y: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> RawOutcome {
        let st = self.work.structure();
        let spec = &self.spec;
        let b = self.work.matrix();
        let delta = spec.constraint.radius();
        let c0 = self.svd.min_norm_solution(y);
        let mut rho = spec.rho;
        let mut z1 = c0.clone();
        let mut z2 = b * &c0;
        let mut u1 = DVector::zeros(c0.len());
        let mut u2 = DVector::zeros(y.len());
        let mut primal = f64::INFINITY;
        let mut dual = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=spec.max_iter {
            iterations = it;
            let rhs = (&z1 - &u1) + b.tr_mul(&(&z2 - &u2));
            let c = chol.solve(&rhs);
            let bc = b * &c;
            let z1new = block_prox(&(&c + &u1), st, 1.0 / rho, spec.q);
            let z2new = project_ball(&(&bc + &u2), y, delta);
            u1 += &c - &z1new;
            u2 += &bc - &z2new;
            primal = ((&c - &z1new).norm_squared() + (&bc - &z2new).norm_squared()).sqrt();
            dual = rho * ((&z1new - &z1) + b.tr_mul(&(&z2new - &z2))).norm();
            z1 = z1new;
            z2 = z2new;
            let scale_x = (c.norm_squared() + bc.norm_squared()).sqrt();
            let scale_z = (z1.norm_squared() + z2.norm_squared()).sqrt();
            let eps_pri = spec.tol_primal * (1.0 + scale_x.max(scale_z));
            let eps_dual = spec.tol_dual * (1.0 + rho * (&u1 + b.tr_mul(&u2)).norm());
            if primal <= eps_pri && dual <= eps_dual {
                converged = true;
                break;
            }
            if it % RHO_PERIOD == 0 {
                if primal > 10.0 * dual && rho < RHO_MAX {
                    rho *= 2.0;
                    u1 /= 2.0;
                    u2 /= 2.0;
                } else if dual > 10.0 * primal && rho > RHO_MIN {
                    rho *= 0.5;
                    u1 *= 2.0;
                    u2 *= 2.0;
                }
            }
        }
        // Stationarity of the c-update gives ρu₁ ≈ −Bᵀ(ρu₂) ∈ ∂g(z₁),
        // so ν = −ρu₂ certifies the prox variable directly.
        let certificate = Some(self.certificate_from_nu(&u2 * (-rho)));
        RawOutcome {
            coefficients: z1,
            iterations,
            converged,
            primal,
            dual,
            certificate,
        }
    }

    /// Exact-constraint, reconstruction-norm ADMM. The c-update minimizes
    /// Σ‖B[i]c[i] − v[i]‖² subject to `Σ B[i]c[i] = y`, solved through the
    /// per-block factors and one projected multiplier solve.
    fn run_recon_equality(
        &self,
        y: &DVector<f64>,
        block_chols: &[Cholesky<f64, Dyn>],
        s_pinv: &CachedSvd,
    ) -> RawOutcome {
        let st = self.work.structure();
        let spec = &self.spec;
        let n = st.n_blocks();
        let c0 = self.svd.min_norm_solution(y);
        let mut rho = spec.rho;
        let mut z: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                let r = st.range(i);
                self.work.block(i) * c0.rows(r.start, r.end - r.start)
            })
            .collect();
        let mut u: Vec<DVector<f64>> = (0..n).map(|_| DVector::zeros(y.len())).collect();
        let mut c = c0;
        let mut primal = f64::INFINITY;
        let mut dual = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=spec.max_iter {
            iterations = it;
            // c-update: t[i] solves the unconstrained block problem, the
            // multiplier solve restores Σ B[i]c[i] = y.
            let mut t = Vec::with_capacity(n);
            let mut sum = -y.clone();
            for i in 0..n {
                let blk = self.work.block(i);
                let v = &z[i] - &u[i];
                let ti = block_chols[i].solve(&blk.tr_mul(&v));
                sum += blk * &ti;
                t.push(ti);
            }
            let lam = s_pinv.min_norm_solution(&sum);
            let mut primal_sq = 0.0;
            let mut dual_sq = 0.0;
            let mut scale_g_sq = 0.0;
            let mut scale_z_sq = 0.0;
            let mut scale_u_sq = 0.0;
            for i in 0..n {
                let blk = self.work.block(i);
                let r = st.range(i);
                let ci = &t[i] - block_chols[i].solve(&blk.tr_mul(&lam));
                let g = blk * &ci;
                c.rows_mut(r.start, r.end - r.start).copy_from(&ci);
                let znew = prox_block_norm(&(&g + &u[i]), 1.0 / rho, spec.q);
                u[i] += &g - &znew;
                primal_sq += (&g - &znew).norm_squared();
                dual_sq += blk.tr_mul(&(&znew - &z[i])).norm_squared();
                scale_g_sq += g.norm_squared();
                scale_z_sq += znew.norm_squared();
                scale_u_sq += blk.tr_mul(&u[i]).norm_squared();
                z[i] = znew;
            }
            primal = primal_sq.sqrt();
            dual = rho * dual_sq.sqrt();
            let eps_pri = spec.tol_primal * (1.0 + scale_g_sq.sqrt().max(scale_z_sq.sqrt()));
            let eps_dual = spec.tol_dual * (1.0 + rho * scale_u_sq.sqrt());
            if primal <= eps_pri && dual <= eps_dual {
                converged = true;
                break;
            }
            if it % RHO_PERIOD == 0 {
                if primal > 10.0 * dual && rho < RHO_MAX {
                    rho *= 2.0;
                    for ui in &mut u {
                        *ui /= 2.0;
                    }
                } else if dual > 10.0 * primal && rho > RHO_MIN {
                    rho *= 0.5;
                    for ui in &mut u {
                        *ui *= 2.0;
                    }
                }
            }
        }
        // Optimality couples the per-block subgradients w[i] = ρu[i] through
        // a single dual vector: (BBᵀ)ν = Σ B[i]B[i]ᵀ w[i].
        let mut rhs = DVector::zeros(y.len());
        for i in 0..n {
            let blk = self.work.block(i);
            rhs += blk * blk.tr_mul(&(&u[i] * rho));
        }
        let certificate = Some(self.certificate_from_nu(self.svd.solve_gram(&rhs)));
        RawOutcome {
            coefficients: c,
            iterations,
            converged,
            primal,
            dual,
            certificate,
        }
    }

    /// Ball-constraint, reconstruction-norm ADMM: per-block contribution
    /// auxiliaries plus one ball-projected reconstruction auxiliary.
    fn run_recon_ball(&self, y: &DVector<f64>, chol: &Cholesky<f64, Dyn>) -> RawOutcome {
        let st = self.work.structure();
        let spec = &self.spec;
        let b = self.work.matrix();
        let n = st.n_blocks();
        let delta = spec.constraint.radius();
        let c0 = self.svd.min_norm_solution(y);
        let mut rho = spec.rho;
        let mut z: Vec<DVector<f64>> = (0..n)
            .map(|i| {
                let r = st.range(i);
                self.work.block(i) * c0.rows(r.start, r.end - r.start)
            })
            .collect();
        let mut v0 = project_ball(&(b * &c0), y, delta);
        let mut u: Vec<DVector<f64>> = (0..n).map(|_| DVector::zeros(y.len())).collect();
        let mut u0 = DVector::zeros(y.len());
        let mut c = c0;
        let mut primal = f64::INFINITY;
        let mut dual = f64::INFINITY;
        let mut converged = false;
        let mut iterations = 0;
        for it in 1..=spec.max_iter {
            iterations = it;
            let mut rhs = b.tr_mul(&(&v0 - &u0));
            for i in 0..n {
                let blk = self.work.block(i);
                let r = st.range(i);
                let seg = blk.tr_mul(&(&z[i] - &u[i]));
                for (k, val) in seg.iter().enumerate() {
                    rhs[r.start + k] += val;
                }
            }
            c = chol.solve(&rhs);
            let bc = b * &c;
            let mut primal_sq = 0.0;
            let mut dual_vec = DVector::zeros(c.len());
            let mut scale_g_sq = 0.0;
            let mut scale_z_sq = 0.0;
            let mut dual_scale_vec = DVector::zeros(c.len());
            for i in 0..n {
                let blk = self.work.block(i);
                let r = st.range(i);
                let g = blk * c.rows(r.start, r.end - r.start);
                let znew = prox_block_norm(&(&g + &u[i]), 1.0 / rho, spec.q);
                u[i] += &g - &znew;
                primal_sq += (&g - &znew).norm_squared();
                let dz = blk.tr_mul(&(&znew - &z[i]));
                for (k, val) in dz.iter().enumerate() {
                    dual_vec[r.start + k] += val;
                }
                let du = blk.tr_mul(&u[i]);
                for (k, val) in du.iter().enumerate() {
                    dual_scale_vec[r.start + k] += val;
                }
                scale_g_sq += g.norm_squared();
                scale_z_sq += znew.norm_squared();
                z[i] = znew;
            }
            let v0new = project_ball(&(&bc + &u0), y, delta);
            u0 += &bc - &v0new;
            primal_sq += (&bc - &v0new).norm_squared();
            dual_vec += b.tr_mul(&(&v0new - &v0));
            dual_scale_vec += b.tr_mul(&u0);
            scale_g_sq += bc.norm_squared();
            scale_z_sq += v0new.norm_squared();
            v0 = v0new;
            primal = primal_sq.sqrt();
            dual = rho * dual_vec.norm();
            let eps_pri = spec.tol_primal * (1.0 + scale_g_sq.sqrt().max(scale_z_sq.sqrt()));
            let eps_dual = spec.tol_dual * (1.0 + rho * dual_scale_vec.norm());
            if primal <= eps_pri && dual <= eps_dual {
                converged = true;
                break;
            }
            if it % RHO_PERIOD == 0 {
                if primal > 10.0 * dual && rho < RHO_MAX {
                    rho *= 2.0;
                    for ui in &mut u {
                        *ui /= 2.0;
                    }
                    u0 /= 2.0;
                } else if dual > 10.0 * primal && rho > RHO_MIN {
                    rho *= 0.5;
                    for ui in &mut u {
                        *ui *= 2.0;
                    }
                    u0 *= 2.0;
                }
            }
        }
        let certificate = Some(self.certificate_from_nu(&u0 * (-rho)));
        RawOutcome {
            coefficients: c,
            iterations,
            converged,
            primal,
            dual,
            certificate,
        }
    }

    /// Packs a raw iterate into a [`SolveResult`]: zero the negligible
    /// contributions of a reconstruction-norm solution, measure the true
    /// constraint violation, and split off the error blocks when corruption
    /// was modeled.
    fn assemble(&self, y: &DVector<f64>, raw: RawOutcome) -> Result<SolveResult> {
        let spec = &self.spec;
        let mut cw = BlockSparseCoefficients::new(raw.coefficients, self.work.structure().clone())?;
        if spec.family == Family::ReconstructionNorm {
            let norms = self.work.contribution_norms(&cw, spec.q);
            let max = norms.iter().cloned().fold(0.0f64, f64::max);
            if max > 0.0 {
                for (i, &norm) in norms.iter().enumerate() {
                    if norm < CONTRIBUTION_FLOOR * max {
                        let len = self.work.structure().size(i);
                        cw.set_block(i, &vec![0.0; len]);
                    }
                }
            }
        }
        let objective = match spec.family {
            Family::CoefficientNorm => (0..self.work.n_blocks())
                .map(|i| cw.block_norm(i, spec.q))
                .sum(),
            Family::ReconstructionNorm => self
                .work
                .contribution_norms(&cw, spec.q)
                .iter()
                .sum(),
        };
        let misfit = (y - self.work.apply(&cw)).norm();
        let constraint_violation = (misfit - spec.constraint.radius()).max(0.0);
        let feasible = constraint_violation <= 10.0 * spec.tol_primal * (1.0 + y.norm());
        let (coefficients, error_vector) = match spec.corruption {
            Corruption::None => (cw, None),
            Corruption::IdentityAppended => {
                let head_len = self.original.total_len();
                let vals = cw.values();
                let head = vals.rows(0, head_len).clone_owned();
                let tail = vals.rows(head_len, vals.len() - head_len).clone_owned();
                (
                    BlockSparseCoefficients::new(head, self.original.clone())?,
                    Some(tail),
                )
            }
        };
        Ok(SolveResult {
            coefficients,
            error_vector,
            objective,
            iterations: raw.iterations,
            converged: raw.converged && feasible,
            residuals: Residuals {
                primal: raw.primal,
                dual: raw.dual,
                constraint_violation,
            },
            certificate: raw.certificate,
        })
    }

    /// Largest block dual norm of Bᵀν, exact for the coefficient-norm family
    /// and for q = 2; a deterministic sampled lower estimate of the
    /// subspace-restricted dual norm otherwise.
    fn certificate_from_nu(&self, nu: DVector<f64>) -> CertificateInfo {
        let st = self.work.structure();
        let max_block_dual_norm = match self.spec.family {
            Family::CoefficientNorm => {
                let btnu = self.work.matrix().tr_mul(&nu);
                let dual = self.spec.q.dual();
                (0..st.n_blocks())
                    .map(|i| {
                        let r = st.range(i);
                        dual.eval(btnu.rows(r.start, r.end - r.start).as_slice())
                    })
                    .fold(0.0f64, f64::max)
            }
            Family::ReconstructionNorm => match self.spec.q {
                Norm::L2 => (0..st.n_blocks())
                    .map(|i| self.work.basis(i).tr_mul(&nu).norm())
                    .fold(0.0f64, f64::max),
                q => {
                    let mut best = 0.0f64;
                    for i in 0..st.n_blocks() {
                        let basis = self.work.basis(i);
                        let mut rng = rng::stream_rng(0x6E75, i as u64);
                        for _ in 0..DUAL_NORM_SAMPLES {
                            let w = DVector::from_fn(basis.ncols(), |_, _| {
                                rng.sample::<f64, _>(StandardNormal)
                            });
                            let zvec = basis * w;
                            let denom = q.eval(zvec.as_slice());
                            if denom > 1e-12 {
                                best = best.max(nu.dot(&zvec).abs() / denom);
                            }
                        }
                    }
                    best
                }
            },
        };
        CertificateInfo {
            nu,
            max_block_dual_norm,
        }
    }
}

/// Rank-revealing SVD data reused for projections, minimum-norm solutions,
/// and normal-equation solves.
struct CachedSvd {
    u: DMatrix<f64>,
    vt: DMatrix<f64>,
    sv: DVector<f64>,
    rank: usize,
}

impl CachedSvd {
    fn new(m: &DMatrix<f64>) -> Self {
        let svd = m.clone_owned().svd(true, true);
        let sv = svd.singular_values;
        let smax = sv.iter().cloned().fold(0.0f64, f64::max);
        let tol = linalg::rank_tolerance(smax, m.nrows(), m.ncols());
        let rank = sv.iter().filter(|&&s| s > tol).count();
        CachedSvd {
            u: svd.u.expect("SVD computed with U"),
            vt: svd.v_t.expect("SVD computed with Vᵀ"),
            sv,
            rank,
        }
    }

    /// Minimum-norm least-squares solution of `Mx = y`.
    fn min_norm_solution(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut t = self.u.columns(0, self.rank).tr_mul(y);
        for k in 0..self.rank {
            t[k] /= self.sv[k];
        }
        self.vt.rows(0, self.rank).tr_mul(&t)
    }

    /// Least-squares solution of `Mᵀν = w` (the dual-vector fit).
    fn lsq_transpose(&self, w: &DVector<f64>) -> DVector<f64> {
        let mut t = self.vt.rows(0, self.rank) * w;
        for k in 0..self.rank {
            t[k] /= self.sv[k];
        }
        self.u.columns(0, self.rank) * t
    }

    /// Pseudo-inverse solve of `(MMᵀ)ν = rhs`.
    fn solve_gram(&self, rhs: &DVector<f64>) -> DVector<f64> {
        let mut t = self.u.columns(0, self.rank).tr_mul(rhs);
        for k in 0..self.rank {
            t[k] /= self.sv[k] * self.sv[k];
        }
        self.u.columns(0, self.rank) * t
    }
}

/// Applies the blockwise prox of `λ Σᵢ ‖·‖_q` over `st`.
fn block_prox(v: &DVector<f64>, st: &BlockStructure, lambda: f64, q: Norm) -> DVector<f64> {
    let mut out = DVector::zeros(v.len());
    for i in 0..st.n_blocks() {
        let r = st.range(i);
        let seg = v.rows(r.start, r.end - r.start).clone_owned();
        let p = prox_block_norm(&seg, lambda, q);
        out.rows_mut(r.start, r.end - r.start).copy_from(&p);
    }
    out
}

/// Euclidean projection onto the ball `{v : ‖v − y‖₂ ≤ δ}`.
fn project_ball(w: &DVector<f64>, y: &DVector<f64>, delta: f64) -> DVector<f64> {
    let d = w - y;
    let n = d.norm();
    if n <= delta {
        w.clone()
    } else {
        y + d * (delta / n.max(f64::MIN_POSITIVE))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{generate_dictionary, plant_signal};
    use crate::solver::{recovered_support, solve};

    const SUPPORT_TOL: f64 = 1e-4;

    fn axes_dictionary() -> Dictionary {
        Dictionary::from_matrix(DMatrix::identity(3, 3), vec![1, 1, 1]).unwrap()
    }

    #[test]
    fn identity_dictionary_recovers_a_scaled_axis() {
        let dict = axes_dictionary();
        let y = DVector::from_vec(vec![2.0, 0.0, 0.0]);
        for family in Family::ALL {
            for q in Norm::ALL {
                let spec = SolveSpec::new(family, q);
                let res = solve(&dict, &y, &spec).unwrap();
                assert!(res.converged, "{family}/{q}");
                assert!((res.objective - 2.0).abs() < 1e-4, "{family}/{q}");
                assert_eq!(
                    recovered_support(&dict, &res.coefficients, family, q, SUPPORT_TOL),
                    vec![0],
                    "{family}/{q}"
                );
                assert!((res.coefficients.values()[0] - 2.0).abs() < 1e-4);
            }
        }
    }

    #[test]
    fn orthogonal_blocks_identify_the_active_block() {
        let mut m = DMatrix::zeros(4, 4);
        for j in 0..4 {
            m[(j, j)] = 1.0;
        }
        let dict = Dictionary::from_matrix(m, vec![2, 2]).unwrap();
        let y = DVector::from_vec(vec![0.0, 0.0, 0.6, 0.8]);
        for family in Family::ALL {
            for q in Norm::ALL {
                let spec = SolveSpec::new(family, q);
                let res = solve(&dict, &y, &spec).unwrap();
                assert!(res.converged, "{family}/{q}");
                assert_eq!(
                    recovered_support(&dict, &res.coefficients, family, q, SUPPORT_TOL),
                    vec![1],
                    "{family}/{q}"
                );
                let misfit = (&y - dict.apply(&res.coefficients)).norm();
                assert!(misfit < 1e-4, "{family}/{q}: misfit {misfit:.2e}");
            }
        }
    }

    #[test]
    fn ball_constraint_absorbs_noise() {
        let dict = generate_dictionary(12, 4, 2, 2, 21).unwrap();
        let inst = plant_signal(&dict, 1, 5).unwrap();
        let mut rng = rng::stream_rng(99, 0);
        let noise = DVector::from_fn(12, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = inst.signal() + &noise * (0.01 / noise.norm());
        let mut spec = SolveSpec::new(Family::ReconstructionNorm, Norm::L2);
        spec.constraint = Constraint::Ball { delta: 0.05 };
        let res = solve(&dict, &y, &spec).unwrap();
        assert!(res.converged);
        let misfit = (&y - dict.apply(&res.coefficients)).norm();
        assert!(misfit <= 0.05 + 1e-6, "misfit {misfit:.3e}");
        assert_eq!(
            recovered_support(
                &dict,
                &res.coefficients,
                Family::ReconstructionNorm,
                Norm::L2,
                SUPPORT_TOL
            ),
            inst.support().to_vec()
        );
    }

    #[test]
    fn corrupted_solve_recovers_the_sparse_error() {
        let dict = generate_dictionary(20, 4, 3, 3, 33).unwrap();
        let inst = plant_signal(&dict, 1, 8).unwrap();
        let mut e0 = DVector::zeros(20);
        e0[3] = 0.5;
        e0[11] = -0.4;
        let y = inst.signal() + &e0;
        let mut spec = SolveSpec::new(Family::ReconstructionNorm, Norm::L2);
        spec.corruption = Corruption::IdentityAppended;
        let res = solve(&dict, &y, &spec).unwrap();
        assert!(res.converged);
        let e = res.error_vector.as_ref().expect("corruption returns an error vector");
        assert!((e - &e0).norm() < 1e-3, "error misfit {:.3e}", (e - &e0).norm());
        assert_eq!(
            recovered_support(
                &dict,
                &res.coefficients,
                Family::ReconstructionNorm,
                Norm::L2,
                SUPPORT_TOL
            ),
            inst.support().to_vec()
        );
        assert_eq!(res.coefficients.structure().n_blocks(), 4);
    }

    #[test]
    fn non_convergence_is_flagged_not_an_error() {
        let dict = generate_dictionary(12, 4, 2, 2, 55).unwrap();
        let inst = plant_signal(&dict, 2, 1).unwrap();
        let mut spec = SolveSpec::new(Family::CoefficientNorm, Norm::L2);
        spec.max_iter = 2;
        let res = solve(&dict, inst.signal(), &spec).unwrap();
        assert!(!res.converged);
        assert_eq!(res.iterations, 2);
        assert_eq!(res.coefficients.structure().n_blocks(), 4);
    }

    #[test]
    fn infeasible_equality_reports_the_violation() {
        let mut m = DMatrix::zeros(3, 2);
        m[(0, 0)] = 1.0;
        m[(1, 1)] = 1.0;
        let dict = Dictionary::from_matrix(m, vec![2]).unwrap();
        let y = DVector::from_vec(vec![0.0, 0.0, 1.0]);
        let spec = SolveSpec::new(Family::CoefficientNorm, Norm::L2);
        let res = solve(&dict, &y, &spec).unwrap();
        assert!(!res.converged);
        assert!((res.residuals.constraint_violation - 1.0).abs() < 1e-9);
    }

    #[test]
    fn equality_certificates_bound_the_dual_norms() {
        let dict = generate_dictionary(30, 6, 2, 2, 7).unwrap();
        for q in Norm::ALL {
            let spec = SolveSpec::new(Family::CoefficientNorm, q);
            let solver = PreparedSolver::new(&dict, spec).unwrap();
            for trial in 0..10u64 {
                let inst = plant_signal(&dict, 1 + (trial as usize % 2), trial).unwrap();
                let res = solver.solve(inst.signal()).unwrap();
                if res.converged {
                    let cert = res.certificate.as_ref().unwrap();
                    assert!(
                        cert.max_block_dual_norm <= 1.0 + 1e-4,
                        "q={q} trial {trial}: dual norm {:.6}",
                        cert.max_block_dual_norm
                    );
                }
            }
        }
    }

    #[test]
    fn prepared_solver_runs_are_deterministic() {
        let dict = generate_dictionary(12, 4, 2, 2, 3).unwrap();
        let inst = plant_signal(&dict, 2, 4).unwrap();
        let spec = SolveSpec::new(Family::ReconstructionNorm, Norm::L2);
        let solver = PreparedSolver::new(&dict, spec.clone()).unwrap();
        let a = solver.solve(inst.signal()).unwrap();
        let b = solver.solve(inst.signal()).unwrap();
        let c = solve(&dict, inst.signal(), &spec).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.coefficients.values(), b.coefficients.values());
        assert_eq!(a.coefficients.values(), c.coefficients.values());
    }
}
