//! Certifiers for sufficient recovery conditions.
//!
//! Every condition here is an inequality `lhs < rhs` whose ingredients come
//! from the coherence series (`ζ_k`, `u_k`, `μ_S`), the isometry constants
//! (`ε_q`, `σ_q`, `ε'_q`), or the classical per-atom coherence numbers. A
//! [`Certificate`] records both sides together with an exactness tag: a
//! certificate is only `Exact` when every constant it consumed was computed
//! exactly; if any ingredient is a sampled lower bound the verdict may be
//! optimistic (the true lhs/rhs could be less favorable).
//!
//! Besides single-condition checks the module offers a sweep that reports the
//! largest certified sparsity per condition ([`max_certified_k`]), a
//! randomized rank probe for the uniqueness threshold ([`uniqueness_probe`]),
//! and a Monte-Carlo check of the interpolation bound that underlies the
//! cumulative-coherence conditions ([`lemma2_check`]).

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::coherence::{ClassicalCoherence, CoherenceProfile};
use crate::error::{Error, Result};
use crate::isometry::IsometryConstants;
use crate::linalg;
use crate::model::{BlockStructure, Dictionary};
use crate::rng::chain_rng;

/// Identifier of one sufficient condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ConditionId {
    /// Coefficient-norm family, cumulative coherence:
    /// `√((1+σ_q)/(1+ε_q))·ζ_k + ζ_{k−1} < (1−ε_q)/(1+ε_q)`.
    PCumulative,
    /// Coefficient-norm family, mutual coherence:
    /// `(k·√((1+σ_q)/(1+ε_q)) + k−1)·μ_S < (1−ε_q)/(1+ε_q)`.
    PMutual,
    /// Coefficient-norm family on non-redundant blocks, mutual coherence:
    /// `(2k−1)·μ_S < (1−ε_q)/(1+ε_q)`.
    PMutualNonredundant,
    /// Coefficient-norm family on non-redundant blocks, cumulative coherence:
    /// `ζ_k + ζ_{k−1} < (1−ε_q)/(1+ε_q)`.
    PCumulativeNonredundant,
    /// Reconstruction-norm family, cumulative coherence:
    /// `ζ_k + ζ_{k−1} < (1−ε'_q)/(1+ε'_q)`.
    PPrimeCumulative,
    /// Reconstruction-norm family, mutual coherence:
    /// `(2k−1)·μ_S < (1−ε'_q)/(1+ε'_q)`.
    PPrimeMutual,
    /// Reconstruction-norm family with `q = 2` (where `ε'_2 = 0`):
    /// `(2k−1)·μ_S < 1`.
    PPrimeMutualQ2,
    /// Reconstruction-norm family with `q = 2` (where `ε'_2 = 0`):
    /// `ζ_k + ζ_{k−1} < 1`.
    PPrimeCumulativeQ2,
    /// Classical per-atom mutual coherence at the matching entry sparsity:
    /// `(2k_e−1)·μ < 1` with `k_e` the largest entry count of a
    /// `k`-block-sparse vector.
    ClassicalMutual,
    /// Classical per-atom cumulative coherence at the matching entry
    /// sparsity: `ζ^c_{k_e} + ζ^c_{k_e−1} < 1`.
    ClassicalCumulative,
    /// Block-coherence baseline for a common block length `m`:
    /// `(2k−1)·m·μ_B < 1 − (m−1)·ν`.
    BlockCoherence,
    /// Intermediate condition between the mutual and cumulative forms:
    /// `√((1+σ_q)/(1+ε_q))·u_k + u_{k−1} < (1−ε_q)/(1+ε_q)`.
    IntermediateUK,
}

impl ConditionId {
    /// All conditions, in the order used for reports.
    pub const ALL: [ConditionId; 12] = [
        ConditionId::PCumulative,
        ConditionId::PMutual,
        ConditionId::PMutualNonredundant,
        ConditionId::PCumulativeNonredundant,
        ConditionId::PPrimeCumulative,
        ConditionId::PPrimeMutual,
        ConditionId::PPrimeMutualQ2,
        ConditionId::PPrimeCumulativeQ2,
        ConditionId::ClassicalMutual,
        ConditionId::ClassicalCumulative,
        ConditionId::BlockCoherence,
        ConditionId::IntermediateUK,
    ];

    /// Stable kebab-case name used in CLI arguments and JSON output.
    pub fn label(&self) -> &'static str {
        match self {
            ConditionId::PCumulative => "p-cumulative",
            ConditionId::PMutual => "p-mutual",
            ConditionId::PMutualNonredundant => "p-mutual-nonredundant",
            ConditionId::PCumulativeNonredundant => "p-cumulative-nonredundant",
            ConditionId::PPrimeCumulative => "pprime-cumulative",
            ConditionId::PPrimeMutual => "pprime-mutual",
            ConditionId::PPrimeMutualQ2 => "pprime-mutual-q2",
            ConditionId::PPrimeCumulativeQ2 => "pprime-cumulative-q2",
            ConditionId::ClassicalMutual => "classical-mutual",
            ConditionId::ClassicalCumulative => "classical-cumulative",
            ConditionId::BlockCoherence => "block-coherence",
            ConditionId::IntermediateUK => "intermediate-u",
        }
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ConditionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ConditionId::ALL
            .iter()
            .copied()
            .find(|id| id.label() == s)
            .ok_or_else(|| {
                Error::InvalidParameter(format!(
                    "unknown condition '{s}' (expected one of: {})",
                    ConditionId::ALL.map(|id| id.label()).join(", ")
                ))
            })
    }
}

impl Serialize for ConditionId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// Whether a certificate's verdict rests only on exactly computed constants.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exactness {
    /// Every ingredient was exact or exhaustively enumerated.
    Exact,
    /// At least one ingredient is a sampled lower bound, so the verdict may
    /// flip with a sharper constant.
    Optimistic,
}

impl Exactness {
    /// Stable string form used in JSON output.
    pub fn label(&self) -> &'static str {
        match self {
            Exactness::Exact => "exact",
            Exactness::Optimistic => "optimistic",
        }
    }
}

impl Serialize for Exactness {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

/// Outcome of evaluating one condition at one block-sparsity level.
#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    /// Which condition was evaluated.
    pub id: ConditionId,
    /// Block-sparsity level the condition was evaluated at.
    pub k: usize,
    /// Left-hand side of the inequality.
    pub lhs: f64,
    /// Right-hand side of the inequality.
    pub rhs: f64,
    /// Whether `lhs < rhs`.
    pub holds: bool,
    /// Provenance of the verdict.
    pub exactness: Exactness,
}

/// Everything a certifier may need, bundled so callers compute each piece
/// once. The coherence profile and isometry constants are always required;
/// the classical coherence numbers and the block structure are only needed
/// by the per-atom and block-coherence baselines.
#[derive(Debug, Clone, Copy)]
pub struct ConditionInputs<'a> {
    profile: &'a CoherenceProfile,
    constants: &'a IsometryConstants,
    classical: Option<&'a ClassicalCoherence>,
    structure: Option<&'a BlockStructure>,
}

impl<'a> ConditionInputs<'a> {
    /// Inputs sufficient for the subspace-coherence conditions.
    pub fn new(profile: &'a CoherenceProfile, constants: &'a IsometryConstants) -> Self {
        ConditionInputs {
            profile,
            constants,
            classical: None,
            structure: None,
        }
    }

    /// Adds the classical coherence numbers and the block structure, enabling
    /// the per-atom and block-coherence baselines.
    pub fn with_classical(
        mut self,
        classical: &'a ClassicalCoherence,
        structure: &'a BlockStructure,
    ) -> Self {
        self.classical = Some(classical);
        self.structure = Some(structure);
        self
    }

    fn classical(&self) -> Result<&'a ClassicalCoherence> {
        self.classical.ok_or_else(|| {
            Error::MissingInput("classical coherence numbers were not provided".into())
        })
    }

    fn structure(&self) -> Result<&'a BlockStructure> {
        self.structure
            .ok_or_else(|| Error::MissingInput("block structure was not provided".into()))
    }

    /// Largest number of nonzero entries a `k`-block-sparse vector can have:
    /// the sum of the `k` largest block lengths.
    fn entry_sparsity(&self, k: usize) -> Result<usize> {
        let mut sizes = self.structure()?.sizes().to_vec();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        Ok(sizes.iter().take(k).sum())
    }
}

/// `ζ^c_k` from the classical cumulative series, with `ζ^c_0 = 0`.
fn classical_zeta_at(classical: &ClassicalCoherence, k: usize) -> Result<f64> {
    if k == 0 {
        return Ok(0.0);
    }
    classical.zeta_classical.get(k - 1).copied().ok_or_else(|| {
        Error::MissingInput(format!(
            "classical cumulative series has {} entries but entry sparsity {} is needed",
            classical.zeta_classical.len(),
            k
        ))
    })
}

/// Evaluates `id` at block-sparsity `k`.
///
/// The verdict is `holds ⇔ lhs < rhs`. Conditions that consume `ε_q`/`σ_q`
/// or `ε'_q` inherit their exactness; the `q = 2` specializations and the
/// classical baselines use no estimated constant and are always exact.
/// Returns [`Error::MissingInput`] when a baseline needs classical numbers,
/// a common block length, or a longer cumulative series than was provided.
pub fn certify(inputs: &ConditionInputs, k: usize, id: ConditionId) -> Result<Certificate> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "conditions are defined for k ≥ 1".into(),
        ));
    }
    let profile = inputs.profile;
    let constants = inputs.constants;
    let eps = constants.eps.value;
    let sigma = constants.sigma.value;
    let eps_prime = constants.eps_prime.value;
    // (1−e)/(1+e), the right-hand side shared by the ε-dependent conditions.
    let shrink = |e: f64| (1.0 - e) / (1.0 + e);
    // √((1+σ)/(1+ε)), the amplification factor on the leading series term.
    let amplify = ((1.0 + sigma) / (1.0 + eps)).sqrt();
    let eps_exactness = if constants.eps.method.is_exact() && constants.sigma.method.is_exact() {
        Exactness::Exact
    } else {
        Exactness::Optimistic
    };
    let eps_prime_exactness = if constants.eps_prime.method.is_exact() {
        Exactness::Exact
    } else {
        Exactness::Optimistic
    };

    let (lhs, rhs, exactness) = match id {
        ConditionId::PCumulative => (
            amplify * profile.zeta_at(k) + profile.zeta_at(k - 1),
            shrink(eps),
            eps_exactness,
        ),
        ConditionId::PMutual => (
            (k as f64 * amplify + (k as f64 - 1.0)) * profile.mu_s(),
            shrink(eps),
            eps_exactness,
        ),
        ConditionId::PMutualNonredundant => (
            (2.0 * k as f64 - 1.0) * profile.mu_s(),
            shrink(eps),
            if constants.eps.method.is_exact() {
                Exactness::Exact
            } else {
                Exactness::Optimistic
            },
        ),
        ConditionId::PCumulativeNonredundant => (
            profile.zeta_at(k) + profile.zeta_at(k - 1),
            shrink(eps),
            if constants.eps.method.is_exact() {
                Exactness::Exact
            } else {
                Exactness::Optimistic
            },
        ),
        ConditionId::PPrimeCumulative => (
            profile.zeta_at(k) + profile.zeta_at(k - 1),
            shrink(eps_prime),
            eps_prime_exactness,
        ),
        ConditionId::PPrimeMutual => (
            (2.0 * k as f64 - 1.0) * profile.mu_s(),
            shrink(eps_prime),
            eps_prime_exactness,
        ),
        ConditionId::PPrimeMutualQ2 => (
            (2.0 * k as f64 - 1.0) * profile.mu_s(),
            1.0,
            Exactness::Exact,
        ),
        ConditionId::PPrimeCumulativeQ2 => (
            profile.zeta_at(k) + profile.zeta_at(k - 1),
            1.0,
            Exactness::Exact,
        ),
        ConditionId::ClassicalMutual => {
            let classical = inputs.classical()?;
            let k_e = inputs.entry_sparsity(k)?;
            (
                (2.0 * k_e as f64 - 1.0) * classical.mu,
                1.0,
                Exactness::Exact,
            )
        }
        ConditionId::ClassicalCumulative => {
            let classical = inputs.classical()?;
            let k_e = inputs.entry_sparsity(k)?;
            (
                classical_zeta_at(classical, k_e)? + classical_zeta_at(classical, k_e - 1)?,
                1.0,
                Exactness::Exact,
            )
        }
        ConditionId::BlockCoherence => {
            let classical = inputs.classical()?;
            let m = inputs.structure()?.uniform_size().ok_or_else(|| {
                Error::MissingInput(
                    "block-coherence condition needs a common block length".into(),
                )
            })?;
            let mu_b = classical.mu_b.ok_or_else(|| {
                Error::MissingInput("block-coherence μ_B was not computed".into())
            })?;
            (
                (2.0 * k as f64 - 1.0) * m as f64 * mu_b,
                1.0 - (m as f64 - 1.0) * classical.nu,
                Exactness::Exact,
            )
        }
        ConditionId::IntermediateUK => (
            amplify * profile.u_at(k) + profile.u_at(k - 1),
            shrink(eps),
            eps_exactness,
        ),
    };

    Ok(Certificate {
        id,
        k,
        lhs,
        rhs,
        holds: lhs < rhs,
        exactness,
    })
}

/// One row of the [`max_certified_k`] table.
#[derive(Debug, Clone, Serialize)]
pub struct CertifiedK {
    /// Which condition the row is about.
    pub id: ConditionId,
    /// Largest `k` the condition certifies, or `None` when it already fails
    /// at `k = 1`.
    pub max_k: Option<usize>,
    /// Provenance of the row's verdicts.
    pub exactness: Exactness,
}

/// Sweeps every condition over `k = 1, 2, …` up to the number of blocks and
/// reports the largest certified sparsity per condition.
///
/// Conditions whose inputs are missing (no classical numbers, no common
/// block length) are omitted from the table. Every left-hand side is
/// nondecreasing in `k`, so the sweep stops at the first failure; if the
/// classical cumulative series runs out mid-sweep the row honestly reports
/// the largest `k` the provided series could certify.
pub fn max_certified_k(inputs: &ConditionInputs) -> Vec<CertifiedK> {
    let cap = inputs.profile.pairwise().nrows();
    let mut rows = Vec::new();
    for id in ConditionId::ALL {
        let first = match certify(inputs, 1, id) {
            Ok(c) => c,
            Err(_) => continue,
        };
        let exactness = first.exactness;
        let mut max_k = None;
        if first.holds {
            max_k = Some(1);
            for k in 2..=cap {
                match certify(inputs, k, id) {
                    Ok(c) if c.holds => max_k = Some(k),
                    _ => break,
                }
            }
        }
        rows.push(CertifiedK {
            id,
            max_k,
            exactness,
        });
    }
    rows
}

/// A sampled block matrix whose rank fell below the structural maximum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct UniquenessWitness {
    /// Which trial produced the deficient matrix.
    pub trial: usize,
    /// The deficient rank.
    pub rank: usize,
}

/// Result of the randomized uniqueness probe.
#[derive(Debug, Clone, Serialize)]
pub struct UniquenessProbe {
    /// Half-width of the squared-norm band the sampled columns live in.
    pub tau: f64,
    /// Number of sampled matrices.
    pub trials: usize,
    /// `⌊min-rank / 2⌋`: the largest `k` with `rank ≥ 2k` across all trials.
    pub k_star: usize,
    /// Smallest rank observed over all trials.
    pub min_rank: usize,
    /// Trials whose rank fell below `min(n, D)`. Any witness is a definitive
    /// degeneracy; an empty list over finitely many trials is evidence only.
    pub failures: Vec<UniquenessWitness>,
}

/// Samples matrices with one random vector per subspace (squared norms
/// uniform in `[1−τ, 1+τ]`), computes their ranks, and reports
/// `k* = ⌊min-rank / 2⌋` together with every rank-deficient witness.
///
/// Deterministic given `seed`. Requires `τ ∈ [0, 1)` and at least one trial.
pub fn uniqueness_probe(
    dict: &Dictionary,
    tau: f64,
    trials: usize,
    seed: u64,
) -> Result<UniquenessProbe> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::InvalidParameter(format!(
            "uniqueness probe needs τ in [0, 1), got {tau}"
        )));
    }
    if trials == 0 {
        return Err(Error::InvalidParameter(
            "uniqueness probe needs at least one trial".into(),
        ));
    }
    let n = dict.n_blocks();
    let ambient = dict.ambient_dim();
    let full = n.min(ambient);
    let mut min_rank = usize::MAX;
    let mut failures = Vec::new();
    for trial in 0..trials {
        let mut stacked = DMatrix::zeros(ambient, n);
        for i in 0..n {
            let mut rng = chain_rng(seed, &[trial as u64, i as u64]);
            let direction = sampled_direction(dict.basis(i), &mut rng);
            let norm_sq = 1.0 - tau + rng.gen::<f64>() * 2.0 * tau;
            stacked.set_column(i, &(direction * norm_sq.sqrt()));
        }
        let rank = linalg::rank(&stacked);
        min_rank = min_rank.min(rank);
        if rank < full {
            failures.push(UniquenessWitness { trial, rank });
        }
    }
    Ok(UniquenessProbe {
        tau,
        trials,
        k_star: min_rank / 2,
        min_rank,
        failures,
    })
}

/// Result of the Monte-Carlo interpolation-bound check.
#[derive(Debug, Clone, Serialize)]
pub struct Lemma2Report {
    /// Number of supported blocks.
    pub k: usize,
    /// Half-width of the squared-norm band for the supported columns.
    pub alpha: f64,
    /// Squared-norm slack for the complement columns.
    pub beta: f64,
    /// The bound `√((1+α)(1+β))·ζ_k / (1 − [α + (1+α)·ζ_{k−1}])`.
    pub bound: f64,
    /// Largest `‖(E_kᵀE_k)⁻¹E_kᵀE_k̂‖₁→₁` observed over the samples.
    pub max_observed: f64,
    /// Number of sampled column configurations.
    pub samples: usize,
    /// Whether every sample stayed within the bound (up to fp slack).
    pub holds: bool,
}

/// Monte-Carlo check of the interpolation bound behind the cumulative
/// conditions: sample one column per supported subspace with squared norms in
/// `[1−α, 1+α]` and one column per complement subspace with norm at most
/// `√(1+β)`, then compare the max-absolute-column-sum operator norm of
/// `(E_kᵀE_k)⁻¹E_kᵀE_k̂` against
/// `√((1+α)(1+β))·ζ_k / (1 − [α + (1+α)·ζ_{k−1}])`.
///
/// Returns [`Error::DenominatorNonpositive`] when the bound is vacuous for
/// the dictionary's `ζ` values, and [`Error::InvalidParameter`] for a
/// malformed support, `α ∉ [0, 1)`, `β < 0`, or zero samples.
pub fn lemma2_check(
    dict: &Dictionary,
    support: &[usize],
    alpha: f64,
    beta: f64,
    samples: usize,
    seed: u64,
) -> Result<Lemma2Report> {
    let n = dict.n_blocks();
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::InvalidParameter(format!(
            "interpolation check needs α in [0, 1), got {alpha}"
        )));
    }
    if beta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "interpolation check needs β ≥ 0, got {beta}"
        )));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter(
            "interpolation check needs at least one sample".into(),
        ));
    }
    let k = support.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "support must name between 1 and {} blocks, got {k}",
            n - 1
        )));
    }
    let mut seen = vec![false; n];
    for &i in support {
        if i >= n {
            return Err(Error::InvalidParameter(format!(
                "support index {i} out of range for {n} blocks"
            )));
        }
        if seen[i] {
            return Err(Error::InvalidParameter(format!(
                "support index {i} appears twice"
            )));
        }
        seen[i] = true;
    }
    let complement: Vec<usize> = (0..n).filter(|i| !seen[*i]).collect();

    let profile = crate::coherence::profile(dict)?;
    let zeta_k = profile.zeta_at(k);
    let zeta_km1 = profile.zeta_at(k - 1);
    let denominator = 1.0 - (alpha + (1.0 + alpha) * zeta_km1);
    if denominator <= 0.0 {
        return Err(Error::DenominatorNonpositive(format!(
            "1 − [α + (1+α)·ζ_{{k−1}}] = {denominator:.6} with α = {alpha} and ζ_{{k−1}} = {zeta_km1:.6}"
        )));
    }
    let bound = ((1.0 + alpha) * (1.0 + beta)).sqrt() * zeta_k / denominator;

    let ambient = dict.ambient_dim();
    let mut max_observed = 0.0f64;
    for sample in 0..samples {
        let mut supported = DMatrix::zeros(ambient, k);
        for (col, &i) in support.iter().enumerate() {
            let mut rng = chain_rng(seed, &[sample as u64, i as u64]);
            let direction = sampled_direction(dict.basis(i), &mut rng);
            let norm_sq = 1.0 - alpha + rng.gen::<f64>() * 2.0 * alpha;
            supported.set_column(col, &(direction * norm_sq.sqrt()));
        }
        let mut complement_cols = DMatrix::zeros(ambient, complement.len());
        for (col, &i) in complement.iter().enumerate() {
            let mut rng = chain_rng(seed, &[sample as u64, (n + i) as u64]);
            let direction = sampled_direction(dict.basis(i), &mut rng);
            let low = (1.0 - beta).max(0.0);
            let norm_sq = low + rng.gen::<f64>() * (1.0 + beta - low);
            complement_cols.set_column(col, &(direction * norm_sq.sqrt()));
        }
        let gram = supported.tr_mul(&supported);
        let observed = match gram.try_inverse() {
            Some(inverse) => {
                let mapped = inverse * supported.tr_mul(&complement_cols);
                max_abs_column_sum(&mapped)
            }
            // A singular Gram means the operator norm is unbounded; under
            // the positive-denominator hypothesis this cannot happen, so
            // report it as a violation rather than skipping the sample.
            None => f64::INFINITY,
        };
        max_observed = max_observed.max(observed);
    }

    let slack = 1e-9 * bound.max(1.0);
    Ok(Lemma2Report {
        k,
        alpha,
        beta,
        bound,
        max_observed,
        samples,
        holds: max_observed <= bound + slack,
    })
}

/// A unit-norm vector drawn from the span of `basis`.
fn sampled_direction(basis: &DMatrix<f64>, rng: &mut ChaCha8Rng) -> DVector<f64> {
    loop {
        let weights =
            DVector::from_fn(basis.ncols(), |_, _| rng.sample::<f64, _>(StandardNormal));
        let vector = basis * weights;
        let norm = vector.norm();
        if norm > 1e-9 {
            return vector / norm;
        }
    }
}

/// Induced ℓ1→ℓ1 operator norm: the largest absolute column sum.
fn max_abs_column_sum(m: &DMatrix<f64>) -> f64 {
    (0..m.ncols())
        .map(|j| m.column(j).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}
