//! Deterministic benchmark sweeps over planted instances.
//!
//! A [`BenchmarkConfig`] describes a grid of solver variants evaluated on
//! `L₁` random dictionaries × `L₂` planted signals per dictionary, for each
//! block sparsity in `k_range`. Every dictionary and signal is derived from
//! the config seed alone, and results are merged in a fixed
//! `(family, q, k, trial)` order, so the emitted CSV is byte-identical no
//! matter how the work was scheduled across threads.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiments::metrics::{
    block_contribution_error, coefficient_recovery_error, reconstruction_error,
};
use crate::experiments::svg::{line_plot, Series};
use crate::model::{atomic_write, generate_dictionary, plant_signal};
use crate::norm::Norm;
use crate::rng::chain_seed;
use crate::solver::{Constraint, Corruption, Family, PreparedSolver, SolveSpec};

/// Seed-stream tags: dictionaries and signals draw from disjoint streams.
const DICT_STREAM: u64 = 1;
const SIGNAL_STREAM: u64 = 2;

/// One solver variant in the benchmark grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariantSpec {
    /// Objective family.
    pub family: Family,
    /// Block norm.
    pub q: Norm,
}

fn default_variants() -> Vec<VariantSpec> {
    let mut v = Vec::new();
    for family in Family::ALL {
        for q in Norm::ALL {
            v.push(VariantSpec { family, q });
        }
    }
    v
}

fn default_tol() -> f64 {
    1e-6
}

fn default_max_iter() -> usize {
    10_000
}

fn default_retain_rows() -> bool {
    true
}

/// Full description of one benchmark sweep.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Ambient dimension `D`.
    pub ambient_dim: usize,
    /// Number of blocks `n`.
    pub n_blocks: usize,
    /// Subspace dimension `d` (uniform).
    pub subspace_dim: usize,
    /// Block length `m ≥ d` (uniform).
    pub block_len: usize,
    /// Block sparsities to sweep; every entry must lie in `[1, n]`.
    pub k_range: Vec<usize>,
    /// `L₁`: independent dictionary draws.
    pub dictionary_draws: usize,
    /// `L₂`: planted signals per dictionary (so `L = L₁·L₂` trials per
    /// variant and sparsity).
    pub signals_per_dictionary: usize,
    /// Solver variants to run; defaults to both families × all three norms.
    #[serde(default = "default_variants")]
    pub variants: Vec<VariantSpec>,
    /// Root seed; all randomness derives from it.
    pub seed: u64,
    /// Worker threads; 0 uses the process-wide default pool.
    #[serde(default)]
    pub threads: usize,
    /// Whether the report keeps every per-trial row.
    #[serde(default = "default_retain_rows")]
    pub retain_rows: bool,
    /// Optional CSV output path.
    #[serde(default)]
    pub csv_path: Option<PathBuf>,
    /// Optional directory for one SVG per metric.
    #[serde(default)]
    pub svg_dir: Option<PathBuf>,
    /// Solver stopping tolerance (applied to both residuals).
    #[serde(default = "default_tol")]
    pub tol: f64,
    /// Solver iteration budget.
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

impl BenchmarkConfig {
    /// Rejects empty or out-of-range sweeps before any work starts.
    pub fn validate(&self) -> Result<()> {
        if self.k_range.is_empty() {
            return Err(Error::InvalidParameter(
                "benchmark k_range must not be empty".into(),
            ));
        }
        if let Some(&bad) = self
            .k_range
            .iter()
            .find(|&&k| k == 0 || k > self.n_blocks)
        {
            return Err(Error::InvalidParameter(format!(
                "k = {bad} outside [1, {}]",
                self.n_blocks
            )));
        }
        if self.dictionary_draws == 0 || self.signals_per_dictionary == 0 {
            return Err(Error::InvalidParameter(
                "benchmark needs dictionary_draws ≥ 1 and signals_per_dictionary ≥ 1".into(),
            ));
        }
        if self.variants.is_empty() {
            return Err(Error::InvalidParameter(
                "benchmark needs at least one solver variant".into(),
            ));
        }
        for (a, v) in self.variants.iter().enumerate() {
            if self.variants[..a].contains(v) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate variant {}/{} in the grid",
                    v.family, v.q
                )));
            }
        }
        if !(self.tol > 0.0) || self.max_iter == 0 {
            return Err(Error::InvalidParameter(
                "benchmark needs tol > 0 and max_iter ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// One solved trial.
#[derive(Debug, Clone, Serialize)]
pub struct TrialRow {
    /// Objective family.
    pub family: Family,
    /// Block norm.
    pub q: Norm,
    /// Planted block sparsity.
    pub k: usize,
    /// Trial index `l₁·L₂ + l₂`, global over dictionaries.
    pub trial: usize,
    /// Reconstruction error on the true support.
    pub rec_err: f64,
    /// Block contribution error.
    pub blk_err: f64,
    /// Coefficient recovery error; `None` for redundant blocks.
    pub coef_err: Option<f64>,
    /// Whether the solver met its tolerances within the budget.
    pub converged: bool,
}

/// Mean ± standard error per `(family, q, k)` cell.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    /// Objective family.
    pub family: Family,
    /// Block norm.
    pub q: Norm,
    /// Planted block sparsity.
    pub k: usize,
    /// Trials in the cell.
    pub trials: usize,
    /// How many of them converged.
    pub converged_trials: usize,
    /// Mean reconstruction error.
    pub mean_rec_err: f64,
    /// Standard error of the reconstruction error.
    pub se_rec_err: f64,
    /// Mean block contribution error.
    pub mean_blk_err: f64,
    /// Standard error of the block contribution error.
    pub se_blk_err: f64,
    /// Mean coefficient recovery error (non-redundant configs only).
    pub mean_coef_err: Option<f64>,
    /// Standard error of the coefficient recovery error.
    pub se_coef_err: Option<f64>,
}

/// Aggregated benchmark results.
#[derive(Debug, Clone, Serialize)]
pub struct RecoveryReport {
    /// One row per `(family, q, k)`, in that order.
    pub summaries: Vec<SummaryRow>,
    /// Per-trial rows when the config asked to retain them.
    pub rows: Option<Vec<TrialRow>>,
}

/// Runs the full sweep described by `cfg`.
///
/// Deterministic given the config (including across thread counts): all
/// randomness is chained from `cfg.seed`, and rows are merged in
/// `(family, q, k, trial)` order before any output is produced. Solver
/// non-convergence is recorded on the row, never raised as an error. When
/// `csv_path`/`svg_dir` are set, the CSV and one SVG per metric are written
/// atomically.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<RecoveryReport> {
    cfg.validate()?;

    let sweep = || -> Result<Vec<Vec<TrialRow>>> {
        (0..cfg.dictionary_draws)
            .into_par_iter()
            .map(|l1| dictionary_rows(cfg, l1))
            .collect()
    };
    let per_dictionary = if cfg.threads == 0 {
        sweep()?
    } else {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.threads)
            .build()
            .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?
            .install(sweep)?
    };

    let mut rows: Vec<TrialRow> = per_dictionary.into_iter().flatten().collect();
    rows.sort_by(|a, b| {
        (a.family.label(), a.q.label(), a.k, a.trial)
            .cmp(&(b.family.label(), b.q.label(), b.k, b.trial))
    });

    let summaries = summarize(&rows);

    if let Some(path) = &cfg.csv_path {
        atomic_write(path, render_csv(&rows).as_bytes())?;
    }
    if let Some(dir) = &cfg.svg_dir {
        std::fs::create_dir_all(dir)?;
        write_metric_svgs(dir, &summaries)?;
    }

    Ok(RecoveryReport {
        summaries,
        rows: cfg.retain_rows.then_some(rows),
    })
}

/// All trials for one dictionary draw. Factorizations are shared across
/// every signal and sparsity solved against that dictionary.
fn dictionary_rows(cfg: &BenchmarkConfig, l1: usize) -> Result<Vec<TrialRow>> {
    let dict = generate_dictionary(
        cfg.ambient_dim,
        cfg.n_blocks,
        cfg.subspace_dim,
        cfg.block_len,
        chain_seed(cfg.seed, &[DICT_STREAM, l1 as u64]),
    )?;
    let non_redundant = !dict.is_redundant();

    let mut solvers = Vec::with_capacity(cfg.variants.len());
    for v in &cfg.variants {
        let spec = SolveSpec {
            family: v.family,
            q: v.q,
            constraint: Constraint::Equality,
            corruption: Corruption::None,
            tol_primal: cfg.tol,
            tol_dual: cfg.tol,
            max_iter: cfg.max_iter,
            rho: 1.0,
        };
        solvers.push((*v, PreparedSolver::new(&dict, spec)?));
    }

    let mut rows = Vec::new();
    for &k in &cfg.k_range {
        for l2 in 0..cfg.signals_per_dictionary {
            let inst = plant_signal(
                &dict,
                k,
                chain_seed(cfg.seed, &[SIGNAL_STREAM, l1 as u64, k as u64, l2 as u64]),
            )?;
            let trial = l1 * cfg.signals_per_dictionary + l2;
            for (v, solver) in &solvers {
                let sol = solver.solve(inst.signal())?;
                let rec_err = reconstruction_error(
                    inst.signal(),
                    &dict,
                    &sol.coefficients,
                    inst.support(),
                )?;
                let blk_err = block_contribution_error(&dict, &sol.coefficients, inst.support());
                let coef_err = if non_redundant {
                    Some(coefficient_recovery_error(
                        &dict,
                        &sol.coefficients,
                        inst.truth(),
                    )?)
                } else {
                    None
                };
                rows.push(TrialRow {
                    family: v.family,
                    q: v.q,
                    k,
                    trial,
                    rec_err,
                    blk_err,
                    coef_err,
                    converged: sol.converged,
                });
            }
        }
    }
    Ok(rows)
}

fn summarize(rows: &[TrialRow]) -> Vec<SummaryRow> {
    let mut summaries = Vec::new();
    let mut start = 0;
    while start < rows.len() {
        let key = (rows[start].family, rows[start].q, rows[start].k);
        let mut end = start;
        while end < rows.len() && (rows[end].family, rows[end].q, rows[end].k) == key {
            end += 1;
        }
        let cell = &rows[start..end];
        let (mean_rec, se_rec) = mean_se(cell.iter().map(|r| r.rec_err));
        let (mean_blk, se_blk) = mean_se(cell.iter().map(|r| r.blk_err));
        let coef: Vec<f64> = cell.iter().filter_map(|r| r.coef_err).collect();
        let (mean_coef, se_coef) = if coef.len() == cell.len() {
            let (m, s) = mean_se(coef.iter().copied());
            (Some(m), Some(s))
        } else {
            (None, None)
        };
        summaries.push(SummaryRow {
            family: key.0,
            q: key.1,
            k: key.2,
            trials: cell.len(),
            converged_trials: cell.iter().filter(|r| r.converged).count(),
            mean_rec_err: mean_rec,
            se_rec_err: se_rec,
            mean_blk_err: mean_blk,
            se_blk_err: se_blk,
            mean_coef_err: mean_coef,
            se_coef_err: se_coef,
        });
        start = end;
    }
    summaries
}

fn mean_se(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (0.0, 0.0);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    (mean, (var / n as f64).sqrt())
}

/// Renders the per-trial rows as CSV with a fixed header and fixed-precision
/// scientific floats, so equal rows always produce equal bytes.
pub fn render_csv(rows: &[TrialRow]) -> String {
    let mut out = String::from("family,q,k,trial,rec_err,blk_err,coef_err,converged\n");
    for r in rows {
        let coef = r
            .coef_err
            .map(|v| format!("{v:.9e}"))
            .unwrap_or_default();
        out.push_str(&format!(
            "{},{},{},{},{:.9e},{:.9e},{},{}\n",
            r.family.label(),
            r.q.label(),
            r.k,
            r.trial,
            r.rec_err,
            r.blk_err,
            coef,
            r.converged
        ));
    }
    out
}

fn write_metric_svgs(dir: &Path, summaries: &[SummaryRow]) -> Result<()> {
    let metrics: [(&str, &str, Box<dyn Fn(&SummaryRow) -> Option<f64>>); 3] = [
        (
            "reconstruction_error",
            "mean reconstruction error",
            Box::new(|s| Some(s.mean_rec_err)),
        ),
        (
            "block_contribution_error",
            "mean block contribution error",
            Box::new(|s| Some(s.mean_blk_err)),
        ),
        (
            "coefficient_recovery_error",
            "mean coefficient recovery error",
            Box::new(|s| s.mean_coef_err),
        ),
    ];
    for (name, y_label, value) in &metrics {
        let mut series: Vec<Series> = Vec::new();
        for s in summaries {
            let Some(v) = value(s) else { continue };
            let label = format!("{} q={}", s.family, s.q);
            match series.iter_mut().find(|sr| sr.label == label) {
                Some(sr) => sr.points.push((s.k as f64, v)),
                None => series.push(Series {
                    label,
                    points: vec![(s.k as f64, v)],
                }),
            }
        }
        if series.is_empty() {
            continue;
        }
        let svg = line_plot(name, "block sparsity k", y_label, &series);
        atomic_write(&dir.join(format!("{name}.svg")), svg.as_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(seed: u64) -> BenchmarkConfig {
        BenchmarkConfig {
            ambient_dim: 16,
            n_blocks: 4,
            subspace_dim: 2,
            block_len: 2,
            k_range: vec![1, 2],
            dictionary_draws: 2,
            signals_per_dictionary: 2,
            variants: vec![
                VariantSpec {
                    family: Family::ReconstructionNorm,
                    q: Norm::L2,
                },
                VariantSpec {
                    family: Family::CoefficientNorm,
                    q: Norm::L1,
                },
            ],
            seed,
            threads: 0,
            retain_rows: true,
            csv_path: None,
            svg_dir: None,
            tol: 1e-6,
            max_iter: 10_000,
        }
    }

    #[test]
    fn sweep_recovers_planted_signals_at_low_sparsity() {
        let report = run_benchmark(&small_config(3)).unwrap();
        assert_eq!(report.summaries.len(), 4, "2 variants × 2 sparsities");
        for s in &report.summaries {
            assert_eq!(s.trials, 4);
            if s.k == 1 {
                assert!(
                    s.mean_rec_err < 1e-3,
                    "{}/{} k=1 rec {}",
                    s.family,
                    s.q,
                    s.mean_rec_err
                );
                assert!(s.mean_blk_err < 1e-2, "blk {}", s.mean_blk_err);
            }
            assert!(s.mean_coef_err.is_some(), "non-redundant config");
            assert!((0.0..=1.0).contains(&s.mean_blk_err));
        }
        let rows = report.rows.unwrap();
        assert_eq!(rows.len(), 16);
        assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.blk_err)));
    }

    #[test]
    fn csv_bytes_are_identical_across_thread_counts() {
        let serial = {
            let mut cfg = small_config(11);
            cfg.threads = 1;
            run_benchmark(&cfg).unwrap()
        };
        let parallel = {
            let mut cfg = small_config(11);
            cfg.threads = 4;
            run_benchmark(&cfg).unwrap()
        };
        let a = render_csv(serial.rows.as_ref().unwrap());
        let b = render_csv(parallel.rows.as_ref().unwrap());
        assert_eq!(a, b);
        assert!(a.lines().count() == 17, "header + 16 rows");
        assert!(a.starts_with("family,q,k,trial,rec_err,blk_err,coef_err,converged\n"));
    }

    #[test]
    fn rows_arrive_sorted_by_family_q_k_trial() {
        let report = run_benchmark(&small_config(7)).unwrap();
        let rows = report.rows.unwrap();
        let keys: Vec<_> = rows
            .iter()
            .map(|r| (r.family.label(), r.q.label(), r.k, r.trial))
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        assert_eq!(keys, sorted);
        // Trials within a cell are exactly 0..L.
        let first_cell: Vec<usize> = rows
            .iter()
            .filter(|r| {
                r.family == Family::CoefficientNorm && r.q == Norm::L1 && r.k == 1
            })
            .map(|r| r.trial)
            .collect();
        assert_eq!(first_cell, vec![0, 1, 2, 3]);
    }

    #[test]
    fn a_starved_iteration_budget_is_flagged_not_fatal() {
        let mut cfg = small_config(5);
        cfg.max_iter = 2;
        let report = run_benchmark(&cfg).unwrap();
        let rows = report.rows.unwrap();
        assert_eq!(rows.len(), 16, "every trial still produced a row");
        assert!(rows.iter().all(|r| !r.converged));
        assert!(report.summaries.iter().all(|s| s.converged_trials == 0));
    }

    #[test]
    fn redundant_blocks_omit_the_coefficient_column() {
        let mut cfg = small_config(9);
        cfg.ambient_dim = 24;
        cfg.block_len = 4; // m = 2d
        let report = run_benchmark(&cfg).unwrap();
        assert!(report
            .summaries
            .iter()
            .all(|s| s.mean_coef_err.is_none() && s.se_coef_err.is_none()));
        let rows = report.rows.unwrap();
        assert!(rows.iter().all(|r| r.coef_err.is_none()));
        let csv = render_csv(&rows);
        for line in csv.lines().skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            assert_eq!(fields.len(), 8);
            assert!(fields[6].is_empty(), "coef field empty: {line}");
        }
    }

    #[test]
    fn outputs_land_on_disk_when_paths_are_given() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_config(13);
        cfg.k_range = vec![1];
        cfg.csv_path = Some(dir.path().join("results.csv"));
        cfg.svg_dir = Some(dir.path().join("plots"));
        let report = run_benchmark(&cfg).unwrap();

        let csv = std::fs::read_to_string(dir.path().join("results.csv")).unwrap();
        assert_eq!(csv, render_csv(report.rows.as_ref().unwrap()));
        for name in [
            "reconstruction_error.svg",
            "block_contribution_error.svg",
            "coefficient_recovery_error.svg",
        ] {
            let svg = std::fs::read_to_string(dir.path().join("plots").join(name)).unwrap();
            assert!(svg.contains("<polyline"), "{name} has curves");
        }
    }

    #[test]
    fn invalid_configs_are_rejected_up_front() {
        let mut cfg = small_config(1);
        cfg.k_range = vec![];
        assert!(run_benchmark(&cfg).is_err());

        let mut cfg = small_config(1);
        cfg.k_range = vec![0];
        assert!(run_benchmark(&cfg).is_err());

        let mut cfg = small_config(1);
        cfg.k_range = vec![5]; // > n
        assert!(run_benchmark(&cfg).is_err());

        let mut cfg = small_config(1);
        cfg.dictionary_draws = 0;
        assert!(run_benchmark(&cfg).is_err());

        let mut cfg = small_config(1);
        cfg.variants.push(cfg.variants[0]);
        assert!(run_benchmark(&cfg).is_err());
    }

    #[test]
    fn config_round_trips_through_json_with_defaults() {
        let json = r#"{
            "ambient_dim": 60, "n_blocks": 20, "subspace_dim": 4, "block_len": 4,
            "k_range": [1, 2, 3, 4, 5, 6],
            "dictionary_draws": 50, "signals_per_dictionary": 10,
            "seed": 2024
        }"#;
        let cfg: BenchmarkConfig = serde_json::from_str(json).unwrap();
        assert_eq!(cfg.variants.len(), 6, "defaults to the full grid");
        assert_eq!(cfg.threads, 0);
        assert!(cfg.retain_rows);
        assert_eq!(cfg.max_iter, 10_000);
        cfg.validate().unwrap();

        // Unknown keys are config mistakes, not silently ignored.
        assert!(serde_json::from_str::<BenchmarkConfig>(
            r#"{"ambient_dim": 1, "oops": 2}"#
        )
        .is_err());
    }
}
