//! Command-line entry point.
//!
//! One binary, seven subcommands: `gen` writes dictionaries and planted
//! instances to `.bsd` files, `coherence` / `isometry` / `check` analyze a
//! dictionary, `solve` runs one convex program on a planted instance,
//! `bench` sweeps recovery experiments from a JSON config, and `classify`
//! runs the image classification pipeline over directories of grayscale
//! images.
//!
//! Contract: exit code 0 on success, 1 on domain errors (bad files,
//! infeasible parameters, solver breakdown — and `solve` on an instance the
//! solver did not converge on), 2 on usage errors. Every output file is
//! written atomically, and every subcommand writes the exact resolved
//! configuration next to its outputs (`<name>.config.json`, or
//! `config.json` inside an output directory) so a run can be reproduced
//! from its artifacts alone.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use serde_json::json;

use crate::classify::{
    fit_reducer, ingest_images, Classification, LabeledDictionary, ReducerKind, CLASSIFY_DELTA,
};
use crate::coherence::{self, ClassicalCoherence, CoherenceProfile};
use crate::conditions::{certify, max_certified_k, ConditionId, ConditionInputs};
use crate::error::{Error, Result};
use crate::experiments::{run_benchmark, BenchmarkConfig};
use crate::isometry::{self, IsometryConstants, IsometrySettings};
use crate::model::{
    atomic_write, generate_dictionary, load_dictionary, load_instance, plant_signal,
    save_dictionary, save_instance, Dictionary,
};
use crate::norm::Norm;
use crate::rng::chain_seed;
use crate::solver::{
    recovered_support, Constraint, Corruption, Family, PreparedSolver, SolveSpec,
};

/// Relative block-score threshold used when reporting a recovered support.
const SUPPORT_REL_TOL: f64 = 1e-3;

/// Environment variable consulted for the default `--threads` value.
pub const THREADS_ENV: &str = "BLOCKSPARSE_THREADS";

fn default_threads() -> usize {
    parse_threads(std::env::var(THREADS_ENV).ok().as_deref())
}

/// `0` (use the global pool) unless the variable holds a positive integer.
fn parse_threads(var: Option<&str>) -> usize {
    var.and_then(|s| s.trim().parse().ok()).unwrap_or(0)
}

#[derive(Debug, Parser)]
#[command(
    name = "blocksparse",
    version,
    about = "Block-sparse recovery toolkit: generation, analysis, solving, \
             benchmarks, and classification"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by every subcommand.
#[derive(Debug, Args, Serialize)]
struct GlobalArgs {
    /// Root seed for all randomized work.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = the process default pool). The BLOCKSPARSE_THREADS
    /// environment variable sets the default.
    #[arg(long, global = true, default_value_t = default_threads())]
    threads: usize,

    /// Output directory for subcommands that write multiple files.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,

    /// Log filter: error, warn, info, debug, or trace.
    #[arg(long, global = true, default_value = "warn")]
    log_level: String,

    /// Work cap for support-enumeration searches.
    #[arg(long, global = true, default_value_t = 200_000)]
    oracle_cap: usize,

    /// Overrides the enumeration caps of the isometry computations
    /// (submatrix and face/sign enumeration budgets).
    #[arg(long, global = true)]
    enum_cap: Option<usize>,
}

impl GlobalArgs {
    fn validate(&self) -> Result<()> {
        if self.oracle_cap == 0 {
            return Err(Error::InvalidParameter("--oracle-cap must be > 0".into()));
        }
        if self.enum_cap == Some(0) {
            return Err(Error::InvalidParameter("--enum-cap must be > 0".into()));
        }
        Ok(())
    }

    /// Isometry budgets with the global seed and any cap override applied.
    fn isometry_settings(&self, samples: usize, refine_steps: usize) -> IsometrySettings {
        let mut settings = IsometrySettings {
            samples,
            refine_steps,
            seed: self.seed,
            ..IsometrySettings::default()
        };
        if let Some(cap) = self.enum_cap {
            settings.submatrix_cap = cap;
            settings.ternary_cap = cap;
        }
        settings
    }
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a random dictionary, optionally with a planted signal.
    Gen(GenArgs),
    /// Coherence profile of a dictionary: JSON summary plus pairwise CSV.
    Coherence(CoherenceArgs),
    /// Intra-block isometry constants with method tags, as JSON.
    Isometry(IsometryArgs),
    /// Run one convex recovery program on a planted instance.
    Solve(SolveArgs),
    /// Evaluate the recovery-condition table for a dictionary.
    Check(CheckArgs),
    /// Run the recovery benchmark sweep described by a JSON config.
    Bench(BenchArgs),
    /// Classify grayscale test images against labeled training directories.
    Classify(ClassifyArgs),
}

#[derive(Debug, Args, Serialize)]
struct GenArgs {
    /// Ambient dimension D.
    #[arg(long)]
    ambient_dim: usize,
    /// Number of blocks n.
    #[arg(long)]
    blocks: usize,
    /// Subspace dimension d per block.
    #[arg(long)]
    subspace_dim: usize,
    /// Columns per block m (defaults to the subspace dimension).
    #[arg(long)]
    block_len: Option<usize>,
    /// Plant a k-block-sparse signal and save a full instance.
    #[arg(long)]
    k: Option<usize>,
    /// Destination `.bsd` file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct CoherenceArgs {
    /// Input `.bsd` file (dictionary or instance).
    #[arg(long)]
    input: PathBuf,
    /// Length of the classical cumulative series (defaults to the number of
    /// columns).
    #[arg(long)]
    k_max: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
struct IsometryArgs {
    /// Input `.bsd` file (dictionary or instance).
    #[arg(long)]
    input: PathBuf,
    /// Block norm: 1, 2, inf, or all.
    #[arg(long, default_value = "all", value_parser = parse_norm_selection)]
    q: NormSelection,
    /// Sphere samples per block for the sampled paths.
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Local refinement steps applied to the best samples.
    #[arg(long, default_value_t = 50)]
    refine_steps: usize,
}

#[derive(Debug, Args, Serialize)]
struct SolveArgs {
    /// Input `.bsd` instance (dictionary plus signal).
    #[arg(long)]
    input: PathBuf,
    /// Objective family: p (coefficient norms) or pprime (reconstruction
    /// norms).
    #[arg(long, value_parser = parse_family)]
    family: Family,
    /// Block norm: 1, 2, or inf.
    #[arg(long, value_parser = parse_norm)]
    q: Norm,
    /// Ball radius δ; omit for the equality constraint.
    #[arg(long)]
    delta: Option<f64>,
    /// Model sparse corruption by appending identity blocks.
    #[arg(long)]
    corrupt: bool,
    /// Stopping tolerance (applied to both ADMM residuals).
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
    /// Iteration budget.
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    /// Destination JSON file.
    #[arg(long)]
    output: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct CheckArgs {
    /// Input `.bsd` file (dictionary or instance).
    #[arg(long)]
    input: PathBuf,
    /// Block norm the isometry constants are computed for.
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    q: Norm,
    /// Evaluate every condition at this block sparsity instead of sweeping
    /// for the largest certified k.
    #[arg(long)]
    k: Option<usize>,
    /// Comma-separated condition subset (default: all).
    #[arg(long, value_delimiter = ',', value_parser = parse_condition)]
    conditions: Option<Vec<ConditionId>>,
}

#[derive(Debug, Args, Serialize)]
struct BenchArgs {
    /// Benchmark configuration JSON file.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args, Serialize)]
struct ClassifyArgs {
    /// Training root: one subdirectory of grayscale images per class.
    #[arg(long)]
    train: PathBuf,
    /// Test root: subdirectories named like the training classes.
    #[arg(long)]
    test: PathBuf,
    /// Feature reduction: eigen, rand, or down.
    #[arg(long, default_value = "eigen", value_parser = parse_reducer)]
    reduce: ReducerChoice,
    /// Feature dimension after reduction.
    #[arg(long)]
    dim: usize,
    /// Objective family for the classifier's convex solve.
    #[arg(long, default_value = "pprime", value_parser = parse_family)]
    family: Family,
    /// Block norm for the classifier's convex solve.
    #[arg(long, default_value = "2", value_parser = parse_norm)]
    q: Norm,
    /// Ball radius δ for the classifier's convex solve.
    #[arg(long, default_value_t = CLASSIFY_DELTA)]
    delta: f64,
}

/// `--q` argument of the isometry subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NormSelection {
    One(Norm),
    All,
}

impl NormSelection {
    fn norms(self) -> Vec<Norm> {
        match self {
            NormSelection::One(q) => vec![q],
            NormSelection::All => Norm::ALL.to_vec(),
        }
    }
}

impl Serialize for NormSelection {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NormSelection::One(q) => q.serialize(s),
            NormSelection::All => s.serialize_str("all"),
        }
    }
}

/// `--reduce` argument of the classify subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ReducerChoice {
    Eigen,
    Rand,
    Down,
}

impl ReducerChoice {
    fn label(self) -> &'static str {
        match self {
            ReducerChoice::Eigen => "eigen",
            ReducerChoice::Rand => "rand",
            ReducerChoice::Down => "down",
        }
    }

    /// The concrete reducer for a given input dimension. Downsampling keeps
    /// every `input_dim / dim`-th coordinate, so `dim` must divide evenly.
    fn kind(self, input_dim: usize, dim: usize) -> Result<ReducerKind> {
        match self {
            ReducerChoice::Eigen => Ok(ReducerKind::Eigen),
            ReducerChoice::Rand => Ok(ReducerKind::RandomProjection),
            ReducerChoice::Down => {
                if dim == 0 || input_dim % dim != 0 {
                    return Err(Error::NonDivisibleDownsample(format!(
                        "target dimension {dim} does not divide input dimension {input_dim}"
                    )));
                }
                Ok(ReducerKind::Downsample {
                    factor: input_dim / dim,
                })
            }
        }
    }
}

impl Serialize for ReducerChoice {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.label())
    }
}

fn parse_family(s: &str) -> Result<Family> {
    Family::from_str(s)
}

fn parse_norm(s: &str) -> Result<Norm> {
    Norm::from_str(s)
}

fn parse_norm_selection(s: &str) -> Result<NormSelection> {
    if s == "all" {
        Ok(NormSelection::All)
    } else {
        Norm::from_str(s).map(NormSelection::One)
    }
}

fn parse_condition(s: &str) -> Result<ConditionId> {
    ConditionId::from_str(s)
}

fn parse_reducer(s: &str) -> Result<ReducerChoice> {
    match s {
        "eigen" => Ok(ReducerChoice::Eigen),
        "rand" => Ok(ReducerChoice::Rand),
        "down" => Ok(ReducerChoice::Down),
        other => Err(Error::InvalidParameter(format!(
            "unknown reducer '{other}' (expected eigen, rand, or down)"
        ))),
    }
}

/// Parses `argv` and runs the selected subcommand.
///
/// Returns the process exit code: 0 on success, 1 on domain errors (also
/// when `solve` finishes without converging), 2 on usage errors.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let _ = err.print();
            return code;
        }
    };
    init_logging(&cli.global.log_level);
    if let Err(err) = cli.global.validate() {
        eprintln!("error: {err}");
        return 1;
    }
    if cli.global.threads > 0 {
        // Tests and embedding callers may have configured the pool already;
        // a second configuration attempt is not an error.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(cli.global.threads)
            .build_global();
    }
    match run(&cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            1
        }
    }
}

fn init_logging(filter: &str) {
    let level = filter.parse().unwrap_or(log::LevelFilter::Warn);
    let _ = env_logger::Builder::new().filter_level(level).try_init();
}

fn run(cli: &Cli) -> Result<i32> {
    match &cli.command {
        Command::Gen(args) => run_gen(&cli.global, args),
        Command::Coherence(args) => run_coherence(&cli.global, args),
        Command::Isometry(args) => run_isometry(&cli.global, args),
        Command::Solve(args) => run_solve(&cli.global, args),
        Command::Check(args) => run_check(&cli.global, args),
        Command::Bench(args) => run_bench(&cli.global, args),
        Command::Classify(args) => run_classify(&cli.global, args),
    }
}

/// `out.bsd` → `out.config.json`: the resolved-config echo path for a
/// single-file output.
fn config_echo_path(output: &Path) -> PathBuf {
    output.with_extension("config.json")
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)
        .map_err(|e| Error::InvalidParameter(format!("serializing {}: {e}", path.display())))?;
    bytes.push(b'\n');
    atomic_write(path, &bytes)
}

/// Echo of the exact resolved configuration, written next to the outputs.
fn write_echo(path: &Path, command: &str, global: &GlobalArgs, args: &impl Serialize) -> Result<()> {
    write_json(
        path,
        &json!({ "command": command, "global": global, "args": args }),
    )
}

/// Loads the dictionary from a `.bsd` file holding either a bare dictionary
/// or a full instance.
fn load_any_dictionary(path: &Path) -> Result<Dictionary> {
    match load_dictionary(path) {
        Ok(dict) => Ok(dict),
        Err(dict_err) => match load_instance(path) {
            Ok(inst) => Ok(inst.dictionary().clone()),
            Err(_) => Err(dict_err),
        },
    }
}

fn run_gen(global: &GlobalArgs, args: &GenArgs) -> Result<i32> {
    let m = args.block_len.unwrap_or(args.subspace_dim);
    let dict = generate_dictionary(
        args.ambient_dim,
        args.blocks,
        args.subspace_dim,
        m,
        global.seed,
    )?;
    match args.k {
        Some(k) => {
            let inst = plant_signal(&dict, k, chain_seed(global.seed, &[1]))?;
            save_instance(&inst, &args.output)?;
        }
        None => save_dictionary(&dict, &args.output)?,
    }
    write_echo(&config_echo_path(&args.output), "gen", global, args)?;
    println!(
        "gen: wrote {} (D={}, n={}, d={}, m={}{})",
        args.output.display(),
        args.ambient_dim,
        args.blocks,
        args.subspace_dim,
        m,
        args.k.map_or(String::new(), |k| format!(", planted k={k}")),
    );
    Ok(0)
}

fn run_coherence(global: &GlobalArgs, args: &CoherenceArgs) -> Result<i32> {
    let dict = load_any_dictionary(&args.input)?;
    let profile = coherence::profile(&dict)?;
    let k_max = args.k_max.unwrap_or_else(|| dict.matrix().ncols());
    let classical = coherence::classical(&dict, k_max)?;

    std::fs::create_dir_all(&global.out_dir)?;
    write_json(
        &global.out_dir.join("profile.json"),
        &profile_json(&dict, &profile, &classical),
    )?;
    atomic_write(
        &global.out_dir.join("pairwise.csv"),
        pairwise_csv(profile.pairwise()).as_bytes(),
    )?;
    write_echo(&global.out_dir.join("config.json"), "coherence", global, args)?;
    println!(
        "coherence: mu_s={:.6} over {} blocks; wrote profile.json and pairwise.csv to {}",
        profile.mu_s(),
        dict.n_blocks(),
        global.out_dir.display(),
    );
    Ok(0)
}

fn profile_json(
    dict: &Dictionary,
    profile: &CoherenceProfile,
    classical: &ClassicalCoherence,
) -> serde_json::Value {
    json!({
        "n_blocks": dict.n_blocks(),
        "block_sizes": dict.structure().sizes(),
        "mu_s": profile.mu_s(),
        "zeta": profile.zeta(),
        "u": profile.u(),
        "classical": classical,
    })
}

fn pairwise_csv(pairwise: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..pairwise.nrows() {
        for j in 0..pairwise.ncols() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.9e}", pairwise[(i, j)]);
        }
        out.push('\n');
    }
    out
}

fn run_isometry(global: &GlobalArgs, args: &IsometryArgs) -> Result<i32> {
    let dict = load_any_dictionary(&args.input)?;
    let settings = global.isometry_settings(args.samples, args.refine_steps);
    let mut all: Vec<IsometryConstants> = Vec::new();
    for q in args.q.norms() {
        all.push(isometry::constants(&dict, q, &settings)?);
    }

    std::fs::create_dir_all(&global.out_dir)?;
    write_json(&global.out_dir.join("isometry.json"), &all)?;
    write_echo(&global.out_dir.join("config.json"), "isometry", global, args)?;
    for c in &all {
        println!(
            "isometry: q={} eps={:.6} [{}] sigma={:.6} [{}] eps_prime={:.6} [{}]",
            c.q.label(),
            c.eps.value,
            c.eps.method.label(),
            c.sigma.value,
            c.sigma.method.label(),
            c.eps_prime.value,
            c.eps_prime.method.label(),
        );
    }
    Ok(0)
}

/// JSON projection of a solve outcome (the dense vectors become plain
/// arrays, blocked to mirror the dictionary structure).
#[derive(Debug, Serialize)]
struct SolveReport {
    spec: SolveSpec,
    converged: bool,
    iterations: usize,
    objective: f64,
    residual_primal: f64,
    residual_dual: f64,
    constraint_violation: f64,
    max_block_dual_norm: Option<f64>,
    support: Vec<usize>,
    planted_support: Vec<usize>,
    support_match: bool,
    coefficients: Vec<Vec<f64>>,
    error_vector: Option<Vec<f64>>,
}

fn run_solve(global: &GlobalArgs, args: &SolveArgs) -> Result<i32> {
    let inst = load_instance(&args.input)?;
    let spec = SolveSpec {
        family: args.family,
        q: args.q,
        constraint: match args.delta {
            Some(delta) => Constraint::Ball { delta },
            None => Constraint::Equality,
        },
        corruption: if args.corrupt {
            Corruption::IdentityAppended
        } else {
            Corruption::None
        },
        tol_primal: args.tol,
        tol_dual: args.tol,
        max_iter: args.max_iter,
        rho: 1.0,
    };
    let solver = PreparedSolver::new(inst.dictionary(), spec.clone())?;
    let result = solver.solve(inst.signal())?;

    let support = recovered_support(
        inst.dictionary(),
        &result.coefficients,
        args.family,
        args.q,
        SUPPORT_REL_TOL,
    );
    let mut planted = inst.support().to_vec();
    planted.sort_unstable();
    let n = inst.dictionary().n_blocks();
    let report = SolveReport {
        spec,
        converged: result.converged,
        iterations: result.iterations,
        objective: result.objective,
        residual_primal: result.residuals.primal,
        residual_dual: result.residuals.dual,
        constraint_violation: result.residuals.constraint_violation,
        max_block_dual_norm: result.certificate.as_ref().map(|c| c.max_block_dual_norm),
        support_match: support == planted,
        support,
        planted_support: planted,
        coefficients: (0..n)
            .map(|i| result.coefficients.block(i).iter().copied().collect())
            .collect(),
        error_vector: result
            .error_vector
            .as_ref()
            .map(|e| e.iter().copied().collect()),
    };
    write_json(&args.output, &report)?;
    write_echo(&config_echo_path(&args.output), "solve", global, args)?;
    println!(
        "solve: {} after {} iterations, objective {:.6e}; wrote {}",
        if report.converged {
            "converged"
        } else {
            "did NOT converge"
        },
        report.iterations,
        report.objective,
        args.output.display(),
    );
    Ok(if report.converged { 0 } else { 1 })
}

fn run_check(global: &GlobalArgs, args: &CheckArgs) -> Result<i32> {
    let dict = load_any_dictionary(&args.input)?;
    let profile = coherence::profile(&dict)?;
    let settings = global.isometry_settings(10_000, 50);
    let constants = isometry::constants(&dict, args.q, &settings)?;
    let classical = coherence::classical(&dict, dict.matrix().ncols())?;
    let inputs = ConditionInputs::new(&profile, &constants)
        .with_classical(&classical, dict.structure());
    let selected: Vec<ConditionId> = args
        .conditions
        .clone()
        .unwrap_or_else(|| ConditionId::ALL.to_vec());

    std::fs::create_dir_all(&global.out_dir)?;
    let (csv, table) = match args.k {
        Some(k) => {
            let mut rows = Vec::new();
            for id in &selected {
                match certify(&inputs, k, *id) {
                    Ok(cert) => rows.push(cert),
                    Err(Error::MissingInput(why)) => {
                        log::warn!("skipping {}: {why}", id.label());
                    }
                    Err(e) => return Err(e),
                }
            }
            let mut csv = String::from("condition,k,lhs,rhs,holds,exactness\n");
            for c in &rows {
                let _ = writeln!(
                    csv,
                    "{},{},{:.9e},{:.9e},{},{}",
                    c.id.label(),
                    c.k,
                    c.lhs,
                    c.rhs,
                    c.holds,
                    c.exactness.label(),
                );
            }
            (csv, serde_json::to_value(&rows))
        }
        None => {
            let rows: Vec<_> = max_certified_k(&inputs)
                .into_iter()
                .filter(|row| selected.contains(&row.id))
                .collect();
            let mut csv = String::from("condition,max_k,exactness\n");
            for row in &rows {
                let _ = writeln!(
                    csv,
                    "{},{},{}",
                    row.id.label(),
                    row.max_k.map_or(String::new(), |k| k.to_string()),
                    row.exactness.label(),
                );
            }
            (csv, serde_json::to_value(&rows))
        }
    };
    let table = table.map_err(|e| Error::InvalidParameter(format!("serializing table: {e}")))?;
    atomic_write(&global.out_dir.join("check.csv"), csv.as_bytes())?;
    write_json(&global.out_dir.join("check.json"), &table)?;
    write_echo(&global.out_dir.join("config.json"), "check", global, args)?;
    println!(
        "check: {} condition rows; wrote check.csv and check.json to {}",
        table.as_array().map_or(0, |a| a.len()),
        global.out_dir.display(),
    );
    Ok(0)
}

fn run_bench(global: &GlobalArgs, args: &BenchArgs) -> Result<i32> {
    let text = std::fs::read_to_string(&args.config)?;
    let mut cfg: BenchmarkConfig =
        serde_json::from_str(&text).map_err(|e| Error::MalformedFile {
            path: args.config.display().to_string(),
            reason: e.to_string(),
        })?;
    if cfg.csv_path.is_none() {
        cfg.csv_path = Some(global.out_dir.join("results.csv"));
    }
    if cfg.svg_dir.is_none() {
        cfg.svg_dir = Some(global.out_dir.clone());
    }
    if cfg.threads == 0 {
        cfg.threads = global.threads;
    }
    cfg.validate()?;

    let csv_path = cfg.csv_path.clone().expect("csv path resolved above");
    if let Some(parent) = csv_path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    write_json(&config_echo_path(&csv_path), &json!({
        "command": "bench",
        "global": global,
        "config": &cfg,
    }))?;
    let report = run_benchmark(&cfg)?;
    println!(
        "bench: {} summary cells over {} variants; wrote {}",
        report.summaries.len(),
        cfg.variants.len(),
        csv_path.display(),
    );
    Ok(0)
}

/// One classified test image.
#[derive(Debug, Serialize)]
struct PredictionRow {
    index: usize,
    truth: usize,
    prediction: usize,
    ns_prediction: usize,
    converged: bool,
    confident: bool,
    residuals: Vec<f64>,
}

fn run_classify(global: &GlobalArgs, args: &ClassifyArgs) -> Result<i32> {
    let class_names = class_directories(&args.train)?;
    let manifest: Vec<(String, usize)> = class_names
        .iter()
        .cloned()
        .enumerate()
        .map(|(label, name)| (name, label))
        .collect();
    let train = ingest_images(&args.train, &manifest)?;

    // Test subdirectories must name known classes; classes without test
    // images are fine.
    let test_names = class_directories(&args.test)?;
    let mut test_manifest = Vec::new();
    for name in &test_names {
        match class_names.iter().position(|c| c == name) {
            Some(label) => test_manifest.push((name.clone(), label)),
            None => {
                return Err(Error::InvalidParameter(format!(
                    "test class '{name}' does not appear in the training set"
                )))
            }
        }
    }
    let test = ingest_images(&args.test, &test_manifest)?;

    let input_dim = train.matrix.nrows();
    let kind = args.reduce.kind(input_dim, args.dim)?;
    let reducer = fit_reducer(&train.matrix, kind, args.dim, global.seed)?;
    let reduced_train = reducer.apply_columns(&train.matrix)?;
    let model = LabeledDictionary::from_training(&reduced_train, &train.labels)?;
    let spec = SolveSpec {
        constraint: Constraint::Ball { delta: args.delta },
        ..SolveSpec::new(args.family, args.q)
    };
    let solver = PreparedSolver::new(model.dictionary(), spec)?;

    let mut rows = Vec::new();
    let mut correct = 0usize;
    let mut ns_correct = 0usize;
    for (index, truth) in test.labels.iter().copied().enumerate() {
        let y: DVector<f64> = test.matrix.column(index).clone_owned();
        let reduced = reducer.apply(&y)?;
        let got: Classification = model.classify_prepared(&reduced, &solver)?;
        let ns = model.nearest_subspace(&reduced)?;
        correct += usize::from(got.class == truth);
        ns_correct += usize::from(ns.class == truth);
        rows.push(PredictionRow {
            index,
            truth,
            prediction: got.class,
            ns_prediction: ns.class,
            converged: got.converged,
            confident: got.confident,
            residuals: got.residuals,
        });
    }

    std::fs::create_dir_all(&global.out_dir)?;
    atomic_write(
        &global.out_dir.join("predictions.csv"),
        predictions_csv(&rows, class_names.len()).as_bytes(),
    )?;
    let total = rows.len();
    let accuracy = |hits: usize| {
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    };
    write_json(&global.out_dir.join("summary.json"), &json!({
        "classes": class_names,
        "n_train": train.labels.len(),
        "n_test": total,
        "correct": correct,
        "accuracy": accuracy(correct),
        "ns_correct": ns_correct,
        "ns_accuracy": accuracy(ns_correct),
    }))?;
    write_echo(&global.out_dir.join("config.json"), "classify", global, args)?;
    println!(
        "classify: accuracy {:.3} over {} test images (nearest-subspace baseline {:.3}); wrote {}",
        accuracy(correct),
        total,
        accuracy(ns_correct),
        global.out_dir.display(),
    );
    Ok(0)
}

/// Sorted names of the immediate subdirectories of `root`.
fn class_directories(root: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(root)? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            names.push(entry.file_name().to_string_lossy().into_owned());
        }
    }
    names.sort();
    if names.is_empty() {
        return Err(Error::InvalidParameter(format!(
            "{} contains no class subdirectories",
            root.display()
        )));
    }
    Ok(names)
}

fn predictions_csv(rows: &[PredictionRow], n_classes: usize) -> String {
    let mut out = String::from("index,truth,prediction,ns_prediction,converged,confident");
    for i in 0..n_classes {
        let _ = write!(out, ",residual_{i}");
    }
    out.push('\n');
    for row in rows {
        let _ = write!(
            out,
            "{},{},{},{},{},{}",
            row.index, row.truth, row.prediction, row.ns_prediction, row.converged, row.confident,
        );
        for r in &row.residuals {
            let _ = write!(out, ",{r:.9e}");
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(argv: &[&str]) -> Cli {
        Cli::try_parse_from(argv).expect("argv parses")
    }

    #[test]
    fn global_defaults_and_overrides_parse() {
        let cli = parse(&[
            "blocksparse",
            "gen",
            "--ambient-dim",
            "8",
            "--blocks",
            "2",
            "--subspace-dim",
            "2",
            "--output",
            "d.bsd",
        ]);
        assert_eq!(cli.global.seed, 0);
        assert_eq!(cli.global.out_dir, PathBuf::from("."));
        assert_eq!(cli.global.oracle_cap, 200_000);
        assert!(cli.global.enum_cap.is_none());
        let Command::Gen(gen) = &cli.command else {
            panic!("expected gen");
        };
        assert_eq!(gen.block_len, None);
        assert_eq!(gen.k, None);

        let cli = parse(&[
            "blocksparse",
            "--seed",
            "9",
            "--enum-cap",
            "50",
            "solve",
            "--input",
            "i.bsd",
            "--family",
            "pprime",
            "--q",
            "inf",
            "--delta",
            "0.1",
            "--corrupt",
            "--output",
            "r.json",
        ]);
        assert_eq!(cli.global.seed, 9);
        let settings = cli.global.isometry_settings(100, 5);
        assert_eq!(settings.submatrix_cap, 50);
        assert_eq!(settings.ternary_cap, 50);
        assert_eq!(settings.seed, 9);
        let Command::Solve(solve) = &cli.command else {
            panic!("expected solve");
        };
        assert_eq!(solve.family, Family::ReconstructionNorm);
        assert_eq!(solve.q, Norm::LInf);
        assert_eq!(solve.delta, Some(0.1));
        assert!(solve.corrupt);
    }

    #[test]
    fn value_parsers_accept_labels_and_reject_garbage() {
        assert_eq!(parse_family("p").unwrap(), Family::CoefficientNorm);
        assert_eq!(parse_norm("inf").unwrap(), Norm::LInf);
        assert_eq!(
            parse_norm_selection("all").unwrap().norms(),
            Norm::ALL.to_vec()
        );
        assert_eq!(
            parse_norm_selection("1").unwrap(),
            NormSelection::One(Norm::L1)
        );
        assert_eq!(
            parse_condition("p-cumulative").unwrap(),
            ConditionId::PCumulative
        );
        assert_eq!(parse_reducer("down").unwrap(), ReducerChoice::Down);
        assert!(parse_family("q").is_err());
        assert!(parse_norm("3").is_err());
        assert!(parse_condition("bogus").is_err());
        assert!(parse_reducer("pca").is_err());

        // Bad values surface as clap usage errors (exit code 2 territory).
        let err = Cli::try_parse_from([
            "blocksparse",
            "solve",
            "--input",
            "i.bsd",
            "--family",
            "nope",
            "--q",
            "2",
            "--output",
            "r.json",
        ])
        .unwrap_err();
        assert_eq!(err.kind(), ErrorKind::ValueValidation);
    }

    #[test]
    fn threads_env_parsing_is_forgiving() {
        assert_eq!(parse_threads(None), 0);
        assert_eq!(parse_threads(Some("4")), 4);
        assert_eq!(parse_threads(Some(" 2 ")), 2);
        assert_eq!(parse_threads(Some("zero")), 0);
        assert_eq!(parse_threads(Some("-3")), 0);
    }

    #[test]
    fn echo_path_replaces_the_extension() {
        assert_eq!(
            config_echo_path(Path::new("out/dict.bsd")),
            PathBuf::from("out/dict.config.json")
        );
        assert_eq!(
            config_echo_path(Path::new("results.csv")),
            PathBuf::from("results.config.json")
        );
        assert_eq!(
            config_echo_path(Path::new("bare")),
            PathBuf::from("bare.config.json")
        );
    }

    #[test]
    fn reducer_choice_maps_dimensions() {
        assert_eq!(
            ReducerChoice::Down.kind(36, 18).unwrap(),
            ReducerKind::Downsample { factor: 2 }
        );
        assert!(matches!(
            ReducerChoice::Down.kind(36, 10),
            Err(Error::NonDivisibleDownsample(_))
        ));
        assert_eq!(ReducerChoice::Eigen.kind(36, 10).unwrap(), ReducerKind::Eigen);
        assert_eq!(
            ReducerChoice::Rand.kind(36, 10).unwrap(),
            ReducerKind::RandomProjection
        );
    }

    #[test]
    fn caps_must_be_positive() {
        let cli = parse(&[
            "blocksparse",
            "--oracle-cap",
            "0",
            "coherence",
            "--input",
            "d.bsd",
        ]);
        assert!(cli.global.validate().is_err());
        let cli = parse(&["blocksparse", "coherence", "--input", "d.bsd"]);
        assert!(cli.global.validate().is_ok());
    }

    #[test]
    fn unknown_flags_and_subcommands_are_usage_errors() {
        for argv in [
            vec!["blocksparse", "gen", "--no-such-flag"],
            vec!["blocksparse", "frobnicate"],
            vec!["blocksparse"],
        ] {
            let err = Cli::try_parse_from(argv).unwrap_err();
            assert_ne!(err.kind(), ErrorKind::DisplayHelp);
        }
        assert_eq!(dispatch(["blocksparse", "gen", "--no-such-flag"]), 2);
        assert_eq!(dispatch(["blocksparse", "--help"]), 0);
    }
}
