//! End-to-end tests of the `blocksparse` binary: every subcommand is run as
//! a real process and judged on its exit code and emitted files.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn blocksparse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_blocksparse"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn read_json(path: &Path) -> serde_json::Value {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    serde_json::from_str(&text).unwrap_or_else(|e| panic!("parsing {}: {e}", path.display()))
}

/// Generates a small instance file (D=16, n=4, d=m=2, planted k=1).
fn gen_instance(dir: &Path, seed: &str) -> PathBuf {
    let out = dir.join("inst.bsd");
    let run = blocksparse(&[
        "--seed",
        seed,
        "gen",
        "--ambient-dim",
        "16",
        "--blocks",
        "4",
        "--subspace-dim",
        "2",
        "--k",
        "1",
        "--output",
        out.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    out
}

#[test]
fn gen_writes_instance_config_echo_and_is_deterministic() {
    let dir = TempDir::new().unwrap();
    let first = gen_instance(dir.path(), "3");

    let echo = read_json(&dir.path().join("inst.config.json"));
    assert_eq!(echo["command"], "gen");
    assert_eq!(echo["global"]["seed"], 3);
    assert_eq!(echo["args"]["ambient_dim"], 16);
    assert_eq!(echo["args"]["k"], 1);

    let other_dir = TempDir::new().unwrap();
    let same = gen_instance(other_dir.path(), "3");
    assert_eq!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&same).unwrap(),
        "same seed, same bytes"
    );

    let third_dir = TempDir::new().unwrap();
    let different = gen_instance(third_dir.path(), "4");
    assert_ne!(
        std::fs::read(&first).unwrap(),
        std::fs::read(&different).unwrap(),
        "different seed, different bytes"
    );
}

#[test]
fn analysis_pipeline_runs_end_to_end() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path(), "3");
    let inst = inst.to_str().unwrap();

    // Coherence: profile.json + pairwise.csv.
    let coh_dir = dir.path().join("coh");
    let run = blocksparse(&[
        "--out-dir",
        coh_dir.to_str().unwrap(),
        "coherence",
        "--input",
        inst,
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let profile = read_json(&coh_dir.join("profile.json"));
    assert_eq!(profile["n_blocks"], 4);
    assert_eq!(profile["zeta"].as_array().unwrap().len(), 3);
    let mu_s = profile["mu_s"].as_f64().unwrap();
    assert!(mu_s > 0.0 && mu_s < 1.0);
    assert!(profile["classical"]["mu"].as_f64().unwrap() > 0.0);
    let pairwise = std::fs::read_to_string(coh_dir.join("pairwise.csv")).unwrap();
    let rows: Vec<&str> = pairwise.lines().collect();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.split(',').count() == 4));
    assert!(coh_dir.join("config.json").exists());

    // Isometry: three entries with method tags.
    let iso_dir = dir.path().join("iso");
    let run = blocksparse(&[
        "--out-dir",
        iso_dir.to_str().unwrap(),
        "isometry",
        "--input",
        inst,
        "--samples",
        "500",
        "--refine-steps",
        "5",
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let constants = read_json(&iso_dir.join("isometry.json"));
    let entries = constants.as_array().unwrap();
    assert_eq!(entries.len(), 3);
    for entry in entries {
        assert!(entry["eps"]["method"].is_string());
        assert!(entry["sigma"]["value"].is_number());
    }
    // Non-redundant blocks: ε'₂ is exactly zero.
    let q2 = entries.iter().find(|e| e["q"] == "2").unwrap();
    assert_eq!(q2["eps_prime"]["value"].as_f64().unwrap(), 0.0);

    // Check: per-condition table (uniform blocks → all twelve rows).
    let check_dir = dir.path().join("check");
    let run = blocksparse(&[
        "--out-dir",
        check_dir.to_str().unwrap(),
        "check",
        "--input",
        inst,
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let table = read_json(&check_dir.join("check.json"));
    assert_eq!(table.as_array().unwrap().len(), 12);
    for row in table.as_array().unwrap() {
        assert!(row["id"].is_string());
        assert!(row["exactness"].is_string());
    }
    let csv = std::fs::read_to_string(check_dir.join("check.csv")).unwrap();
    assert!(csv.starts_with("condition,max_k,exactness\n"));
    assert_eq!(csv.lines().count(), 13);

    // Check at a fixed k with a condition subset.
    let at_k_dir = dir.path().join("check_k");
    let run = blocksparse(&[
        "--out-dir",
        at_k_dir.to_str().unwrap(),
        "check",
        "--input",
        inst,
        "--k",
        "1",
        "--conditions",
        "pprime-cumulative-q2,classical-mutual",
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let certs = read_json(&at_k_dir.join("check.json"));
    assert_eq!(certs.as_array().unwrap().len(), 2);
    assert_eq!(certs[0]["k"], 1);
    assert!(certs[0]["lhs"].is_number() && certs[0]["rhs"].is_number());

    // Solve: converged run recovers the planted support.
    let result = dir.path().join("result.json");
    let run = blocksparse(&[
        "solve",
        "--input",
        inst,
        "--family",
        "pprime",
        "--q",
        "2",
        "--output",
        result.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report = read_json(&result);
    assert_eq!(report["converged"], true);
    assert_eq!(report["support_match"], true);
    assert_eq!(report["spec"]["family"], "pprime");
    assert_eq!(report["coefficients"].as_array().unwrap().len(), 4);
    assert!(report["error_vector"].is_null());
    assert!(report["max_block_dual_norm"].as_f64().unwrap() <= 1.0 + 1e-4);
    assert!(dir.path().join("result.config.json").exists());
}

#[test]
fn solve_flags_non_convergence_with_exit_one() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path(), "3");
    let result = dir.path().join("result.json");
    let run = blocksparse(&[
        "solve",
        "--input",
        inst.to_str().unwrap(),
        "--family",
        "p",
        "--q",
        "1",
        "--max-iter",
        "2",
        "--output",
        result.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 1);
    let report = read_json(&result);
    assert_eq!(report["converged"], false);
}

#[test]
fn solve_with_corruption_emits_an_error_vector() {
    let dir = TempDir::new().unwrap();
    let inst = gen_instance(dir.path(), "5");
    let result = dir.path().join("corrupt.json");
    let run = blocksparse(&[
        "solve",
        "--input",
        inst.to_str().unwrap(),
        "--family",
        "pprime",
        "--q",
        "2",
        "--corrupt",
        "--delta",
        "0.01",
        "--output",
        result.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));
    let report = read_json(&result);
    assert_eq!(report["error_vector"].as_array().unwrap().len(), 16);
}

#[test]
fn usage_and_domain_errors_map_to_their_exit_codes() {
    // Unknown flag and missing required flags: usage, exit 2.
    let run = blocksparse(&["gen", "--no-such-flag"]);
    assert_eq!(exit_code(&run), 2);
    let run = blocksparse(&["solve", "--family", "p"]);
    assert_eq!(exit_code(&run), 2);
    // Bad flag value: usage, exit 2.
    let run = blocksparse(&["solve", "--input", "x", "--family", "bogus", "--q", "2", "--output", "y"]);
    assert_eq!(exit_code(&run), 2);
    // Help: exit 0.
    let run = blocksparse(&["--help"]);
    assert_eq!(exit_code(&run), 0);

    // Missing input file: domain, exit 1 with a diagnostic.
    let run = blocksparse(&["coherence", "--input", "/nonexistent/dict.bsd"]);
    assert_eq!(exit_code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("error:"));

    // Solving a bare dictionary (no signal): domain, exit 1.
    let dir = TempDir::new().unwrap();
    let dict = dir.path().join("dict.bsd");
    let run = blocksparse(&[
        "gen",
        "--ambient-dim",
        "8",
        "--blocks",
        "2",
        "--subspace-dim",
        "2",
        "--output",
        dict.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 0);
    let run = blocksparse(&[
        "solve",
        "--input",
        dict.to_str().unwrap(),
        "--family",
        "p",
        "--q",
        "2",
        "--output",
        dir.path().join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 1);

    // Infeasible generation parameters: domain, exit 1.
    let run = blocksparse(&[
        "gen",
        "--ambient-dim",
        "4",
        "--blocks",
        "9",
        "--subspace-dim",
        "3",
        "--output",
        dir.path().join("bad.bsd").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 1);
}

#[test]
fn bench_reads_a_config_and_writes_csv_and_svgs() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("bench.json");
    std::fs::write(
        &cfg_path,
        serde_json::json!({
            "ambient_dim": 16,
            "n_blocks": 4,
            "subspace_dim": 2,
            "block_len": 2,
            "k_range": [1],
            "dictionary_draws": 2,
            "signals_per_dictionary": 2,
            "seed": 11,
            "tol": 1e-5,
            "max_iter": 2000
        })
        .to_string(),
    )
    .unwrap();
    let out_dir = dir.path().join("bench_out");
    let run = blocksparse(&[
        "--out-dir",
        out_dir.to_str().unwrap(),
        "bench",
        "--config",
        cfg_path.to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert!(csv.starts_with("family,q,k,trial,rec_err,blk_err,coef_err,converged\n"));
    // Six default variants × one k × four trials.
    assert_eq!(csv.lines().count(), 25);
    for name in [
        "reconstruction_error.svg",
        "block_contribution_error.svg",
        "coefficient_recovery_error.svg",
    ] {
        let svg = std::fs::read_to_string(out_dir.join(name)).unwrap();
        assert!(svg.contains("<polyline"), "{name} has curves");
    }
    let echo = read_json(&out_dir.join("results.config.json"));
    assert_eq!(echo["command"], "bench");
    assert_eq!(echo["config"]["ambient_dim"], 16);
    // The echoed config is the resolved one: output paths filled in.
    assert!(echo["config"]["csv_path"].as_str().unwrap().ends_with("results.csv"));
}

/// Writes an 8-bit binary PGM.
fn write_pgm(path: &Path, width: usize, height: usize, pixel: impl Fn(usize, usize) -> u8) {
    let mut bytes = format!("P5\n{width} {height}\n255\n").into_bytes();
    for r in 0..height {
        for c in 0..width {
            bytes.push(pixel(r, c));
        }
    }
    std::fs::write(path, bytes).unwrap();
}

/// Two one-dimensional image classes: intensity ramps along rows vs along
/// columns, at varying exposure scales.
fn write_ramp_class(dir: &Path, along_rows: bool, scales: &[f64]) {
    std::fs::create_dir_all(dir).unwrap();
    for (i, s) in scales.iter().enumerate() {
        write_pgm(&dir.join(format!("img{i}.pgm")), 8, 8, |r, c| {
            let t = if along_rows { r } else { c };
            (s * (20.0 + 25.0 * t as f64)).round().clamp(0.0, 255.0) as u8
        });
    }
}

#[test]
fn classify_pipeline_labels_held_out_ramps() {
    let dir = TempDir::new().unwrap();
    let train = dir.path().join("train");
    let test = dir.path().join("test");
    write_ramp_class(&train.join("rows"), true, &[0.7, 0.85, 1.0]);
    write_ramp_class(&train.join("cols"), false, &[0.7, 0.85, 1.0]);
    write_ramp_class(&test.join("rows"), true, &[0.9, 0.75]);
    write_ramp_class(&test.join("cols"), false, &[0.9, 0.75]);

    let out_dir = dir.path().join("out");
    let run = blocksparse(&[
        "--out-dir",
        out_dir.to_str().unwrap(),
        "classify",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--reduce",
        "down",
        "--dim",
        "16",
    ]);
    assert_eq!(exit_code(&run), 0, "{}", String::from_utf8_lossy(&run.stderr));

    let summary = read_json(&out_dir.join("summary.json"));
    assert_eq!(summary["classes"], serde_json::json!(["cols", "rows"]));
    assert_eq!(summary["n_train"], 6);
    assert_eq!(summary["n_test"], 4);
    assert_eq!(summary["accuracy"], 1.0, "summary: {summary}");
    assert!(summary["ns_accuracy"].as_f64().unwrap() >= 0.75);

    let csv = std::fs::read_to_string(out_dir.join("predictions.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "index,truth,prediction,ns_prediction,converged,confident,residual_0,residual_1"
    );
    assert_eq!(lines.len(), 5);
    for line in &lines[1..] {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[1], fields[2], "truth equals prediction: {line}");
    }

    // A test class that the training set does not know is a domain error.
    let stray = test.join("stray");
    write_ramp_class(&stray, true, &[0.8]);
    let run = blocksparse(&[
        "--out-dir",
        out_dir.to_str().unwrap(),
        "classify",
        "--train",
        train.to_str().unwrap(),
        "--test",
        test.to_str().unwrap(),
        "--reduce",
        "down",
        "--dim",
        "16",
    ]);
    assert_eq!(exit_code(&run), 1);
    assert!(String::from_utf8_lossy(&run.stderr).contains("stray"));
}
