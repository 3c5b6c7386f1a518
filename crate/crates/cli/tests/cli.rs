use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use nldp_cli::config::{CheckConfig, ExperimentConfig};
use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn nldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nldp")).args(args).env_remove(nldp_cli::OUT_DIR_ENV).output().unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

const CONSTANT: &str = r#"
[problem]
n = 1
radius = 2.0
spacing = 0.1
omega = { kind = "box", lo = [-1.0], hi = [1.0] }
s = 0.3
t = 0.5
p = 1.5
q = 2.5
coefficient = { kind = "cos_product" }
datum = { kind = "constant", value = 0.75 }

[[verify.checks]]
kind = "maximum_principle"

[[verify.checks]]
kind = "caccioppoli"
center = [0.0]
radius = 0.4
level = 0.75

[[verify.checks]]
kind = "log_excess"
center = [0.0]
outer_radius = 0.8
radius = 0.4
zeta = 0.5

[[verify.checks]]
kind = "sobolev_poincare"
center = [0.0]
radius = 0.8
"#;

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn reports(dir: &Path) -> Vec<Value> {
    std::fs::read_to_string(dir.join("reports.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect()
}

#[test]
fn bundled_configs_round_trip() {
    for entry in std::fs::read_dir(configs()).unwrap() {
        let path = entry.unwrap().path();
        let cfg = ExperimentConfig::load(&path).unwrap();
        let back = ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, back, "{}", path.display());
    }
}

#[test]
fn effective_config_reparses_to_the_same_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("model_1d.toml");
    let o = nldp(&["solve", "--config", path(&cfg), "--out", path(&out), "--seed", "99"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(out.join("effective_config.toml")).unwrap();
    let effective = ExperimentConfig::parse(&text).unwrap();
    assert_eq!(effective.seed, 99);
    assert_eq!(effective.solver.seed, 99);
    assert_eq!(effective.output.dir.as_deref(), Some(out.as_path()));
    let mut original = ExperimentConfig::load(&cfg).unwrap();
    original.seed = 99;
    original.solver.seed = 99;
    original.output.dir = Some(out.clone());
    assert_eq!(effective, original);
}

#[test]
fn unknown_keys_are_rejected() {
    let text = CONSTANT.replace("spacing = 0.1", "spacing = 0.1\nspcing = 0.2");
    assert!(ExperimentConfig::parse(&text).is_err());
    let text = CONSTANT.replace("level = 0.75", "level = 0.75\nceil = 2.0");
    assert!(ExperimentConfig::parse(&text).is_err());
}

#[test]
fn checks_parse_with_defaults() {
    let cfg = ExperimentConfig::parse(CONSTANT).unwrap();
    assert_eq!(cfg.verify.checks.len(), 4);
    match &cfg.verify.checks[2] {
        CheckConfig::LogExcess { xi, d, .. } => assert!(*xi == 2.0 && d.is_none()),
        other => panic!("{other:?}"),
    }
}

#[test]
fn constant_datum_solves_immediately_and_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT);
    let out = dir.path().join("out");
    let o = nldp(&["solve", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: Value = serde_json::from_str(&std::fs::read_to_string(out.join("solve_report.json")).unwrap()).unwrap();
    assert!(rep["iters"].as_u64().unwrap() <= 1);
    assert_eq!(rep["converged"], Value::Bool(true));

    let o = nldp(&["verify", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let lines = reports(&out);
    assert_eq!(lines.len(), 4);
    for line in &lines[1..] {
        assert_eq!(line["status"], "pass");
        assert_eq!(line["report"]["lhs"].as_f64(), Some(0.0), "{line}");
    }
}

#[test]
fn spiked_solution_fails_the_maximum_principle() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT);
    let out = dir.path().join("out");
    assert_eq!(nldp(&["solve", "--config", path(&cfg), "--out", path(&out)]).status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("solution.csv")).unwrap();
    let mut lines: Vec<String> = csv.lines().map(String::from).collect();
    let row = lines.iter().position(|l| l.contains(",1,")).unwrap();
    let mut cells: Vec<&str> = lines[row].split(',').collect();
    cells[2] = "5.0";
    lines[row] = cells.join(",");
    let spiked = dir.path().join("spiked.csv");
    std::fs::write(&spiked, lines.join("\n") + "\n").unwrap();
    let o = nldp(&["verify", "--config", path(&cfg), "--out", path(&out), "--solution", path(&spiked)]);
    assert_eq!(o.status.code(), Some(1));
    let first = &reports(&out)[0];
    assert_eq!(first["check"], "maximum_principle");
    assert_eq!(first["status"], "fail");
}

#[test]
fn solution_from_another_grid_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT);
    let out = dir.path().join("out");
    assert_eq!(nldp(&["solve", "--config", path(&cfg), "--out", path(&out)]).status.code(), Some(0));
    let finer = write_config(&out, &CONSTANT.replace("spacing = 0.1", "spacing = 0.05"));
    let o = nldp(&["verify", "--config", path(&finer), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not match"));
}

#[test]
fn order_violation_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &CONSTANT.replace("s = 0.3", "s = 0.6"));
    let o = nldp(&["solve", "--config", path(&cfg), "--out", path(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("0 < s <= t < 1"));
}

#[test]
fn iteration_cap_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONSTANT.replace("kind = \"constant\", value = 0.75", "kind = \"tent\", center = [1.0]")
        + "\n[solver]\nmax_iters = 2\ninit = { kind = \"zero\" }\n";
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    let o = nldp(&["solve", "--config", path(&cfg), "--out", path(&out)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(out.join("solution.csv").exists());
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT);
    let env_out = dir.path().join("from_env");
    let o = Command::new(env!("CARGO_BIN_EXE_nldp"))
        .args(["solve", "--config", path(&cfg)])
        .env(nldp_cli::OUT_DIR_ENV, &env_out)
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    assert!(env_out.join("solution.csv").exists());
}

#[test]
fn iterate_demo_prints_the_halving_trace() {
    let o = nldp(&["iterate-demo", "--imax", "5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    let ys: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(ys, [0.5, 0.25, 0.125, 0.0625, 0.03125, 0.015625]);
    assert!(text.lines().nth(1).unwrap().contains(",5.0000000000000000e-1,"));
}

#[test]
fn iterate_demo_above_threshold_reports_divergence() {
    let o = nldp(&["iterate-demo", "--y0", "5", "--imax", "20"]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.lines().last().unwrap().ends_with(",false"));
}

#[test]
fn iterate_demo_rejects_bad_input() {
    assert_eq!(nldp(&["iterate-demo", "--beta", "0"]).status.code(), Some(1));
    assert_eq!(nldp(&["iterate-demo", "--beta", "-1"]).status.code(), Some(1));
    assert_eq!(nldp(&["iterate-demo", "--b1", "abc"]).status.code(), Some(1));
    assert_eq!(nldp(&["frobnicate"]).status.code(), Some(1));
}

#[test]
fn sweep_without_valid_rows_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONSTANT.to_string() + "\n[sweep]\ns = [0.7, 0.8]\n";
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    assert_eq!(nldp(&["sweep", "--config", path(&cfg), "--out", path(&out)]).status.code(), Some(1));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.lines().skip(1).all(|l| l.contains("error: ")));
}

#[test]
fn sweep_requires_its_section() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), CONSTANT);
    let o = nldp(&["sweep", "--config", path(&cfg), "--out", path(&dir.path().join("out"))]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_records_solver_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let text = CONSTANT.replace("kind = \"constant\", value = 0.75", "kind = \"tent\", center = [1.0]")
        + "\n[sweep]\nq = [2.0, 3.0]\nsolve = true\n";
    let cfg = write_config(dir.path(), &text);
    let out = dir.path().join("out");
    assert_eq!(nldp(&["sweep", "--config", path(&cfg), "--out", path(&out)]).status.code(), Some(0));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    let header: Vec<&str> = csv.lines().next().unwrap().split(',').collect();
    assert_eq!(header, nldp_cli::commands::SWEEP_COLUMNS);
    let conv = header.iter().position(|h| *h == "converged").unwrap();
    for line in csv.lines().skip(1) {
        assert_eq!(line.split(',').nth(conv), Some("true"), "{line}");
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("model_1d.toml");
    let mut runs = Vec::new();
    for threads in ["2", "3"] {
        let out = dir.path().join(threads);
        let o = nldp(&["--threads", threads, "solve", "--config", path(&cfg), "--out", path(&out)]);
        assert_eq!(o.status.code(), Some(0));
        let o = nldp(&["verify", "--threads", threads, "--config", path(&cfg), "--out", path(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        let files = [
            "solution.csv",
            "solve_report.json",
            "energy_trace.csv",
            "reports.jsonl",
            "oscillation.csv",
            "levelset.csv",
        ];
        runs.push(files.map(|f| std::fs::read(out.join(f)).unwrap()));
    }
    assert!(runs[0] == runs[1]);
}
