//! The four subcommands. Each returns the process exit code; errors that are
//! not tied to a single check or sweep row become exit code 1 in [`crate::run`].

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::Arc;

use nldp_core::io::{format_f64, read_function_csv, serialize_f64, write_function_csv, write_table};
use nldp_core::params::{
    check_boundedness_assumption, check_combined_assumption, check_holder_assumption, SampleOptions,
};
use nldp_core::regularity::{
    caccioppoli_check, default_min_count, degiorgi_iteration, holder_constants, inclusion_check, ineq1_check,
    ineq2_check, k0_quantity, levelset_sequence, log_estimate_check, log_excess_check, oscillation_sequence_with,
    sobolev_poincare_check, standard_cutoff, Sign, SupersolutionGate,
};
use nldp_core::solver::{maximum_principle_check, minimize};
use nldp_core::{DiscreteFunction, EnergyContext, Grid, InequalityReport, OscillationTrace, Point};
use serde::Serialize;
use serde_json::Value;

use crate::config::{point, CheckConfig, ExperimentConfig, SignConfig, SweepConfig};
use crate::{create_dir, CliError, EXIT_FAILURE, EXIT_NOT_CONVERGED, EXIT_OK};

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    File::create(path).map(BufWriter::new).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format_f64(x).parse().expect("formatted float is a JSON number"))
    } else {
        Value::Null
    }
}

fn to_value<T: Serialize>(v: &T) -> Value {
    serde_json::to_value(v).expect("report serializes")
}

#[derive(Serialize)]
struct SolveSummary {
    #[serde(serialize_with = "serialize_f64")]
    energy: f64,
    iters: usize,
    #[serde(serialize_with = "serialize_f64")]
    grad_norm: f64,
    #[serde(serialize_with = "serialize_f64")]
    grad_tol: f64,
    converged: bool,
    nodes: usize,
    interior_nodes: usize,
}

/// Writes `solution.csv`, `solve_report.json`, `energy_trace.csv` and
/// `effective_config.toml`; exit 2 when the solver did not converge.
pub fn cmd_solve(cfg: &ExperimentConfig, out: &Path) -> Result<i32, CliError> {
    let problem = &cfg.problem;
    let grid = Arc::new(problem.grid()?);
    let ctx = problem.context(grid.clone())?;
    let sample = SampleOptions { seed: cfg.seed, ..Default::default() };
    ctx.coeff().validate(grid.nodes(), sample)?;
    ctx.kernels().validate(grid.nodes(), sample)?;
    let g = problem.datum(&grid, cfg.seed)?;
    let (u, rep) = minimize(&ctx, &g, &cfg.solver)?;

    create_dir(out)?;
    std::fs::write(out.join("effective_config.toml"), cfg.to_toml()?)?;
    let mut w = create(&out.join("solution.csv"))?;
    write_function_csv(&grid, &u, &mut w)?;
    w.flush()?;
    let summary = SolveSummary {
        energy: rep.energy,
        iters: rep.iters,
        grad_norm: rep.grad_norm,
        grad_tol: rep.grad_tol,
        converged: rep.converged,
        nodes: grid.len(),
        interior_nodes: grid.interior_indices().len(),
    };
    std::fs::write(out.join("solve_report.json"), serde_json::to_string_pretty(&summary).expect("serializes") + "\n")?;
    let rows: Vec<Vec<String>> =
        rep.energy_trace.iter().enumerate().map(|(i, e)| vec![i.to_string(), format_f64(*e)]).collect();
    write_table(create(&out.join("energy_trace.csv"))?, &["iter", "energy"], &rows)?;

    if rep.converged {
        eprintln!("converged after {} iterations, gradient {:.3e}", rep.iters, rep.grad_norm);
        Ok(EXIT_OK)
    } else {
        eprintln!(
            "not converged after {} iterations: gradient {:.3e} above tolerance {:.3e}",
            rep.iters, rep.grad_norm, rep.grad_tol
        );
        Ok(EXIT_NOT_CONVERGED)
    }
}

/// One line of `reports.jsonl`.
#[derive(Serialize)]
struct CheckLine {
    index: usize,
    check: &'static str,
    status: &'static str,
    ceiling: Value,
    report: Value,
    error: Option<String>,
}

struct Verifier<'a> {
    ctx: &'a EnergyContext,
    u: &'a DiscreteFunction,
    g: &'a DiscreteFunction,
    gate: SupersolutionGate,
    solution_tol: f64,
    oscillation_rows: Vec<Vec<String>>,
    levelset_rows: Vec<Vec<String>>,
}

fn check_name(c: &CheckConfig) -> &'static str {
    match c {
        CheckConfig::MaximumPrinciple => "maximum_principle",
        CheckConfig::Caccioppoli { .. } => "caccioppoli",
        CheckConfig::Levelset { .. } => "levelset",
        CheckConfig::Oscillation { .. } => "oscillation",
        CheckConfig::LogEstimate { .. } => "log_estimate",
        CheckConfig::LogExcess { .. } => "log_excess",
        CheckConfig::SobolevPoincare { .. } => "sobolev_poincare",
        CheckConfig::Inclusion { .. } => "inclusion",
        CheckConfig::Ineq1 { .. } => "ineq1",
        CheckConfig::Ineq2 { .. } => "ineq2",
        CheckConfig::HolderConstants { .. } => "holder_constants",
    }
}

fn judged(rep: InequalityReport, ceiling: Option<f64>) -> (bool, Value, Value) {
    let ok = match ceiling {
        Some(c) => rep.within(c),
        None => rep.implied_constant.is_finite(),
    };
    (ok, ceiling.map_or(Value::Null, num), to_value(&rep))
}

impl Verifier<'_> {
    fn grid(&self) -> &Grid {
        self.ctx.grid()
    }

    fn ball_values(&self, x0: &Point, r: f64) -> Vec<f64> {
        self.grid().ball_nodes(x0, r).iter().map(|&i| self.u.get(i)).collect()
    }

    fn oscillation_on(&self, x0: &Point, r: f64) -> f64 {
        let v = self.ball_values(x0, r);
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if v.is_empty() {
            0.0
        } else {
            hi - lo
        }
    }

    fn default_d(&self, x0: &Point, r: f64) -> f64 {
        let osc = self.oscillation_on(x0, r);
        if osc > 0.0 {
            0.1 * osc
        } else {
            0.1
        }
    }

    /// Returns pass flag, ceiling and report.
    fn run(&mut self, index: usize, check: &CheckConfig) -> Result<(bool, Value, Value), CliError> {
        let n = self.grid().dim();
        let ctx = self.ctx;
        let u = self.u;
        match check {
            CheckConfig::MaximumPrinciple => {
                let rep = maximum_principle_check(self.grid(), u, self.g);
                Ok((rep.passed(), Value::Null, to_value(&rep)))
            }
            CheckConfig::Caccioppoli { center, radius, level, sign, ceiling } => {
                let x0 = point(center, n)?;
                let k = match level {
                    Some(k) => *k,
                    None => {
                        let mut v = self.ball_values(&x0, *radius);
                        if v.is_empty() {
                            return Err(nldp_core::Error::EmptyBall.into());
                        }
                        v.sort_by(f64::total_cmp);
                        v[v.len() / 2].max(0.0)
                    }
                };
                let sign = match sign {
                    SignConfig::Plus => Sign::Plus,
                    SignConfig::Minus => Sign::Minus,
                };
                let phi = standard_cutoff(self.grid(), &x0, *radius);
                let rep = caccioppoli_check(ctx, u, &x0, *radius, k, sign, &phi, self.solution_tol)?;
                Ok(judged(rep, *ceiling))
            }
            CheckConfig::Levelset { center, radius, k0, imax } => {
                let x0 = point(center, n)?;
                let k0 = match k0 {
                    Some(k) => *k,
                    None => 0.5 * self.ball_values(&x0, *radius).iter().fold(0.0_f64, |m, v| m.max(v.abs())),
                };
                let ys = levelset_sequence(ctx, u, &x0, *radius, k0, *imax)?;
                let ok = ys.windows(2).all(|w| w[1] <= w[0]);
                for (i, y) in ys.iter().enumerate() {
                    self.levelset_rows.push(vec![index.to_string(), i.to_string(), format_f64(*y)]);
                }
                let report = serde_json::json!({ "k0": num(k0), "values": ys.iter().map(|y| num(*y)).collect::<Vec<_>>(), "nonincreasing": ok });
                Ok((ok, Value::Null, report))
            }
            CheckConfig::Oscillation { center, radius, sigma, jmax, min_count, min_gamma } => {
                let x0 = point(center, n)?;
                let min_count = min_count.unwrap_or_else(|| default_min_count(n));
                let mut trace = oscillation_sequence_with(self.grid(), u, &x0, *radius, *sigma, *jmax, min_count)?;
                if trace.gamma_fit > 0.0 {
                    let k0 = k0_quantity(ctx, u, &x0, *radius)?;
                    let gamma = trace.gamma_fit;
                    trace = trace.with_k_sequence(k0, gamma);
                }
                self.push_oscillation(index, &trace);
                let ok = min_gamma.is_none_or(|m| trace.gamma_fit >= m);
                Ok((ok, min_gamma.map_or(Value::Null, num), to_value(&trace)))
            }
            CheckConfig::LogEstimate { center, outer_radius, radius, d, ceiling } => {
                let x0 = point(center, n)?;
                let d = d.unwrap_or_else(|| self.default_d(&x0, *outer_radius));
                let rep = log_estimate_check(ctx, u, &x0, *outer_radius, *radius, d, &self.gate)?;
                Ok(judged(rep, *ceiling))
            }
            CheckConfig::LogExcess { center, outer_radius, radius, d, zeta, xi, ceiling } => {
                let x0 = point(center, n)?;
                let d = d.unwrap_or_else(|| self.default_d(&x0, *outer_radius));
                let zeta = zeta.unwrap_or_else(|| {
                    let sup = self.ball_values(&x0, *outer_radius).iter().copied().fold(0.0_f64, f64::max);
                    if sup > 0.0 {
                        sup
                    } else {
                        1.0
                    }
                });
                let rep = log_excess_check(ctx, u, &x0, *outer_radius, *radius, d, zeta, *xi, &self.gate)?;
                Ok(judged(rep, *ceiling))
            }
            CheckConfig::SobolevPoincare { center, radius, variant, ceiling } => {
                let x0 = point(center, n)?;
                let rep = sobolev_poincare_check(ctx, u, &x0, *radius, (*variant).into())?;
                Ok(judged(rep, *ceiling))
            }
            CheckConfig::Inclusion { center, radius, ceiling } => {
                let x0 = point(center, n)?;
                let region = self.grid().ball_nodes(&x0, *radius);
                let rep = inclusion_check(ctx, u, &region)?;
                Ok(judged(rep, Some(*ceiling)))
            }
            CheckConfig::Ineq1 { center, radius, l0, ceiling } => {
                let x0 = point(center, n)?;
                let l0 = l0.unwrap_or_else(|| {
                    let a = ctx.coeff().sup_norm();
                    if a > 0.0 {
                        a
                    } else {
                        1.0
                    }
                });
                let rep = ineq1_check(ctx, u, &x0, *radius, l0)?;
                Ok(judged(rep, *ceiling))
            }
            CheckConfig::Ineq2 { center, radius, outer_radius, ceiling } => {
                let x0 = point(center, n)?;
                let rep = ineq2_check(ctx, u, &x0, *radius, *outer_radius)?;
                Ok(judged(rep, *ceiling))
            }
            CheckConfig::HolderConstants { d, c_star, c0, center, radius } => {
                let alpha = ctx.coeff().holder().map(|h| h.alpha).ok_or(nldp_core::Error::MissingHolderData)?;
                let interior = self.grid().interior_indices();
                let sup_u = interior.iter().fold(0.0_f64, |m, &i| m.max(u.get(i).abs()));
                let d = d.unwrap_or_else(|| {
                    let (lo, hi) = interior
                        .iter()
                        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &i| (lo.min(u.get(i)), hi.max(u.get(i))));
                    if hi > lo {
                        0.1 * (hi - lo)
                    } else {
                        0.1
                    }
                });
                let mut hc = holder_constants(ctx.cfg(), alpha, sup_u, d, *c_star, *c0)?;
                match (center, radius) {
                    (Some(c), Some(r)) => hc = hc.with_k0(k0_quantity(ctx, u, &point(c, n)?, *r)?),
                    (None, None) => {}
                    _ => {
                        return Err(CliError::Config("holder_constants needs both center and radius or neither".into()))
                    }
                }
                Ok((true, Value::Null, to_value(&hc)))
            }
        }
    }

    fn push_oscillation(&mut self, index: usize, trace: &OscillationTrace) {
        let ks = trace.k_values();
        for j in 0..trace.radii.len() {
            self.oscillation_rows.push(vec![
                index.to_string(),
                j.to_string(),
                format_f64(trace.radii[j]),
                format_f64(trace.omega[j]),
                trace.counts[j].to_string(),
                if trace.used[j] { "1" } else { "0" }.to_string(),
                ks.as_ref().map_or(String::new(), |k| format_f64(k[j])),
            ]);
        }
    }
}

/// Runs every configured check on the solution file and writes
/// `reports.jsonl`, `oscillation.csv` and `levelset.csv`; exit 0 iff all
/// checks pass.
pub fn cmd_verify(cfg: &ExperimentConfig, solution: &Path, out: &Path) -> Result<i32, CliError> {
    let problem = &cfg.problem;
    let grid = Arc::new(problem.grid()?);
    let ctx = problem.context(grid.clone())?;
    let g = problem.datum(&grid, cfg.seed)?;
    let file = File::open(solution).map_err(|e| CliError::Io(format!("{}: {e}", solution.display())))?;
    let u = read_function_csv(&grid, std::io::BufReader::new(file), g.far_field)?;
    let solution_tol = cfg.verify.solution_tol.unwrap_or_else(|| 10.0 * cfg.solver.tolerance_for(&ctx, &g));
    let mut verifier = Verifier {
        ctx: &ctx,
        u: &u,
        g: &g,
        gate: SupersolutionGate { tol: solution_tol, samples: 50, seed: cfg.seed },
        solution_tol,
        oscillation_rows: Vec::new(),
        levelset_rows: Vec::new(),
    };

    create_dir(out)?;
    let mut lines = create(&out.join("reports.jsonl"))?;
    let mut failures = 0;
    for (index, check) in cfg.verify.checks.iter().enumerate() {
        let name = check_name(check);
        let line = match verifier.run(index, check) {
            Ok((ok, ceiling, report)) => {
                CheckLine { index, check: name, status: if ok { "pass" } else { "fail" }, ceiling, report, error: None }
            }
            Err(e) => CheckLine {
                index,
                check: name,
                status: "error",
                ceiling: Value::Null,
                report: Value::Null,
                error: Some(e.to_string()),
            },
        };
        if line.status != "pass" {
            failures += 1;
            eprintln!(
                "check {index} ({name}): {}{}",
                line.status,
                line.error.as_deref().map_or(String::new(), |e| format!(": {e}"))
            );
        }
        writeln!(lines, "{}", serde_json::to_string(&line).expect("serializes"))?;
    }
    lines.flush()?;
    write_table(
        create(&out.join("oscillation.csv"))?,
        &["check", "level", "radius", "omega", "count", "used", "k_value"],
        &verifier.oscillation_rows,
    )?;
    write_table(create(&out.join("levelset.csv"))?, &["check", "i", "y"], &verifier.levelset_rows)?;
    eprintln!("{} of {} checks passed", cfg.verify.checks.len() - failures, cfg.verify.checks.len());
    Ok(if failures == 0 { EXIT_OK } else { EXIT_FAILURE })
}

/// Column order of `sweep.csv`.
pub const SWEEP_COLUMNS: [&str; 18] = [
    "s",
    "t",
    "p",
    "q",
    "alpha",
    "spacing",
    "bdd",
    "hol",
    "combined",
    "status",
    "energy",
    "iters",
    "grad_norm",
    "converged",
    "gamma_fit",
    "kappa",
    "ln_sigma",
    "ln_gamma",
];

fn values_or(list: &[f64], fallback: f64) -> Vec<f64> {
    if list.is_empty() {
        vec![fallback]
    } else {
        list.to_vec()
    }
}

fn flag(b: bool) -> String {
    b.to_string()
}

fn opt(x: Option<f64>) -> String {
    x.map_or(String::new(), format_f64)
}

struct SweepRow {
    cells: Vec<String>,
    completed: bool,
}

fn sweep_row(
    cfg: &ExperimentConfig,
    sweep: &SweepConfig,
    s: f64,
    t: f64,
    p: f64,
    q: f64,
    alpha: Option<f64>,
    h: f64,
) -> SweepRow {
    let mut cells = vec![format_f64(s), format_f64(t), format_f64(p), format_f64(q), opt(alpha), format_f64(h)];
    let mut problem = cfg.problem.clone();
    (problem.s, problem.t, problem.p, problem.q, problem.spacing) = (s, t, p, q, h);
    let exps = match problem.exponents() {
        Ok(e) => e,
        Err(e) => {
            cells.extend(["".into(), "".into(), "".into(), format!("error: {e}")]);
            cells.resize(SWEEP_COLUMNS.len(), String::new());
            return SweepRow { cells, completed: false };
        }
    };
    cells.push(flag(check_boundedness_assumption(&exps)));
    cells.push(alpha.map_or(String::new(), |a| flag(check_holder_assumption(&exps, a))));
    cells.push(alpha.map_or(String::new(), |a| flag(check_combined_assumption(&exps, a))));

    let mut solved = None;
    let mut status = "ok".to_string();
    let mut sup_u = None;
    if sweep.solve {
        let result = (|| -> Result<_, CliError> {
            let grid = Arc::new(problem.grid()?);
            let ctx = problem.context(grid.clone())?;
            let g = problem.datum(&grid, cfg.seed)?;
            let (u, rep) = minimize(&ctx, &g, &cfg.solver)?;
            let gamma = match &sweep.oscillation {
                Some(o) => {
                    let x0 = point(&o.center, problem.n)?;
                    Some(
                        nldp_core::regularity::oscillation_sequence(&grid, &u, &x0, o.radius, o.sigma, o.jmax)?
                            .gamma_fit,
                    )
                }
                None => None,
            };
            let sup = grid.interior_indices().iter().fold(0.0_f64, |m, &i| m.max(u.get(i).abs()));
            Ok((rep, gamma, sup))
        })();
        match result {
            Ok((rep, gamma, sup)) => {
                if !rep.converged {
                    status = "not_converged".into();
                }
                sup_u = Some(sup);
                solved = Some((rep, gamma));
            }
            Err(e) => {
                status = format!("error: {e}");
            }
        }
    } else {
        sup_u = problem.grid().ok().and_then(|grid| {
            let g = problem.datum(&grid, cfg.seed).ok()?;
            Some(g.values().iter().fold(g.far_field.unwrap_or(0.0).abs(), |m, v| m.max(v.abs())))
        });
    }
    let completed = !status.starts_with("error");
    cells.push(status);
    match &solved {
        Some((rep, gamma)) => {
            cells.extend([
                format_f64(rep.energy),
                rep.iters.to_string(),
                format_f64(rep.grad_norm),
                flag(rep.converged),
            ]);
            cells.push(opt(*gamma));
        }
        None => cells.extend(std::iter::repeat_n(String::new(), 5)),
    }
    cells.push(opt(exps.kappa));
    let hc = match (alpha, sup_u) {
        (Some(a), Some(sup)) => holder_constants(&exps, a, sup, 0.0, 1.0, 1.0).ok(),
        _ => None,
    };
    cells.push(opt(hc.as_ref().map(|h| h.ln_sigma)));
    cells.push(opt(hc.as_ref().map(|h| h.ln_gamma)));
    SweepRow { cells, completed }
}

/// Writes `sweep.csv` with one row per parameter tuple; exit 0 when at
/// least one row completed.
pub fn cmd_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<i32, CliError> {
    let sweep = cfg.sweep.as_ref().ok_or_else(|| CliError::Config("missing [sweep] section".into()))?;
    let problem = &cfg.problem;
    let alphas: Vec<Option<f64>> =
        if sweep.alpha.is_empty() { vec![problem.alpha()] } else { sweep.alpha.iter().map(|&a| Some(a)).collect() };
    let mut rows = Vec::new();
    let mut completed = 0;
    for &s in &values_or(&sweep.s, problem.s) {
        for &t in &values_or(&sweep.t, problem.t) {
            for &p in &values_or(&sweep.p, problem.p) {
                for &q in &values_or(&sweep.q, problem.q) {
                    for &alpha in &alphas {
                        for &h in &values_or(&sweep.spacing, problem.spacing) {
                            let row = sweep_row(cfg, sweep, s, t, p, q, alpha, h);
                            completed += usize::from(row.completed);
                            rows.push(row.cells);
                        }
                    }
                }
            }
        }
    }
    create_dir(out)?;
    std::fs::write(out.join("effective_config.toml"), cfg.to_toml()?)?;
    write_table(create(&out.join("sweep.csv"))?, &SWEEP_COLUMNS, &rows)?;
    eprintln!("{completed} of {} rows completed", rows.len());
    Ok(if completed > 0 { EXIT_OK } else { EXIT_FAILURE })
}

/// Writes `i,y,threshold,converged` rows of the iteration.
pub fn cmd_iterate_demo<W: Write>(b1: f64, b2: f64, beta: f64, y0: f64, imax: usize, out: W) -> Result<i32, CliError> {
    let outcome = degiorgi_iteration(y0, b1, b2, beta, imax)?;
    let threshold = format_f64(outcome.threshold);
    let rows: Vec<Vec<String>> = outcome
        .trace
        .iter()
        .enumerate()
        .map(|(i, y)| vec![i.to_string(), format_f64(*y), threshold.clone(), flag(outcome.converged)])
        .collect();
    write_table(out, &["i", "y", "threshold", "converged"], &rows)?;
    Ok(EXIT_OK)
}
