//! Subcommand execution and artifact output.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize};

use super::config::{Command, RunConfig};
use crate::bubbles::{bubble_residual, cgs_radial_oracle, oracle_error, pohozaev_balance, pohozaev_balance_with, BubbleParams, PohozaevAudit};
use crate::conformal::{constraint_residual, laplace_covariance_defect, read_general, reconstruct_initial_data, GeneralCoefficients};
use crate::diagnostics::stability_sweep;
use crate::driftsystem::{coupled_solve, reference_problem, DriftSystem, SolveReport};
use crate::error::{Error, Result};
use crate::fieldcalc::random::{band_limited_positive, band_limited_vector};
use crate::fieldcalc::snapshot::{write_scalar, write_vector};
use crate::fieldcalc::{arc, lame_symmetry_defect, BallGrid, Grid, ScalarField, TorusGrid, VectorField};

/// One named assertion of a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    #[serde(deserialize_with = "nan_from_null")]
    pub value: f64,
    #[serde(deserialize_with = "nan_from_null")]
    pub tolerance: f64,
    pub passed: bool,
}

fn nan_from_null<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

impl Check {
    pub fn at_most(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value <= tolerance }
    }

    pub fn at_least(name: &str, value: f64, tolerance: f64) -> Self {
        Check { name: name.into(), value, tolerance, passed: value >= tolerance }
    }

    /// A yes/no check; value 1 or 0.
    pub fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, tolerance: 1.0, passed: ok }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub command: Command,
    pub artifacts: Vec<PathBuf>,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn exit_code(&self) -> i32 {
        if self.passed() {
            0
        } else {
            1
        }
    }
}

/// Files written by each subcommand, relative to the output directory.
pub fn artifact_manifest(cmd: Command) -> &'static [&'static str] {
    match cmd {
        Command::Verify => &["verify.json"],
        Command::Solve => &["solve.json", "solve_trace.csv", "u.field", "w.field"],
        Command::Sweep => &["sweep.json", "sweep.csv"],
        Command::Bubble => &["bubble.json", "bubble_profile.csv"],
        Command::Pohozaev => &["pohozaev.json"],
        Command::Report => &["report.txt", "report.csv"],
    }
}

#[derive(Serialize)]
struct Artifact<'a, T: Serialize> {
    command: &'a str,
    n: usize,
    seed: u64,
    checks: &'a [Check],
    details: T,
}

#[derive(Deserialize)]
struct RecordedArtifact {
    command: String,
    checks: Vec<Check>,
}

fn write_json<T: Serialize>(path: &Path, cfg: &RunConfig, cmd: Command, checks: &[Check], details: T) -> Result<()> {
    let a = Artifact { command: cmd.name(), n: cfg.n, seed: cfg.seed, checks, details };
    fs::write(path, serde_json::to_string_pretty(&a)? + "\n")?;
    Ok(())
}

fn torus(cfg: &RunConfig) -> Result<Arc<Grid>> {
    Ok(arc(Grid::Torus(TorusGrid::new(cfg.n, cfg.grid.m, cfg.grid.length)?)))
}

fn ball(n: usize, radius: f64, nr: usize) -> Result<Arc<Grid>> {
    Ok(arc(Grid::Ball(BallGrid::uniform_default(n, radius, nr)?)))
}

fn critical_f0(cfg: &RunConfig) -> f64 {
    cfg.bubble.f0.unwrap_or((cfg.n * (cfg.n - 2)) as f64)
}

/// Runs `cmd` and writes its artifacts into `cfg.out`.
pub fn dispatch(cfg: &RunConfig, cmd: Command) -> Result<Outcome> {
    cfg.validate()?;
    fs::create_dir_all(&cfg.out)?;
    info!("{cmd}: n = {}, out = {}", cfg.n, cfg.out.display());
    let checks = match cmd {
        Command::Verify => verify(cfg)?,
        Command::Solve => solve(cfg)?,
        Command::Sweep => sweep(cfg)?,
        Command::Bubble => bubble(cfg)?,
        Command::Pohozaev => pohozaev(cfg)?,
        Command::Report => report(cfg)?,
    };
    let artifacts = artifact_manifest(cmd).iter().map(|f| cfg.out.join(f)).collect();
    Ok(Outcome { command: cmd, artifacts, checks })
}

#[derive(Serialize)]
struct VerifyDetails {
    covariance: Vec<f64>,
    lame_symmetry: Vec<f64>,
    bubble_residual: f64,
    pohozaev: PohozaevAudit,
}

fn verify(cfg: &RunConfig) -> Result<Vec<Check>> {
    let g = torus(cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let covariance = (0..5)
        .map(|_| {
            let phi = band_limited_positive(g.clone(), &mut rng, 2, 3, 0.9, 0.1);
            let u = band_limited_positive(g.clone(), &mut rng, 2, 3, 1.0, 0.5);
            laplace_covariance_defect(&phi, &u)
        })
        .collect::<Result<Vec<f64>>>()?;
    let lame = (0..20)
        .map(|_| {
            let x = band_limited_vector(g.clone(), &mut rng, 3, 4);
            let y = band_limited_vector(g.clone(), &mut rng, 3, 4);
            lame_symmetry_defect(&x, &y)
        })
        .collect::<Result<Vec<f64>>>()?;
    let f0 = critical_f0(cfg);
    let b = ball(cfg.n, cfg.bubble.radius, *cfg.bubble.refinements.last().unwrap_or(&64))?;
    let residual = bubble_residual(&BubbleParams::standard(cfg.n, f0).u_profile().sample(b), f0)?.sup();
    let p = &cfg.pohozaev;
    let pg = ball(cfg.n, p.radius, p.nr)?;
    let u = BubbleParams::standard(cfg.n, f0).with_mu(p.mu).b_profile().sample(pg.clone());
    let audit = pohozaev_balance(&u, &critical_coefficients(pg, f0), None, p.delta, 1.0)?;

    let max = |v: &[f64]| v.iter().copied().fold(0.0f64, f64::max);
    let checks = vec![
        Check::at_most("laplace covariance", max(&covariance), 1e-6),
        Check::at_most("lame symmetry", max(&lame), 1e-10),
        Check::at_most("bubble residual", residual, 5e-4),
        Check::at_most("pohozaev balance", audit.balance_defect(), audit.tolerances.balance_rel),
    ];
    let details = VerifyDetails { covariance, lame_symmetry: lame, bubble_residual: residual, pohozaev: audit };
    write_json(&cfg.out.join("verify.json"), cfg, Command::Verify, &checks, details)?;
    Ok(checks)
}

fn critical_coefficients(g: Arc<Grid>, f0: f64) -> GeneralCoefficients {
    GeneralCoefficients::uniform(g, crate::conformal::UniformCoefficients { f: f0, ..Default::default() })
}

#[derive(Serialize)]
struct SolveDetails<'a> {
    problem: &'a str,
    report: &'a SolveReport,
}

fn solve(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut opts = cfg.solver.clone();
    let (sys, exact, problem) = match (&cfg.coefficients.uniform, &cfg.coefficients.snapshot) {
        (Some(k), _) => (DriftSystem::from_general(GeneralCoefficients::uniform(torus(cfg)?, *k))?, None, "uniform"),
        (None, Some(dir)) => (DriftSystem::from_general(read_general(dir)?)?, None, "snapshot"),
        (None, None) => {
            if cfg.grid.length != 1.0 {
                return Err(Error::Config { path: "grid.length".into(), message: "the manufactured problem lives on the unit torus".into() });
            }
            let (sys, us, ws) = reference_problem(cfg.n, cfg.grid.m)?;
            // f < 0 by construction; gates are reported, not enforced
            opts.enforce_gates = false;
            (sys, Some((us, ws)), "manufactured")
        }
    };
    let g = sys.grid().clone();
    let sol = coupled_solve(&sys, &ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g), &opts)?;
    let mut checks = vec![Check::holds("converged", sol.report.converged)];
    if let Some((us, ws)) = exact {
        let tol = 1e-8f64.max(10.0 * opts.tol);
        checks.push(Check::at_most("recovery u", sol.u.sub(&us)?.sup(), tol));
        checks.push(Check::at_most("recovery W", sol.w.sub(&ws)?.sup(), tol));
        checks.push(Check::at_most("outer iterations", sol.report.iterations as f64, 50.0));
        let data = reconstruct_initial_data(&sol.u, &sol.w, &sys.physical)?;
        let cr = constraint_residual(&data, &sys.physical.potential)?;
        checks.push(Check::at_most("constraint residual", cr.sup(), 10.0 * opts.tol));
    }
    write_json(&cfg.out.join("solve.json"), cfg, Command::Solve, &checks, SolveDetails { problem, report: &sol.report })?;
    sol.report.write_trace_csv(BufWriter::new(File::create(cfg.out.join("solve_trace.csv"))?))?;
    write_scalar(&cfg.out.join("u.field"), &sol.u, "u")?;
    write_vector(&cfg.out.join("w.field"), &sol.w, "W")?;
    Ok(checks)
}

fn sweep(cfg: &RunConfig) -> Result<Vec<Check>> {
    let plan = cfg.sweep_plan();
    let rep = stability_sweep(&plan)?;
    let mut checks = vec![Check {
        name: "norm ratio bounded".into(),
        value: rep.norm_ratio,
        tolerance: rep.ratio_bound,
        passed: rep.bounded(),
    }];
    let uniform_plan = plan.amplitudes.windows(2).all(|w| w[0] == w[1]) && plan.drift.windows(2).all(|w| w[0] == w[1]);
    if uniform_plan {
        let same = rep.steps.windows(2).all(|w| w[0].trace == w[1].trace && w[0].norm == w[1].norm);
        checks.push(Check::holds("identical steps", same));
    }
    write_json(&cfg.out.join("sweep.json"), cfg, Command::Sweep, &checks, &rep)?;
    rep.write_csv(BufWriter::new(File::create(cfg.out.join("sweep.csv"))?))?;
    Ok(checks)
}

#[derive(Serialize)]
struct BubbleDetails {
    f0: f64,
    radius: f64,
    nodes: Vec<usize>,
    spacing: Vec<f64>,
    residuals: Vec<f64>,
    orders: Vec<f64>,
    /// (f₀, λ, sup error)
    oracle: Vec<(f64, f64, f64)>,
}

fn bubble(cfg: &RunConfig) -> Result<Vec<Check>> {
    let b = &cfg.bubble;
    let n = cfg.n;
    let f0 = critical_f0(cfg);
    let mut spacing = Vec::new();
    let mut residuals = Vec::new();
    for &nr in &b.refinements {
        let g = ball(n, b.radius, nr)?;
        let r = g.as_ball().map(|bg| bg.radial()[1] - bg.radial()[0]).unwrap_or(f64::NAN);
        spacing.push(r);
        residuals.push(bubble_residual(&BubbleParams::standard(n, f0).u_profile().sample(g), f0)?.sup());
    }
    let orders: Vec<f64> = (1..residuals.len()).map(|k| (residuals[k - 1] / residuals[k]).ln() / (spacing[k - 1] / spacing[k]).ln()).collect();
    let mut oracle = Vec::new();
    for &fac in &b.oracle_f0_factors {
        for &lam in &b.oracle_lambdas {
            oracle.push((fac * f0, lam, oracle_error(n, fac * f0, lam, b.oracle_rmax, 997)?));
        }
    }
    let mut checks = vec![Check::at_most("bubble residual", *residuals.last().unwrap_or(&f64::NAN), 5e-4)];
    if !orders.is_empty() {
        checks.push(Check::at_least("convergence order", orders.iter().copied().fold(f64::INFINITY, f64::min), 1.9));
    }
    if !oracle.is_empty() {
        checks.push(Check::at_most("oracle agreement", oracle.iter().map(|o| o.2).fold(0.0, f64::max), 1e-6));
    }

    let prof = cgs_radial_oracle(n, f0, 1.0, b.oracle_rmax)?;
    let closed = BubbleParams::standard(n, f0).u_profile();
    let mut csv = BufWriter::new(File::create(cfg.out.join("bubble_profile.csv"))?);
    writeln!(csv, "r,closed_form,oracle,oracle_dr")?;
    for k in 0..=200 {
        let r = b.oracle_rmax * k as f64 / 200.0;
        let mut x = vec![0.0; n];
        x[0] = r;
        let (w, dw) = prof.eval(r)?;
        writeln!(csv, "{r:e},{:e},{w:e},{dw:e}", closed.eval(&x))?;
    }
    csv.flush()?;
    let nodes = b.refinements.clone();
    let details = BubbleDetails { f0, radius: b.radius, nodes, spacing, residuals, orders, oracle };
    write_json(&cfg.out.join("bubble.json"), cfg, Command::Bubble, &checks, details)?;
    Ok(checks)
}

#[derive(Serialize)]
struct PohozaevDetails {
    balance: PohozaevAudit,
    concentrated: PohozaevAudit,
}

fn pohozaev(cfg: &RunConfig) -> Result<Vec<Check>> {
    let p = &cfg.pohozaev;
    let f0 = critical_f0(cfg);
    let g = ball(cfg.n, p.radius, p.nr)?;
    let u = BubbleParams::standard(cfg.n, f0).with_mu(p.mu).b_profile().sample(g.clone());
    let balance = pohozaev_balance(&u, &critical_coefficients(g, f0), None, p.delta, 1.0)?;
    let g = ball(cfg.n, p.h0_radius, p.nr)?;
    let u = BubbleParams::standard(cfg.n, f0).with_mu(p.h0_mu).b_profile().sample(g.clone());
    let concentrated = pohozaev_balance_with(&u, &critical_coefficients(g, f0), None, p.h0_delta, 1.0, Some(p.h0_mu))?;
    let checks = vec![
        Check::at_most("pohozaev balance", balance.balance_defect(), balance.tolerances.balance_rel),
        Check::at_most("H(0) estimate", concentrated.h0_estimate.map_or(f64::NAN, f64::abs), concentrated.tolerances.h0_abs),
    ];
    write_json(&cfg.out.join("pohozaev.json"), cfg, Command::Pohozaev, &checks, PohozaevDetails { balance, concentrated })?;
    Ok(checks)
}

/// Collects the checks of every JSON artifact present in the output
/// directory into a text table and a CSV.
fn report(cfg: &RunConfig) -> Result<Vec<Check>> {
    let mut rows: Vec<(String, Check)> = Vec::new();
    for cmd in Command::ALL.iter().filter(|c| **c != Command::Report) {
        let path = cfg.out.join(format!("{}.json", cmd.name()));
        if !path.exists() {
            continue;
        }
        let text = fs::read_to_string(&path)?;
        let rec: RecordedArtifact = serde_json::from_str(&text).map_err(|e| Error::Config {
            path: path.display().to_string(),
            message: format!("not a run artifact: {e}"),
        })?;
        rows.extend(rec.checks.into_iter().map(|c| (rec.command.clone(), c)));
    }
    let mut txt = String::new();
    let mut csv = String::from("artifact,check,value,tolerance,passed\n");
    for (a, c) in &rows {
        let verdict = if c.passed { "PASS" } else { "FAIL" };
        txt += &format!("{verdict}  {a:<9} {:<22} {:>12.4e}  (tol {:.1e})\n", c.name, c.value, c.tolerance);
        csv += &format!("{a},{},{:e},{:e},{}\n", c.name, c.value, c.tolerance, c.passed);
    }
    let failed = rows.iter().filter(|(_, c)| !c.passed).count();
    txt += &format!("{} checks, {} failed\n", rows.len(), failed);
    fs::write(cfg.out.join("report.txt"), txt)?;
    fs::write(cfg.out.join("report.csv"), csv)?;
    Ok(vec![Check::holds("artifacts found", !rows.is_empty()), Check::at_most("failed checks", failed as f64, 0.0)])
}
