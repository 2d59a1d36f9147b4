use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use conformal_drift::cli::{artifact_manifest, dispatch, parse_config, Command, RunConfig, DEFAULTS};

#[derive(Parser)]
#[command(name = "conformal-drift", version, about = "Solvers and diagnostics for the drift form of the conformal constraint equations", after_help = DEFAULTS)]
struct Args {
    #[command(subcommand)]
    command: Option<Sub>,
    /// TOML run configuration; without it, defaults for n = 3
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// output directory (overrides `out`)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// solver tolerance (overrides solver.tol and sweep.options.tol)
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// worker threads for sweeps
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand, Clone, Copy)]
enum Sub {
    /// identity suite: covariance, Lamé symmetry, bubble residual, Pohozaev balance
    Verify,
    /// coupled solve of the configured or manufactured problem
    Solve,
    /// stability sweep over a perturbation family
    Sweep,
    /// bubble residual refinement and radial ODE oracle
    Bubble,
    /// Pohozaev balance and H(0) estimate
    Pohozaev,
    /// summary of the JSON artifacts in the output directory
    Report,
}

impl From<Sub> for Command {
    fn from(s: Sub) -> Self {
        match s {
            Sub::Verify => Command::Verify,
            Sub::Solve => Command::Solve,
            Sub::Sweep => Command::Sweep,
            Sub::Bubble => Command::Bubble,
            Sub::Pohozaev => Command::Pohozaev,
            Sub::Report => Command::Report,
        }
    }
}

fn run(args: Args) -> conformal_drift::Result<i32> {
    let mut cfg = match &args.config {
        Some(p) => parse_config(p)?,
        None => RunConfig::new(3),
    };
    if let Some(o) = args.out {
        cfg.out = o;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(t) = args.tol {
        cfg.solver.tol = t;
        let mut plan = cfg.sweep.clone().unwrap_or_default();
        plan.options.tol = t;
        cfg.sweep = Some(plan);
    }
    if let Some(k) = args.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global()
            .map_err(|e| conformal_drift::Error::InvalidArgument(format!("thread pool: {e}")))?;
    }
    let cmd = match (args.command, cfg.command) {
        (Some(s), _) => Command::from(s),
        (None, Some(c)) => c,
        (None, None) => {
            return Err(conformal_drift::Error::Config { path: "command".into(), message: "no subcommand given".into() });
        }
    };
    println!("{cmd}: artifacts {}", artifact_manifest(cmd).join(", "));
    let outcome = dispatch(&cfg, cmd)?;
    for c in &outcome.checks {
        println!("{} {:<22} {:.4e} (tol {:.1e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.tolerance);
    }
    for a in &outcome.artifacts {
        println!("wrote {}", a.display());
    }
    Ok(outcome.exit_code())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Args::parse()) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
