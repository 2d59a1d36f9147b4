//! Run configuration read from TOML.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::conformal::{read_manifest, UniformCoefficients};
use crate::diagnostics::SweepPlan;
use crate::driftsystem::SolveOptions;
use crate::error::{Error, Result};
use crate::fieldcalc::GridDescriptor;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Verify,
    Solve,
    Sweep,
    Bubble,
    Pohozaev,
    Report,
}

impl Command {
    pub const ALL: [Command; 6] = [Command::Verify, Command::Solve, Command::Sweep, Command::Bubble, Command::Pohozaev, Command::Report];

    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Sweep => "sweep",
            Command::Bubble => "bubble",
            Command::Pohozaev => "pohozaev",
            Command::Report => "report",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Config { path: "command".into(), message: format!("unknown command `{s}`") })
    }
}

/// Periodic grid T^n = [0, length)^n with m nodes per side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub m: usize,
    pub length: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec { m: 32, length: 1.0 }
    }
}

/// Scalar-equation coefficients: inline constants or a coefficient bundle
/// directory. Neither means the built-in manufactured problem.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoefficientSource {
    pub uniform: Option<UniformCoefficients>,
    pub snapshot: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BubbleConfig {
    /// defaults to n(n−2)
    pub f0: Option<f64>,
    pub radius: f64,
    /// radial node counts of the refinement study, coarse to fine
    pub refinements: Vec<usize>,
    pub oracle_rmax: f64,
    pub oracle_lambdas: Vec<f64>,
    /// oracle runs use f₀ times each factor
    pub oracle_f0_factors: Vec<f64>,
}

impl Default for BubbleConfig {
    fn default() -> Self {
        BubbleConfig { f0: None, radius: 2.0, refinements: vec![16, 32, 64], oracle_rmax: 10.0, oracle_lambdas: vec![1.0, 2.0], oracle_f0_factors: vec![1.0, 2.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PohozaevConfig {
    pub mu: f64,
    pub radius: f64,
    pub delta: f64,
    pub nr: usize,
    /// concentrated bubble for the H(0) estimate
    pub h0_mu: f64,
    pub h0_radius: f64,
    pub h0_delta: f64,
}

impl Default for PohozaevConfig {
    fn default() -> Self {
        PohozaevConfig { mu: 0.5, radius: 0.8, delta: 0.4, nr: 64, h0_mu: 1e-4, h0_radius: 0.4, h0_delta: 0.2 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub n: usize,
    #[serde(default)]
    pub command: Option<Command>,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub coefficients: CoefficientSource,
    #[serde(default)]
    pub solver: SolveOptions,
    #[serde(default)]
    pub sweep: Option<SweepPlan>,
    #[serde(default)]
    pub bubble: BubbleConfig,
    #[serde(default)]
    pub pohozaev: PohozaevConfig,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

/// Shown by `--help`.
pub const DEFAULTS: &str = "\
Config defaults (TOML):
  n                       required, 3..=5
  command                 verify | solve | sweep | bubble | pohozaev | report
  out = \"out\"   seed = 0
  [grid]                  m = 32, length = 1.0 (unit torus)
  [coefficients]          uniform = {h, f, rho1, rho2, b, c, d} or snapshot = DIR;
                          neither: built-in manufactured problem
  [solver]                tol = 1e-9, max_outer = 200, relax = 0.7, newton_steps = 6,
                          theta = 0.1, norm_cap = 100 (T), drift_cap = 0.1, enforce_gates = true
  [sweep]                 base = {h=1, f=0.5, rho1=0.5, rho2=0.1}, perturbation_scale = 0.2,
                          amplitudes = 2^-k for k = 0..6, drift = [0.05], convergence = true,
                          ratio_bound = 10, options.tol = 1e-9, options.enforce_gates = false
  [bubble]                f0 = n(n-2), radius = 2, refinements = [16, 32, 64],
                          oracle_rmax = 10, oracle_lambdas = [1, 2], oracle_f0_factors = [1, 2]
  [pohozaev]              mu = 0.5, radius = 0.8, delta = 0.4, nr = 64,
                          h0_mu = 1e-4, h0_radius = 0.4, h0_delta = 0.2";

impl RunConfig {
    /// Defaults for dimension `n`.
    pub fn new(n: usize) -> Self {
        RunConfig {
            n,
            command: None,
            grid: GridSpec::default(),
            coefficients: CoefficientSource::default(),
            solver: SolveOptions::default(),
            sweep: None,
            bubble: BubbleConfig::default(),
            pohozaev: PohozaevConfig::default(),
            out: default_out(),
            seed: 0,
        }
    }

    pub fn grid_descriptor(&self) -> GridDescriptor {
        GridDescriptor::Torus { n: self.n, m: self.grid.m, length: self.grid.length }
    }

    /// Sweep plan with n and m taken from the run.
    pub fn sweep_plan(&self) -> SweepPlan {
        let mut p = self.sweep.clone().unwrap_or_default();
        p.n = self.n;
        p.m = self.grid.m;
        p
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=5).contains(&self.n) {
            return Err(Error::Dimension(self.n));
        }
        if self.grid.m < 8 || self.grid.m % 2 != 0 {
            return Err(Error::Config { path: "grid.m".into(), message: format!("need an even m >= 8, got {}", self.grid.m) });
        }
        if !(self.grid.length > 0.0) {
            return Err(Error::Config { path: "grid.length".into(), message: format!("must be positive, got {}", self.grid.length) });
        }
        if self.coefficients.uniform.is_some() && self.coefficients.snapshot.is_some() {
            return Err(Error::Config { path: "coefficients".into(), message: "give either `uniform` or `snapshot`, not both".into() });
        }
        if let Some(dir) = &self.coefficients.snapshot {
            if !dir.exists() {
                return Err(Error::Snapshot { path: dir.clone(), message: "no such file or directory".into() });
            }
            let manifest = read_manifest(dir)?;
            if manifest.grid != self.grid_descriptor() {
                return Err(Error::Config {
                    path: "coefficients.snapshot".into(),
                    message: format!("{} holds grid {:?}, config asks for {:?}", dir.display(), manifest.grid, self.grid_descriptor()),
                });
            }
        }
        if self.bubble.refinements.is_empty() {
            return Err(Error::Config { path: "bubble.refinements".into(), message: "empty".into() });
        }
        Ok(())
    }
}

/// Reads, deserializes and validates a TOML run configuration. Relative
/// snapshot paths are resolved against the config file's directory.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { path: path.display().to_string(), message: format!("cannot read: {e}") })?;
    let mut cfg = parse_config_str(&text)?;
    if let (Some(s), Some(base)) = (&cfg.coefficients.snapshot, path.parent()) {
        if s.is_relative() {
            cfg.coefficients.snapshot = Some(base.join(s));
        }
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Deserializes without validation; schema errors carry the field path.
pub fn parse_config_str(text: &str) -> Result<RunConfig> {
    let de = toml::Deserializer::new(text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        Error::Config { path, message: e.into_inner().message().trim().to_string() }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write(dir: &Path, text: &str) -> PathBuf {
        let p = dir.join("run.toml");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let d = tempfile::tempdir().unwrap();
        let c = parse_config(&write(d.path(), "n = 3\ncommand = \"verify\"\n[grid]\nm = 32\n")).unwrap();
        assert_eq!(c.command, Some(Command::Verify));
        assert_eq!((c.solver.theta, c.solver.norm_cap, c.solver.drift_cap), (0.1, 100.0, 0.1));
        assert_eq!(c.grid.length, 1.0);
        assert_eq!(c.out, PathBuf::from("out"));
        assert_eq!(c.sweep_plan().m, 32);
    }

    #[test]
    fn dimension_six_is_rejected() {
        let d = tempfile::tempdir().unwrap();
        let e = parse_config(&write(d.path(), "n = 6\n")).unwrap_err();
        assert!(e.to_string().contains("dimension outside theorem range 3..5"), "{e}");
    }

    #[test]
    fn missing_snapshot_names_the_path() {
        let d = tempfile::tempdir().unwrap();
        let e = parse_config(&write(d.path(), "n = 3\n[coefficients]\nsnapshot = \"missing_bundle\"\n")).unwrap_err();
        assert!(matches!(e, Error::Snapshot { .. }));
        assert!(e.to_string().contains("missing_bundle"), "{e}");
    }

    #[test]
    fn schema_errors_carry_the_field_path() {
        let e = parse_config_str("n = 3\n[solver]\ntheta = \"big\"\n").unwrap_err();
        match e {
            Error::Config { path, .. } => assert_eq!(path, "solver.theta"),
            other => panic!("{other}"),
        }
        let e = parse_config_str("n = 3\n[grid]\nm = 16\nsize = 2\n").unwrap_err();
        assert!(matches!(e, Error::Config { ref path, .. } if path.starts_with("grid")), "{e}");
    }

    #[test]
    fn snapshot_grid_must_match() {
        use crate::conformal::{write_general, GeneralCoefficients};
        use crate::fieldcalc::{arc, Grid, TorusGrid};
        let d = tempfile::tempdir().unwrap();
        let g = arc(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        let gc = GeneralCoefficients::uniform(g, UniformCoefficients { f: 1.0, rho1: 1.0, h: 1.0, ..Default::default() });
        write_general(&d.path().join("coeffs"), &gc).unwrap();
        let ok = parse_config(&write(d.path(), "n = 3\n[grid]\nm = 8\n[coefficients]\nsnapshot = \"coeffs\"\n")).unwrap();
        assert!(ok.coefficients.snapshot.unwrap().is_absolute() || d.path().is_relative());
        let e = parse_config(&write(d.path(), "n = 3\n[grid]\nm = 16\n[coefficients]\nsnapshot = \"coeffs\"\n")).unwrap_err();
        assert!(matches!(e, Error::Config { .. }), "{e}");
    }
}
