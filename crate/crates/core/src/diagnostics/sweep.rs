//! Perturbation sweeps: solve a family of coupled problems and watch whether
//! the solution norms stay bounded.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::concentration::select_concentration_points;
use super::psi::psi_field;
use crate::conformal::{GeneralCoefficients, PhysicalCoefficients, UniformCoefficients};
use crate::driftsystem::{check_gates, coupled_iterate, positivity_floor, DriftSystem, SolveOptions, TraceRow};
use crate::error::{Error, Result};
use crate::fieldcalc::{arc, conformal_killing, norms, Grid, ScalarField, SymTensorField, TorusGrid, VectorField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SweepPlan {
    pub n: usize,
    pub m: usize,
    pub base: UniformCoefficients,
    /// f and ρ₁ are multiplied by 1 + amplitude·scale·p(x) with |p| ≤ 1
    pub perturbation_scale: f64,
    pub amplitudes: Vec<f64>,
    /// C¹ norm of Ṽ per step; empty means no drift, one entry applies to all steps
    pub drift: Vec<f64>,
    /// require strictly decreasing amplitudes
    pub convergence: bool,
    pub ratio_bound: f64,
    pub options: SolveOptions,
}

impl Default for SweepPlan {
    fn default() -> Self {
        SweepPlan {
            n: 3,
            m: 32,
            base: UniformCoefficients { h: 1.0, f: 0.5, rho1: 0.5, rho2: 0.1, b: 0.0, c: 0.0, d: 0.0 },
            perturbation_scale: 0.2,
            amplitudes: (0..7).map(|k| 0.5f64.powi(k)).collect(),
            drift: vec![0.05],
            convergence: true,
            ratio_bound: 10.0,
            options: SolveOptions { tol: 1e-9, enforce_gates: false, ..SolveOptions::default() },
        }
    }
}

impl SweepPlan {
    /// Every step identical: amplitude 0 and no drift.
    pub fn zero_perturbation(steps: usize) -> Self {
        SweepPlan { amplitudes: vec![0.0; steps], drift: Vec::new(), convergence: false, ..SweepPlan::default() }
    }

    pub fn steps(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn drift_at(&self, k: usize) -> f64 {
        match self.drift.len() {
            0 => 0.0,
            1 => self.drift[0],
            _ => self.drift[k],
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(3..=5).contains(&self.n) {
            return Err(Error::Dimension(self.n));
        }
        if self.amplitudes.is_empty() {
            return Err(Error::InvalidArgument("sweep plan has no steps".into()));
        }
        if self.drift.len() > 1 && self.drift.len() != self.amplitudes.len() {
            return Err(Error::InvalidArgument(format!(
                "{} drift values for {} steps",
                self.drift.len(),
                self.amplitudes.len()
            )));
        }
        if self.convergence && self.amplitudes.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::InvalidArgument("amplitudes must be strictly decreasing".into()));
        }
        if !(self.ratio_bound >= 1.0) {
            return Err(Error::InvalidArgument(format!("ratio bound {} < 1", self.ratio_bound)));
        }
        Ok(())
    }

    /// The coupled problem of step `k`.
    pub fn system(&self, k: usize) -> Result<DriftSystem> {
        let g = arc(Grid::Torus(TorusGrid::unit(self.n, self.m)?));
        let n = self.n;
        let a = self.amplitudes[k] * self.perturbation_scale;
        // even perturbations and a drift with Ṽ_a odd in x_a keep every Lamé
        // source component odd, hence orthogonal to the constant Killing fields
        let p1 = |x: &[f64]| x.iter().map(|t| (2.0 * PI * t).cos()).sum::<f64>() / n as f64;
        let p2 = |x: &[f64]| (0..n).map(|i| (2.0 * PI * x[i]).cos() * (4.0 * PI * x[(i + 1) % n]).cos()).sum::<f64>() / n as f64;
        let mut gc = GeneralCoefficients::uniform(g.clone(), self.base);
        gc.f = ScalarField::from_fn(g.clone(), |x| self.base.f * (1.0 + a * p1(x)));
        gc.rho1 = ScalarField::from_fn(g.clone(), |x| self.base.rho1 * (1.0 + a * p2(x)));
        let mut phys = PhysicalCoefficients::vacuum(g.clone(), 0.0);
        // sup + sup|∇| of each component equals the requested C¹ norm
        let dv = self.drift_at(k) / (1.0 + 2.0 * PI);
        phys.drift = VectorField::from_fn(g, |x| x.iter().map(|t| dv * (2.0 * PI * t).sin()).collect());
        DriftSystem::new(gc, phys)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepStep {
    pub step: usize,
    pub amplitude: f64,
    pub drift_norm: f64,
    pub sup_u: f64,
    pub c2_u: f64,
    pub c1_lw: f64,
    /// ‖u‖_{C²} + ‖𝓛W‖_{C¹}
    pub norm: f64,
    pub psi_sup: f64,
    pub floor: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub flags: Vec<String>,
    pub trace: Vec<TraceRow>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub steps: Vec<SweepStep>,
    pub norm_ratio: f64,
    pub ratio_bound: f64,
    /// "bounded", "unbounded" or "diverged"
    pub verdict: String,
}

impl SweepReport {
    pub fn bounded(&self) -> bool {
        self.verdict == "bounded"
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// One row per step; floats in shortest round-trip form.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "step,amplitude,drift_norm,sup_u,C2_u,C1_LW,psi_sup,floor,verdict_flags")?;
        for s in &self.steps {
            let floor = s.floor.map_or_else(|| "nan".to_string(), |v| format!("{v:e}"));
            writeln!(
                out,
                "{},{:e},{:e},{:e},{:e},{:e},{:e},{},{}",
                s.step,
                s.amplitude,
                s.drift_norm,
                s.sup_u,
                s.c2_u,
                s.c1_lw,
                s.psi_sup,
                floor,
                s.flags.join("|")
            )?;
        }
        Ok(())
    }
}

fn c1_sym(t: &SymTensorField) -> Result<f64> {
    let g = t.grid();
    let mut best = 0.0f64;
    for c in t.comps() {
        best = best.max(norms(&ScalarField::new(g.clone(), c.clone())?, None).c1);
    }
    Ok(best)
}

fn run_step(plan: &SweepPlan, k: usize) -> Result<SweepStep> {
    let sys = plan.system(k)?;
    let g: Arc<Grid> = sys.grid().clone();
    let u0 = ScalarField::constant(g.clone(), 1.0);
    let w0 = VectorField::zeros(g);
    let sol = coupled_iterate(&sys, &u0, &w0, &plan.options)?;
    let lw = conformal_killing(&sol.w);
    let gates = check_gates(&sys, &lw, &plan.options)?;
    let mut flags = Vec::new();
    let cap = plan.options.drift_cap * (1.0 + 1e-12);
    if gates.drift_c1 > cap || gates.y_c1 > cap {
        flags.push("outside hypotheses".to_string());
    }
    if gates.f_min < plan.options.theta || gates.a_min < plan.options.theta || gates.lapse_min < plan.options.theta {
        flags.push("below theta".to_string());
    }
    if gates.coefficient_c2 > plan.options.norm_cap {
        flags.push("above T".to_string());
    }
    if !sol.report.converged {
        flags.push("not converged".to_string());
    }
    let c2_u = norms(&sol.u, None).c2;
    let c1_lw = c1_sym(&lw)?;
    let set = select_concentration_points(&sol.u)?;
    let psi = psi_field(&sol.u, &sol.w, &set.points)?;
    Ok(SweepStep {
        step: k,
        amplitude: plan.amplitudes[k],
        drift_norm: gates.drift_c1,
        sup_u: sol.u.max(),
        c2_u,
        c1_lw,
        norm: c2_u + c1_lw,
        psi_sup: psi.sup,
        floor: positivity_floor(&sys.general, Some(&lw))?.epsilon(),
        converged: sol.report.converged,
        iterations: sol.report.iterations,
        flags,
        trace: sol.report.trace,
    })
}

/// Runs the steps concurrently; each solve is sequential, so the report does
/// not depend on the thread count.
pub fn stability_sweep(plan: &SweepPlan) -> Result<SweepReport> {
    plan.validate()?;
    let steps = (0..plan.steps()).into_par_iter().map(|k| run_step(plan, k)).collect::<Result<Vec<_>>>()?;
    let max = steps.iter().map(|s| s.norm).fold(f64::NEG_INFINITY, f64::max);
    let min = steps.iter().map(|s| s.norm).fold(f64::INFINITY, f64::min);
    let norm_ratio = max / min;
    let verdict = if steps.iter().any(|s| !s.converged) {
        "diverged"
    } else if norm_ratio <= plan.ratio_bound {
        "bounded"
    } else {
        "unbounded"
    };
    Ok(SweepReport { steps, norm_ratio, ratio_bound: plan.ratio_bound, verdict: verdict.into() })
}
