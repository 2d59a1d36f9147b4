//! Alternating solver for the coupled system on the torus: damped Newton on
//! the scalar equation with W frozen, then a Lamé solve with u frozen.

use std::io::Write;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::floor::{positivity_floor, Floor};
use super::manufactured::DriftSystem;
use super::residual::{vector_residual, vector_source_terms};
use crate::conformal::GeneralCoefficients;
use crate::elliptic::{gmres, lame_spectral_inverse, scalar_spectral_inverse, solve_lame_periodic, GmresOptions};
use crate::error::{Error, Result};
use crate::fieldcalc::{
    conformal_killing, grad, integrate, lame_apply, laplacian, norms, Norms, ScalarField, SobolevExponents, SymTensorField, TorusGrid,
    VectorField,
};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolveOptions {
    /// residual tolerance (sup norm) for both equations
    pub tol: f64,
    pub max_outer: usize,
    /// under-relaxation of the W update
    pub relax: f64,
    /// Newton steps on the scalar equation per outer iteration
    pub newton_steps: usize,
    /// θ of the coefficient class: f, a, Ñ ≥ θ
    pub theta: f64,
    /// T of the coefficient class: C² caps
    pub norm_cap: f64,
    /// ϑ: smallness of Y and Ṽ
    pub drift_cap: f64,
    /// fail before iterating when f, a or Ñ drop below θ
    pub enforce_gates: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-9,
            max_outer: 200,
            relax: 0.7,
            newton_steps: 6,
            theta: 0.1,
            norm_cap: 100.0,
            drift_cap: 0.1,
            enforce_gates: true,
        }
    }
}

/// Coefficient bounds checked before a solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateReport {
    pub f_min: f64,
    pub a_min: f64,
    pub lapse_min: f64,
    /// largest C² norm among h, f, ρ₁, ρ₂, b, c, d, Ñ
    pub coefficient_c2: f64,
    /// C¹ norms of Y and Ṽ (max over components)
    pub y_c1: f64,
    pub drift_c1: f64,
    pub within_hypotheses: bool,
    pub notes: Vec<String>,
}

pub fn check_gates(sys: &DriftSystem, lw: &SymTensorField, opts: &SolveOptions) -> Result<GateReport> {
    let gc = &sys.general;
    let p = &sys.physical;
    let theta = opts.theta;
    let f_min = gc.f.min();
    let a_min = gc.a_field(Some(lw))?.min();
    let lapse_min = p.lapse.min();
    let coefficient_c2 =
        [&gc.h, &gc.f, &gc.rho1, &gc.rho2, &gc.b, &gc.c, &gc.d, &p.lapse].iter().map(|s| norms(s, None).c2).fold(0.0, f64::max);
    let c1 = |v: &VectorField| (0..v.dim()).map(|k| norms(&v.component(k), None).c1).fold(0.0, f64::max);
    let y_c1 = c1(&gc.y);
    let drift_c1 = c1(&p.drift);
    let mut notes = Vec::new();
    for (name, v) in [("f", f_min), ("a", a_min), ("Ñ", lapse_min)] {
        if v < theta {
            notes.push(format!("min {name} = {v:.3e} < θ = {theta:e}"));
        }
    }
    if coefficient_c2 > opts.norm_cap {
        notes.push(format!("coefficient C² norm {coefficient_c2:.3e} > T = {:e}", opts.norm_cap));
    }
    if y_c1 > opts.drift_cap * (1.0 + 1e-12) || drift_c1 > opts.drift_cap * (1.0 + 1e-12) {
        notes.push(format!("‖Y‖ = {y_c1:.3e}, ‖Ṽ‖ = {drift_c1:.3e} above ϑ = {:e}: outside the coefficient class", opts.drift_cap));
    }
    Ok(GateReport { f_min, a_min, lapse_min, coefficient_c2, y_c1, drift_c1, within_hypotheses: notes.is_empty(), notes })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub scalar_res: f64,
    pub vector_res: f64,
    pub sup_u: f64,
    pub min_u: f64,
    #[serde(rename = "sup_LW")]
    pub sup_lw: f64,
    /// smallest Newton step length accepted in this iteration
    pub step: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
    pub u_norms: Norms,
    pub lw_c0: f64,
    pub lw_c1: f64,
    pub floor: Floor,
    pub converged: bool,
    pub wall_time_s: f64,
    pub tol: f64,
    pub newton_steps: usize,
    pub linear_iterations: usize,
    /// first outer iteration with a damped (t < 1) Newton step
    pub damping_engaged_at: Option<usize>,
    pub gates: GateReport,
}

impl SolveReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// iteration, scalar_res, vector_res, sup_u, min_u, sup_LW
    pub fn write_trace_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "iteration,scalar_res,vector_res,sup_u,min_u,sup_LW")?;
        for r in &self.trace {
            writeln!(out, "{},{:e},{:e},{:e},{:e},{:e}", r.iteration, r.scalar_res, r.vector_res, r.sup_u, r.min_u, r.sup_lw)?;
        }
        Ok(())
    }

    /// Residual trace rows from the first damped iteration on.
    pub fn damped_tail(&self) -> &[TraceRow] {
        match self.damping_engaged_at {
            Some(k) => &self.trace[self.trace.iter().position(|r| r.iteration >= k).unwrap_or(self.trace.len())..],
            None => &[],
        }
    }
}

#[derive(Clone, Debug)]
pub struct Solution {
    pub u: ScalarField,
    pub w: VectorField,
    pub report: SolveReport,
}

/// Runs the alternating iteration; non-convergence is an error.
pub fn coupled_solve(sys: &DriftSystem, u0: &ScalarField, w0: &VectorField, opts: &SolveOptions) -> Result<Solution> {
    let s = coupled_iterate(sys, u0, w0, opts)?;
    if !s.report.converged {
        let last = s.report.trace.last().map_or(f64::INFINITY, |r| r.scalar_res.max(r.vector_res));
        return Err(Error::NoConvergence { iterations: s.report.iterations, residual: last });
    }
    Ok(s)
}

/// Same iteration, returning the last iterate and its report even when the
/// tolerance is not met (used by sweeps that classify failures).
pub fn coupled_iterate(sys: &DriftSystem, u0: &ScalarField, w0: &VectorField, opts: &SolveOptions) -> Result<Solution> {
    let start = Instant::now();
    let t = sys
        .grid()
        .as_torus()
        .ok_or_else(|| Error::UnsupportedDomain("coupled_solve runs on torus grids (spectral Lamé step)".into()))?
        .clone();
    let gc = &sys.general;
    let p = &sys.physical;
    if u0.min() <= 0.0 {
        return Err(Error::Positivity(format!("initial guess has min u = {:e}", u0.min())));
    }
    let mut w = remove_mean(w0);
    let mut lw = conformal_killing(&w);
    let gates = check_gates(sys, &lw, opts)?;
    if opts.enforce_gates && (gates.f_min < opts.theta || gates.a_min < opts.theta || gates.lapse_min < opts.theta) {
        return Err(Error::Precondition(gates.notes.join("; ")));
    }
    for note in &gates.notes {
        log::warn!("{note}");
    }
    let eps = match positivity_floor(gc, Some(&lw))? {
        Floor::Bound(e) => e,
        Floor::Infeasible => return Err(Error::Infeasible("positivity floor: no m > 0 satisfies the minimum principle".into())),
    };
    let guard = (0.5 * eps).max(1e-6);
    let mut u = u0.clone();
    if u.min() < guard {
        u = u.map(|v| v.max(guard));
    }

    let mut trace = Vec::new();
    let mut newton_total = 0;
    let mut linear_total = 0;
    let mut damping: Option<usize> = None;
    let mut converged = false;
    let mut iterations = 0;
    for k in 1..=opts.max_outer {
        iterations = k;
        // scalar: damped Newton with W frozen
        let mut min_step = 1.0f64;
        for _ in 0..opts.newton_steps {
            let r = scalar_residual_frozen(&u, &lw, gc)?;
            let rn = r.sup();
            if rn <= 0.05 * opts.tol {
                break;
            }
            let (delta, its) = newton_direction(&t, &u, &lw, gc, &r)?;
            linear_total += its;
            newton_total += 1;
            let mut step = 1.0;
            let mut accepted = None;
            for _ in 0..=30 {
                let cand = u.zip_map(&delta, |a, d| a + step * d)?;
                if cand.min() >= guard {
                    let rc = scalar_residual_frozen(&cand, &lw, gc)?.sup();
                    if rc <= (1.0 - 1e-4 * step) * rn {
                        accepted = Some(cand);
                        break;
                    }
                }
                step *= 0.5;
            }
            match accepted {
                Some(c) => {
                    u = c;
                    min_step = min_step.min(step);
                    if step < 1.0 && damping.is_none() {
                        damping = Some(k);
                    }
                }
                None => break,
            }
        }
        // vector: Lamé solve with u frozen, under-relaxed
        let source = vector_source_terms(&u, p)?.scale(-1.0);
        let (target, its) = lame_step(&t, p, &source, &w)?;
        linear_total += its;
        w = w.add(&target.sub(&w)?.scale(opts.relax))?;
        lw = conformal_killing(&w);

        let sres = scalar_residual_frozen(&u, &lw, gc)?.sup();
        let vres = vector_residual(&u, &w, p)?.sup();
        trace.push(TraceRow {
            iteration: k,
            scalar_res: sres,
            vector_res: vres,
            sup_u: u.max(),
            min_u: u.min(),
            sup_lw: lw.sup(),
            step: min_step,
        });
        log::debug!("outer {k}: scalar {sres:.3e} vector {vres:.3e} min u {:.4}", u.min());
        if !sres.is_finite() || !vres.is_finite() {
            break;
        }
        if sres <= opts.tol && vres <= opts.tol {
            converged = true;
            break;
        }
    }
    let floor = positivity_floor(gc, Some(&lw))?;
    let lw_norm: Vec<Norms> = lw.comps().iter().map(|c| norms(&u.with_data(c.clone()), None)).collect();
    let report = SolveReport {
        iterations,
        trace,
        u_norms: norms(&u, None),
        lw_c0: lw.sup(),
        lw_c1: lw_norm.iter().map(|n| n.c1).fold(0.0, f64::max),
        floor,
        converged,
        wall_time_s: start.elapsed().as_secs_f64(),
        tol: opts.tol,
        newton_steps: newton_total,
        linear_iterations: linear_total,
        damping_engaged_at: damping,
        gates,
    };
    Ok(Solution { u, w, report })
}

fn scalar_residual_frozen(u: &ScalarField, lw: &SymTensorField, gc: &GeneralCoefficients) -> Result<ScalarField> {
    crate::conformal::scalar_residual_in(None, u, lw, gc, None)
}

/// Solves J δ = −r for the linearization J of the scalar residual at u.
fn newton_direction(
    t: &TorusGrid,
    u: &ScalarField,
    lw: &SymTensorField,
    gc: &GeneralCoefficients,
    r: &ScalarField,
) -> Result<(ScalarField, usize)> {
    let q = SobolevExponents::new(u.dim())?.q();
    let a = gc.a_field(Some(lw))?;
    let has_y = gc.y.sup() > 0.0;
    let s = if has_y { grad(u).dot(&gc.y)? } else { u.map(|_| 0.0) };
    let len = u.len();
    let mut diag = vec![0.0; len];
    let mut ys = vec![0.0; len];
    for i in 0..len {
        let x = u.data()[i];
        let (f, aa, b, c, d, si) = (gc.f.data()[i], a.data()[i], gc.b.data()[i], gc.c.data()[i], gc.d.data()[i], s.data()[i]);
        let dn = (q - 1.0) * f * x.powf(q - 2.0) - (q + 1.0) * aa * x.powf(-q - 2.0)
            + b / (x * x)
            + c * si * (2.0 * d / x.powi(3) + (q + 2.0) * x.powf(-q - 3.0))
            + (q + 3.0) * si * si * x.powf(-q - 4.0);
        diag[i] = gc.h.data()[i] - dn;
        ys[i] = c * (d / (x * x) + x.powf(-q - 2.0)) + 2.0 * si * x.powf(-q - 3.0);
    }
    let apply = |v: &[f64]| -> Vec<f64> {
        let f = u.with_data(v.to_vec());
        let mut out: Vec<f64> = laplacian(&f).data().iter().zip(v).zip(&diag).map(|((l, v), d)| l + d * v).collect();
        if has_y {
            let gy = grad(&f).dot(&gc.y).expect("same grid");
            for ((o, g), c) in out.iter_mut().zip(gy.data()).zip(&ys) {
                *o += c * g;
            }
        }
        out
    };
    let shift = safe_shift(t, diag.iter().sum::<f64>() / len as f64);
    let b: Vec<f64> = r.data().iter().map(|v| -v).collect();
    let opts = GmresOptions { restart: 40, max_iter: 400, rtol: 1e-10, atol: 0.0 };
    let out = gmres(apply, |v: &[f64]| scalar_spectral_inverse(t, shift, v), &b, None, &opts);
    Ok((u.with_data(out.x), out.iterations))
}

/// Mean of the linearized zeroth-order coefficient, nudged away from the
/// discrete spectrum of Δ so that (Δ + shift)⁻¹ stays bounded.
fn safe_shift(t: &TorusGrid, kappa: f64) -> f64 {
    let unit = t.kscale() * t.kscale();
    let j = (-kappa / unit).round().max(0.0);
    let gap = unit * j + kappa;
    if gap.abs() >= 0.25 * unit {
        kappa
    } else {
        -unit * j + 0.5 * unit * if gap >= 0.0 { 1.0 } else { -1.0 }
    }
}

fn remove_mean(w: &VectorField) -> VectorField {
    let len = w.len() as f64;
    w.with_comps(
        w.comps()
            .iter()
            .map(|c| {
                let m = c.iter().sum::<f64>() / len;
                c.iter().map(|v| v - m).collect()
            })
            .collect(),
    )
}

fn flatten(w: &VectorField) -> Vec<f64> {
    w.comps().concat()
}

fn unflatten(like: &VectorField, v: &[f64]) -> VectorField {
    like.with_comps(v.chunks(like.len()).map(|c| c.to_vec()).collect())
}

/// Δ⃗W − ⟨∇lnÑ,𝓛W⟩ = source in the mean-zero gauge. Constant Ñ goes straight
/// to the spectral inverse; otherwise GMRES preconditioned by it.
fn lame_step(
    t: &TorusGrid,
    p: &crate::conformal::PhysicalCoefficients,
    source: &VectorField,
    w0: &VectorField,
) -> Result<(VectorField, usize)> {
    let lapse = &p.lapse;
    if lapse.max() - lapse.min() <= 1e-14 * lapse.max() {
        return Ok((solve_lame_periodic(source)?, 0));
    }
    // ∫Ñ·(operator) = 0, so the Ñ-weighted mean of the source must vanish
    let wsum = integrate(lapse);
    let mut comps = source.comps().to_vec();
    let mut max_mean = 0.0f64;
    for c in comps.iter_mut() {
        let m = integrate(&lapse.with_data(c.iter().zip(lapse.data()).map(|(a, b)| a * b).collect())) / wsum;
        max_mean = max_mean.max(m.abs());
        c.iter_mut().for_each(|v| *v -= m);
    }
    let projected = source.with_comps(comps);
    if max_mean > 1e-10 {
        if projected.sup() <= 1e-10 * max_mean.max(1.0) {
            return Err(Error::KernelIncompatible);
        }
        log::warn!("Lamé source has weighted mean {max_mean:.3e}; projected out");
    }
    let dln = grad(&lapse.map(f64::ln));
    let apply = |v: &[f64]| -> Vec<f64> {
        let x = unflatten(source, v);
        let lx = conformal_killing(&x);
        flatten(&lame_apply(&x).sub(&lx.apply(&dln).expect("grid")).expect("grid"))
    };
    let precond = |v: &[f64]| -> Vec<f64> {
        let parts: Vec<Vec<f64>> = v.chunks(source.len()).map(|c| c.to_vec()).collect();
        lame_spectral_inverse(t, &parts).concat()
    };
    let b = flatten(&projected);
    let opts = GmresOptions { restart: 40, max_iter: 400, rtol: 1e-12, atol: 1e-14 };
    let out = gmres(apply, precond, &b, Some(&flatten(w0)), &opts);
    Ok((remove_mean(&unflatten(source, &out.x)), out.iterations))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::UniformCoefficients;
    use crate::driftsystem::manufactured::manufactured_system;
    use crate::fieldcalc::{arc, Grid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    const TP: f64 = 2.0 * PI;

    fn torus(m: usize) -> Arc<Grid> {
        arc(Grid::Torus(TorusGrid::unit(3, m).unwrap()))
    }

    #[test]
    fn algebraic_fixed_point_from_u_two() {
        let g = torus(8);
        let gc = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { f: 2.0, rho1: 1.0, b: 3.0, ..Default::default() });
        let sys = DriftSystem::from_general(gc).unwrap();
        let s = coupled_solve(&sys, &ScalarField::constant(g.clone(), 2.0), &VectorField::zeros(g), &SolveOptions::default()).unwrap();
        assert!(s.u.data().iter().all(|v| (v - 1.0).abs() < 1e-10));
        assert!(s.w.sup() == 0.0);
        assert!(s.report.converged);
    }

    #[test]
    fn gate_rejects_nonpositive_f() {
        let g = torus(8);
        let mut gc = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { f: 1.0, rho1: 1.0, h: 2.0, ..Default::default() });
        gc.f = ScalarField::from_fn(g.clone(), |x| if x[0] < 0.5 { 1.0 } else { -0.1 });
        let sys = DriftSystem::from_general(gc).unwrap();
        let e = coupled_solve(&sys, &ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g), &SolveOptions::default()).unwrap_err();
        assert!(matches!(e, Error::Precondition(_)), "{e}");
    }

    #[test]
    fn manufactured_recovery_with_variable_lapse() {
        let g = torus(16);
        let mut base = DriftSystem::from_general(GeneralCoefficients::uniform(
            g.clone(),
            UniformCoefficients { h: 6.0, f: 1.0, rho1: 5.0, rho2: 0.2, ..Default::default() },
        ))
        .unwrap();
        base.physical.lapse = ScalarField::from_fn(g.clone(), |x| 1.0 + 0.2 * (TP * x[2]).cos());
        let us = ScalarField::from_fn(g.clone(), |x| 1.0 + 0.1 * (TP * x[0]).cos());
        let ws = VectorField::from_fn(g.clone(), |x| vec![0.0, 0.2 * (TP * x[0]).sin(), 0.1 * (TP * x[1]).cos()]);
        let sys = manufactured_system(&us, &ws, &base, 0.1).unwrap();
        let s = coupled_solve(&sys, &ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g), &SolveOptions::default()).unwrap();
        assert!(s.u.sub(&us).unwrap().sup() < 1e-8);
        assert!(s.w.sub(&ws).unwrap().sup() < 1e-8);
        assert!(s.report.iterations <= 50, "{}", s.report.iterations);
        let mut csv = Vec::new();
        s.report.write_trace_csv(&mut csv).unwrap();
        assert!(String::from_utf8(csv).unwrap().starts_with("iteration,scalar_res,vector_res,sup_u,min_u,sup_LW"));
        assert!(s.report.to_json().unwrap().contains("\"converged\": true"));
    }

    #[test]
    fn ball_grid_is_unsupported() {
        let g = arc(Grid::Ball(crate::fieldcalc::BallGrid::uniform_default(3, 1.0, 8).unwrap()));
        let gc = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { f: 2.0, rho1: 1.0, b: 3.0, ..Default::default() });
        let sys = DriftSystem::from_general(gc).unwrap();
        let e = coupled_solve(&sys, &ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g), &SolveOptions::default());
        assert!(matches!(e, Err(Error::UnsupportedDomain(_))));
    }
}
