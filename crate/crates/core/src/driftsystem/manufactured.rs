//! Coupled problems and manufactured test problems with a prescribed solution.

use std::sync::Arc;

use crate::conformal::{physical_to_general, GeneralCoefficients, PhysicalCoefficients};
use crate::error::{Error, Result};
use crate::fieldcalc::{conformal_killing, same_grid_all, Grid, ScalarField, SobolevExponents, VectorField};

use super::residual::{scalar_residual, vector_residual};

/// A coupled problem: the scalar equation in the general language and the
/// vector equation from the physical data (Ñ, Ṽ, π∇ψ + J).
#[derive(Clone, Debug)]
pub struct DriftSystem {
    pub general: GeneralCoefficients,
    pub physical: PhysicalCoefficients,
}

impl DriftSystem {
    pub fn new(general: GeneralCoefficients, physical: PhysicalCoefficients) -> Result<Self> {
        general.check()?;
        same_grid_all(&[general.grid(), physical.grid()])?;
        Ok(DriftSystem { general, physical })
    }

    /// Both equations from drift data; the scalar equation through
    /// [`physical_to_general`], exact when Ṽ = 0.
    pub fn from_physical(physical: PhysicalCoefficients) -> Result<Self> {
        Ok(DriftSystem { general: physical_to_general(&physical)?, physical })
    }

    /// Scalar coefficients only; the vector equation becomes Δ⃗W = 0.
    pub fn from_general(general: GeneralCoefficients) -> Result<Self> {
        general.check()?;
        let physical = PhysicalCoefficients::vacuum(general.grid().clone(), 0.0);
        Ok(DriftSystem { general, physical })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.general.grid()
    }
}

/// Replaces ρ₁ so that the scalar residual vanishes at (u*, W*), then checks
/// a = ρ₁ + |Ψ + ρ₂𝓛W*|² ≥ θ.
pub fn manufactured_coefficients(u: &ScalarField, w: &VectorField, base: &GeneralCoefficients, theta: f64) -> Result<GeneralCoefficients> {
    Ok(adjust_rho1(u, w, base, theta)?.0)
}

fn adjust_rho1(u: &ScalarField, w: &VectorField, base: &GeneralCoefficients, theta: f64) -> Result<(GeneralCoefficients, ScalarField)> {
    let q = SobolevExponents::new(u.dim())?.q();
    let r = scalar_residual(u, w, base)?;
    // residual is linear in ρ₁ with slope −1/u^{q+1}
    let delta = r.zip_map(u, |r, v| r * v.powf(q + 1.0))?;
    let mut gc = base.clone();
    gc.rho1 = base.rho1.add(&delta)?;
    let a = gc.a_field(Some(&conformal_killing(w)))?;
    if a.min() < theta {
        let i = (0..a.len()).min_by(|&i, &j| a.data()[i].total_cmp(&a.data()[j])).unwrap_or(0);
        return Err(Error::Infeasible(format!(
            "manufactured ρ₁ gives a = {:.3e} < θ = {theta:e} at node {i} {:?}",
            a.data()[i],
            u.grid().point(i)
        )));
    }
    Ok((gc, delta))
}

/// Scalar and vector parts: ρ₁ (and the matching energy σ) absorb the scalar
/// residual, the current J absorbs the vector residual, so that (u*, W*)
/// solves the returned system exactly on the grid.
pub fn manufactured_system(u: &ScalarField, w: &VectorField, base: &DriftSystem, theta: f64) -> Result<DriftSystem> {
    let cn = SobolevExponents::new(u.dim())?.c_n();
    let (general, delta) = adjust_rho1(u, w, &base.general, theta)?;
    let rv = vector_residual(u, w, &base.physical)?;
    let p = &base.physical;
    let current = p.current.sub(&rv.scale_by(&p.lapse.scale(0.5))?)?;
    let energy = p.energy.add(&delta.scale(1.0 / cn))?;
    let physical = p.clone().with_sources(energy, current)?;
    DriftSystem::new(general, physical)
}

/// Prescribed pair and problem on the unit torus T^n with m nodes per side:
/// u* = 1 + 0.05cos(2πx₁), W* = (0, 0.2sin(2πx₁), 0.1cos(2πx₂), 0, …), built
/// from drift-free physical data so that the scalar equation is exactly the
/// Hamiltonian constraint. On a flat torus h ≤ 0, so a solution forces f < 0
/// somewhere; here τ* dominates the potential and f < 0 everywhere, i.e. the
/// problem lies outside the f ≥ θ class and must be solved without gates.
pub fn reference_problem(n: usize, m: usize) -> Result<(DriftSystem, ScalarField, VectorField)> {
    use crate::conformal::Potential;
    use crate::fieldcalc::{arc, SymTensorField, TorusGrid};
    use std::f64::consts::PI;
    const TP: f64 = 2.0 * PI;
    SobolevExponents::new(n)?;
    let g = arc(Grid::Torus(TorusGrid::unit(n, m)?));
    let mut p = PhysicalCoefficients::vacuum(g.clone(), 6.0);
    p.lapse = ScalarField::from_fn(g.clone(), |x| 1.0 + 0.2 * (TP * x[n - 1]).cos());
    p.psi = ScalarField::from_fn(g.clone(), |x| 0.1 * (TP * x[0]).cos());
    p.pi = ScalarField::from_fn(g.clone(), |x| 2.0 + 0.2 * (TP * x[1]).sin());
    p.potential = Potential { coeffs: vec![1.0, 0.0, 0.5] };
    p.tt = SymTensorField::from_fn(g.clone(), true, |_| {
        let mut t = vec![0.0; n * n];
        t[1] = 0.1;
        t[n] = 0.1;
        t
    })?;
    let base = DriftSystem::from_physical(p)?;
    let us = ScalarField::from_fn(g.clone(), |x| 1.0 + 0.05 * (TP * x[0]).cos());
    let ws = VectorField::from_fn(g, |x| {
        let mut w = vec![0.0; n];
        w[1] = 0.2 * (TP * x[0]).sin();
        w[2] = 0.1 * (TP * x[1]).cos();
        w
    });
    Ok((manufactured_system(&us, &ws, &base, 0.1)?, us, ws))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::UniformCoefficients;
    use crate::fieldcalc::{arc, TorusGrid};
    use std::f64::consts::PI;

    const TP: f64 = 2.0 * PI;

    fn torus(m: usize) -> Arc<Grid> {
        arc(Grid::Torus(TorusGrid::unit(3, m).unwrap()))
    }

    #[test]
    fn exact_base_is_unchanged() {
        let g = torus(8);
        let base = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { h: 2.0, f: 1.0, rho1: 1.0, ..Default::default() });
        let gc = manufactured_coefficients(&ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g), &base, 0.1).unwrap();
        assert_eq!(gc.rho1.data(), base.rho1.data());
    }

    #[test]
    fn residuals_vanish_at_the_prescribed_pair() {
        let g = torus(32);
        let base = DriftSystem::from_general(GeneralCoefficients::uniform(
            g.clone(),
            UniformCoefficients { h: 6.0, f: 1.0, rho1: 5.0, rho2: 0.2, ..Default::default() },
        ))
        .unwrap();
        let u = ScalarField::from_fn(g.clone(), |x| 1.0 + 0.1 * (TP * x[0]).cos());
        let w = VectorField::from_fn(g.clone(), |x| vec![0.0, 0.2 * (TP * x[0]).sin(), 0.0]);
        let sys = manufactured_system(&u, &w, &base, 0.1).unwrap();
        assert!(scalar_residual(&u, &w, &sys.general).unwrap().sup() <= 1e-10);
        assert!(vector_residual(&u, &w, &sys.physical).unwrap().sup() <= 1e-10);
        // the physical energy tracks ρ₁
        let gc = physical_to_general(&sys.physical).unwrap();
        let diff = gc.rho1.sub(&sys.general.rho1.sub(&base.general.rho1).unwrap()).unwrap().sup();
        assert!(diff < 1e-12);
    }

    #[test]
    fn deep_wells_violate_theta() {
        let g = torus(16);
        let base = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { h: 2.0, f: 1.0, rho1: 1.0, ..Default::default() });
        // narrow bump: on its flanks Δu ≪ 0 drives the required ρ₁ below θ
        let u = ScalarField::from_fn(g.clone(), |x| {
            let r2: f64 = x.iter().map(|v| (v - 0.5) * (v - 0.5)).sum();
            1.0 + 4.0 * (-r2 / 0.005).exp()
        });
        let e = manufactured_coefficients(&u, &VectorField::zeros(g), &base, 0.1).unwrap_err();
        assert!(matches!(e, Error::Infeasible(_)));
    }

    #[test]
    fn reference_problem_satisfies_constraints() {
        use crate::conformal::{constraint_residual, reconstruct_initial_data};
        use crate::driftsystem::{coupled_solve, SolveOptions};
        let (sys, us, ws) = reference_problem(3, 32).unwrap();
        let g = sys.grid().clone();
        let opts = SolveOptions { enforce_gates: false, ..SolveOptions::default() };
        let s = coupled_solve(&sys, &ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g), &opts).unwrap();
        let eu = s.u.sub(&us).unwrap().sup();
        let ew = s.w.sub(&ws).unwrap().sup();
        assert!(eu < 1e-8 && ew < 1e-8, "{eu:e} {ew:e}");
        assert!(s.report.iterations <= 50, "{}", s.report.iterations);
        let data = reconstruct_initial_data(&s.u, &s.w, &sys.physical).unwrap();
        let cr = constraint_residual(&data, &sys.physical.potential).unwrap();
        assert!(cr.sup() <= 10.0 * opts.tol, "{:e}", cr.sup());
    }
}
