use std::f64::consts::PI;

use conformal_drift::conformal::{GeneralCoefficients, UniformCoefficients};
use conformal_drift::driftsystem::{coupled_solve, manufactured_system, positivity_floor, DriftSystem, SolveOptions};
use conformal_drift::fieldcalc::{arc, conformal_killing, Grid, ScalarField, TorusGrid, VectorField};

fn main() -> conformal_drift::Result<()> {
    let g = arc(Grid::Torus(TorusGrid::unit(3, 16)?));
    let base = DriftSystem::from_general(GeneralCoefficients::uniform(
        g.clone(),
        UniformCoefficients { h: 6.0, f: 1.0, rho1: 5.0, rho2: 0.2, ..Default::default() },
    ))?;
    for amp in [0.02, 0.05, 0.1] {
        let us = ScalarField::from_fn(g.clone(), |x| 1.0 + amp * (2.0 * PI * x[0]).cos());
        let ws = VectorField::from_fn(g.clone(), |x| vec![0.0, amp * (2.0 * PI * x[0]).sin(), 0.0]);
        let sys = manufactured_system(&us, &ws, &base, 0.1)?;
        let s = coupled_solve(&sys, &ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g.clone()), &SolveOptions::default())?;
        let eps = positivity_floor(&sys.general, Some(&conformal_killing(&s.w)))?.epsilon();
        println!("amplitude {amp}: min u = {:.6}, floor = {:?}", s.u.min(), eps);
    }
    Ok(())
}
