//! Spectral solves of (Δ + h)u = r and Δ⃗W = F on T³.

use std::f64::consts::PI;

use conformal_drift::elliptic::{solve_lame_periodic, solve_scalar_periodic};
use conformal_drift::fieldcalc::{arc, laplacian, lame_apply, Grid, ScalarField, TorusGrid, VectorField};

fn main() -> conformal_drift::Result<()> {
    let tp = 2.0 * PI;
    let g = arc(Grid::Torus(TorusGrid::unit(3, 32)?));
    let h = ScalarField::from_fn(g.clone(), |x| 2.0 + (tp * x[2]).sin());
    let rhs = ScalarField::from_fn(g.clone(), |x| (tp * x[0]).cos() + 0.5);
    let u = solve_scalar_periodic(&h, &rhs)?;
    println!("scalar residual {:.2e}", laplacian(&u).add(&u.mul(&h)?)?.sub(&rhs)?.sup());
    let f = VectorField::from_fn(g, |x| vec![(tp * x[1]).sin(), (tp * x[2]).cos(), (tp * x[0]).sin()]);
    let w = solve_lame_periodic(&f)?;
    println!("lame residual {:.2e}", lame_apply(&w).sub(&f)?.sup());
    Ok(())
}
