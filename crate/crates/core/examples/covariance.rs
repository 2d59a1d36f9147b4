//! Conformal covariance of the Laplacian, the conformal Killing operator and
//! the Lamé operator under ξ = φ^{q−2}g on T³.

use std::f64::consts::PI;

use conformal_drift::conformal::{killing_covariance_defect, lame_covariance_defect, laplace_covariance_defect};
use conformal_drift::fieldcalc::{arc, Grid, ScalarField, TorusGrid, VectorField};

fn main() -> conformal_drift::Result<()> {
    let tp = 2.0 * PI;
    for m in [16, 32, 64] {
        let g = arc(Grid::Torus(TorusGrid::unit(3, m)?));
        let phi = ScalarField::from_fn(g.clone(), |x| 1.0 + 0.15 * (tp * x[0]).cos() * (tp * x[1]).sin() + 0.1 * (tp * (x[1] + x[2])).sin());
        let u = ScalarField::from_fn(g.clone(), |x| 1.5 + 0.3 * (tp * x[2]).cos());
        let w = VectorField::from_fn(g, |x| vec![(tp * x[1]).sin(), 0.4 * (tp * x[0]).cos(), 0.2]);
        println!(
            "m = {m:>2}: laplace {:.2e}  killing {:.2e}  lame {:.2e}",
            laplace_covariance_defect(&phi, &u)?,
            killing_covariance_defect(&phi, &w)?,
            lame_covariance_defect(&phi, &w)?
        );
    }
    Ok(())
}
