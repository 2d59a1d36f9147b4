use std::f64::consts::PI;

use conformal_drift::diagnostics::{select_concentration_points, verify_selection};
use conformal_drift::fieldcalc::{arc, Grid, ScalarField, TorusGrid};

fn main() -> conformal_drift::Result<()> {
    let g = arc(Grid::Torus(TorusGrid::unit(3, 24)?));
    let bump = |x: &[f64], c: [f64; 3], s: f64| (-(0..3).map(|i| (PI * (x[i] - c[i])).sin().powi(2)).sum::<f64>() / s).exp();
    let u = ScalarField::from_fn(g, |x| 0.5 + 3.0 * bump(x, [0.25, 0.3, 0.5], 0.15) + 2.0 * bump(x, [0.7, 0.75, 0.4], 0.2));
    let set = select_concentration_points(&u)?;
    for (p, v) in set.points.iter().zip(&set.values) {
        println!("point {:.4?} value {v:.4}", p);
    }
    println!("{} critical points, selection check {:?}", set.critical.len(), verify_selection(&set).ok());
    Ok(())
}
