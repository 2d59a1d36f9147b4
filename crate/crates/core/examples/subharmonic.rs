use conformal_drift::diagnostics::subharmonic_average_check;
use conformal_drift::fieldcalc::{arc, BallGrid, Grid, ScalarField};

fn main() -> conformal_drift::Result<()> {
    let g = arc(Grid::Ball(BallGrid::uniform_default(3, 1.0, 32)?));
    let radii = [0.2, 0.4, 0.6, 0.8];
    for (name, s) in [("|x|^2", 1.0), ("-|x|^2", -1.0)] {
        let u = ScalarField::from_fn(g.clone(), |x| s * x.iter().map(|v| v * v).sum::<f64>());
        let c = subharmonic_average_check(&u, &[0.0; 3], &radii)?;
        println!("{name}: averages {:.4?} monotone {}", c.averages, c.monotone);
    }
    Ok(())
}
