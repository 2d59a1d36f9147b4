//! Discrete residual of ΔU = f₀U^{q−1} for the closed-form bubble on ball
//! grids, with observed orders under refinement.

use conformal_drift::bubbles::{bubble_residual, BubbleParams};
use conformal_drift::fieldcalc::{arc, BallGrid, Grid};

fn main() -> conformal_drift::Result<()> {
    for n in 3..=5 {
        let f0 = (n * (n - 2)) as f64;
        let mut prev: Option<(f64, f64)> = None;
        for nr in [16, 32, 64] {
            let b = BallGrid::uniform_default(n, 2.0, nr)?;
            let h = b.radial()[1] - b.radial()[0];
            let u = BubbleParams::standard(n, f0).u_profile().sample(arc(Grid::Ball(b)));
            let e = bubble_residual(&u, f0)?.sup();
            let order = prev.map(|(e0, h0)| (e0 / e).ln() / (h0 / h).ln());
            println!("n = {n}, nr = {nr:>2}: residual {e:.3e}  order {}", order.map_or("-".into(), |o| format!("{o:.2}")));
            prev = Some((e, h));
        }
    }
    Ok(())
}
