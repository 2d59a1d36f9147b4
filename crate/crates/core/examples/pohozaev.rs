//! Pohozaev audit of exact bubbles: boundary/bulk balance, and the H(0)
//! estimate for a concentrated bubble with and without an added constant.

use conformal_drift::bubbles::{pohozaev_balance, pohozaev_balance_with, BubbleParams};
use conformal_drift::conformal::{GeneralCoefficients, UniformCoefficients};
use conformal_drift::fieldcalc::{arc, BallGrid, Grid};

fn main() -> conformal_drift::Result<()> {
    for n in 3..=5 {
        let f0 = (n * (n - 2)) as f64;
        let g = arc(Grid::Ball(BallGrid::uniform_default(n, 0.8, 64)?));
        let gc = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { f: f0, ..Default::default() });
        let u = BubbleParams::standard(n, f0).with_mu(0.5).b_profile().sample(g);
        let a = pohozaev_balance(&u, &gc, None, 0.4, 1.0)?;
        println!("n = {n}: boundary {:.6e} bulk {:.6e} defect {:.2e}", a.boundary, a.bulk, a.balance_defect());
    }
    let (n, f0, mu) = (3, 3.0, 1e-4f64);
    let g = arc(Grid::Ball(BallGrid::uniform_default(n, 0.4, 64)?));
    let gc = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { f: f0, ..Default::default() });
    for c in [0.0, 0.5] {
        let u = BubbleParams::standard(n, f0).with_mu(mu).b_profile().sample(g.clone()).map(|v| v + c * mu.sqrt());
        let a = pohozaev_balance_with(&u, &gc, None, 0.2, 1.0, Some(mu))?;
        println!("added {c}·√μ: H(0)/√μ = {:.4}", a.h0_rescaled.unwrap_or(f64::NAN));
    }
    Ok(())
}
