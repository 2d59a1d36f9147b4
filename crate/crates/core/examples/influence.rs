use conformal_drift::bubbles::BubbleParams;
use conformal_drift::diagnostics::influence_radius;
use conformal_drift::fieldcalc::{arc, BallGrid, Grid, ScalarField};

fn main() -> conformal_drift::Result<()> {
    let g = arc(Grid::Ball(BallGrid::uniform_default(3, 1.0, 64)?));
    let mu = 0.05;
    let b = BubbleParams::standard(3, 3.0).with_mu(mu).b_profile();
    for r0 in [0.3, 0.5, 0.8] {
        let u = ScalarField::from_fn(g.clone(), |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            b.eval(x) * (1.0 + 0.05 * (1.0 + ((r - r0) / 0.6).tanh()))
        });
        let ir = influence_radius(&u, &[0.0; 3], mu, 3.0, 0.05)?;
        println!("departure at {r0}: r = {:.4}, r/μ = {:.1}, r/√μ = {:.2}", ir.r, ir.r_over_mu, ir.r_over_sqrt_mu);
    }
    Ok(())
}
