use conformal_drift::bubbles::{remainder_extract_h, BubbleParams};
use conformal_drift::fieldcalc::{arc, BallGrid, Grid};

fn main() -> conformal_drift::Result<()> {
    let n = 3;
    let f0 = 3.0;
    let mu: f64 = 1e-8;
    let g = arc(Grid::Ball(BallGrid::uniform_default(n, 2.0, 64)?));
    for h0 in [0.0, 0.35] {
        let u = BubbleParams::standard(n, f0).with_mu(mu).b_profile().sample(g.clone()).map(|v| v + h0 * mu.sqrt());
        let r = remainder_extract_h(&u, mu, 1.0, f0)?;
        println!("planted {h0}: H(0) = {:.4}  min H = {:.2e}  mass {:.4}", r.h0, r.min_h, r.mass);
    }
    Ok(())
}
