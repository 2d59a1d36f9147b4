//! Ψ on a graded ball for bubbles of shrinking width; the blow-up rescaling
//! at the maximizer has normalized quantity 1 at the origin.

use conformal_drift::bubbles::BubbleParams;
use conformal_drift::diagnostics::{psi_field, rescaled_normalization};
use conformal_drift::fieldcalc::{arc, BallGrid, Grid, VectorField};

fn main() -> conformal_drift::Result<()> {
    let g = arc(Grid::Ball(BallGrid::graded(3, 1.0, 48, 3.0, &[16], 32)?));
    let w = VectorField::zeros(g.clone());
    for mu in [0.1, 0.05, 0.025] {
        let u = BubbleParams::standard(3, 3.0).with_mu(mu).b_profile().sample(g.clone());
        let p = psi_field(&u, &w, &[vec![0.0; 3]])?;
        println!("μ = {mu}: sup Ψ = {:.4}, rescaled normalization = {:.6}", p.sup, rescaled_normalization(&u, &w, &p)?);
    }
    Ok(())
}
