//! Closed-form 𝓛V_α of the model drift against central differences.

use conformal_drift::bubbles::{drift_decay_constant, drift_profile_v};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> conformal_drift::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mu = rng.gen_range(0.05..0.5);
        let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-0.5..0.5)).collect();
        let p = drift_profile_v(&a, mu, &x, 1e-3, 6)?;
        println!("μ = {mu:.3}: defect {:.2e}", p.defect);
    }
    let pts: Vec<Vec<f64>> = (0..100).map(|k| vec![1e-3 * 1.1f64.powi(k), 0.0, 0.0]).collect();
    println!("decay constant at μ = 0.01: {:.3}", drift_decay_constant(&[1.0, 0.5, -0.3], 0.01, &pts));
    Ok(())
}
