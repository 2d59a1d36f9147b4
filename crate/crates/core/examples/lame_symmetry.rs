//! ∫⟨Δ⃗X, Y⟩ = ½∫⟨𝓛X, 𝓛Y⟩ on random band-limited pairs.

use conformal_drift::fieldcalc::random::band_limited_vector;
use conformal_drift::fieldcalc::{arc, lame_symmetry_defect, Grid, TorusGrid};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() -> conformal_drift::Result<()> {
    let g = arc(Grid::Torus(TorusGrid::unit(3, 32)?));
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let x = band_limited_vector(g.clone(), &mut rng, 3, 4);
        let y = band_limited_vector(g.clone(), &mut rng, 3, 4);
        worst = worst.max(lame_symmetry_defect(&x, &y)?);
    }
    println!("max defect over 20 pairs: {worst:.3e}");
    Ok(())
}
