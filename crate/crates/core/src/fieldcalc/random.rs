//! Seeded random trigonometric polynomials on the torus.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;

use super::field::{ScalarField, VectorField};
use super::grid::Grid;

#[derive(Clone, Debug)]
struct Mode {
    k: Vec<f64>,
    amp: f64,
    phase: f64,
}

fn modes<R: Rng>(rng: &mut R, n: usize, kmax: i32, count: usize) -> Vec<Mode> {
    (0..count)
        .map(|_| Mode {
            k: (0..n).map(|_| rng.gen_range(-kmax..=kmax) as f64).collect(),
            amp: rng.gen_range(-1.0..1.0),
            phase: rng.gen_range(0.0..2.0 * PI),
        })
        .collect()
}

fn eval(ms: &[Mode], x: &[f64], length: f64) -> f64 {
    ms.iter().map(|m| m.amp * (2.0 * PI / length * m.k.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + m.phase).cos()).sum()
}

fn torus_length(grid: &Grid) -> f64 {
    match grid {
        Grid::Torus(t) => t.length(),
        Grid::Ball(b) => 2.0 * b.radius(),
    }
}

/// Sum of `count` cosines with integer wave vectors |k_i| ≤ kmax and
/// amplitudes in (−1, 1). Periodic on the torus.
pub fn band_limited_scalar<R: Rng>(grid: Arc<Grid>, rng: &mut R, kmax: i32, count: usize) -> ScalarField {
    let ms = modes(rng, grid.dim(), kmax, count);
    let l = torus_length(&grid);
    ScalarField::from_fn(grid, |x| eval(&ms, x, l))
}

/// Component-wise [`band_limited_scalar`].
pub fn band_limited_vector<R: Rng>(grid: Arc<Grid>, rng: &mut R, kmax: i32, count: usize) -> VectorField {
    let n = grid.dim();
    let ms: Vec<Vec<Mode>> = (0..n).map(|_| modes(rng, n, kmax, count)).collect();
    let l = torus_length(&grid);
    VectorField::from_fn(grid, |x| ms.iter().map(|m| eval(m, x, l)).collect())
}

/// A positive field: `floor` plus a band-limited part with sup ≤ `spread`.
pub fn band_limited_positive<R: Rng>(grid: Arc<Grid>, rng: &mut R, kmax: i32, count: usize, floor: f64, spread: f64) -> ScalarField {
    let ms = modes(rng, grid.dim(), kmax, count);
    let total: f64 = ms.iter().map(|m| m.amp.abs()).sum::<f64>().max(f64::MIN_POSITIVE);
    let l = torus_length(&grid);
    ScalarField::from_fn(grid, |x| floor + spread * (1.0 + eval(&ms, x, l) / total))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::{arc, TorusGrid};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn seeded_and_bounded() {
        let g = arc(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        let a = band_limited_scalar(g.clone(), &mut ChaCha8Rng::seed_from_u64(3), 2, 5);
        let b = band_limited_scalar(g.clone(), &mut ChaCha8Rng::seed_from_u64(3), 2, 5);
        assert_eq!(a.data(), b.data());
        let p = band_limited_positive(g, &mut ChaCha8Rng::seed_from_u64(4), 2, 5, 0.5, 1.0);
        assert!(p.min() >= 0.5 - 1e-12 && p.max() <= 2.5 + 1e-12);
    }
}
