//! Spectral solvers for Δ + h and Δ⃗ on the flat torus.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::krylov::{gmres, GmresOptions};
use crate::error::{Error, Result};
use crate::fieldcalc::field::same_grid;
use crate::fieldcalc::{laplacian, ScalarField, TorusGrid, VectorField};

const PROBE_SEED: u64 = 0x5eed_0001;

fn torus_of(f: &ScalarField) -> Result<&TorusGrid> {
    f.grid().as_torus().ok_or_else(|| Error::UnsupportedDomain("periodic solver needs a torus grid".into()))
}

/// (Δ + shift)⁻¹ applied spectrally; the zero mode is dropped when shift = 0.
pub fn scalar_spectral_inverse(t: &TorusGrid, shift: f64, data: &[f64]) -> Vec<f64> {
    let ks = t.kscale();
    let spec = t.forward(data);
    t.apply_symbol(&spec, |k, _| {
        let s = ks * ks * k.iter().map(|v| (v * v) as f64).sum::<f64>() + shift;
        if s.abs() < 1e-300 {
            Complex64::new(0.0, 0.0)
        } else {
            Complex64::new(1.0 / s, 0.0)
        }
    })
}

/// Inverse of the discrete Lamé symbol, mode by mode. Modes in the discrete
/// kernel (zero mode and pure Nyquist modes) are mapped to zero.
pub fn lame_spectral_inverse(t: &TorusGrid, comps: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = t.dim();
    let ks2 = t.kscale() * t.kscale();
    let cn = (n as f64 - 2.0) / (2.0 * n as f64 - 2.0);
    let mut specs: Vec<Vec<Complex64>> = comps.iter().map(|c| t.forward(c)).collect();
    for idx in 0..t.len() {
        let mi = t.multi_index(idx);
        let k: Vec<f64> = mi.iter().map(|&j| if t.is_nyquist(j) { 0.0 } else { t.wavenumber(j) as f64 }).collect();
        let k2: f64 = k.iter().map(|v| v * v).sum();
        if k2 == 0.0 {
            for s in specs.iter_mut() {
                s[idx] = Complex64::new(0.0, 0.0);
            }
            continue;
        }
        let a: Vec<Complex64> = specs.iter().map(|s| s[idx]).collect();
        let ka: Complex64 = k.iter().zip(&a).map(|(k, a)| a * *k).sum();
        for i in 0..n {
            specs[i][idx] = (a[i] - ka * (cn * k[i] / k2)) / (ks2 * k2);
        }
    }
    specs.into_iter().map(|s| t.inverse_real(s)).collect()
}

fn inner(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Smallest Rayleigh quotient of Δ + h over the constant mode and 32
/// seeded random low-frequency probes.
pub fn coercivity_probe(h: &ScalarField) -> Result<f64> {
    let t = torus_of(h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(PROBE_SEED);
    let mean_h = h.data().iter().sum::<f64>() / h.len() as f64;
    let mut best = mean_h;
    let tp = 2.0 * std::f64::consts::PI / t.length();
    for _ in 0..32 {
        let modes: Vec<(Vec<f64>, f64, f64)> = (0..4)
            .map(|_| {
                let k: Vec<f64> = (0..t.dim()).map(|_| rng.gen_range(-3i64..=3) as f64).collect();
                (k, rng.gen_range(-1.0..1.0), rng.gen_range(0.0..std::f64::consts::TAU))
            })
            .collect();
        let c0 = rng.gen_range(-1.0..1.0);
        let v =
            ScalarField::from_fn(h.grid().clone(), |x| c0 + modes.iter().map(|(k, a, ph)| a * (tp * inner(k, x) + ph).cos()).sum::<f64>());
        let vv = inner(v.data(), v.data());
        if vv < 1e-12 {
            continue;
        }
        let lv = laplacian(&v);
        let q = (inner(lv.data(), v.data()) + v.data().iter().zip(h.data()).map(|(a, b)| a * a * b).sum::<f64>()) / vv;
        best = best.min(q);
    }
    Ok(best)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct LinearSolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

/// Solve (Δ + h)u = rhs to ‖residual‖ ≤ 1e-10‖rhs‖.
pub fn solve_scalar_periodic(h: &ScalarField, rhs: &ScalarField) -> Result<ScalarField> {
    solve_scalar_periodic_with(h, rhs, 1e-10).map(|(u, _)| u)
}

pub fn solve_scalar_periodic_with(h: &ScalarField, rhs: &ScalarField, tol: f64) -> Result<(ScalarField, LinearSolveStats)> {
    let t = torus_of(h)?;
    same_grid(h.grid(), rhs.grid())?;
    let q = coercivity_probe(h)?;
    if q <= 0.0 {
        return Err(Error::NonCoercive(q));
    }
    let bnorm = inner(rhs.data(), rhs.data()).sqrt();
    if bnorm == 0.0 {
        return Ok((rhs.with_data(vec![0.0; rhs.len()]), LinearSolveStats { iterations: 0, relative_residual: 0.0 }));
    }
    let shift = h.data().iter().sum::<f64>() / h.len() as f64;
    let apply = |v: &[f64]| -> Vec<f64> {
        let lv = laplacian(&h.with_data(v.to_vec()));
        lv.data().iter().zip(v).zip(h.data()).map(|((l, v), h)| l + h * v).collect()
    };
    let opts = GmresOptions { restart: 30, max_iter: 300, rtol: 0.1 * tol, atol: 0.0 };
    let mut x = vec![0.0; rhs.len()];
    let mut iterations = 0;
    let mut rel = f64::INFINITY;
    // iterative refinement on top of GMRES
    for _ in 0..5 {
        let ax = apply(&x);
        let r: Vec<f64> = rhs.data().iter().zip(&ax).map(|(b, a)| b - a).collect();
        rel = inner(&r, &r).sqrt() / bnorm;
        if rel <= tol {
            break;
        }
        let out = gmres(apply, |v: &[f64]| scalar_spectral_inverse(t, shift, v), &r, None, &opts);
        iterations += out.iterations;
        for (a, d) in x.iter_mut().zip(&out.x) {
            *a += d;
        }
    }
    if rel > tol {
        let ax = apply(&x);
        let r: Vec<f64> = rhs.data().iter().zip(&ax).map(|(b, a)| b - a).collect();
        rel = inner(&r, &r).sqrt() / bnorm;
    }
    if rel > tol {
        return Err(Error::NoConvergence { iterations, residual: rel });
    }
    Ok((rhs.with_data(x), LinearSolveStats { iterations, relative_residual: rel }))
}

/// Solve Δ⃗W = rhs on the torus with mean-zero gauge.
pub fn solve_lame_periodic(rhs: &VectorField) -> Result<VectorField> {
    let t = rhs.grid().as_torus().ok_or_else(|| Error::UnsupportedDomain("periodic Lamé solver needs a torus grid".into()))?;
    let len = rhs.len() as f64;
    let means: Vec<f64> = rhs.comps().iter().map(|c| c.iter().sum::<f64>() / len).collect();
    let max_mean = means.iter().fold(0.0f64, |a, m| a.max(m.abs()));
    let mut comps = rhs.comps().to_vec();
    if max_mean > 1e-10 {
        let fluct = comps.iter().zip(&means).flat_map(|(c, m)| c.iter().map(move |v| (v - m).abs())).fold(0.0f64, f64::max);
        if fluct <= 1e-10 * max_mean.max(1.0) {
            return Err(Error::KernelIncompatible);
        }
        log::warn!("Lamé source has mean {max_mean:.3e}; projecting out constant fields");
        for (c, m) in comps.iter_mut().zip(&means) {
            for v in c.iter_mut() {
                *v -= m;
            }
        }
    }
    Ok(rhs.with_comps(lame_spectral_inverse(t, &comps)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::ops::{arc, lame_apply};
    use crate::fieldcalc::Grid;
    use std::f64::consts::PI;

    fn torus(m: usize) -> std::sync::Arc<Grid> {
        arc(Grid::Torus(TorusGrid::unit(3, m).unwrap()))
    }

    #[test]
    fn constant_problem() {
        let g = torus(8);
        let u = solve_scalar_periodic(&ScalarField::constant(g.clone(), 1.0), &ScalarField::constant(g, 1.0)).unwrap();
        assert!(u.data().iter().all(|v| (v - 1.0).abs() < 1e-12));
    }

    #[test]
    fn single_mode_and_manufactured() {
        let g = torus(16);
        let tp = 2.0 * PI;
        let rhs = ScalarField::from_fn(g.clone(), |x| (tp * (x[0] + 2.0 * x[1])).cos());
        let u = solve_scalar_periodic(&ScalarField::constant(g.clone(), 3.0), &rhs).unwrap();
        let d = tp * tp * 5.0 + 3.0;
        for (a, b) in u.data().iter().zip(rhs.data()) {
            assert!((a - b / d).abs() < 1e-12);
        }
        let h = ScalarField::from_fn(g.clone(), |x| 2.0 + (tp * x[2]).sin());
        let us = ScalarField::from_fn(g, |x| 1.0 + 0.3 * (tp * x[0]).cos() * (tp * x[1]).sin());
        let rhs = laplacian(&us).add(&h.mul(&us).unwrap()).unwrap();
        let u = solve_scalar_periodic(&h, &rhs).unwrap();
        assert!(u.sub(&us).unwrap().sup() < 1e-9);
    }

    #[test]
    fn non_coercive_is_rejected() {
        let g = torus(8);
        let err = solve_scalar_periodic(&ScalarField::constant(g.clone(), -1.0), &ScalarField::constant(g, 1.0)).unwrap_err();
        assert!(matches!(err, Error::NonCoercive(_)));
    }

    #[test]
    fn lame_transverse_mode_and_kernel() {
        let g = torus(16);
        let tp = 2.0 * PI;
        // k = (1, 1, 0), a = (1, -1, 0): k·a = 0
        let rhs = VectorField::from_fn(g.clone(), |x| {
            let c = (tp * (x[0] + x[1])).cos();
            vec![c, -c, 0.0]
        });
        let w = solve_lame_periodic(&rhs).unwrap();
        let s = tp * tp * 2.0;
        for i in 0..w.len() {
            assert!((w.comp(0)[i] - rhs.comp(0)[i] / s).abs() < 1e-12);
        }
        let back = lame_apply(&w);
        assert!(back.sub(&rhs).unwrap().sup() < 1e-10);
        let zero = solve_lame_periodic(&VectorField::zeros(g.clone())).unwrap();
        assert_eq!(zero.sup(), 0.0);
        let c = VectorField::from_fn(g, |_| vec![1.0, 0.0, 0.0]);
        assert!(matches!(solve_lame_periodic(&c), Err(Error::KernelIncompatible)));
    }
}
