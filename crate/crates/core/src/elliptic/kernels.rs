//! Closed-form Green kernels: the scalar kernel vanishing on |x-y| = 3R and
//! the fundamental solution 𝒢 of the Lamé system.

use crate::error::{Error, Result};
use crate::fieldcalc::fd;
use crate::fieldcalc::grid::check_dim;
use crate::fieldcalc::quadrature::sphere_area;

fn dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// ((n-2)ω_{n-1})⁻¹ (|x-y|^{2-n} - (3R)^{2-n}) for x, y in B₀(3R).
pub fn green_scalar_eval(x: &[f64], y: &[f64], r: f64) -> Result<f64> {
    let n = x.len();
    check_dim(n)?;
    let big = 3.0 * r;
    if norm(x) > big * (1.0 + 1e-12) || norm(y) > big * (1.0 + 1e-12) {
        return Err(Error::OutsideDomain(format!("points must lie in B_0({big})")));
    }
    let d = dist(x, y);
    if d == 0.0 {
        return Err(Error::InvalidArgument("coincident points".into()));
    }
    let e = 2.0 - n as f64;
    Ok((d.powf(e) - big.powf(e)) / ((n as f64 - 2.0) * sphere_area(n - 1)))
}

fn lame_constant(n: usize) -> f64 {
    let nf = n as f64;
    -1.0 / (4.0 * (nf - 1.0) * (nf - 2.0) * sphere_area(n - 1))
}

/// 𝒢ᵢ(y)ⱼ (row-major n×n), the fundamental solution of div 𝓛 = -Δ⃗:
/// C|y|^{2-n}((3n-2)δᵢⱼ + (n-2)² yᵢyⱼ/|y|²), C = -1/(4(n-1)(n-2)ω_{n-1}).
pub fn lame_fundamental_eval(y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    check_dim(n)?;
    let r = norm(y);
    if r == 0.0 {
        return Err(Error::InvalidArgument("fundamental solution is singular at the origin".into()));
    }
    let nf = n as f64;
    let c = lame_constant(n) * r.powf(2.0 - nf);
    let mut g = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let d = if i == j { 3.0 * nf - 2.0 } else { 0.0 };
            let v = c * (d + (nf - 2.0).powi(2) * y[i] * y[j] / (r * r));
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    Ok(g)
}

/// Derivatives ∂ₖ𝒢ᵢⱼ at index (k·n + i)·n + j.
pub fn lame_fundamental_jacobian(y: &[f64]) -> Result<Vec<f64>> {
    let n = y.len();
    check_dim(n)?;
    let r = norm(y);
    if r == 0.0 {
        return Err(Error::InvalidArgument("fundamental solution is singular at the origin".into()));
    }
    let nf = n as f64;
    let c = lame_constant(n);
    let rn = r.powf(-nf);
    let a = (nf - 2.0).powi(2);
    let mut out = vec![0.0; n * n * n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                if i == j {
                    v += (3.0 * nf - 2.0) * (2.0 - nf) * rn * y[k];
                }
                if i == k {
                    v += a * rn * y[j];
                }
                if j == k {
                    v += a * rn * y[i];
                }
                v -= nf * a * y[i] * y[j] * y[k] * rn / (r * r);
                out[(k * n + i) * n + j] = c * v;
            }
        }
    }
    Ok(out)
}

/// max over i of |Δ⃗𝒢ᵢ(y)| by fourth-order central differences of step h.
pub fn lame_fundamental_residual(y: &[f64], h: f64) -> Result<f64> {
    let n = y.len();
    let _ = lame_fundamental_eval(y)?;
    let mut worst = 0.0f64;
    for i in 0..n {
        let col = |z: &[f64]| lame_fundamental_eval(z).map(|g| g[i * n..(i + 1) * n].to_vec()).unwrap_or_else(|_| vec![f64::NAN; n]);
        let l = fd::lame(col, y, h, 4)?;
        worst = l.iter().fold(worst, |a, v| a.max(v.abs()));
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn scalar_kernel_values() {
        let x = [0.0, 0.0, 0.0];
        assert!(green_scalar_eval(&x, &[1.0, 0.0, 0.0], 1.0 / 3.0).unwrap().abs() < 1e-15);
        let v = green_scalar_eval(&x, &[0.5, 0.0, 0.0], 1.0 / 3.0).unwrap();
        assert!((v - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!(green_scalar_eval(&x, &x, 1.0).is_err());
    }

    #[test]
    fn lame_value_symmetry_homogeneity() {
        let g = lame_fundamental_eval(&[1.0, 0.0, 0.0]).unwrap();
        assert!((g[0] + 1.0 / (4.0 * PI)).abs() < 1e-15);
        for n in 3..=5 {
            let y: Vec<f64> = (0..n).map(|k| 0.3 + 0.17 * k as f64).collect();
            let g = lame_fundamental_eval(&y).unwrap();
            let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
            let g2 = lame_fundamental_eval(&y2).unwrap();
            for i in 0..n {
                for j in 0..n {
                    assert_eq!(g[i * n + j], g[j * n + i]);
                    assert!((g2[i * n + j] - 2f64.powi(2 - n as i32) * g[i * n + j]).abs() < 1e-12 * g[i * n + j].abs().max(1e-300));
                }
            }
        }
    }

    #[test]
    fn lame_jacobian_matches_differences() {
        let y = [0.4, -0.3, 0.8, 0.1];
        let jac = lame_fundamental_jacobian(&y).unwrap();
        let fdj = fd::jacobian(|z| lame_fundamental_eval(z).unwrap(), &y, 1e-4, 6).unwrap();
        for k in 0..4 {
            for ij in 0..16 {
                assert!((jac[k * 16 + ij] - fdj[k * 16 + ij]).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn lame_is_harmonic_away_from_origin() {
        for n in 3..=5 {
            let mut y = vec![0.0; n];
            y[0] = 0.6;
            y[1] = -0.8;
            assert!(lame_fundamental_residual(&y, 1e-3).unwrap() < 1e-6);
        }
    }
}
