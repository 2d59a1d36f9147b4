//! The vector profile V on ℝⁿ attached to a concentrating drift, its
//! conformal Killing derivative in closed form, and a difference check.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fieldcalc::{fd, sampler::conformal_killing_from_jacobian};

/// V(x)_i = −(n²/(2(n−2))) ln(1 + |x|²/μ²) a_i + n⟨x,a⟩x_i/(μ² + |x|²).
pub fn drift_vector(a: &[f64], mu: f64, x: &[f64]) -> Vec<f64> {
    let n = x.len() as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let s = mu * mu + r2;
    let xa: f64 = x.iter().zip(a).map(|(p, q)| p * q).sum();
    let c = -n * n / (2.0 * (n - 2.0)) * (r2 / (mu * mu)).ln_1p();
    a.iter().zip(x).map(|(ai, xi)| c * ai + n * xa * xi / s).collect()
}

/// 𝓛V (row-major n×n) in closed form, s = μ² + |x|²:
/// −(2n/(n−2))(x_j a_i + x_i a_j)/s + [4⟨x,a⟩/((n−2)s) + 4⟨x,a⟩|x|²/s²]δ_ij
/// − 4n⟨x,a⟩x_i x_j/s².
pub fn drift_killing(a: &[f64], mu: f64, x: &[f64]) -> Vec<f64> {
    let dim = x.len();
    let n = dim as f64;
    let r2: f64 = x.iter().map(|v| v * v).sum();
    let s = mu * mu + r2;
    let xa: f64 = x.iter().zip(a).map(|(p, q)| p * q).sum();
    let diag = 4.0 * xa / ((n - 2.0) * s) + 4.0 * xa * r2 / (s * s);
    let mut out = vec![0.0; dim * dim];
    for i in 0..dim {
        for j in 0..dim {
            let mut v = -2.0 * n / (n - 2.0) * (x[j] * a[i] + x[i] * a[j]) / s - 4.0 * n * xa * x[i] * x[j] / (s * s);
            if i == j {
                v += diag;
            }
            out[i * dim + j] = v;
        }
    }
    out
}

/// Both evaluations at one point and their difference.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DriftProfile {
    pub v: Vec<f64>,
    pub lv: Vec<f64>,
    pub lv_numeric: Vec<f64>,
    /// max entry of |𝓛V_numeric − 𝓛V|
    pub defect: f64,
}

/// V and 𝓛V at `x`; the numeric 𝓛V uses central differences of the given
/// order and step on the closed-form V.
pub fn drift_profile_v(a: &[f64], mu: f64, x: &[f64], h: f64, order: usize) -> Result<DriftProfile> {
    if a.len() != x.len() {
        return Err(Error::ShapeMismatch(format!("Ṽ₀ has {} entries, x has {}", a.len(), x.len())));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("μ = {mu} must be positive")));
    }
    let n = x.len();
    let v = drift_vector(a, mu, x);
    let lv = drift_killing(a, mu, x);
    let jac = fd::jacobian(|y| drift_vector(a, mu, y), x, h, order)?;
    let lv_numeric = conformal_killing_from_jacobian(&jac, n);
    let defect = lv.iter().zip(&lv_numeric).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);
    Ok(DriftProfile { v, lv, lv_numeric, defect })
}

/// max over the points of |𝓛V(x)|·θ(x)/|Ṽ₀| with θ = √(μ² + |x|²).
pub fn drift_decay_constant(a: &[f64], mu: f64, points: &[Vec<f64>]) -> f64 {
    let na = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if na == 0.0 {
        return 0.0;
    }
    points
        .iter()
        .map(|x| {
            let l = drift_killing(a, mu, x);
            let nl = l.iter().map(|v| v * v).sum::<f64>().sqrt();
            let th = (mu * mu + x.iter().map(|v| v * v).sum::<f64>()).sqrt();
            nl * th / na
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_drift_gives_zero_field() {
        let p = drift_profile_v(&[0.0; 3], 0.1, &[0.2, -0.1, 0.3], 1e-3, 6).unwrap();
        assert!(p.v.iter().chain(&p.lv).chain(&p.lv_numeric).all(|&v| v == 0.0));
    }

    #[test]
    fn closed_form_matches_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 3..=5 {
            for _ in 0..5 {
                let a: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-0.5..0.5)).collect();
                let d = drift_profile_v(&a, 0.1, &x, 1e-3, 6).unwrap().defect;
                assert!(d <= 1e-6, "n={n}: {d}");
            }
        }
    }

    #[test]
    fn trace_free() {
        let l = drift_killing(&[0.3, -0.2, 0.9, 0.1], 0.2, &[0.1, 0.4, -0.3, 0.2]);
        let tr: f64 = (0..4).map(|i| l[i * 4 + i]).sum();
        assert!(tr.abs() < 1e-13);
    }

    #[test]
    fn second_order_stencils_converge() {
        let a = [0.4, -0.7, 0.2];
        let x = [0.12, 0.05, -0.2];
        let e: Vec<f64> = [4e-3, 2e-3, 1e-3].iter().map(|&h| drift_profile_v(&a, 0.1, &x, h, 2).unwrap().defect).collect();
        for w in e.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.9, "{e:?}");
        }
    }

    #[test]
    fn decay_constant_is_bounded() {
        let a = [1.0, 0.5, -0.3];
        let pts: Vec<Vec<f64>> = (0..200).map(|k| {
            let r = 1e-3 * 1.05f64.powi(k);
            vec![r * 0.6, r * 0.8, 0.0]
        }).collect();
        for mu in [0.1, 0.01] {
            let c = drift_decay_constant(&a, mu, &pts);
            assert!(c.is_finite() && c < 50.0, "{c}");
        }
    }
}
