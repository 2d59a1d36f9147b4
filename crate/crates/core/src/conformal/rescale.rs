//! Blow-up rescalings v̂(x) = μ^{(n-2)/2} φ(μx) u(x_c + μx) and
//! Ẑ(x) = μ^{n-1} φ(μx)^{2-q} W(x_c + μx), as lazy point evaluators.
//! Rescaling a rescaled field composes the maps, so only the original data
//! is ever interpolated.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fieldcalc::sampler::conformal_killing_from_jacobian;
use crate::fieldcalc::{Grid, PointEval, SobolevExponents, VectorPointEval};

fn affine(center: &[f64], mu: f64, x: &[f64]) -> Vec<f64> {
    center.iter().zip(x).map(|(c, t)| c + mu * t).collect()
}

fn chart(mu: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|t| mu * t).collect()
}

/// v̂ as a [`PointEval`].
#[derive(Clone)]
pub struct RescaledScalar {
    source: Arc<dyn PointEval>,
    phi: Option<Arc<dyn PointEval>>,
    center: Vec<f64>,
    mu: f64,
    weight: f64,
}

impl RescaledScalar {
    pub fn center(&self) -> &[f64] {
        &self.center
    }
    pub fn mu(&self) -> f64 {
        self.mu
    }
}

impl PointEval for RescaledScalar {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let y = affine(&self.center, self.mu, x);
        let p = match &self.phi {
            Some(f) => f.value(&chart(self.mu, x))?,
            None => 1.0,
        };
        Ok(self.weight * p * self.source.value(&y)?)
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let y = affine(&self.center, self.mu, x);
        let gu = self.source.gradient(&y)?;
        let s = self.weight * self.mu;
        match &self.phi {
            None => Ok(gu.iter().map(|g| s * g).collect()),
            Some(f) => {
                let z = chart(self.mu, x);
                let (p, gp, u) = (f.value(&z)?, f.gradient(&z)?, self.source.value(&y)?);
                Ok(gu.iter().zip(&gp).map(|(g, d)| s * (d * u + p * g)).collect())
            }
        }
    }

    fn hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let y = affine(&self.center, self.mu, x);
        let hu = self.source.hessian(&y)?;
        let s = self.weight * self.mu * self.mu;
        match &self.phi {
            None => Ok(hu.iter().map(|h| s * h).collect()),
            Some(f) => {
                let z = chart(self.mu, x);
                let (p, gp, hp) = (f.value(&z)?, f.gradient(&z)?, f.hessian(&z)?);
                let (u, gu) = (self.source.value(&y)?, self.source.gradient(&y)?);
                let mut out = vec![0.0; n * n];
                for a in 0..n {
                    for b in 0..n {
                        let k = a * n + b;
                        out[k] = s * (hp[k] * u + gp[a] * gu[b] + gp[b] * gu[a] + p * hu[k]);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Ẑ as a [`VectorPointEval`].
#[derive(Clone)]
pub struct RescaledVector {
    source: Arc<dyn VectorPointEval>,
    phi: Option<Arc<dyn PointEval>>,
    center: Vec<f64>,
    mu: f64,
    q: f64,
}

impl VectorPointEval for RescaledVector {
    fn dim(&self) -> usize {
        self.source.dim()
    }

    fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let y = affine(&self.center, self.mu, x);
        let w = self.source.value(&y)?;
        let s = self.mu.powi(n as i32 - 1)
            * match &self.phi {
                Some(f) => f.value(&chart(self.mu, x))?.powf(2.0 - self.q),
                None => 1.0,
            };
        Ok(w.iter().map(|v| s * v).collect())
    }

    fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let n = self.dim();
        let y = affine(&self.center, self.mu, x);
        let jw = self.source.jacobian(&y)?;
        let s = self.mu.powi(n as i32);
        match &self.phi {
            None => Ok(jw.iter().map(|v| s * v).collect()),
            Some(f) => {
                let z = chart(self.mu, x);
                let (p, gp) = (f.value(&z)?, f.gradient(&z)?);
                let w = self.source.value(&y)?;
                let pw = p.powf(2.0 - self.q);
                let dpw = (2.0 - self.q) * p.powf(1.0 - self.q);
                let mut out = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        out[i * n + j] = s * (dpw * gp[i] * w[j] + pw * jw[i * n + j]);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Pair (v̂, Ẑ) produced by [`blowup_rescale`].
#[derive(Clone)]
pub struct BlowupRescale {
    pub v: RescaledScalar,
    pub z: RescaledVector,
}

/// Rescale (u, W) about `center` by μ. `window` is the radius of the hatted
/// ball that must map inside the domain. `phi` is the chart factor (≡ 1 if None).
pub fn blowup_rescale(
    u: Arc<dyn PointEval>,
    w: Arc<dyn VectorPointEval>,
    domain: &Grid,
    center: &[f64],
    mu: f64,
    window: f64,
    phi: Option<Arc<dyn PointEval>>,
) -> Result<BlowupRescale> {
    let n = u.dim();
    let q = SobolevExponents::new(n)?.q();
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("μ must be positive, got {mu}")));
    }
    let reach = mu * window;
    let inside = match domain {
        Grid::Torus(t) => reach < 0.5 * t.length(),
        Grid::Ball(b) => center.iter().map(|c| c * c).sum::<f64>().sqrt() + reach <= b.radius() * (1.0 + 1e-12),
    };
    if !inside {
        return Err(Error::OutsideDomain(format!("rescaled window of radius {reach:e} about {center:?}")));
    }
    let v = RescaledScalar { source: u, phi: phi.clone(), center: center.to_vec(), mu, weight: mu.powf((n as f64 - 2.0) / 2.0) };
    let z = RescaledVector { source: w, phi, center: center.to_vec(), mu, q };
    Ok(BlowupRescale { v, z })
}

/// Coefficient field hatted by x ↦ f(x_c + μx).
pub struct Hatted {
    source: Arc<dyn PointEval>,
    center: Vec<f64>,
    mu: f64,
}

impl Hatted {
    pub fn new(source: Arc<dyn PointEval>, center: &[f64], mu: f64) -> Self {
        Hatted { source, center: center.to_vec(), mu }
    }
}

impl PointEval for Hatted {
    fn dim(&self) -> usize {
        self.source.dim()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        self.source.value(&affine(&self.center, self.mu, x))
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.source.gradient(&affine(&self.center, self.mu, x))?.iter().map(|g| self.mu * g).collect())
    }
    fn hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let m2 = self.mu * self.mu;
        Ok(self.source.hessian(&affine(&self.center, self.mu, x))?.iter().map(|g| m2 * g).collect())
    }
}

/// v^q + |∇v/v|ⁿ + |∇²v/v|^{n/2} + |𝓛Z| at x (Frobenius norms).
pub fn normalized_quantity(v: &dyn PointEval, z: &dyn VectorPointEval, x: &[f64]) -> Result<f64> {
    let n = v.dim();
    let q = SobolevExponents::new(n)?.q();
    let val = v.value(x)?;
    if val <= 0.0 {
        return Err(Error::Positivity(format!("u({x:?}) = {val:e}")));
    }
    let g = v.gradient(x)?.iter().map(|t| t * t).sum::<f64>().sqrt() / val;
    let h = v.hessian(x)?.iter().map(|t| t * t).sum::<f64>().sqrt() / val;
    let lz = conformal_killing_from_jacobian(&z.jacobian(x)?, n).iter().map(|t| t * t).sum::<f64>().sqrt();
    let nf = n as f64;
    Ok(val.powf(q) + g.powf(nf) + h.powf(nf / 2.0) + lz)
}

/// μ with μ^{-n} = the normalized quantity of (u, W) at x.
pub fn mu_at(u: &dyn PointEval, w: &dyn VectorPointEval, x: &[f64]) -> Result<f64> {
    Ok(normalized_quantity(u, w, x)?.powf(-1.0 / u.dim() as f64))
}
