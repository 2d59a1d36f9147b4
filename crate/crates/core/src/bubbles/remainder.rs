//! Harmonic remainder of a blow-up: v̌(x) = μ^{1−n/2}r^{n−2}u(rx) minus the
//! pole R₀^{n−2}|x|^{2−n}.

use std::sync::Arc;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fieldcalc::{laplacian, quadrature::sphere_area, Grid, ScalarField, SobolevExponents};

#[derive(Clone, Debug, Serialize)]
pub struct Remainder {
    /// R₀^{n−2} = (n(n−2)/f₀)^{(n−2)/2}
    pub mass: f64,
    #[serde(skip)]
    pub h: ScalarField,
    /// H(0) from sphere averages at radii 1/4, 1/2, 1 extrapolated in ρ²
    pub h0: f64,
    pub sphere_means: Vec<(f64, f64)>,
    pub min_h: f64,
    pub sup_h: f64,
    /// min of the geometer ΔH over nodes with |x| ≥ 1/4; ≥ 0 up to
    /// discretization for a superharmonic remainder. Closer to the pole the
    /// cancellation between μ^{1−n/2}r^{n−2}u and the pole term leaves only
    /// roundoff.
    pub superharmonic_defect: f64,
}

const MEAN_RADII: [f64; 3] = [0.25, 0.5, 1.0];

/// `u` lives on a ball grid of radius ≥ 2r centred at the blow-up point. H is
/// returned on the same grid scaled by 1/r, so no interpolation is involved.
pub fn remainder_extract_h(u: &ScalarField, mu: f64, r: f64, f0: f64) -> Result<Remainder> {
    let n = u.dim();
    SobolevExponents::new(n)?;
    if !(mu > 0.0 && r > 0.0 && f0 > 0.0) {
        return Err(Error::InvalidArgument(format!("need μ, r, f₀ > 0, got {mu}, {r}, {f0}")));
    }
    let ball = u.grid().as_ball().ok_or_else(|| Error::UnsupportedDomain("remainder extraction needs a ball grid".into()))?;
    if ball.radius() < 2.0 * r * (1.0 - 1e-12) {
        return Err(Error::OutsideDomain(format!("grid radius {} < 2r = {}", ball.radius(), 2.0 * r)));
    }
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("u vanishes: min u = {:e}", u.min())));
    }
    let half = 0.5 * (n as f64 - 2.0);
    let mass = ((n * (n - 2)) as f64 / f0).powf(half);
    let scale = mu.powf(-half) * r.powf(2.0 * half);
    let g = Arc::new(Grid::Ball(ball.scaled(1.0 / r)?));
    let data = (0..u.len())
        .map(|i| {
            let x = g.point(i);
            let rx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            scale * u.data()[i] - mass * rx.powf(-2.0 * half)
        })
        .collect();
    let h = ScalarField::new(g.clone(), data)?;
    let gb = g.as_ball().expect("scaled ball");
    let omega = sphere_area(n - 1);
    let sphere_means: Vec<(f64, f64)> = MEAN_RADII.iter().map(|&rho| (rho, gb.sphere_integral(h.data(), rho) / omega)).collect();
    // Lagrange extrapolation to ρ² = 0
    let t: Vec<f64> = MEAN_RADII.iter().map(|r| r * r).collect();
    let h0 = (0..3)
        .map(|k| {
            let w: f64 = (0..3).filter(|&j| j != k).map(|j| -t[j] / (t[k] - t[j])).product();
            w * sphere_means[k].1
        })
        .sum();
    let lap = laplacian(&h);
    let superharmonic_defect = (0..h.len())
        .filter(|&i| g.point(i).iter().map(|v| v * v).sum::<f64>() >= MEAN_RADII[0] * MEAN_RADII[0])
        .map(|i| lap.data()[i])
        .fold(f64::INFINITY, f64::min);
    Ok(Remainder { mass, min_h: h.min(), sup_h: h.sup(), h, h0, sphere_means, superharmonic_defect })
}
