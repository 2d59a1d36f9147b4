//! Pohozaev balance on balls B₀(δr): boundary flux against the bulk term
//! and its split by coefficient, plus the harmonic-remainder estimate H(0).

use serde::{Deserialize, Serialize};

use crate::conformal::GeneralCoefficients;
use crate::error::{Error, Result};
use crate::fieldcalc::{grad, laplacian, quadrature::sphere_area, same_grid, BallGrid, ScalarField, SobolevExponents, SymTensorField};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PohozaevTolerances {
    /// on |boundary − bulk|/|bulk|
    pub balance_rel: f64,
    /// on |H0_estimate|, 1e−3·μ^{(n−2)/2}
    pub h0_abs: f64,
}

/// One audit: all integrals over B₀(ρ), ρ = δr.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PohozaevAudit {
    pub n: usize,
    pub delta: f64,
    pub r: f64,
    pub rho: f64,
    pub boundary: f64,
    pub bulk: f64,
    #[serde(rename = "J1")]
    pub j1: f64,
    #[serde(rename = "J2")]
    pub j2: f64,
    #[serde(rename = "J3")]
    pub j3: f64,
    #[serde(rename = "J4")]
    pub j4: f64,
    /// supplied, or recovered from u(0) = μ^{−(n−2)/2}
    pub mu: f64,
    pub f0: f64,
    /// R₀^{n−2}
    pub mass: f64,
    /// (δ, boundary-based estimate) pairs used by the extrapolation
    pub h0_samples: Vec<(f64, f64)>,
    /// additive harmonic constant in the units of u, extrapolated to δ → 0
    #[serde(rename = "H0_estimate")]
    pub h0_estimate: Option<f64>,
    /// the same in the rescaled chart x ↦ r x normalized by μ^{1−n/2}r^{n−2}
    pub h0_rescaled: Option<f64>,
    pub tolerances: PohozaevTolerances,
}

impl PohozaevAudit {
    pub fn j_sum(&self) -> f64 {
        self.j1 + self.j2 + self.j3 + self.j4
    }

    pub fn balance_defect(&self) -> f64 {
        (self.boundary - self.bulk).abs() / self.bulk.abs().max(f64::MIN_POSITIVE)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

struct Prepared<'a> {
    ball: &'a BallGrid,
    n: usize,
    u: &'a ScalarField,
    gu: Vec<Vec<f64>>,
    p: Vec<f64>,
}

impl<'a> Prepared<'a> {
    fn new(u: &'a ScalarField) -> Result<Self> {
        let ball = u.grid().as_ball().ok_or_else(|| Error::UnsupportedDomain("Pohozaev balance needs a ball grid".into()))?;
        let n = u.dim();
        let gu = grad(u).comps().to_vec();
        let half = 0.5 * (n as f64 - 2.0);
        let p = (0..u.len())
            .map(|i| {
                let x = ball.point(i);
                (0..n).map(|k| x[k] * gu[k][i]).sum::<f64>() + half * u.data()[i]
            })
            .collect();
        Ok(Prepared { ball, n, u, gu, p })
    }

    fn volume(&self, rho: f64, f: &[f64]) -> f64 {
        self.ball.radial_integral(rho, |t| self.ball.sphere_integral(f, t))
    }

    /// ∫ P·g over B₀(ρ).
    fn weighted(&self, rho: f64, g: impl Fn(usize) -> f64) -> f64 {
        let f: Vec<f64> = (0..self.p.len()).map(|i| self.p[i] * g(i)).collect();
        self.volume(rho, &f)
    }

    /// ∫_{∂B₀(ρ)} ½ρ|∇u|² − ((n−2)/2)u∂_νu − ρ(∂_νu)².
    fn boundary(&self, rho: f64) -> f64 {
        let n = self.n;
        let half = 0.5 * (n as f64 - 2.0);
        let f: Vec<f64> = (0..self.p.len())
            .map(|i| {
                let x = self.ball.point(i);
                let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
                let g2: f64 = (0..n).map(|k| self.gu[k][i] * self.gu[k][i]).sum();
                let dn = (0..n).map(|k| x[k] * self.gu[k][i]).sum::<f64>() / r;
                0.5 * rho * g2 - half * self.u.data()[i] * dn - rho * dn * dn
            })
            .collect();
        rho.powi(n as i32 - 1) * self.ball.sphere_integral(&f, rho)
    }
}

/// Boundary term, bulk ∫(x·∇u + ((n−2)/2)u)Δu and its split J₁…J₄ by the
/// terms of the equation
/// Δu + hu = f u^{q−1} + a/u^{q+1} − b/u − c⟨∇u,Y⟩(d/u² + 1/u^{q+2}) − ⟨∇u,Y⟩²/u^{q+3},
/// on B₀(δr). The H(0) estimate uses δ and 2δ, so B₀(2δr) must fit in the
/// grid. μ is recovered from u(0) = μ^{−(n−2)/2}.
pub fn pohozaev_balance(u: &ScalarField, gc: &GeneralCoefficients, lw: Option<&SymTensorField>, delta: f64, r: f64) -> Result<PohozaevAudit> {
    pohozaev_balance_with(u, gc, lw, delta, r, None)
}

/// As [`pohozaev_balance`] with a known concentration scale, for grids that
/// do not resolve the core (|x| ≲ μ) but are fine on the spheres |x| = δr, 2δr.
pub fn pohozaev_balance_with(
    u: &ScalarField,
    gc: &GeneralCoefficients,
    lw: Option<&SymTensorField>,
    delta: f64,
    r: f64,
    mu: Option<f64>,
) -> Result<PohozaevAudit> {
    same_grid(u.grid(), gc.grid())?;
    let n = u.dim();
    let q = SobolevExponents::new(n)?.q();
    if !(delta > 0.0 && r > 0.0) {
        return Err(Error::InvalidArgument(format!("need δ > 0 and r > 0, got {delta}, {r}")));
    }
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("min u = {:e}", u.min())));
    }
    let pre = Prepared::new(u)?;
    let rho = delta * r;
    if 2.0 * rho > pre.ball.radius() * (1.0 + 1e-12) {
        return Err(Error::OutsideDomain(format!("domain too small: need radius 2δr = {} but R = {}", 2.0 * rho, pre.ball.radius())));
    }
    let lap = laplacian(u);
    let bulk = pre.weighted(rho, |i| lap.data()[i]);
    let boundary = pre.boundary(rho);

    let a = gc.a_field(lw)?;
    let uy = grad(u).dot(&gc.y)?;
    let d = |f: &ScalarField, i: usize| f.data()[i];
    let uu = |i: usize| u.data()[i];
    let j1 = pre.weighted(rho, |i| {
        let y = uy.data()[i];
        -(d(&gc.h, i) * uu(i) + d(&gc.b, i) / uu(i) + d(&gc.c, i) * y * (d(&gc.d, i) / (uu(i) * uu(i)) + uu(i).powf(-q - 2.0)))
    });
    let j2 = pre.weighted(rho, |i| d(&gc.f, i) * uu(i).powf(q - 1.0));
    let j3 = pre.weighted(rho, |i| a.data()[i] * uu(i).powf(-q - 1.0));
    let j4 = pre.weighted(rho, |i| -uy.data()[i].powi(2) * uu(i).powf(-q - 3.0));

    let omega = sphere_area(n - 1);
    let half = 0.5 * (n as f64 - 2.0);
    let f0 = pre.ball.sphere_integral(gc.f.data(), 0.0) / omega;
    let mu = mu.unwrap_or_else(|| (pre.ball.sphere_integral(u.data(), 0.0) / omega).powf(-1.0 / half));
    let mu_half = mu.powf(half);
    let mut h0_samples = Vec::new();
    let (mut h0_estimate, mut h0_rescaled, mut mass) = (None, None, f64::NAN);
    if f0 > 0.0 {
        mass = ((n * (n - 2)) as f64 / f0).powf(half);
        // the cross term of A|x|^{2−n} with a constant c has flux
        // ((n−2)²/2)ω A c, with A = μ^{(n−2)/2}R₀^{n−2} in the units of u
        let denom = 2.0 * half * half * omega * mu_half * mass;
        for dl in [delta, 2.0 * delta] {
            let b = if dl == delta { boundary } else { pre.boundary(dl * r) };
            h0_samples.push((dl, b / denom));
        }
        let h0 = 2.0 * h0_samples[0].1 - h0_samples[1].1;
        h0_estimate = Some(h0);
        h0_rescaled = Some(h0 * r.powf(2.0 * half) / mu_half);
    }
    Ok(PohozaevAudit {
        n,
        delta,
        r,
        rho,
        boundary,
        bulk,
        j1,
        j2,
        j3,
        j4,
        mu,
        f0,
        mass,
        h0_samples,
        h0_estimate,
        h0_rescaled,
        tolerances: PohozaevTolerances { balance_rel: 1e-4, h0_abs: 1e-3 * mu_half },
    })
}
