//! Physical drift data, the general coefficient bundle and the map between them.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::metric::ConformalMetric;
use crate::error::{Error, Result};
use crate::fieldcalc::{
    div_sym, divergence, grad, integrate, same_grid_all, Grid, ScalarField, SobolevExponents, SymTensorField, VectorField,
};

/// Polynomial potential V(ψ) = Σ c_k ψ^k.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub coeffs: Vec<f64>,
}

impl Potential {
    pub fn zero() -> Self {
        Potential { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Potential { coeffs: vec![c] }
    }

    pub fn eval(&self, psi: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, c| acc * psi + c)
    }

    pub fn apply(&self, psi: &ScalarField) -> ScalarField {
        psi.map(|p| self.eval(p))
    }
}

/// Drift conformal data (Ñ, Ṽ, ψ, π, τ*, U, V) over a flat background.
///
/// `energy` and `current` are extra conformally scaled matter sources: σ
/// enters the scalar equation next to π² and J next to π∇ψ. Both default to
/// zero; the manufactured-problem generator writes into them.
#[derive(Clone, Debug)]
pub struct PhysicalCoefficients {
    pub lapse: ScalarField,
    pub drift: VectorField,
    pub psi: ScalarField,
    pub pi: ScalarField,
    pub tau_star: f64,
    pub tt: SymTensorField,
    pub potential: Potential,
    pub energy: ScalarField,
    pub current: VectorField,
}

impl PhysicalCoefficients {
    /// Checks Ñ > 0, trace-free U and matching grids.
    pub fn new(
        lapse: ScalarField,
        drift: VectorField,
        psi: ScalarField,
        pi: ScalarField,
        tau_star: f64,
        tt: SymTensorField,
        potential: Potential,
    ) -> Result<Self> {
        same_grid_all(&[lapse.grid(), drift.grid(), psi.grid(), pi.grid(), tt.grid()])?;
        if lapse.min() <= 0.0 {
            return Err(Error::Precondition(format!("densitized lapse must be positive (min {:e})", lapse.min())));
        }
        let tr = tt.trace().sup();
        if tr > 1e-10 {
            return Err(Error::NotTraceFree(tr));
        }
        let energy = ScalarField::constant(lapse.grid().clone(), 0.0);
        let current = VectorField::zeros(lapse.grid().clone());
        Ok(PhysicalCoefficients { lapse, drift, psi, pi, tau_star, tt, potential, energy, current })
    }

    pub fn with_sources(mut self, energy: ScalarField, current: VectorField) -> Result<Self> {
        same_grid_all(&[self.grid(), energy.grid(), current.grid()])?;
        self.energy = energy;
        self.current = current;
        Ok(self)
    }

    /// Ñ ≡ 1 and every other datum zero.
    pub fn vacuum(grid: Arc<Grid>, tau_star: f64) -> Self {
        PhysicalCoefficients {
            lapse: ScalarField::constant(grid.clone(), 1.0),
            drift: VectorField::zeros(grid.clone()),
            psi: ScalarField::constant(grid.clone(), 0.0),
            pi: ScalarField::constant(grid.clone(), 0.0),
            tau_star,
            tt: SymTensorField::zeros(grid.clone(), true),
            potential: Potential::zero(),
            energy: ScalarField::constant(grid.clone(), 0.0),
            current: VectorField::zeros(grid),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.lapse.grid()
    }

    pub fn dim(&self) -> usize {
        self.lapse.dim()
    }

    /// sup |div U|, to be compared with the grid tolerance.
    pub fn tt_divergence(&self) -> f64 {
        div_sym(&self.tt).sup()
    }

    /// Ñ ≥ θ everywhere.
    pub fn check_lapse(&self, theta: f64) -> Result<()> {
        let m = self.lapse.min();
        if m < theta {
            return Err(Error::Precondition(format!("min Ñ = {m:e} < θ = {theta:e}")));
        }
        Ok(())
    }
}

/// Coefficients (h, f, ρ₁, ρ₂, Ψ, b, c, d, Y) of the general scalar equation
/// Δu + hu = f u^{q-1} + (ρ₁ + |Ψ + ρ₂𝓛W|²)/u^{q+1} − b/u − c⟨∇u,Y⟩(d/u² + 1/u^{q+2}) − ⟨∇u,Y⟩²/u^{q+3}.
#[derive(Clone, Debug)]
pub struct GeneralCoefficients {
    pub h: ScalarField,
    pub f: ScalarField,
    pub rho1: ScalarField,
    pub rho2: ScalarField,
    pub psi: SymTensorField,
    pub b: ScalarField,
    pub c: ScalarField,
    pub d: ScalarField,
    pub y: VectorField,
}

/// Constant coefficient values with Ψ = 0 and Y = 0.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UniformCoefficients {
    pub h: f64,
    pub f: f64,
    pub rho1: f64,
    pub rho2: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl GeneralCoefficients {
    pub fn uniform(grid: Arc<Grid>, k: UniformCoefficients) -> Self {
        let s = |v| ScalarField::constant(grid.clone(), v);
        GeneralCoefficients {
            h: s(k.h),
            f: s(k.f),
            rho1: s(k.rho1),
            rho2: s(k.rho2),
            psi: SymTensorField::zeros(grid.clone(), true),
            b: s(k.b),
            c: s(k.c),
            d: s(k.d),
            y: VectorField::zeros(grid.clone()),
        }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.h.grid()
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    pub fn check(&self) -> Result<()> {
        same_grid_all(&[
            self.h.grid(),
            self.f.grid(),
            self.rho1.grid(),
            self.rho2.grid(),
            self.psi.grid(),
            self.b.grid(),
            self.c.grid(),
            self.d.grid(),
            self.y.grid(),
        ])
    }

    /// a = ρ₁ + |Ψ + ρ₂ 𝓛W|² for a given 𝓛W (flat norm); ρ₁ + |Ψ|² without it.
    pub fn a_field(&self, lw: Option<&SymTensorField>) -> Result<ScalarField> {
        let t = match lw {
            Some(l) => self.psi.add(&l.scale_by(&self.rho2)?)?,
            None => self.psi.clone(),
        };
        self.rho1.add(&t.norm_sq())
    }
}

/// Exact fieldwise substitution from drift data to general coefficients on a
/// flat background (R(g) = 0).
pub fn physical_to_general(p: &PhysicalCoefficients) -> Result<GeneralCoefficients> {
    let n = p.dim();
    let ex = SobolevExponents::new(n)?;
    if p.lapse.min() <= 0.0 {
        return Err(Error::Precondition("densitized lapse must be positive".into()));
    }
    let nf = n as f64;
    let cn = ex.c_n();
    let grid = p.grid().clone();
    let dpsi2 = grad(&p.psi).norm().map(|v| v * v);
    let div_v = divergence(&p.drift);
    let k = (nf - 1.0) / nf;
    let h = dpsi2.scale(-cn);
    let f = p.potential.apply(&p.psi).map(|v| cn * (2.0 * v - k * p.tau_star * p.tau_star));
    let rho1 = {
        let nd = p.lapse.mul(&div_v)?;
        let r = p.pi.zip_map(&nd, |pi, x| cn * (pi * pi - k * x * x))?;
        r.add(&p.energy.scale(cn))?
    };
    let r = ((nf - 2.0) / (nf - 1.0)).sqrt();
    let rho2 = p.lapse.scale(r / 4.0);
    let psi = p.tt.scale(r / 2.0);
    let b = p.lapse.mul(&div_v)?.scale((nf - 2.0) / (2.0 * nf) * p.tau_star);
    let c = ScalarField::constant(grid.clone(), ((nf - 2.0) / nf).sqrt());
    let d = ScalarField::constant(grid, p.tau_star);
    let y = p.drift.scale_by(&p.lapse)?.scale((nf / (nf - 2.0)).sqrt());
    Ok(GeneralCoefficients { h, f, rho1, rho2, psi, b, c, d, y })
}

/// τ* = ∫ N τ dV / ∫ N dV with dV = vol · (grid measure).
pub fn volumetric_momentum(tau: &ScalarField, lapse: &ScalarField, vol: &ScalarField) -> Result<f64> {
    if lapse.min() <= 0.0 || vol.min() <= 0.0 {
        return Err(Error::Precondition("lapse and volume density must be positive".into()));
    }
    let nv = lapse.mul(vol)?;
    let den = integrate(&nv);
    if den.abs() < 1e-300 {
        return Err(Error::Precondition("vanishing denominator".into()));
    }
    Ok(integrate(&nv.mul(tau)?) / den)
}

/// General scalar residual in the metric `g` (flat when `None`).
/// `lw` is 𝓛_g W. `extra` adds e⟨∇u,Y⟩_g/u^{q+2} to the residual.
pub fn scalar_residual_in(
    metric: Option<&ConformalMetric>,
    u: &ScalarField,
    lw: &SymTensorField,
    gc: &GeneralCoefficients,
    extra: Option<&ScalarField>,
) -> Result<ScalarField> {
    let n = u.dim();
    let q = SobolevExponents::new(n)?.q();
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("min u = {:e}", u.min())));
    }
    gc.check()?;
    same_grid_all(&[u.grid(), lw.grid(), gc.grid()])?;
    let t = gc.psi.add(&lw.scale_by(&gc.rho2)?)?;
    let gu = grad(u);
    let (lap, tn, uy) = match metric {
        Some(m) => (m.laplace_beltrami(u)?, m.norm_sq_sym(&t), m.inner(&gu, &gc.y)?),
        None => (crate::fieldcalc::laplacian(u), t.norm_sq(), gu.dot(&gc.y)?),
    };
    let data = (0..u.len())
        .map(|i| {
            let uu = u.data()[i];
            let y = uy.data()[i];
            let a = gc.rho1.data()[i] + tn.data()[i];
            let rhs = gc.f.data()[i] * uu.powf(q - 1.0) + a / uu.powf(q + 1.0)
                - gc.b.data()[i] / uu
                - gc.c.data()[i] * y * (gc.d.data()[i] / (uu * uu) + 1.0 / uu.powf(q + 2.0))
                - y * y / uu.powf(q + 3.0);
            let e = extra.map_or(0.0, |e| e.data()[i] * y / uu.powf(q + 2.0));
            lap.data()[i] + gc.h.data()[i] * uu - rhs + e
        })
        .collect();
    Ok(u.with_data(data))
}
