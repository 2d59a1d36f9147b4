//! Change of unknowns v = φu, Z = φ^{2-q}W from (M, g = φ^{q-2}ξ) to the
//! Euclidean chart, with the transformed coefficients.

use super::coefficients::GeneralCoefficients;
use super::metric::ConformalMetric;
use crate::error::Result;
use crate::fieldcalc::{conformal_killing, grad, lame_apply, laplacian, ScalarField, SobolevExponents, SymTensorField, VectorField};

/// Output of [`transform_system`]. The scalar equation for v has the general
/// form with `coeffs` plus the term −e⟨∇v,Ỹ⟩/v^{q+2}; the vector equation is
/// Δ⃗_ξZ − ⟨lame_drift, 𝓛_ξZ⟩ = Δ⃗_g W.
#[derive(Clone, Debug)]
pub struct TransformedSystem {
    pub v: ScalarField,
    pub z: VectorField,
    pub coeffs: GeneralCoefficients,
    pub e: ScalarField,
    pub lame_drift: VectorField,
}

/// Y and W are one-forms (⟨∇u,Y⟩ is taken in g). Ỹ = φ²Y,
/// h̃ = φ^{q-2}(h − c_n R(g)), b̃ = φ^q b − c d φ⟨∇φ,Y⟩,
/// ρ̃₁ = φ^{2q}ρ₁ + c φ^{q+1}⟨∇φ,Y⟩ − φ²⟨∇φ,Y⟩², ρ̃₂ = φ^q ρ₂, Ψ̃ = φ²Ψ,
/// c̃ = c, d̃ = d, e = c(φ^q − 1) − 2φ⟨∇φ,Y⟩.
pub fn transform_system(phi: &ScalarField, gc: &GeneralCoefficients, u: &ScalarField, w: &VectorField) -> Result<TransformedSystem> {
    let n = phi.dim();
    let ex = SobolevExponents::new(n)?;
    let q = ex.q();
    let metric = ConformalMetric::new(phi.clone())?;
    gc.check()?;
    let v = phi.mul(u)?;
    let z = w.scale_by(&phi.map(|p| p.powf(2.0 - q)))?;
    let a = grad(phi).dot(&gc.y)?;
    let rg = metric.scalar_curvature();
    let p = phi.data();
    let ad = a.data();
    let map = |f: &dyn Fn(usize) -> f64| phi.with_data((0..phi.len()).map(f).collect());
    let h = map(&|i| p[i].powf(q - 2.0) * (gc.h.data()[i] - ex.c_n() * rg.data()[i]));
    let b = map(&|i| p[i].powf(q) * gc.b.data()[i] - gc.c.data()[i] * gc.d.data()[i] * p[i] * ad[i]);
    let rho1 = map(&|i| p[i].powf(2.0 * q) * gc.rho1.data()[i] + gc.c.data()[i] * p[i].powf(q + 1.0) * ad[i] - (p[i] * ad[i]).powi(2));
    let e = map(&|i| gc.c.data()[i] * (p[i].powf(q) - 1.0) - 2.0 * p[i] * ad[i]);
    let phi2 = phi.map(|x| x * x);
    let coeffs = GeneralCoefficients {
        h,
        f: gc.f.clone(),
        rho1,
        rho2: gc.rho2.mul(&phi.map(|x| x.powf(q)))?,
        psi: gc.psi.scale_by(&phi2)?,
        b,
        c: gc.c.clone(),
        d: gc.d.clone(),
        y: gc.y.scale_by(&phi2)?,
    };
    let lame_drift = grad(&phi.map(f64::ln)).scale(q);
    Ok(TransformedSystem { v, z, coeffs, e, lame_drift })
}

/// sup |Δ_ξ(φu) − φ^{q-1}(Δ_g u + c_n R(g) u)| / sup |u|.
pub fn laplace_covariance_defect(phi: &ScalarField, u: &ScalarField) -> Result<f64> {
    let ex = SobolevExponents::new(phi.dim())?;
    let m = ConformalMetric::new(phi.clone())?;
    let lhs = laplacian(&phi.mul(u)?);
    let lg = m.laplace_beltrami(u)?;
    let rg = m.scalar_curvature();
    let rhs = ScalarField::new(
        u.grid().clone(),
        (0..u.len()).map(|i| phi.data()[i].powf(ex.q() - 1.0) * (lg.data()[i] + ex.c_n() * rg.data()[i] * u.data()[i])).collect(),
    )?;
    Ok(lhs.sub(&rhs)?.sup() / u.sup().max(f64::MIN_POSITIVE))
}

/// sup |φ^{q-2}𝓛_ξZ − 𝓛_g W| with Z = φ^{2-q}W.
pub fn killing_covariance_defect(phi: &ScalarField, w: &VectorField) -> Result<f64> {
    let q = SobolevExponents::new(phi.dim())?.q();
    let m = ConformalMetric::new(phi.clone())?;
    let z = w.scale_by(&phi.map(|p| p.powf(2.0 - q)))?;
    let lhs = conformal_killing(&z).scale_by(&phi.map(|p| p.powf(q - 2.0)))?;
    Ok(lhs.sub(&m.conformal_killing(w)?)?.sup())
}

/// sup |Δ⃗_ξZ − q⟨∇ln φ, 𝓛_ξZ⟩ − Δ⃗_g W|.
pub fn lame_covariance_defect(phi: &ScalarField, w: &VectorField) -> Result<f64> {
    let t = transform_system_vector(phi, w)?;
    let m = ConformalMetric::new(phi.clone())?;
    Ok(t.sub(&m.lame(w)?)?.sup())
}

fn transform_system_vector(phi: &ScalarField, w: &VectorField) -> Result<VectorField> {
    let q = SobolevExponents::new(phi.dim())?.q();
    let z = w.scale_by(&phi.map(|p| p.powf(2.0 - q)))?;
    let lz: SymTensorField = conformal_killing(&z);
    let drift = grad(&phi.map(f64::ln)).scale(q);
    lame_apply(&z).sub(&lz.apply(&drift)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::coefficients::{scalar_residual_in, UniformCoefficients};
    use crate::fieldcalc::{arc, Grid, TorusGrid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn torus(m: usize) -> Arc<Grid> {
        arc(Grid::Torus(TorusGrid::unit(3, m).unwrap()))
    }

    fn phi_of(g: Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(g, |x| 1.0 + 0.15 * (2.0 * PI * x[0]).cos() * (2.0 * PI * x[1]).sin() + 0.1 * (2.0 * PI * (x[1] + x[2])).sin())
    }

    fn sample_coeffs(g: Arc<Grid>) -> GeneralCoefficients {
        let mut gc =
            GeneralCoefficients::uniform(g.clone(), UniformCoefficients { h: 0.3, f: 1.2, rho1: 0.4, rho2: 0.2, b: 0.1, c: 0.5, d: 0.7 });
        gc.y = VectorField::from_fn(g.clone(), |x| vec![0.1 * (2.0 * PI * x[2]).sin(), 0.05, -0.08 * (2.0 * PI * x[0]).cos()]);
        gc.psi = SymTensorField::from_fn(g, true, |x| {
            let s = 0.2 * (2.0 * PI * x[1]).cos();
            vec![s, 0.1, 0.0, 0.1, -s, 0.05, 0.0, 0.05, 0.0]
        })
        .unwrap();
        gc
    }

    #[test]
    fn identity_factor_is_identity() {
        let g = torus(8);
        let gc = sample_coeffs(g.clone());
        let u = ScalarField::from_fn(g.clone(), |x| 2.0 + (2.0 * PI * x[0]).sin());
        let w = VectorField::from_fn(g.clone(), |x| vec![(2.0 * PI * x[1]).cos(), 0.0, 1.0]);
        let t = transform_system(&ScalarField::constant(g, 1.0), &gc, &u, &w).unwrap();
        assert_eq!(t.v.data(), u.data());
        assert_eq!(t.z.comps(), w.comps());
        assert_eq!(t.coeffs.h.data(), gc.h.data());
        assert_eq!(t.coeffs.b.data(), gc.b.data());
        assert_eq!(t.coeffs.rho1.data(), gc.rho1.data());
        assert_eq!(t.coeffs.rho2.data(), gc.rho2.data());
        assert_eq!(t.coeffs.y.comps(), gc.y.comps());
        assert_eq!(t.coeffs.psi.comps(), gc.psi.comps());
        assert!(t.e.sup() == 0.0 && t.lame_drift.sup() == 0.0);
    }

    #[test]
    fn covariance_of_laplacian_killing_and_lame() {
        let g = torus(64);
        let phi = phi_of(g.clone());
        let u = ScalarField::from_fn(g.clone(), |x| 1.5 + 0.3 * (2.0 * PI * x[2]).cos());
        let w = VectorField::from_fn(g, |x| vec![(2.0 * PI * x[1]).sin(), 0.4 * (2.0 * PI * x[0]).cos(), 0.2]);
        assert!(laplace_covariance_defect(&phi, &u).unwrap() < 1e-8);
        assert!(killing_covariance_defect(&phi, &w).unwrap() < 1e-8);
        let d = lame_covariance_defect(&phi, &w).unwrap();
        assert!(d < 1e-7, "{d}");
    }

    #[test]
    fn transformed_residual_is_weighted_original() {
        let g = torus(32);
        let phi = phi_of(g.clone());
        let gc = sample_coeffs(g.clone());
        let u = ScalarField::from_fn(g.clone(), |x| 1.2 + 0.2 * (2.0 * PI * x[0]).sin() * (2.0 * PI * x[2]).cos());
        let w = VectorField::from_fn(g, |x| vec![0.3 * (2.0 * PI * x[1]).sin(), 0.0, 0.2 * (2.0 * PI * x[0]).cos()]);
        let m = ConformalMetric::new(phi.clone()).unwrap();
        let orig = scalar_residual_in(Some(&m), &u, &m.conformal_killing(&w).unwrap(), &gc, None).unwrap();
        let t = transform_system(&phi, &gc, &u, &w).unwrap();
        let new = scalar_residual_in(None, &t.v, &conformal_killing(&t.z), &t.coeffs, Some(&t.e)).unwrap();
        let q = SobolevExponents::new(3).unwrap().q();
        let weighted = orig.zip_map(&phi, |r, p| r * p.powf(q - 1.0)).unwrap();
        let err = new.sub(&weighted).unwrap().sup();
        assert!(err < 1e-8, "{err}");
    }
}
