//! Residuals of the coupled system in the general and the physical language.

use crate::conformal::{scalar_residual_in, GeneralCoefficients, PhysicalCoefficients};
use crate::error::{Error, Result};
use crate::fieldcalc::{
    conformal_killing, divergence, grad, hessian, jacobian, lame_apply, same_grid_all, ScalarField, SobolevExponents, VectorField,
};

fn positive(u: &ScalarField) -> Result<()> {
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("min u = {:e}", u.min())));
    }
    Ok(())
}

/// Δu + hu − [f u^{q-1} + (ρ₁ + |Ψ + ρ₂𝓛W|²)/u^{q+1} − b/u − c⟨∇u,Y⟩(d/u² + 1/u^{q+2}) − ⟨∇u,Y⟩²/u^{q+3}].
pub fn scalar_residual(u: &ScalarField, w: &VectorField, gc: &GeneralCoefficients) -> Result<ScalarField> {
    positive(u)?;
    same_grid_all(&[u.grid(), w.grid()])?;
    scalar_residual_in(None, u, &conformal_killing(w), gc, None)
}

/// First equation of the drift system evaluated directly from the physical
/// data: Δu − c_n|∇ψ|²u − c_n(|U + Ñ/2 𝓛W|² + π² + σ)/u^{q+1}
/// − c_n(2V(ψ) − ((n−1)/n)τ²)u^{q-1}, τ = τ* + Ñ div(u^qṼ)/(2u^{2q}).
///
/// Equals c_n u^{q-1} times the Hamiltonian constraint of the reconstructed data.
pub fn physical_scalar_residual(u: &ScalarField, w: &VectorField, p: &PhysicalCoefficients) -> Result<ScalarField> {
    positive(u)?;
    same_grid_all(&[u.grid(), w.grid(), p.grid()])?;
    let n = u.dim();
    let ex = SobolevExponents::new(n)?;
    let (q, cn, nf) = (ex.q(), ex.c_n(), n as f64);
    let sigma = conformal_killing(w).scale_by(&p.lapse.scale(0.5))?.add(&p.tt)?.norm_sq();
    let uq = u.map(|v| v.powf(q));
    let flux = divergence(&p.drift.scale_by(&uq)?);
    let dpsi2 = grad(&p.psi).norm().map(|v| v * v);
    let vpot = p.potential.apply(&p.psi);
    let lap = crate::fieldcalc::laplacian(u);
    let data = (0..u.len())
        .map(|i| {
            let uu = u.data()[i];
            let tau = p.tau_star + p.lapse.data()[i] * flux.data()[i] / (2.0 * uq.data()[i] * uq.data()[i]);
            let a = sigma.data()[i] + p.pi.data()[i].powi(2) + p.energy.data()[i];
            let f = 2.0 * vpot.data()[i] - (nf - 1.0) / nf * tau * tau;
            lap.data()[i] - cn * dpsi2.data()[i] * uu - cn * a / uu.powf(q + 1.0) - cn * f * uu.powf(q - 1.0)
        })
        .collect();
    Ok(u.with_data(data))
}

/// Δ⃗W − ⟨∇lnÑ,𝓛W⟩ − 2((n−1)/(n−2))[((3n−2)/(n−2))⟨∇u,Ṽ⟩∇u/u² − ⟨∇²u,Ṽ⟩/u]
/// − 2((n−1)/(n−2))[−(⟨∇u,Ṽ⟩/u)∇lnÑ + divṼ∇u/u − ⟨∇Ṽ,∇u⟩/u]
/// + ((n−1)/n)[divṼ∇lnÑ + ∇divṼ] + 2Ñ⁻¹(π∇ψ + J),
/// with ⟨∇Ṽ,∇u⟩_i = ∂_iṼ_j ∂_j u.
///
/// Equals (2/Ñ)u^q times the momentum constraint of the reconstructed data.
pub fn vector_residual(u: &ScalarField, w: &VectorField, p: &PhysicalCoefficients) -> Result<VectorField> {
    let mut r = vector_source_terms(u, p)?;
    same_grid_all(&[u.grid(), w.grid()])?;
    let lw = conformal_killing(w);
    let dln = grad(&p.lapse.map(f64::ln));
    let op = lame_apply(w).sub(&lw.apply(&dln)?)?;
    for (rc, oc) in r.comps_mut().iter_mut().zip(op.comps()) {
        for (a, b) in rc.iter_mut().zip(oc) {
            *a += b;
        }
    }
    Ok(r)
}

/// The part of [`vector_residual`] that does not involve W.
pub fn vector_source_terms(u: &ScalarField, p: &PhysicalCoefficients) -> Result<VectorField> {
    positive(u)?;
    same_grid_all(&[u.grid(), p.grid()])?;
    if p.lapse.min() <= 0.0 {
        return Err(Error::Precondition(format!("densitized lapse must be positive (min {:e})", p.lapse.min())));
    }
    let n = u.dim();
    let nf = n as f64;
    let k1 = 2.0 * (nf - 1.0) / (nf - 2.0);
    let k2 = (3.0 * nf - 2.0) / (nf - 2.0);
    let k3 = (nf - 1.0) / nf;
    let gu = grad(u);
    let hu = hessian(u).apply(&p.drift)?;
    let jv = jacobian(&p.drift);
    let dv = divergence(&p.drift);
    let gdv = grad(&dv);
    let dln = grad(&p.lapse.map(f64::ln));
    let dpsi = grad(&p.psi);
    let len = u.len();
    let mut out = vec![vec![0.0; len]; n];
    for idx in 0..len {
        let uu = u.data()[idx];
        let s: f64 = (0..n).map(|j| gu.comp(j)[idx] * p.drift.comp(j)[idx]).sum();
        let div = dv.data()[idx];
        let lapse = p.lapse.data()[idx];
        for (i, o) in out.iter_mut().enumerate() {
            let gi = gu.comp(i)[idx];
            let li = dln.comp(i)[idx];
            let jvu: f64 = (0..n).map(|j| jv[i][j][idx] * gu.comp(j)[idx]).sum();
            let first = k2 * s * gi / (uu * uu) - hu.comp(i)[idx] / uu;
            let second = -(s / uu) * li + div * gi / uu - jvu / uu;
            let third = div * li + gdv.comp(i)[idx];
            let matter = 2.0 / lapse * (p.pi.data()[idx] * dpsi.comp(i)[idx] + p.current.comp(i)[idx]);
            o[idx] = -k1 * first - k1 * second + k3 * third + matter;
        }
    }
    VectorField::new(u.grid().clone(), out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::{constraint_residual, physical_to_general, reconstruct_initial_data, Potential, UniformCoefficients};
    use crate::fieldcalc::{arc, Grid, SymTensorField, TorusGrid};
    use std::f64::consts::PI;
    use std::sync::Arc;

    const TP: f64 = 2.0 * PI;

    fn torus(m: usize) -> Arc<Grid> {
        arc(Grid::Torus(TorusGrid::unit(3, m).unwrap()))
    }

    fn rich_physical(g: Arc<Grid>, with_drift: bool) -> PhysicalCoefficients {
        let mut p = PhysicalCoefficients::vacuum(g.clone(), 0.6);
        p.lapse = ScalarField::from_fn(g.clone(), |x| 1.0 + 0.2 * (TP * x[1]).sin());
        p.psi = ScalarField::from_fn(g.clone(), |x| 0.3 * (TP * x[0]).cos());
        p.pi = ScalarField::from_fn(g.clone(), |x| 0.5 + 0.1 * (TP * x[2]).sin());
        p.potential = Potential { coeffs: vec![0.4, 0.0, 0.5] };
        // TT: constant trace-free tensors are divergence free
        p.tt = SymTensorField::from_fn(g.clone(), true, |_| vec![0.2, 0.1, 0.0, 0.1, -0.3, 0.05, 0.0, 0.05, 0.1]).unwrap();
        if with_drift {
            p.drift = VectorField::from_fn(g, |x| vec![0.1 * (TP * x[1]).sin(), 0.05 * (TP * x[2]).cos(), 0.08 * (TP * x[0]).sin()]);
        }
        p
    }

    fn sample_uw(g: Arc<Grid>) -> (ScalarField, VectorField) {
        let u = ScalarField::from_fn(g.clone(), |x| 1.1 + 0.15 * (TP * x[0]).sin() * (TP * x[2]).cos());
        let w = VectorField::from_fn(g, |x| vec![0.2 * (TP * x[1]).cos(), 0.1 * (TP * x[0]).sin(), -0.15 * (TP * x[1]).sin()]);
        (u, w)
    }

    #[test]
    fn arithmetic_example_vanishes() {
        let g = torus(8);
        let gc = GeneralCoefficients::uniform(g.clone(), UniformCoefficients { f: 2.0, rho1: 1.0, b: 3.0, ..Default::default() });
        let r = scalar_residual(&ScalarField::constant(g.clone(), 1.0), &VectorField::zeros(g), &gc).unwrap();
        assert!(r.sup() < 1e-14);
    }

    #[test]
    fn general_matches_physical_without_drift() {
        let g = torus(16);
        let p = rich_physical(g.clone(), false);
        let (u, w) = sample_uw(g);
        let a = scalar_residual(&u, &w, &physical_to_general(&p).unwrap()).unwrap();
        let b = physical_scalar_residual(&u, &w, &p).unwrap();
        let d = a.sub(&b).unwrap().sup();
        assert!(d < 1e-9, "{d}");
    }

    #[test]
    fn residuals_are_weighted_constraints() {
        let g = torus(32);
        let p = rich_physical(g.clone(), true)
            .with_sources(
                ScalarField::from_fn(g.clone(), |x| 0.2 + 0.1 * (TP * x[1]).cos()),
                VectorField::from_fn(g.clone(), |x| vec![0.0, 0.3 * (TP * x[2]).sin(), 0.1]),
            )
            .unwrap();
        let (u, w) = sample_uw(g);
        let ex = SobolevExponents::new(3).unwrap();
        let data = reconstruct_initial_data(&u, &w, &p).unwrap();
        let cr = constraint_residual(&data, &p.potential).unwrap();
        let rs = physical_scalar_residual(&u, &w, &p).unwrap();
        let ham = cr.hamiltonian.zip_map(&u, |h, v| ex.c_n() * v.powf(ex.q() - 1.0) * h).unwrap();
        let ds = rs.sub(&ham).unwrap().sup() / rs.sup();
        assert!(ds < 1e-10, "{ds}");
        let rv = vector_residual(&u, &w, &p).unwrap();
        let wgt = p.lapse.zip_map(&u, |l, v| 2.0 / l * v.powf(ex.q())).unwrap();
        let mom = cr.momentum.scale_by(&wgt).unwrap();
        let dv = rv.sub(&mom).unwrap().sup() / rv.sup();
        assert!(dv < 1e-10, "{dv}");
    }

    #[test]
    fn single_mode_reduces_to_lame_symbol() {
        let g = torus(16);
        let p = PhysicalCoefficients::vacuum(g.clone(), 0.0);
        let (a, k) = ([0.3, -0.2, 0.5], [1.0, 2.0, 0.0]);
        let w = VectorField::from_fn(g.clone(), |x| {
            let c = (TP * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2])).cos();
            a.iter().map(|v| v * c).collect()
        });
        let r = vector_residual(&ScalarField::constant(g.clone(), 2.0), &w, &p).unwrap();
        let ka: f64 = a.iter().zip(&k).map(|(x, y)| x * y).sum();
        let k2: f64 = k.iter().map(|v| v * v).sum();
        let mut err = 0.0f64;
        for idx in 0..r.len() {
            let x = g.point(idx);
            let c = (TP * (k[0] * x[0] + k[1] * x[1] + k[2] * x[2])).cos();
            for i in 0..3 {
                let expect = TP * TP * (k2 * a[i] + (1.0 / 3.0) * ka * k[i]) * c;
                err = err.max((r.comp(i)[idx] - expect).abs());
            }
        }
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn drift_only_gives_grad_div() {
        let g = torus(16);
        let mut p = PhysicalCoefficients::vacuum(g.clone(), 0.0);
        p.lapse = ScalarField::constant(g.clone(), 1.7);
        p.drift = VectorField::from_fn(g.clone(), |x| vec![0.4 * (TP * x[0]).cos(), 0.0, 0.0]);
        let r = vector_residual(&ScalarField::constant(g.clone(), 1.3), &VectorField::zeros(g.clone()), &p).unwrap();
        // ∇divṼ = (−0.4(2π)² cos(2πx₁), 0, 0)
        let mut err = 0.0f64;
        for idx in 0..r.len() {
            let x = g.point(idx);
            err = err.max((r.comp(0)[idx] + (2.0 / 3.0) * 0.4 * TP * TP * (TP * x[0]).cos()).abs());
            err = err.max(r.comp(1)[idx].abs()).max(r.comp(2)[idx].abs());
        }
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn constant_shift_of_w_is_invisible() {
        let g = torus(16);
        let p = rich_physical(g.clone(), true);
        let gc = physical_to_general(&p).unwrap();
        let (u, w) = sample_uw(g.clone());
        let shifted = w.add(&VectorField::from_fn(g, |_| vec![3.0, -1.0, 0.5])).unwrap();
        let s0 = scalar_residual(&u, &w, &gc).unwrap();
        let s1 = scalar_residual(&u, &shifted, &gc).unwrap();
        assert!(s0.sub(&s1).unwrap().sup() <= 1e-12);
        let v0 = vector_residual(&u, &w, &p).unwrap();
        let v1 = vector_residual(&u, &shifted, &p).unwrap();
        assert!(v0.sub(&v1).unwrap().sup() <= 1e-12);
    }

    #[test]
    fn nonpositive_u_is_rejected() {
        let g = torus(8);
        let p = PhysicalCoefficients::vacuum(g.clone(), 0.0);
        let u = ScalarField::constant(g.clone(), 0.0);
        assert!(vector_residual(&u, &VectorField::zeros(g.clone()), &p).is_err());
        assert!(physical_scalar_residual(&u, &VectorField::zeros(g), &p).is_err());
    }
}
