//! Initial data (ĝ, K̂, ψ̂, π̂) built from a solution (u, W) and the constraint
//! residuals of such data.

use super::coefficients::{PhysicalCoefficients, Potential};
use super::metric::ConformalMetric;
use crate::error::{Error, Result};
use crate::fieldcalc::{conformal_killing, divergence, grad, sym_index, ScalarField, SobolevExponents, SymTensorField, VectorField};

/// ĝ = u^{q-2}ξ (kept as its conformal factor u), K̂ by covariant components.
#[derive(Clone, Debug)]
pub struct InitialData {
    pub metric: ConformalMetric,
    pub k: SymTensorField,
    pub psi: ScalarField,
    pub pi: ScalarField,
    /// τ = τ* + Ñ div(u^q Ṽ)/(2u^{2q}), the ĝ-trace of K̂
    pub tau: ScalarField,
    /// extra energy density u^{-2q}σ
    pub energy: ScalarField,
    /// extra momentum density −u^{-q}J
    pub current: VectorField,
}

/// ĝ = u^{q-2}g, K̂ = u^{-2}(Ñ/2 𝓛W + U) + (τ/n)ĝ, ψ̂ = ψ, π̂ = −u^{-q}π.
pub fn reconstruct_initial_data(u: &ScalarField, w: &VectorField, p: &PhysicalCoefficients) -> Result<InitialData> {
    let n = u.dim();
    let q = SobolevExponents::new(n)?.q();
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("min u = {:e}", u.min())));
    }
    let metric = ConformalMetric::new(u.clone())?;
    let uq = u.map(|v| v.powf(q));
    let flux = divergence(&p.drift.scale_by(&uq)?);
    let tau = ScalarField::new(
        u.grid().clone(),
        (0..u.len()).map(|i| p.tau_star + p.lapse.data()[i] * flux.data()[i] / (2.0 * uq.data()[i] * uq.data()[i])).collect(),
    )?;
    let sigma = conformal_killing(w).scale_by(&p.lapse.scale(0.5))?.add(&p.tt)?;
    let mut comps = sigma.scale_by(&u.map(|v| v.powi(-2)))?.comps().to_vec();
    for a in 0..n {
        let c = &mut comps[sym_index(a, a, n)];
        for (i, v) in c.iter_mut().enumerate() {
            *v += tau.data()[i] / n as f64 * metric.scale_factor().data()[i];
        }
    }
    let k = SymTensorField::new(u.grid().clone(), comps, false)?;
    let pi = p.pi.zip_map(u, |pi, v| -pi / v.powf(q))?;
    let energy = p.energy.zip_map(u, |e, v| e / v.powf(2.0 * q))?;
    let current = p.current.scale_by(&u.map(|v| -v.powf(-q)))?;
    Ok(InitialData { metric, k, psi: p.psi.clone(), pi, tau, energy, current })
}

/// Hamiltonian and momentum constraint residuals.
#[derive(Clone, Debug)]
pub struct ConstraintResidual {
    /// R(ĝ) + (tr K̂)² − |K̂|² − π̂² − |∇ψ̂|² − 2V(ψ̂) − σ̂
    pub hamiltonian: ScalarField,
    /// ∂(tr K̂) − div K̂ − π̂ ∂ψ̂ − Ĵ
    pub momentum: VectorField,
}

impl ConstraintResidual {
    pub fn sup(&self) -> f64 {
        self.hamiltonian.sup() + self.momentum.sup()
    }
}

pub fn constraint_residual(data: &InitialData, potential: &Potential) -> Result<ConstraintResidual> {
    let m = &data.metric;
    let tr = m.trace(&data.k);
    let k2 = m.norm_sq_sym(&data.k);
    let dpsi = grad(&data.psi);
    let dpsi2 = m.inner(&dpsi, &dpsi)?;
    let vpot = potential.apply(&data.psi);
    let r = m.scalar_curvature();
    let ham = ScalarField::new(
        tr.grid().clone(),
        (0..tr.len())
            .map(|i| {
                r.data()[i] + tr.data()[i].powi(2)
                    - k2.data()[i]
                    - data.pi.data()[i].powi(2)
                    - dpsi2.data()[i]
                    - 2.0 * vpot.data()[i]
                    - data.energy.data()[i]
            })
            .collect(),
    )?;
    let mom = grad(&tr).sub(&m.div_sym(&data.k)?)?.sub(&dpsi.scale_by(&data.pi)?)?.sub(&data.current)?;
    Ok(ConstraintResidual { hamiltonian: ham, momentum: mom })
}
