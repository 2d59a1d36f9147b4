//! Operators of a conformally flat metric g = φ^{q-2} ξ = e^{2ω} ξ written
//! with Christoffel symbols Γᵏᵢⱼ = δᵏᵢ∂ⱼω + δᵏⱼ∂ᵢω − δᵢⱼ∂ₖω. One-forms and
//! covariant 2-tensors are stored by their Cartesian components.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fieldcalc::{
    divergence, grad, hessian, jacobian, laplacian, sym_index, sym_len, Grid, ScalarField, SobolevExponents, SymTensorField, VectorField,
};

#[derive(Clone, Debug)]
pub struct ConformalMetric {
    phi: ScalarField,
    omega: ScalarField,
    domega: VectorField,
    e2w: ScalarField,
}

impl ConformalMetric {
    /// Metric φ^{q-2}ξ. Fails unless φ > 0 everywhere.
    pub fn new(phi: ScalarField) -> Result<Self> {
        let n = phi.dim();
        let ex = SobolevExponents::new(n)?;
        if phi.min() <= 0.0 {
            return Err(Error::Precondition(format!("conformal factor must be positive (min {:e})", phi.min())));
        }
        let s = (ex.q() - 2.0) / 2.0;
        let omega = phi.map(|p| s * p.ln());
        let domega = grad(&omega);
        let e2w = phi.map(|p| p.powf(ex.q() - 2.0));
        Ok(ConformalMetric { phi, omega, domega, e2w })
    }

    /// Flat metric on `grid`.
    pub fn flat(grid: Arc<Grid>) -> Result<Self> {
        Self::new(ScalarField::constant(grid, 1.0))
    }

    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn grid(&self) -> &Arc<Grid> {
        self.phi.grid()
    }

    pub fn factor(&self) -> &ScalarField {
        &self.phi
    }

    /// ω = ((q-2)/2) ln φ.
    pub fn omega(&self) -> &ScalarField {
        &self.omega
    }

    /// Pointwise g_ij/δ_ij = φ^{q-2}.
    pub fn scale_factor(&self) -> &ScalarField {
        &self.e2w
    }

    /// R(g) = e^{-2ω}(2(n-1)Δω − (n-1)(n-2)|∇ω|²), Δ the flat geometer Laplacian.
    pub fn scalar_curvature(&self) -> ScalarField {
        let n = self.dim() as f64;
        let lw = laplacian(&self.omega);
        let g2 = self.domega.norm();
        let data = (0..self.phi.len())
            .map(|i| (2.0 * (n - 1.0) * lw.data()[i] - (n - 1.0) * (n - 2.0) * g2.data()[i].powi(2)) / self.e2w.data()[i])
            .collect();
        self.phi.with_data(data)
    }

    /// Δ_g u = e^{-2ω}(Δu − (n-2)⟨∇ω,∇u⟩).
    pub fn laplace_beltrami(&self, u: &ScalarField) -> Result<ScalarField> {
        let n = self.dim() as f64;
        let lu = laplacian(u);
        let gu = grad(u);
        let dot = self.domega.dot(&gu)?;
        let data = (0..u.len()).map(|i| (lu.data()[i] - (n - 2.0) * dot.data()[i]) / self.e2w.data()[i]).collect();
        Ok(u.with_data(data))
    }

    /// 𝓛_g W for a one-form W (covariant components, trace-free in g).
    pub fn conformal_killing(&self, w: &VectorField) -> Result<SymTensorField> {
        let n = self.dim();
        let jac = jacobian(w);
        let div = divergence(w);
        let wdot = self.domega.dot(w)?;
        let len = w.len();
        let mut comps = vec![vec![0.0; len]; sym_len(n)];
        for i in 0..len {
            let dg = div.data()[i] + (n as f64 - 2.0) * wdot.data()[i];
            for a in 0..n {
                for b in a..n {
                    let mut v =
                        jac[a][b][i] + jac[b][a][i] - 2.0 * (self.domega.comp(b)[i] * w.comp(a)[i] + self.domega.comp(a)[i] * w.comp(b)[i]);
                    if a == b {
                        v += 2.0 * wdot.data()[i] - 2.0 / n as f64 * dg;
                    }
                    comps[sym_index(a, b, n)][i] = v;
                }
            }
            let tr: f64 = (0..n).map(|a| comps[sym_index(a, a, n)][i]).sum::<f64>() / n as f64;
            for a in 0..n {
                comps[sym_index(a, a, n)][i] -= tr;
            }
        }
        SymTensorField::new(w.grid().clone(), comps, true)
    }

    /// (div_g T)_j = e^{-2ω}(∂ᵢTᵢⱼ + (n-2)∂ᵢω Tᵢⱼ − ∂ⱼω tr_ξT) for covariant symmetric T.
    pub fn div_sym(&self, t: &SymTensorField) -> Result<VectorField> {
        let n = self.dim();
        let flat = crate::fieldcalc::div_sym(t);
        let tr = t.trace();
        let tw = t.apply(&self.domega)?;
        let comps = (0..n)
            .map(|j| {
                (0..t.len())
                    .map(|i| {
                        (flat.comp(j)[i] + (n as f64 - 2.0) * tw.comp(j)[i] - self.domega.comp(j)[i] * tr.data()[i]) / self.e2w.data()[i]
                    })
                    .collect()
            })
            .collect();
        VectorField::new(t.grid().clone(), comps)
    }

    /// Δ⃗_g W = −div_g 𝓛_g W (one-form).
    pub fn lame(&self, w: &VectorField) -> Result<VectorField> {
        Ok(self.div_sym(&self.conformal_killing(w)?)?.scale(-1.0))
    }

    /// |T|²_g = e^{-4ω} Σ T_ij².
    pub fn norm_sq_sym(&self, t: &SymTensorField) -> ScalarField {
        let s = t.norm_sq();
        let data = s.data().iter().zip(self.e2w.data()).map(|(v, e)| v / (e * e)).collect();
        s.with_data(data)
    }

    /// g-trace of a covariant tensor.
    pub fn trace(&self, t: &SymTensorField) -> ScalarField {
        let tr = t.trace();
        let data = tr.data().iter().zip(self.e2w.data()).map(|(v, e)| v / e).collect();
        tr.with_data(data)
    }

    /// ⟨a, b⟩_g for one-forms.
    pub fn inner(&self, a: &VectorField, b: &VectorField) -> Result<ScalarField> {
        let d = a.dot(b)?;
        let data = d.data().iter().zip(self.e2w.data()).map(|(v, e)| v / e).collect();
        Ok(d.with_data(data))
    }

    /// Covariant Hessian ∇²u_ij = ∂ᵢⱼu − Γᵏᵢⱼ∂ₖu.
    pub fn hessian(&self, u: &ScalarField) -> Result<SymTensorField> {
        let n = self.dim();
        let h = hessian(u);
        let gu = grad(u);
        let dot = self.domega.dot(&gu)?;
        let mut comps = h.comps().to_vec();
        for a in 0..n {
            for b in a..n {
                let c = &mut comps[sym_index(a, b, n)];
                for (i, v) in c.iter_mut().enumerate() {
                    *v -= self.domega.comp(b)[i] * gu.comp(a)[i] + self.domega.comp(a)[i] * gu.comp(b)[i];
                    if a == b {
                        *v += dot.data()[i];
                    }
                }
            }
        }
        SymTensorField::new(u.grid().clone(), comps, false)
    }

    pub fn domega(&self) -> &VectorField {
        &self.domega
    }
}
