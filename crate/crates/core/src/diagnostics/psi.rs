//! The scale-invariant quantity Ψ = dist(x,S)ⁿ(u^q + |∇u/u|ⁿ + |∇²u/u|^{n/2} + |𝓛W|).

use std::sync::Arc;

use serde::Serialize;

use crate::conformal::{blowup_rescale, normalized_quantity};
use crate::error::{Error, Result};
use crate::fieldcalc::{
    conformal_killing, grad, hessian, same_grid, FieldSampler, PointEval, ScalarField, SobolevExponents, VectorField, VectorFieldSampler,
    VectorPointEval,
};

#[derive(Clone, Debug, Serialize)]
pub struct PsiField {
    #[serde(skip)]
    pub psi: ScalarField,
    pub sup: f64,
    pub argmax: Vec<f64>,
    pub argmax_index: usize,
    /// μ^{−n} = normalized quantity at the argmax
    pub mu: f64,
}

fn check_set(s: &[Vec<f64>], n: usize) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidArgument("Ψ needs a nonempty point set".into()));
    }
    if s.iter().any(|p| p.len() != n) {
        return Err(Error::ShapeMismatch(format!("points of S must have {n} coordinates")));
    }
    Ok(())
}

/// Ψ at every node, with distances in the grid metric (periodic on the torus).
pub fn psi_field(u: &ScalarField, w: &VectorField, s: &[Vec<f64>]) -> Result<PsiField> {
    let n = u.dim();
    let q = SobolevExponents::new(n)?.q();
    same_grid(u.grid(), w.grid())?;
    check_set(s, n)?;
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("min u = {:e}", u.min())));
    }
    let grid = u.grid();
    let gn = grad(u).norm();
    let hn = hessian(u).norm();
    let ln = conformal_killing(w).norm();
    let nf = n as f64;
    let mut nq = vec![0.0; u.len()];
    let mut psi = vec![0.0; u.len()];
    for i in 0..u.len() {
        let uu = u.data()[i];
        nq[i] = uu.powf(q) + (gn.data()[i] / uu).powf(nf) + (hn.data()[i] / uu).powf(0.5 * nf) + ln.data()[i];
        let x = grid.point(i);
        let d = s.iter().map(|p| grid.distance(p, &x)).fold(f64::INFINITY, f64::min);
        psi[i] = d.powi(n as i32) * nq[i];
    }
    let psi = ScalarField::new(grid.clone(), psi)?;
    let k = psi.argmax();
    Ok(PsiField { sup: psi.data()[k], argmax: grid.point(k), argmax_index: k, mu: nq[k].powf(-1.0 / nf), psi })
}

/// Ψ at one point for closed-form or interpolated fields, Euclidean distance.
pub fn psi_at(u: &dyn PointEval, w: &dyn VectorPointEval, s: &[Vec<f64>], x: &[f64]) -> Result<f64> {
    let n = u.dim();
    check_set(s, n)?;
    let d = s.iter().map(|p| p.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()).fold(f64::INFINITY, f64::min);
    Ok(d.powi(n as i32) * normalized_quantity(u, w, x)?)
}

/// Normalized quantity at 0 of the blow-up rescaling about (argmax, μ) from
/// [`psi_field`]; equals 1 up to interpolation.
pub fn rescaled_normalization(u: &ScalarField, w: &VectorField, psi: &PsiField) -> Result<f64> {
    let us: Arc<dyn PointEval> = Arc::new(FieldSampler::new(u));
    let ws: Arc<dyn VectorPointEval> = Arc::new(VectorFieldSampler::new(w));
    let r = blowup_rescale(us, ws, u.grid(), &psi.argmax, psi.mu, 0.0, None)?;
    normalized_quantity(&r.v, &r.z, &vec![0.0; u.dim()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::BubbleParams;
    use crate::fieldcalc::{arc, BallGrid, Grid, TorusGrid};

    #[test]
    fn constant_field_is_distance_power() {
        let g = arc(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        let u = ScalarField::constant(g.clone(), 0.7);
        let p = psi_field(&u, &VectorField::zeros(g), &[vec![0.0; 3]]).unwrap();
        assert_eq!(p.argmax, vec![0.5; 3]);
        let expect = 0.75f64.powf(1.5) * 0.7f64.powi(6);
        assert!((p.sup - expect).abs() <= 1e-12 * expect);
    }

    #[test]
    fn bubble_sup_is_scale_free_and_normalized() {
        let g = arc(Grid::Ball(BallGrid::graded(3, 1.0, 48, 3.0, &[16], 32).unwrap()));
        let w = VectorField::zeros(g.clone());
        let mut sups = Vec::new();
        for mu in [0.1, 0.05, 0.025] {
            let u = BubbleParams::standard(3, 3.0).with_mu(mu).b_profile().sample(g.clone());
            let p = psi_field(&u, &w, &[vec![0.0; 3]]).unwrap();
            let one = rescaled_normalization(&u, &w, &p).unwrap();
            assert!((one - 1.0).abs() <= 1e-3, "μ={mu}: {one}");
            sups.push(p.sup);
        }
        let (lo, hi) = sups.iter().fold((f64::INFINITY, 0.0f64), |(a, b), &s| (a.min(s), b.max(s)));
        assert!(hi / lo < 1.5, "{sups:?}");
    }

    struct Poly;
    impl VectorPointEval for Poly {
        fn dim(&self) -> usize {
            3
        }
        fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
            Ok(vec![x[1] * x[1], x[0] * x[2], x[0].sin()])
        }
        fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
            // J[i*n + j] = ∂_i W_j
            Ok(vec![0.0, x[2], x[0].cos(), 2.0 * x[1], 0.0, 0.0, 0.0, x[0], 0.0])
        }
    }

    #[test]
    fn invariant_under_blowup_rescaling() {
        let c = vec![0.1, -0.2, 0.05];
        let u: Arc<dyn PointEval> = Arc::new(BubbleParams::standard(3, 3.0).with_mu(0.2).with_center(c.clone()).b_profile());
        let w: Arc<dyn VectorPointEval> = Arc::new(Poly);
        let dom = Grid::Torus(TorusGrid::new(3, 8, 100.0).unwrap());
        let s = vec![vec![0.3, 0.3, 0.3], c.clone()];
        for mu in [0.5, 0.1, 0.01] {
            let r = blowup_rescale(u.clone(), w.clone(), &dom, &c, mu, 1.0, None).unwrap();
            let sh: Vec<Vec<f64>> = s.iter().map(|p| p.iter().zip(&c).map(|(a, b)| (a - b) / mu).collect()).collect();
            for xh in [[1.0, 0.5, -0.3], [-2.0, 0.1, 0.7]] {
                let y: Vec<f64> = c.iter().zip(&xh).map(|(a, b)| a + mu * b).collect();
                let a = psi_at(&r.v, &r.z, &sh, &xh).unwrap();
                let b = psi_at(u.as_ref(), w.as_ref(), &s, &y).unwrap();
                assert!((a - b).abs() <= 1e-6 * b.abs().max(1e-300), "μ={mu}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn rejects_empty_set_and_nonpositive() {
        let g = arc(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        let w = VectorField::zeros(g.clone());
        assert!(psi_field(&ScalarField::constant(g.clone(), 1.0), &w, &[]).is_err());
        assert!(matches!(psi_field(&ScalarField::constant(g, -1.0), &w, &[vec![0.0; 3]]), Err(Error::Positivity(_))));
    }
}
