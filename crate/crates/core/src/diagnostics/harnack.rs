//! Harnack-type quotients of a positive field over the annulus
//! B(6s) ∖ B(s/6).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fieldcalc::quadrature::SphereRule;
use crate::fieldcalc::{FieldSampler, Grid, PointEval, ScalarField, SobolevExponents, TorusInterp};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HarnackQuotients {
    pub sup_inf: f64,
    /// s‖∇u‖/sup u
    pub grad: f64,
    /// s²‖∇²u‖/sup u
    pub hess: f64,
    /// C₂ = sup |x − c||∇u|/u over the annulus
    pub c2: f64,
    /// C₃ = e^{42C₂}
    pub c3: f64,
    /// sup/inf ≤ C₃²
    pub consistent: bool,
    pub samples: usize,
}

const RADII: usize = 25;

fn annulus_rule(n: usize) -> SphereRule {
    match n {
        3 => SphereRule::new(3, &[8], 16),
        4 => SphereRule::new(4, &[6, 6], 12),
        _ => SphereRule::new(5, &[4, 4, 4], 8),
    }
}

/// Quotients for a grid field; the annulus must lie in the domain.
pub fn harnack_quotient(u: &ScalarField, center: &[f64], s: f64) -> Result<HarnackQuotients> {
    let outer = 6.0 * s;
    let fits = match &**u.grid() {
        Grid::Ball(b) => center.iter().map(|c| c * c).sum::<f64>().sqrt() + outer <= b.radius() * (1.0 + 1e-12),
        Grid::Torus(t) => outer < 0.5 * t.length(),
    };
    if !fits {
        return Err(Error::OutsideDomain(format!("annulus of outer radius {outer:e} about {center:?}")));
    }
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("min u = {:e}", u.min())));
    }
    harnack_quotient_eval(&FieldSampler::with_mode(u, TorusInterp::Local(6)), center, s)
}

/// Quotients from samples on geometrically spaced spheres between s/6 and
/// 6s (both included). Norms are Frobenius.
pub fn harnack_quotient_eval(u: &dyn PointEval, center: &[f64], s: f64) -> Result<HarnackQuotients> {
    let n = u.dim();
    SobolevExponents::new(n)?;
    if center.len() != n {
        return Err(Error::ShapeMismatch(format!("center has {} coordinates, expected {n}", center.len())));
    }
    if !(s > 0.0) {
        return Err(Error::InvalidArgument(format!("s = {s} must be positive")));
    }
    let dirs = annulus_rule(n).directions();
    let (mut sup, mut inf, mut gmax, mut hmax, mut c2) = (f64::NEG_INFINITY, f64::INFINITY, 0.0f64, 0.0f64, 0.0f64);
    let mut samples = 0;
    for k in 0..RADII {
        let rho = s / 6.0 * 36f64.powf(k as f64 / (RADII - 1) as f64);
        for (d, _) in &dirs {
            let x: Vec<f64> = center.iter().zip(d).map(|(c, e)| c + rho * e).collect();
            let v = u.value(&x)?;
            if v <= 0.0 {
                return Err(Error::Positivity(format!("u({x:?}) = {v:e}")));
            }
            let g = u.gradient(&x)?.iter().map(|t| t * t).sum::<f64>().sqrt();
            let h = u.hessian(&x)?.iter().map(|t| t * t).sum::<f64>().sqrt();
            sup = sup.max(v);
            inf = inf.min(v);
            gmax = gmax.max(g);
            hmax = hmax.max(h);
            c2 = c2.max(rho * g / v);
            samples += 1;
        }
    }
    let sup_inf = sup / inf;
    let c3 = (42.0 * c2).exp();
    Ok(HarnackQuotients { sup_inf, grad: s * gmax / sup, hess: s * s * hmax / sup, c2, c3, consistent: sup_inf <= c3 * c3, samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bubbles::BubbleParams;
    use crate::conformal::blowup_rescale;
    use crate::fieldcalc::sampler::ZeroVector;
    use crate::fieldcalc::{arc, BallGrid, TorusGrid, VectorPointEval};
    use std::sync::Arc;

    #[test]
    fn constant_field() {
        let g = arc(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        let q = harnack_quotient(&ScalarField::constant(g, 2.0), &[0.5; 3], 0.05).unwrap();
        assert!((q.sup_inf - 1.0).abs() < 1e-12 && q.grad < 1e-10 && q.hess < 1e-10);
    }

    #[test]
    fn bubble_annulus_ratio() {
        for n in 3..=5 {
            let b = BubbleParams::standard(n, (n * (n - 2)) as f64).with_mu(1e-4).b_profile();
            let q = harnack_quotient_eval(&b, &vec![0.0; n], 0.05).unwrap();
            let expect = 36f64.powi(n as i32 - 2);
            assert!((q.sup_inf / expect - 1.0).abs() <= 0.1, "n={n}: {}", q.sup_inf);
            assert!(q.consistent);
        }
        let g = arc(Grid::Ball(BallGrid::graded(3, 1.0, 64, 3.0, &[16], 32).unwrap()));
        let u = BubbleParams::standard(3, 3.0).with_mu(1e-3).b_profile().sample(g);
        let q = harnack_quotient(&u, &[0.0; 3], 0.1).unwrap();
        assert!((q.sup_inf / 36.0 - 1.0).abs() <= 0.1, "{}", q.sup_inf);
    }

    #[test]
    fn quotients_are_scale_invariant() {
        let c = vec![0.2, 0.1, -0.1];
        let u: Arc<dyn PointEval> = Arc::new(BubbleParams::standard(3, 6.0).with_mu(0.05).with_center(vec![0.25, 0.1, -0.1]).b_profile());
        let z: Arc<dyn VectorPointEval> = Arc::new(ZeroVector(3));
        let dom = Grid::Torus(TorusGrid::new(3, 8, 100.0).unwrap());
        let s = 0.08;
        let a = harnack_quotient_eval(u.as_ref(), &c, s).unwrap();
        for mu in [0.3, 0.01] {
            let r = blowup_rescale(u.clone(), z.clone(), &dom, &c, mu, 1.0, None).unwrap();
            let b = harnack_quotient_eval(&r.v, &[0.0; 3], s / mu).unwrap();
            for (x, y) in [(a.sup_inf, b.sup_inf), (a.grad, b.grad), (a.hess, b.hess)] {
                assert!((x - y).abs() <= 1e-8 * x.abs(), "μ={mu}: {x} vs {y}");
            }
        }
    }

    #[test]
    fn annulus_must_fit() {
        let g = arc(Grid::Ball(BallGrid::uniform_default(3, 1.0, 16).unwrap()));
        let u = ScalarField::constant(g, 1.0);
        assert!(matches!(harnack_quotient(&u, &[0.0; 3], 0.2), Err(Error::OutsideDomain(_))));
    }
}
