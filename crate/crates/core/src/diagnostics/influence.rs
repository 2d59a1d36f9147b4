//! Radius up to which a field stays within a relative tube of the model
//! bubble B_α centred at a blow-up point.

use serde::Serialize;

use crate::bubbles::BubbleParams;
use crate::error::{Error, Result};
use crate::fieldcalc::{grad, Grid, ScalarField, SobolevExponents};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InfluenceRadius {
    pub r: f64,
    /// 2Rμ with R² = n(n−2)/f(center)
    pub inner: f64,
    /// largest admissible radius
    pub rho: f64,
    /// no violation up to ρ
    pub full: bool,
    pub r_over_mu: f64,
    pub r_over_sqrt_mu: f64,
    pub first_violation: Option<Vec<f64>>,
}

/// Largest r ≤ ρ such that u ≤ (1+ε)B_α and |∇(u − B_α)| ≤ ε|∇B_α| at every
/// node of B(center, r) outside B(center, 2Rμ). `f` is the value of the
/// coefficient f at the centre. Gradients of u are grid gradients.
pub fn influence_radius(u: &ScalarField, center: &[f64], mu: f64, f: f64, eps: f64) -> Result<InfluenceRadius> {
    let n = u.dim();
    SobolevExponents::new(n)?;
    if center.len() != n {
        return Err(Error::ShapeMismatch(format!("center has {} coordinates, expected {n}", center.len())));
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidArgument(format!("ε = {eps} must lie in (0, 1)")));
    }
    if !(mu > 0.0 && f > 0.0) {
        return Err(Error::InvalidArgument(format!("need μ, f > 0, got {mu}, {f}")));
    }
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("min u = {:e}", u.min())));
    }
    let grid = u.grid();
    let rho = match &**grid {
        Grid::Ball(b) => b.radius() - center.iter().map(|c| c * c).sum::<f64>().sqrt(),
        Grid::Torus(t) => 0.5 * t.length(),
    };
    let big_r = ((n * (n - 2)) as f64 / f).sqrt();
    let inner = 2.0 * big_r * mu;
    if rho <= inner {
        return Err(Error::OutsideDomain(format!("ρ = {rho:e} does not exceed 2Rμ = {inner:e}")));
    }
    let b = BubbleParams::standard(n, f).with_mu(mu).with_center(center.to_vec()).b_profile();
    let gu = grad(u);
    let mut shell: Vec<(f64, usize)> = (0..u.len())
        .map(|i| (grid.distance(&grid.point(i), center), i))
        .filter(|&(d, _)| d >= inner && d <= rho * (1.0 + 1e-12))
        .collect();
    shell.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.cmp(&c.1)));

    let mut passed = 0usize;
    let mut violation = None;
    for &(d, i) in &shell {
        let x = grid.point(i);
        let bv = b.eval(&x);
        let gb = b.grad(&x);
        let diff: f64 = (0..n).map(|k| (gu.comp(k)[i] - gb[k]).powi(2)).sum::<f64>().sqrt();
        let gbn: f64 = gb.iter().map(|v| v * v).sum::<f64>().sqrt();
        if u.data()[i] > (1.0 + eps) * bv || diff > eps * gbn {
            violation = Some((d, x));
            break;
        }
        passed += 1;
    }
    let (r, first_violation) = match violation {
        Some((d, x)) => {
            if passed == 0 {
                return Err(Error::Precondition(format!("tube criterion fails at the first node beyond 2Rμ = {inner:e}")));
            }
            (d, Some(x))
        }
        None => (rho, None),
    };
    Ok(InfluenceRadius {
        r,
        inner,
        rho,
        full: first_violation.is_none(),
        r_over_mu: r / mu,
        r_over_sqrt_mu: r / mu.sqrt(),
        first_violation,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::{arc, BallGrid};

    #[test]
    fn exact_bubble_reaches_full_radius() {
        let g = arc(Grid::Ball(BallGrid::graded(3, 1.0, 64, 4.0, &[16], 32).unwrap()));
        let mu = 0.01;
        let u = BubbleParams::standard(3, 3.0).with_mu(mu).b_profile().sample(g);
        let r = influence_radius(&u, &[0.0; 3], mu, 3.0, 0.1).unwrap();
        assert!(r.full && (r.r - 1.0).abs() < 1e-12, "{r:?}");
        assert!(r.r_over_mu >= 10.0);
    }

    #[test]
    fn constructed_violation_is_located() {
        let g = arc(Grid::Ball(BallGrid::uniform_default(3, 1.0, 64).unwrap()));
        let h = g.as_ball().unwrap().radial()[1] - g.as_ball().unwrap().radial()[0];
        let (mu, eps, r0) = (0.1, 0.05, 0.5);
        let b = BubbleParams::standard(3, 3.0).with_mu(mu).b_profile();
        // factor 1 + 2ε·s(r) with s(r₀) = 1/2; the ramp is wide enough that
        // the gradient condition holds up to r₀
        let u = ScalarField::from_fn(g, |x| {
            let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            b.eval(x) * (1.0 + eps * (1.0 + ((r - r0) / 0.6).tanh()))
        });
        let r = influence_radius(&u, &[0.0; 3], mu, 3.0, eps).unwrap();
        assert!(r.r >= r0 && r.r - r0 <= h, "{} vs {r0}, h = {h}", r.r);
    }

    #[test]
    fn immediate_failure_is_an_error() {
        let g = arc(Grid::Ball(BallGrid::uniform_default(3, 1.0, 32).unwrap()));
        let u = BubbleParams::standard(3, 3.0).with_mu(0.1).b_profile().sample(g).map(|v| 2.0 * v);
        assert!(influence_radius(&u, &[0.0; 3], 0.1, 3.0, 0.1).is_err());
    }
}
