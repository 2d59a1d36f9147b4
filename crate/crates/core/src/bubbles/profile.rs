//! Standard bubble U_λ, the concentrated profile B and the distance θ.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fieldcalc::{laplacian, Grid, PointEval, ScalarField, SobolevExponents};

/// Parameters of a bubble centred at `center`: f₀ the coefficient of the
/// critical term at the centre, μ the concentration scale of B, λ the scale
/// of the family U_λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub n: usize,
    pub f0: f64,
    pub mu: f64,
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub lambda: f64,
}

fn one() -> f64 {
    1.0
}

/// Values of the profiles at one point.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BubbleValues {
    pub u: f64,
    pub b: f64,
    pub theta: f64,
    pub grad_b: Vec<f64>,
    /// row-major n×n
    pub hess_b: Vec<f64>,
}

impl BubbleParams {
    /// Normalized bubble (μ = λ = 1) at the origin.
    pub fn standard(n: usize, f0: f64) -> Self {
        BubbleParams { n, f0, mu: 1.0, center: vec![0.0; n], lambda: 1.0 }
    }

    pub fn with_mu(mut self, mu: f64) -> Self {
        self.mu = mu;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_center(mut self, center: Vec<f64>) -> Self {
        self.center = center;
        self
    }

    /// Structural checks, and f₀ ≥ θ, μ ≤ 1.
    pub fn validate(&self, theta: f64) -> Result<()> {
        SobolevExponents::new(self.n)?;
        if self.center.len() != self.n {
            return Err(Error::InvalidArgument(format!("center has {} coordinates, n = {}", self.center.len(), self.n)));
        }
        if !(self.mu > 0.0 && self.mu <= 1.0) {
            return Err(Error::InvalidArgument(format!("μ = {} outside (0, 1]", self.mu)));
        }
        if !(self.lambda > 0.0) {
            return Err(Error::InvalidArgument(format!("λ = {} must be positive", self.lambda)));
        }
        if !(self.f0 >= theta) || !(self.f0 > 0.0) {
            return Err(Error::Precondition(format!("f₀ = {} below θ = {theta}", self.f0)));
        }
        Ok(())
    }

    /// f₀/(n(n−2)).
    pub fn k(&self) -> f64 {
        self.f0 / (self.n * (self.n - 2)) as f64
    }

    /// U_λ(x) = λ^{(n−2)/2}(1 + f₀λ²|x−c|²/(n(n−2)))^{1−n/2}.
    pub fn u_profile(&self) -> RadialPower {
        let half = 0.5 * (self.n as f64 - 2.0);
        RadialPower {
            amplitude: self.lambda.powf(half),
            kappa: 1.0,
            beta: self.k() * self.lambda * self.lambda,
            power: -half,
            center: self.center.clone(),
        }
    }

    /// B(x) = μ^{(n−2)/2}(μ² + f₀|x−c|²/(n(n−2)))^{1−n/2}, i.e. U_{1/μ}.
    pub fn b_profile(&self) -> RadialPower {
        let half = 0.5 * (self.n as f64 - 2.0);
        RadialPower { amplitude: self.mu.powf(half), kappa: self.mu * self.mu, beta: self.k(), power: -half, center: self.center.clone() }
    }

    /// θ(x) = √(μ² + |x−c|²).
    pub fn theta(&self, x: &[f64]) -> f64 {
        (self.mu * self.mu + dist2(x, &self.center)).sqrt()
    }

    /// R₀^{n−2} = (n(n−2)/f₀)^{(n−2)/2}, the coefficient of |x|^{2−n} in the
    /// far field of the rescaled bubble.
    pub fn mass(&self) -> f64 {
        self.k().powf(1.0 - 0.5 * self.n as f64)
    }
}

/// All profile values at `x`.
pub fn bubble_eval(bp: &BubbleParams, x: &[f64]) -> BubbleValues {
    let u = bp.u_profile();
    let b = bp.b_profile();
    BubbleValues { u: u.eval(x), b: b.eval(x), theta: bp.theta(x), grad_b: b.grad(x), hess_b: b.hess(x) }
}

fn dist2(x: &[f64], c: &[f64]) -> f64 {
    x.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum()
}

/// A(κ + β|x−c|²)^p with exact derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct RadialPower {
    pub amplitude: f64,
    pub kappa: f64,
    pub beta: f64,
    pub power: f64,
    pub center: Vec<f64>,
}

impl RadialPower {
    fn base(&self, x: &[f64]) -> f64 {
        self.kappa + self.beta * dist2(x, &self.center)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.amplitude * self.base(x).powf(self.power)
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let t = self.base(x);
        let s = 2.0 * self.power * self.beta * self.amplitude * t.powf(self.power - 1.0);
        x.iter().zip(&self.center).map(|(a, c)| s * (a - c)).collect()
    }

    pub fn hess(&self, x: &[f64]) -> Vec<f64> {
        let n = x.len();
        let (p, b, a) = (self.power, self.beta, self.amplitude);
        let t = self.base(x);
        let s1 = 2.0 * p * b * a * t.powf(p - 1.0);
        let s2 = 4.0 * p * (p - 1.0) * b * b * a * t.powf(p - 2.0);
        let y: Vec<f64> = x.iter().zip(&self.center).map(|(a, c)| a - c).collect();
        let mut h = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                h[i * n + j] = s2 * y[i] * y[j] + if i == j { s1 } else { 0.0 };
            }
        }
        h
    }

    /// Geometer Laplacian −Σ∂ᵢ².
    pub fn laplacian(&self, x: &[f64]) -> f64 {
        let n = x.len();
        let h = self.hess(x);
        -(0..n).map(|i| h[i * n + i]).sum::<f64>()
    }

    pub fn sample(&self, grid: Arc<Grid>) -> ScalarField {
        ScalarField::from_fn(grid, |x| self.eval(x))
    }
}

impl PointEval for RadialPower {
    fn dim(&self) -> usize {
        self.center.len()
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok(self.eval(x))
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.grad(x))
    }
    fn hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.hess(x))
    }
}

/// Discrete ΔU − f₀U^{q−1} for a sampled profile.
pub fn bubble_residual(u: &ScalarField, f0: f64) -> Result<ScalarField> {
    let q = SobolevExponents::new(u.dim())?.q();
    laplacian(u).zip_map(u, |l, v| l - f0 * v.powf(q - 1.0))
}

/// Observed orders log₂(e_k/e_{k+1}) of a sequence of errors at halved steps.
pub fn observed_orders(errors: &[f64]) -> Vec<f64> {
    errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::{arc, fd, BallGrid};

    #[test]
    fn normalizations() {
        for n in 3..=5 {
            let bp = BubbleParams::standard(n, (n * (n - 2)) as f64).with_mu(0.3);
            let v = bubble_eval(&bp, &vec![0.0; n]);
            assert!((v.u - 1.0).abs() < 1e-15);
            assert!((v.theta - 0.3).abs() < 1e-15);
            let expect = 0.3f64.powf(-0.5 * (n as f64 - 2.0));
            assert!((v.b - expect).abs() < 1e-12 * expect);
        }
    }

    #[test]
    fn b_is_u_at_inverse_scale() {
        let bp = BubbleParams::standard(4, 5.0).with_mu(0.2);
        let u = bp.clone().with_lambda(5.0).u_profile();
        let b = bp.b_profile();
        for x in [[0.1, 0.0, 0.3, -0.2], [1.0, 2.0, 0.0, 0.5]] {
            assert!((u.eval(&x) - b.eval(&x)).abs() < 1e-12 * b.eval(&x));
        }
    }

    #[test]
    fn exact_derivatives_match_differences() {
        let bp = BubbleParams::standard(3, 2.0).with_mu(0.5).with_center(vec![0.1, -0.2, 0.3]);
        let b = bp.b_profile();
        let x = [0.4, 0.1, -0.3];
        let g = fd::gradient(|y| b.eval(y), &x, 1e-3, 6).unwrap();
        let h = fd::hessians(|y| vec![b.eval(y)], &x, 1e-3, 6).unwrap();
        for i in 0..3 {
            assert!((g[i] - b.grad(&x)[i]).abs() < 1e-9);
        }
        for (a, e) in h[0].iter().zip(b.hess(&x)) {
            assert!((a - e).abs() < 1e-7);
        }
    }

    #[test]
    fn pointwise_equation_holds() {
        for n in 3..=5 {
            let f0 = 1.7;
            let q = SobolevExponents::new(n).unwrap().q();
            for prof in [BubbleParams::standard(n, f0).with_lambda(2.0).u_profile(), BubbleParams::standard(n, f0).with_mu(0.1).b_profile()] {
                let x: Vec<f64> = (0..n).map(|i| 0.05 * (i + 1) as f64).collect();
                let r = prof.laplacian(&x) - f0 * prof.eval(&x).powf(q - 1.0);
                assert!(r.abs() < 1e-10 * prof.eval(&x).powf(q - 1.0), "{n}: {r}");
            }
        }
    }

    #[test]
    fn validation() {
        assert!(BubbleParams::standard(3, 3.0).validate(0.1).is_ok());
        assert!(BubbleParams::standard(3, 0.05).validate(0.1).is_err());
        assert!(BubbleParams::standard(3, 3.0).with_mu(2.0).validate(0.1).is_err());
        assert!(BubbleParams::standard(6, 3.0).validate(0.1).is_err());
    }

    #[test]
    fn discrete_residual_small_on_ball() {
        let g = arc(Grid::Ball(BallGrid::uniform_default(3, 2.0, 64).unwrap()));
        let bp = BubbleParams::standard(3, 3.0);
        let r = bubble_residual(&bp.u_profile().sample(g), 3.0).unwrap();
        assert!(r.sup() <= 5e-4, "{}", r.sup());
    }
}
