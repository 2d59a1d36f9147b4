//! Radial ground state by ODE integration, an oracle for the closed-form
//! bubble.

use ode_solvers::{Dopri5, System, Vector2};

use crate::error::{Error, Result};
use crate::fieldcalc::SobolevExponents;

type State = Vector2<f64>;

struct Radial {
    n: f64,
    f0: f64,
    q: f64,
}

impl System<f64, State> for Radial {
    fn system(&self, r: f64, y: &State, dy: &mut State) {
        dy[0] = y[1];
        dy[1] = -(self.n - 1.0) / r * y[1] - self.f0 * y[0].max(0.0).powf(self.q - 1.0);
    }

    fn solout(&mut self, _r: f64, y: &State, _dy: &State) -> bool {
        y[0] <= 0.0
    }
}

/// Tolerances of the integration.
#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    pub rtol: f64,
    pub atol: f64,
    /// spacing of the stored samples
    pub dr: f64,
    /// radius where the series start hands over to the integrator
    pub r_start: f64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { rtol: 1e-10, atol: 1e-14, dr: 1e-3, r_start: 1e-3 }
    }
}

/// w and w' on a sample of radii, evaluated by cubic Hermite interpolation.
#[derive(Clone, Debug)]
pub struct RadialProfile {
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub dw: Vec<f64>,
    pub steps: usize,
}

impl RadialProfile {
    pub fn r_max(&self) -> f64 {
        *self.r.last().unwrap_or(&0.0)
    }

    /// (w, w') at radius `r` in [0, r_max].
    pub fn eval(&self, r: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.r_max() * (1.0 + 1e-12)).contains(&r) {
            return Err(Error::OutsideDomain(format!("r = {r} outside [0, {}]", self.r_max())));
        }
        let k = self.r.partition_point(|&x| x <= r).clamp(1, self.r.len() - 1);
        let (r0, r1) = (self.r[k - 1], self.r[k]);
        let h = r1 - r0;
        let t = (r - r0) / h;
        let (w0, w1, d0, d1) = (self.w[k - 1], self.w[k], self.dw[k - 1] * h, self.dw[k] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        let w = (2.0 * t3 - 3.0 * t2 + 1.0) * w0 + (t3 - 2.0 * t2 + t) * d0 + (-2.0 * t3 + 3.0 * t2) * w1 + (t3 - t2) * d1;
        let dw = ((6.0 * t2 - 6.0 * t) * w0 + (3.0 * t2 - 4.0 * t + 1.0) * d0 + (-6.0 * t2 + 6.0 * t) * w1 + (3.0 * t2 - 2.0 * t) * d1) / h;
        Ok((w, dw))
    }
}

/// Integrates w'' + ((n−1)/r)w' = −f₀w^{q−1}, w(0) = λ^{(n−2)/2}, w'(0) = 0
/// on [0, r_max]. Fails with [`Error::BlowDown`] if w reaches zero.
pub fn cgs_radial_oracle(n: usize, f0: f64, lambda: f64, r_max: f64) -> Result<RadialProfile> {
    cgs_radial_oracle_with(n, f0, lambda, r_max, &OracleOptions::default())
}

pub fn cgs_radial_oracle_with(n: usize, f0: f64, lambda: f64, r_max: f64, opts: &OracleOptions) -> Result<RadialProfile> {
    let q = SobolevExponents::new(n)?.q();
    if !(f0 > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("need f₀ > 0 and λ > 0, got {f0}, {lambda}")));
    }
    if !(r_max > opts.r_start) {
        return Err(Error::InvalidArgument(format!("r_max = {r_max} must exceed the start radius {}", opts.r_start)));
    }
    let nf = n as f64;
    let w0 = lambda.powf(0.5 * (nf - 2.0));
    // Taylor start: w = w0 + a2 r² + a4 r⁴
    let a2 = -f0 * w0.powf(q - 1.0) / (2.0 * nf);
    let a4 = -f0 * (q - 1.0) * w0.powf(q - 2.0) * a2 / (4.0 * (nf + 2.0));
    let r0 = opts.r_start;
    let y0 = State::new(w0 + a2 * r0 * r0 + a4 * r0.powi(4), 2.0 * a2 * r0 + 4.0 * a4 * r0.powi(3));
    let sys = Radial { n: nf, f0, q };
    let mut stepper = Dopri5::new(sys, r0, r_max, opts.dr, y0, opts.rtol, opts.atol);
    let stats = stepper.integrate().map_err(|e| Error::InvalidArgument(format!("radial integration failed: {e:?}")))?;
    let mut r = vec![0.0];
    let mut w = vec![w0];
    let mut dw = vec![0.0];
    for (x, y) in stepper.x_out().iter().zip(stepper.y_out()) {
        if *x > *r.last().unwrap_or(&0.0) {
            r.push(*x);
            w.push(y[0]);
            dw.push(y[1]);
        }
    }
    if let Some(k) = w.iter().position(|&v| v <= 0.0) {
        return Err(Error::BlowDown(r[k]));
    }
    let last = *r.last().unwrap_or(&0.0);
    if last < r_max - 0.5 * opts.dr {
        return Err(Error::BlowDown(last));
    }
    Ok(RadialProfile { r, w, dw, steps: stats.accepted_steps as usize })
}

/// sup over [0, r_max] of |w − U_λ| on a uniform check grid.
pub fn oracle_error(n: usize, f0: f64, lambda: f64, r_max: f64, samples: usize) -> Result<f64> {
    let prof = cgs_radial_oracle(n, f0, lambda, r_max)?;
    let u = super::BubbleParams::standard(n, f0).with_lambda(lambda).u_profile();
    let mut err: f64 = 0.0;
    for k in 0..=samples {
        let r = r_max * k as f64 / samples as f64;
        let mut x = vec![0.0; n];
        x[0] = r;
        err = err.max((prof.eval(r)?.0 - u.eval(&x)).abs());
    }
    Ok(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_closed_form() {
        for n in 3..=5 {
            let e = oracle_error(n, (n * (n - 2)) as f64, 1.0, 10.0, 997).unwrap();
            assert!(e <= 1e-6, "n={n}: {e}");
        }
        let e = oracle_error(3, 3.0, 2.0, 10.0, 997).unwrap();
        assert!(e <= 1e-6, "λ=2: {e}");
    }

    #[test]
    fn regular_at_origin() {
        let p = cgs_radial_oracle(4, 8.0, 1.0, 1.0).unwrap();
        assert_eq!(p.eval(0.0).unwrap(), (1.0, 0.0));
        let (_, d) = p.eval(1e-4).unwrap();
        assert!(d.abs() < 1e-3);
    }

    #[test]
    fn stays_positive_far_out() {
        let p = cgs_radial_oracle(3, 3.0, 1.0, 50.0).unwrap();
        assert!(p.w.iter().all(|&w| w > 0.0));
        // far field decays like r^{2−n}
        let (w, _) = p.eval(50.0).unwrap();
        assert!((w * 50.0 - 1.0).abs() < 1e-3);
    }
}
