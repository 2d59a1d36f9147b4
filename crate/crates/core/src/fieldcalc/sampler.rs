//! Evaluation of fields (and closed-form profiles) at arbitrary points.

use std::f64::consts::PI;
use std::sync::Arc;

use super::field::{ScalarField, VectorField};
use super::grid::{Grid, TorusGrid};
use super::ops;
use crate::error::Result;

/// Scalar function with value, gradient and Hessian (row-major n×n).
pub trait PointEval: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<f64>;
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn hessian(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// Vector function with Jacobian `J[i*n + j] = ∂_i W_j`.
pub trait VectorPointEval: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &[f64]) -> Result<Vec<f64>>;
    fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>>;
}

/// 𝓛W from a Jacobian: ∂_iW_j + ∂_jW_i - (2/n) div W δ_ij.
pub fn conformal_killing_from_jacobian(jac: &[f64], n: usize) -> Vec<f64> {
    let div: f64 = (0..n).map(|i| jac[i * n + i]).sum();
    let mut out = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            out[i * n + j] = jac[i * n + j] + jac[j * n + i] - if i == j { 2.0 * div / n as f64 } else { 0.0 };
        }
    }
    out
}

/// Interpolation mode on the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TorusInterp {
    /// trigonometric interpolation (exact for band-limited data)
    Spectral,
    /// periodic Lagrange interpolation with the given number of points per axis
    Local(usize),
}

fn dirichlet_weights(g: &TorusGrid, t: f64) -> Vec<f64> {
    let m = g.m();
    let l = g.length();
    (0..m)
        .map(|j| {
            let d = t - j as f64 * l / m as f64;
            let s = (PI * d / l).sin();
            if s.abs() < 1e-14 {
                // d is a multiple of L: periodic image of the node
                1.0
            } else {
                (m as f64 * PI * d / l).sin() / (m as f64 * (PI * d / l).tan())
            }
        })
        .collect()
}

fn local_weights(g: &TorusGrid, t: f64, s: usize) -> Vec<(usize, f64)> {
    let h = g.spacing();
    let m = g.m() as isize;
    let p = (t / h).floor() as isize;
    let st = p - (s as isize - 1) / 2;
    let xs: Vec<f64> = (0..s as isize).map(|k| (st + k) as f64 * h).collect();
    let w = super::quadrature::fornberg(t, &xs, 0)[0].clone();
    (0..s).map(|k| ((st + k as isize).rem_euclid(m) as usize, w[k])).collect()
}

/// Interpolation weights (node, weight) for a point on the torus.
pub fn torus_weights(g: &TorusGrid, x: &[f64], mode: TorusInterp) -> Vec<(usize, f64)> {
    let n = g.dim();
    let per_axis: Vec<Vec<(usize, f64)>> = match mode {
        TorusInterp::Spectral => {
            x.iter().map(|&t| dirichlet_weights(g, t).into_iter().enumerate().filter(|(_, w)| *w != 0.0).collect()).collect()
        }
        TorusInterp::Local(s) => x.iter().map(|&t| local_weights(g, t, s)).collect(),
    };
    let mut out = vec![(0usize, 1.0f64)];
    for a in 0..n {
        let mut next = Vec::with_capacity(out.len() * per_axis[a].len());
        for &(idx, w) in &out {
            for &(j, wa) in &per_axis[a] {
                next.push((idx * g.m() + j, w * wa));
            }
        }
        out = next;
    }
    out
}

/// Interpolation weights for a point on any grid.
pub fn grid_weights(grid: &Grid, x: &[f64], mode: TorusInterp) -> Result<Vec<(usize, f64)>> {
    match grid {
        Grid::Torus(t) => Ok(torus_weights(t, x, mode)),
        Grid::Ball(b) => b.interp_weights(x),
    }
}

fn contract(w: &[(usize, f64)], data: &[f64]) -> f64 {
    w.iter().map(|(i, c)| c * data[*i]).sum()
}

/// Interpolating evaluator for a grid scalar field; derivatives are taken
/// on the grid (spectral or finite differences) and then interpolated.
pub struct FieldSampler {
    grid: Arc<Grid>,
    value: Vec<f64>,
    grad: Vec<Vec<f64>>,
    hess: Vec<Vec<f64>>,
    mode: TorusInterp,
}

impl FieldSampler {
    pub fn new(f: &ScalarField) -> Self {
        Self::with_mode(f, TorusInterp::Spectral)
    }

    pub fn with_mode(f: &ScalarField, mode: TorusInterp) -> Self {
        let n = f.dim();
        let grad = ops::grad(f).comps().to_vec();
        let h = ops::hessian(f);
        let mut hess = Vec::with_capacity(n * n);
        for a in 0..n {
            for b in 0..n {
                hess.push(h.get(a, b).to_vec());
            }
        }
        FieldSampler { grid: f.grid().clone(), value: f.data().to_vec(), grad, hess, mode }
    }

    /// Values only (no derivative precomputation).
    pub fn values_only(f: &ScalarField, mode: TorusInterp) -> Self {
        FieldSampler { grid: f.grid().clone(), value: f.data().to_vec(), grad: Vec::new(), hess: Vec::new(), mode }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
}

impl PointEval for FieldSampler {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn value(&self, x: &[f64]) -> Result<f64> {
        let w = grid_weights(&self.grid, x, self.mode)?;
        Ok(contract(&w, &self.value))
    }

    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = grid_weights(&self.grid, x, self.mode)?;
        Ok(self.grad.iter().map(|g| contract(&w, g)).collect())
    }

    fn hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = grid_weights(&self.grid, x, self.mode)?;
        Ok(self.hess.iter().map(|g| contract(&w, g)).collect())
    }
}

/// Interpolating evaluator for a grid vector field.
pub struct VectorFieldSampler {
    grid: Arc<Grid>,
    value: Vec<Vec<f64>>,
    jac: Vec<Vec<f64>>,
    mode: TorusInterp,
}

impl VectorFieldSampler {
    pub fn new(w: &VectorField) -> Self {
        Self::with_mode(w, TorusInterp::Spectral)
    }

    pub fn with_mode(w: &VectorField, mode: TorusInterp) -> Self {
        let jac = ops::jacobian(w);
        let n = w.dim();
        let mut flat = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                flat.push(jac[i][j].clone());
            }
        }
        VectorFieldSampler { grid: w.grid().clone(), value: w.comps().to_vec(), jac: flat, mode }
    }
}

impl VectorPointEval for VectorFieldSampler {
    fn dim(&self) -> usize {
        self.grid.dim()
    }

    fn value(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = grid_weights(&self.grid, x, self.mode)?;
        Ok(self.value.iter().map(|c| contract(&w, c)).collect())
    }

    fn jacobian(&self, x: &[f64]) -> Result<Vec<f64>> {
        let w = grid_weights(&self.grid, x, self.mode)?;
        Ok(self.jac.iter().map(|c| contract(&w, c)).collect())
    }
}

type ScalarFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type VecFn = Box<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

/// Closed-form scalar profile given by closures.
pub struct ClosureEval {
    n: usize,
    value: ScalarFn,
    grad: VecFn,
    hess: VecFn,
}

impl ClosureEval {
    pub fn new<V, G, H>(n: usize, value: V, grad: G, hess: H) -> Self
    where
        V: Fn(&[f64]) -> f64 + Send + Sync + 'static,
        G: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
        H: Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static,
    {
        ClosureEval { n, value: Box::new(value), grad: Box::new(grad), hess: Box::new(hess) }
    }
}

impl PointEval for ClosureEval {
    fn dim(&self) -> usize {
        self.n
    }
    fn value(&self, x: &[f64]) -> Result<f64> {
        Ok((self.value)(x))
    }
    fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.grad)(x))
    }
    fn hessian(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok((self.hess)(x))
    }
}

/// Identically zero vector field.
pub struct ZeroVector(pub usize);

impl VectorPointEval for ZeroVector {
    fn dim(&self) -> usize {
        self.0
    }
    fn value(&self, _: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.0])
    }
    fn jacobian(&self, _: &[f64]) -> Result<Vec<f64>> {
        Ok(vec![0.0; self.0 * self.0])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::grid::TorusGrid;

    #[test]
    fn spectral_interpolation_is_exact_for_trig_polynomials() {
        let g = Arc::new(Grid::Torus(TorusGrid::unit(3, 16).unwrap()));
        let tp = 2.0 * PI;
        let f = ScalarField::from_fn(g, |x| (tp * x[0]).sin() * (2.0 * tp * x[1]).cos() + (3.0 * tp * x[2]).cos());
        let s = FieldSampler::new(&f);
        let x = [0.123, 0.77, 0.4];
        let exact = (tp * x[0]).sin() * (2.0 * tp * x[1]).cos() + (3.0 * tp * x[2]).cos();
        assert!((s.value(&x).unwrap() - exact).abs() < 1e-12);
        let gx = tp * (tp * x[0]).cos() * (2.0 * tp * x[1]).cos();
        assert!((s.gradient(&x).unwrap()[0] - gx).abs() < 1e-10);
        let local = FieldSampler::values_only(&f, TorusInterp::Local(6));
        let err = (local.value(&x).unwrap() - exact).abs();
        assert!(err > 1e-12 && err < 5e-2, "{err}");
    }
}
