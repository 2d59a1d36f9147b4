//! Scalar, vector and symmetric-tensor fields sampled on a [`Grid`].

use std::sync::Arc;

use super::grid::Grid;
use crate::error::{Error, Result};

/// Critical Sobolev exponent data for dimension n.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SobolevExponents {
    pub n: usize,
}

impl SobolevExponents {
    pub fn new(n: usize) -> Result<Self> {
        super::grid::check_dim(n)?;
        Ok(SobolevExponents { n })
    }

    /// q = 2n/(n-2) as a reduced fraction (numerator, denominator).
    pub fn q_rational(&self) -> (u64, u64) {
        let (a, b) = (2 * self.n as u64, self.n as u64 - 2);
        let g = gcd(a, b);
        (a / g, b / g)
    }

    pub fn q(&self) -> f64 {
        let (a, b) = self.q_rational();
        a as f64 / b as f64
    }

    /// Conformal Laplacian constant c_n = (n-2)/(4(n-1)).
    pub fn c_n(&self) -> f64 {
        (self.n as f64 - 2.0) / (4.0 * (self.n as f64 - 1.0))
    }

    /// Scaling weight (n-2)/2 of the critical equation.
    pub fn half_weight(&self) -> f64 {
        (self.n as f64 - 2.0) / 2.0
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Index of (i, j) in upper-triangle row-major storage.
pub fn sym_index(i: usize, j: usize, n: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    i * n - i * (i + 1) / 2 + j
}

/// Number of independent components of a symmetric n×n tensor.
pub fn sym_len(n: usize) -> usize {
    n * (n + 1) / 2
}

fn check_len(grid: &Grid, len: usize) -> Result<()> {
    if grid.len() != len {
        return Err(Error::ShapeMismatch(format!("field has {len} values, grid has {}", grid.len())));
    }
    Ok(())
}

pub fn same_grid(a: &Arc<Grid>, b: &Arc<Grid>) -> Result<()> {
    if Arc::ptr_eq(a, b) || **a == **b {
        Ok(())
    } else {
        Err(Error::ShapeMismatch("fields live on different grids".into()))
    }
}

/// Checks that all grids agree with the first one.
pub fn same_grid_all(grids: &[&Arc<Grid>]) -> Result<()> {
    for g in grids.iter().skip(1) {
        same_grid(grids[0], g)?;
    }
    Ok(())
}

#[derive(Clone, Debug)]
pub struct ScalarField {
    grid: Arc<Grid>,
    data: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: Arc<Grid>, data: Vec<f64>) -> Result<Self> {
        check_len(&grid, data.len())?;
        Ok(ScalarField { grid, data })
    }

    pub fn from_fn<F: Fn(&[f64]) -> f64>(grid: Arc<Grid>, f: F) -> Self {
        let data = (0..grid.len()).map(|i| f(&grid.point(i))).collect();
        ScalarField { grid, data }
    }

    pub fn constant(grid: Arc<Grid>, c: f64) -> Self {
        let data = vec![c; grid.len()];
        ScalarField { grid, data }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<f64> {
        self.data
    }
    pub fn len(&self) -> usize {
        self.data.len()
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn with_data(&self, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), self.data.len());
        ScalarField { grid: self.grid.clone(), data }
    }

    pub fn map<F: Fn(f64) -> f64>(&self, f: F) -> Self {
        self.with_data(self.data.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_map<F: Fn(f64, f64) -> f64>(&self, o: &ScalarField, f: F) -> Result<Self> {
        same_grid(&self.grid, &o.grid)?;
        Ok(self.with_data(self.data.iter().zip(&o.data).map(|(&a, &b)| f(a, b)).collect()))
    }

    pub fn add(&self, o: &ScalarField) -> Result<Self> {
        self.zip_map(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &ScalarField) -> Result<Self> {
        self.zip_map(o, |a, b| a - b)
    }

    pub fn mul(&self, o: &ScalarField) -> Result<Self> {
        self.zip_map(o, |a, b| a * b)
    }

    pub fn scale(&self, s: f64) -> Self {
        self.map(|v| v * s)
    }

    pub fn sup(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Index of the largest value; ties broken by lowest index.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &v) in self.data.iter().enumerate() {
            if v > self.data[best] {
                best = i;
            }
        }
        best
    }
}

#[derive(Clone, Debug)]
pub struct VectorField {
    grid: Arc<Grid>,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(grid: Arc<Grid>, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim() {
            return Err(Error::ShapeMismatch(format!("{} components for dimension {}", comps.len(), grid.dim())));
        }
        for c in &comps {
            check_len(&grid, c.len())?;
        }
        Ok(VectorField { grid, comps })
    }

    pub fn zeros(grid: Arc<Grid>) -> Self {
        let comps = vec![vec![0.0; grid.len()]; grid.dim()];
        VectorField { grid, comps }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Vec<f64>>(grid: Arc<Grid>, f: F) -> Self {
        let n = grid.dim();
        let mut comps = vec![vec![0.0; grid.len()]; n];
        for i in 0..grid.len() {
            let v = f(&grid.point(i));
            for k in 0..n {
                comps[k][i] = v[k];
            }
        }
        VectorField { grid, comps }
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }
    pub fn comps_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }
    pub fn comp(&self, k: usize) -> &[f64] {
        &self.comps[k]
    }
    pub fn component(&self, k: usize) -> ScalarField {
        ScalarField { grid: self.grid.clone(), data: self.comps[k].clone() }
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn at(&self, i: usize) -> Vec<f64> {
        self.comps.iter().map(|c| c[i]).collect()
    }

    pub fn with_comps(&self, comps: Vec<Vec<f64>>) -> Self {
        VectorField { grid: self.grid.clone(), comps }
    }

    pub fn add(&self, o: &VectorField) -> Result<Self> {
        same_grid(&self.grid, &o.grid)?;
        Ok(self.with_comps(self.comps.iter().zip(&o.comps).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x + y).collect()).collect()))
    }

    pub fn sub(&self, o: &VectorField) -> Result<Self> {
        same_grid(&self.grid, &o.grid)?;
        Ok(self.with_comps(self.comps.iter().zip(&o.comps).map(|(a, b)| a.iter().zip(b).map(|(x, y)| x - y).collect()).collect()))
    }

    pub fn scale(&self, s: f64) -> Self {
        self.with_comps(self.comps.iter().map(|c| c.iter().map(|v| v * s).collect()).collect())
    }

    /// Multiply every component by a scalar field.
    pub fn scale_by(&self, f: &ScalarField) -> Result<Self> {
        same_grid(&self.grid, f.grid())?;
        Ok(self.with_comps(self.comps.iter().map(|c| c.iter().zip(f.data()).map(|(v, s)| v * s).collect()).collect()))
    }

    /// Pointwise Euclidean norm.
    pub fn norm(&self) -> ScalarField {
        let data = (0..self.len()).map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt()).collect();
        ScalarField { grid: self.grid.clone(), data }
    }

    pub fn sup(&self) -> f64 {
        self.norm().sup()
    }

    /// Pointwise inner product.
    pub fn dot(&self, o: &VectorField) -> Result<ScalarField> {
        same_grid(&self.grid, &o.grid)?;
        let data = (0..self.len()).map(|i| (0..self.dim()).map(|k| self.comps[k][i] * o.comps[k][i]).sum()).collect();
        Ok(ScalarField { grid: self.grid.clone(), data })
    }
}

#[derive(Clone, Debug)]
pub struct SymTensorField {
    grid: Arc<Grid>,
    comps: Vec<Vec<f64>>,
    trace_free: bool,
}

impl SymTensorField {
    /// Components in upper-triangle row-major order. With `trace_free`, the
    /// trace must vanish to 1e-10 at every node.
    pub fn new(grid: Arc<Grid>, comps: Vec<Vec<f64>>, trace_free: bool) -> Result<Self> {
        let n = grid.dim();
        if comps.len() != sym_len(n) {
            return Err(Error::ShapeMismatch(format!("{} tensor components, expected {}", comps.len(), sym_len(n))));
        }
        for c in &comps {
            check_len(&grid, c.len())?;
        }
        let t = SymTensorField { grid, comps, trace_free: false };
        if trace_free {
            let worst = t.trace().sup();
            if worst > 1e-10 {
                return Err(Error::NotTraceFree(worst));
            }
        }
        Ok(SymTensorField { trace_free, ..t })
    }

    pub fn zeros(grid: Arc<Grid>, trace_free: bool) -> Self {
        let comps = vec![vec![0.0; grid.len()]; sym_len(grid.dim())];
        SymTensorField { grid, comps, trace_free }
    }

    pub fn from_fn<F: Fn(&[f64]) -> Vec<f64>>(grid: Arc<Grid>, trace_free: bool, f: F) -> Result<Self> {
        let n = grid.dim();
        let mut comps = vec![vec![0.0; grid.len()]; sym_len(n)];
        for i in 0..grid.len() {
            let m = f(&grid.point(i));
            for a in 0..n {
                for b in a..n {
                    comps[sym_index(a, b, n)][i] = m[a * n + b];
                }
            }
        }
        Self::new(grid, comps, trace_free)
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }
    pub fn dim(&self) -> usize {
        self.grid.dim()
    }
    pub fn is_trace_free(&self) -> bool {
        self.trace_free
    }
    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }
    pub fn get(&self, i: usize, j: usize) -> &[f64] {
        &self.comps[sym_index(i, j, self.dim())]
    }
    pub fn len(&self) -> usize {
        self.grid.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }

    /// Full n×n matrix (row-major) at a node.
    pub fn at(&self, idx: usize) -> Vec<f64> {
        let n = self.dim();
        let mut m = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                m[a * n + b] = self.get(a, b)[idx];
            }
        }
        m
    }

    pub fn trace(&self) -> ScalarField {
        let n = self.dim();
        let data = (0..self.len()).map(|i| (0..n).map(|a| self.get(a, a)[i]).sum()).collect();
        ScalarField { grid: self.grid.clone(), data }
    }

    /// Pointwise squared Frobenius norm Σ_ij T_ij².
    pub fn norm_sq(&self) -> ScalarField {
        let n = self.dim();
        let data = (0..self.len())
            .map(|i| {
                let mut s = 0.0;
                for a in 0..n {
                    for b in a..n {
                        let v = self.get(a, b)[i];
                        s += if a == b { v * v } else { 2.0 * v * v };
                    }
                }
                s
            })
            .collect();
        ScalarField { grid: self.grid.clone(), data }
    }

    pub fn norm(&self) -> ScalarField {
        self.norm_sq().map(f64::sqrt)
    }

    pub fn sup(&self) -> f64 {
        self.norm().sup()
    }

    fn combine<F: Fn(f64, f64) -> f64>(&self, o: &SymTensorField, f: F) -> Result<Self> {
        same_grid(&self.grid, &o.grid)?;
        let comps = self.comps.iter().zip(&o.comps).map(|(a, b)| a.iter().zip(b).map(|(x, y)| f(*x, *y)).collect()).collect();
        Ok(SymTensorField { grid: self.grid.clone(), comps, trace_free: self.trace_free && o.trace_free })
    }

    pub fn add(&self, o: &SymTensorField) -> Result<Self> {
        self.combine(o, |a, b| a + b)
    }

    pub fn sub(&self, o: &SymTensorField) -> Result<Self> {
        self.combine(o, |a, b| a - b)
    }

    pub fn scale(&self, s: f64) -> Self {
        SymTensorField {
            grid: self.grid.clone(),
            comps: self.comps.iter().map(|c| c.iter().map(|v| v * s).collect()).collect(),
            trace_free: self.trace_free,
        }
    }

    pub fn scale_by(&self, f: &ScalarField) -> Result<Self> {
        same_grid(&self.grid, f.grid())?;
        Ok(SymTensorField {
            grid: self.grid.clone(),
            comps: self.comps.iter().map(|c| c.iter().zip(f.data()).map(|(v, s)| v * s).collect()).collect(),
            trace_free: self.trace_free,
        })
    }

    /// Contraction T·v at every node.
    pub fn apply(&self, v: &VectorField) -> Result<VectorField> {
        same_grid(&self.grid, v.grid())?;
        let n = self.dim();
        let mut out = vec![vec![0.0; self.len()]; n];
        for a in 0..n {
            for b in 0..n {
                let t = self.get(a, b);
                let vb = v.comp(b);
                for i in 0..self.len() {
                    out[a][i] += t[i] * vb[i];
                }
            }
        }
        VectorField::new(self.grid.clone(), out)
    }
}
