//! Discretizations: the flat torus T^n = [0, L)^n with FFT machinery, and
//! polar grids of a Euclidean ball with high-order finite differences.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use super::quadrature::{angles_to_unit, cartesian_to_spherical, fornberg, gauss_legendre, SphereRule};
use crate::error::{Error, Result};

pub(crate) fn check_dim(n: usize) -> Result<()> {
    if (3..=5).contains(&n) {
        Ok(())
    } else {
        Err(Error::Dimension(n))
    }
}

#[derive(Clone)]
struct FftPair {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

/// Uniform periodic grid with m points per axis.
#[derive(Clone)]
pub struct TorusGrid {
    n: usize,
    m: usize,
    length: f64,
    fft: FftPair,
}

impl fmt::Debug for TorusGrid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TorusGrid").field("n", &self.n).field("m", &self.m).field("length", &self.length).finish()
    }
}

impl PartialEq for TorusGrid {
    fn eq(&self, o: &Self) -> bool {
        self.n == o.n && self.m == o.m && self.length == o.length
    }
}

impl TorusGrid {
    pub fn new(n: usize, m: usize, length: f64) -> Result<Self> {
        check_dim(n)?;
        if m < 8 || m % 2 != 0 {
            return Err(Error::InvalidGrid(format!("torus needs even m >= 8, got {m}")));
        }
        if !(length > 0.0) {
            return Err(Error::InvalidGrid("torus length must be positive".into()));
        }
        let mut planner = FftPlanner::new();
        let fft = FftPair { fwd: planner.plan_fft_forward(m), inv: planner.plan_fft_inverse(m) };
        Ok(TorusGrid { n, m, length, fft })
    }

    /// Unit torus (L = 1).
    pub fn unit(n: usize, m: usize) -> Result<Self> {
        Self::new(n, m, 1.0)
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn length(&self) -> f64 {
        self.length
    }
    pub fn spacing(&self) -> f64 {
        self.length / self.m as f64
    }
    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.n as i32)
    }

    pub fn multi_index(&self, mut idx: usize) -> Vec<usize> {
        let mut out = vec![0; self.n];
        for a in (0..self.n).rev() {
            out[a] = idx % self.m;
            idx /= self.m;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi.iter().fold(0, |acc, &i| acc * self.m + i)
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        let h = self.spacing();
        self.multi_index(idx).into_iter().map(|i| i as f64 * h).collect()
    }

    /// Signed wavenumber for FFT index j; the Nyquist index maps to -m/2.
    pub fn wavenumber(&self, j: usize) -> i64 {
        let m = self.m as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    pub fn is_nyquist(&self, j: usize) -> bool {
        j == self.m / 2
    }

    /// Periodic minimum-image displacement y - x.
    pub fn displacement(&self, x: &[f64], y: &[f64]) -> Vec<f64> {
        let l = self.length;
        x.iter()
            .zip(y)
            .map(|(a, b)| {
                let d = b - a;
                d - l * (d / l).round()
            })
            .collect()
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.displacement(x, y).iter().map(|d| d * d).sum::<f64>().sqrt()
    }

    /// In-place n-dimensional FFT (unnormalized in both directions).
    pub fn fftn(&self, data: &mut [Complex64], inverse: bool) {
        let m = self.m;
        let plan = if inverse { &self.fft.inv } else { &self.fft.fwd };
        let mut line = vec![Complex64::new(0.0, 0.0); m];
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        let total = data.len();
        for a in 0..self.n {
            let stride = m.pow((self.n - 1 - a) as u32);
            let block = stride * m;
            for start in (0..total).step_by(block) {
                for off in 0..stride {
                    let base = start + off;
                    for k in 0..m {
                        line[k] = data[base + k * stride];
                    }
                    plan.process_with_scratch(&mut line, &mut scratch);
                    for k in 0..m {
                        data[base + k * stride] = line[k];
                    }
                }
            }
        }
    }

    pub fn forward(&self, f: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fftn(&mut c, false);
        c
    }

    /// Inverse transform with normalization, real part.
    pub fn inverse_real(&self, mut c: Vec<Complex64>) -> Vec<f64> {
        self.fftn(&mut c, true);
        let s = 1.0 / self.len() as f64;
        c.into_iter().map(|z| z.re * s).collect()
    }

    /// Multiply a spectrum by a symbol of the (signed) wavenumber multi-index
    /// and transform back.
    pub fn apply_symbol<F>(&self, spec: &[Complex64], symbol: F) -> Vec<f64>
    where
        F: Fn(&[i64], &[bool]) -> Complex64,
    {
        let mut k = vec![0i64; self.n];
        let mut nyq = vec![false; self.n];
        let out: Vec<Complex64> = spec
            .iter()
            .enumerate()
            .map(|(idx, &z)| {
                let mi = self.multi_index(idx);
                for a in 0..self.n {
                    k[a] = self.wavenumber(mi[a]);
                    nyq[a] = self.is_nyquist(mi[a]);
                }
                z * symbol(&k, &nyq)
            })
            .collect();
        self.inverse_real(out)
    }

    /// Angular wavenumber factor 2π/L.
    pub fn kscale(&self) -> f64 {
        2.0 * PI / self.length
    }
}

/// Polar grid of the ball B₀(R): radial nodes times a hypersphere product rule.
#[derive(Clone, Debug)]
pub struct BallGrid {
    n: usize,
    radius: f64,
    radial: Vec<f64>,
    rule: SphereRule,
    stencil: usize,
    interp: usize,
    points: Vec<f64>,
    /// per node, per axis: ∂x/∂q_a / h_a² (length n each)
    grad_basis: Vec<f64>,
    /// per node, per axis: coefficients of ∂_a² and ∂_a in the polar Laplacian
    lap_coef: Vec<f64>,
    tables: Vec<StencilTable>,
}

#[derive(Clone, Debug)]
struct StencilTable {
    idx: Vec<u32>,
    w: Vec<f64>,
    w2: Vec<f64>,
}

/// Serializable description of a ball grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BallSpec {
    pub n: usize,
    pub radius: f64,
    pub radial: Vec<f64>,
    pub n_theta: Vec<usize>,
    pub n_phi: usize,
    pub stencil: usize,
    pub interp: usize,
}

impl PartialEq for BallGrid {
    fn eq(&self, o: &Self) -> bool {
        self.spec() == o.spec()
    }
}

/// Default angular resolution for a dimension ("medium").
pub fn default_angular(n: usize) -> (Vec<usize>, usize) {
    match n {
        3 => (vec![12], 24),
        4 => (vec![8, 8], 16),
        _ => (vec![6, 6, 6], 12),
    }
}

fn default_interp(n: usize) -> usize {
    match n {
        3 => 6,
        4 => 5,
        _ => 4,
    }
}

impl BallGrid {
    pub fn new(n: usize, radius: f64, radial: Vec<f64>, n_theta: &[usize], n_phi: usize, stencil: usize) -> Result<Self> {
        check_dim(n)?;
        if !(radius > 0.0) {
            return Err(Error::InvalidGrid("ball radius must be positive".into()));
        }
        if radial.len() < 4 || radial[0] <= 0.0 || radial.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidGrid("radial nodes must be positive and strictly increasing".into()));
        }
        if *radial.last().unwrap() > radius * (1.0 + 1e-12) {
            return Err(Error::InvalidGrid("radial nodes exceed the ball radius".into()));
        }
        if n_theta.len() != n - 2 || n_theta.iter().any(|&t| t < 2) || n_phi < 4 || n_phi % 2 != 0 {
            return Err(Error::InvalidGrid("angular counts: n-2 polar levels >= 2, even n_phi >= 4".into()));
        }
        if stencil < 3 || stencil % 2 == 0 || stencil > radial.len() {
            return Err(Error::InvalidGrid(format!("stencil size {stencil} must be odd, >= 3 and <= radial count")));
        }
        let rule = SphereRule::new(n, n_theta, n_phi);
        let total: f64 = rule.directions().iter().map(|d| d.1).sum();
        let omega = super::quadrature::sphere_area(n - 1);
        if (total - omega).abs() > 1e-12 {
            return Err(Error::InvalidGrid(format!("angular weights sum {total} != {omega}")));
        }
        let mut g = BallGrid {
            n,
            radius,
            radial,
            rule,
            stencil,
            interp: default_interp(n),
            points: Vec::new(),
            grad_basis: Vec::new(),
            lap_coef: Vec::new(),
            tables: Vec::new(),
        };
        g.build();
        Ok(g)
    }

    /// Radial nodes r_i = (i + 1/2) h with the last node on the sphere |x| = R.
    pub fn uniform(n: usize, radius: f64, nr: usize, n_theta: &[usize], n_phi: usize) -> Result<Self> {
        let h = radius / (nr as f64 - 0.5);
        let radial = (0..nr).map(|i| (i as f64 + 0.5) * h).collect();
        Self::new(n, radius, radial, n_theta, n_phi, 7)
    }

    /// Uniform radial spacing with the default angular resolution.
    pub fn uniform_default(n: usize, radius: f64, nr: usize) -> Result<Self> {
        let (t, p) = default_angular(n);
        Self::uniform(n, radius, nr, &t, p)
    }

    /// Radial nodes r = R sinh(β s)/sinh(β) on a uniform s-grid, clustering
    /// points near the origin (for concentrated profiles).
    pub fn graded(n: usize, radius: f64, nr: usize, beta: f64, n_theta: &[usize], n_phi: usize) -> Result<Self> {
        let ds = 1.0 / (nr as f64 - 0.5);
        let radial = (0..nr)
            .map(|i| {
                let s = (i as f64 + 0.5) * ds;
                radius * (beta * s).sinh() / beta.sinh()
            })
            .collect();
        Self::new(n, radius, radial, n_theta, n_phi, 7)
    }

    pub fn from_spec(spec: &BallSpec) -> Result<Self> {
        let mut g = Self::new(spec.n, spec.radius, spec.radial.clone(), &spec.n_theta, spec.n_phi, spec.stencil)?;
        g.interp = spec.interp;
        Ok(g)
    }

    pub fn spec(&self) -> BallSpec {
        BallSpec {
            n: self.n,
            radius: self.radius,
            radial: self.radial.clone(),
            n_theta: self.rule.thetas.iter().map(|t| t.len()).collect(),
            n_phi: self.rule.n_phi,
            stencil: self.stencil,
            interp: self.interp,
        }
    }

    /// Same grid with all lengths multiplied by `s`.
    pub fn scaled(&self, s: f64) -> Result<Self> {
        let mut spec = self.spec();
        spec.radius *= s;
        spec.radial.iter_mut().for_each(|r| *r *= s);
        Self::from_spec(&spec)
    }

    pub fn with_interp(mut self, points: usize) -> Self {
        self.interp = points.max(2);
        self
    }

    pub fn dim(&self) -> usize {
        self.n
    }
    pub fn radius(&self) -> f64 {
        self.radius
    }
    pub fn radial(&self) -> &[f64] {
        &self.radial
    }
    pub fn rule(&self) -> &SphereRule {
        &self.rule
    }
    pub fn stencil(&self) -> usize {
        self.stencil
    }
    pub fn n_ang(&self) -> usize {
        self.rule.len()
    }
    pub fn len(&self) -> usize {
        self.radial.len() * self.rule.len()
    }
    pub fn is_empty(&self) -> bool {
        false
    }
    pub fn node(&self, ir: usize, ia: usize) -> usize {
        ir * self.rule.len() + ia
    }
    pub fn point(&self, idx: usize) -> &[f64] {
        &self.points[idx * self.n..(idx + 1) * self.n]
    }

    /// Virtual coordinate along an axis (0 = r, 1..n-2 = θ_k, n-1 = φ).
    fn coord(&self, axis: usize, v: isize) -> f64 {
        if axis == 0 {
            if v >= 0 {
                self.radial[v as usize]
            } else {
                -self.radial[(-1 - v) as usize]
            }
        } else if axis < self.n - 1 {
            let th = &self.rule.thetas[axis - 1];
            let m = th.len() as isize;
            let w = v.rem_euclid(2 * m);
            let turns = v.div_euclid(2 * m) as f64;
            let c = if w < m { th[w as usize] } else { 2.0 * PI - th[(2 * m - 1 - w) as usize] };
            c + 2.0 * PI * turns
        } else {
            2.0 * PI * v as f64 / self.rule.n_phi as f64
        }
    }

    fn axis_len(&self, axis: usize) -> usize {
        if axis == 0 {
            self.radial.len()
        } else if axis < self.n - 1 {
            self.rule.thetas[axis - 1].len()
        } else {
            self.rule.n_phi
        }
    }

    /// Map virtual indices (r, θ..., φ) to a grid node.
    fn resolve(&self, v: &mut [isize]) -> usize {
        let n = self.n;
        let antipode_from = |v: &mut [isize], from: usize, g: &BallGrid| {
            for a in from..n {
                if a < n - 1 {
                    let m = g.rule.thetas[a - 1].len() as isize;
                    v[a] = m - 1 - v[a];
                } else {
                    v[a] += g.rule.n_phi as isize / 2;
                }
            }
        };
        if v[0] < 0 {
            v[0] = -1 - v[0];
            antipode_from(v, 1, self);
        }
        for a in 1..n - 1 {
            let m = self.rule.thetas[a - 1].len() as isize;
            let mut w = v[a].rem_euclid(2 * m);
            if w >= m {
                w = 2 * m - 1 - w;
                antipode_from(v, a + 1, self);
            }
            v[a] = w;
        }
        v[n - 1] = v[n - 1].rem_euclid(self.rule.n_phi as isize);
        let ir = v[0] as usize;
        debug_assert!(ir < self.radial.len());
        let mut ia = 0usize;
        for a in 1..n {
            ia = ia * self.axis_len(a) + v[a] as usize;
        }
        self.node(ir, ia)
    }

    /// Window of `s` virtual indices around position `p` (or around target
    /// coordinate) on an axis, clipped at the outer radius.
    fn window(&self, axis: usize, start: isize, s: usize) -> isize {
        if axis == 0 {
            let top = self.radial.len() as isize - 1;
            let mut st = start;
            if st + s as isize - 1 > top {
                st = top - s as isize + 1;
            }
            st
        } else {
            start
        }
    }

    fn build(&mut self) {
        let n = self.n;
        let nang = self.rule.len();
        let total = self.len();
        let mut points = vec![0.0; total * n];
        let mut basis = vec![0.0; total * n * n];
        let mut lap = vec![0.0; total * n * 2];
        for ir in 0..self.radial.len() {
            let r = self.radial[ir];
            for ia in 0..nang {
                let multi = self.rule.unflatten(ia);
                let ang = self.rule.angles(&multi);
                let idx = self.node(ir, ia);
                let u = angles_to_unit(&ang);
                for k in 0..n {
                    points[idx * n + k] = r * u[k];
                }
                let cols = coordinate_columns(r, &ang);
                for a in 0..n {
                    let h2: f64 = cols[a].iter().map(|c| c * c).sum();
                    for k in 0..n {
                        basis[(idx * n + a) * n + k] = if h2 > 0.0 { cols[a][k] / h2 } else { 0.0 };
                    }
                    // Δ = ∂_r² + (n−1)/r ∂_r + Σ_a h_a^{-2}(∂_a² + (n−1−a) cot θ_a ∂_a)
                    let (c2, c1) = if a == 0 {
                        (1.0, (n as f64 - 1.0) / r)
                    } else if a < n - 1 {
                        (1.0 / h2, (n - 1 - a) as f64 / ang[a - 1].tan() / h2)
                    } else {
                        (1.0 / h2, 0.0)
                    };
                    lap[(idx * n + a) * 2] = c2;
                    lap[(idx * n + a) * 2 + 1] = c1;
                }
            }
        }
        self.points = points;
        self.grad_basis = basis;
        self.lap_coef = lap;
        let s = self.stencil;
        let half = (s / 2) as isize;
        let mut tables = Vec::with_capacity(n);
        for axis in 0..n {
            let mut idx = vec![0u32; total * s];
            let mut w = vec![0.0; total * s];
            let mut w2 = vec![0.0; total * s];
            let alen = self.axis_len(axis);
            // weights depend only on position along the axis
            let mut wcache: Vec<(isize, Vec<f64>, Vec<f64>)> = Vec::with_capacity(alen);
            for p in 0..alen as isize {
                let st = self.window(axis, p - half, s);
                let xs: Vec<f64> = (0..s as isize).map(|k| self.coord(axis, st + k)).collect();
                let c = fornberg(self.coord(axis, p), &xs, 2);
                wcache.push((st, c[1].clone(), c[2].clone()));
            }
            for node in 0..total {
                let ir = node / nang;
                let multi = self.rule.unflatten(node % nang);
                let mut base: Vec<isize> = std::iter::once(ir as isize).chain(multi.iter().map(|&x| x as isize)).collect();
                let p = base[axis] as usize;
                let (st, ref ww, ref ww2) = wcache[p];
                for k in 0..s {
                    base[axis] = st + k as isize;
                    let mut v = base.clone();
                    idx[node * s + k] = self.resolve(&mut v) as u32;
                    w[node * s + k] = ww[k];
                    w2[node * s + k] = ww2[k];
                }
            }
            tables.push(StencilTable { idx, w, w2 });
        }
        self.tables = tables;
    }

    /// Derivative along a coordinate axis at every node.
    pub fn axis_derivative(&self, axis: usize, f: &[f64]) -> Vec<f64> {
        let s = self.stencil;
        let t = &self.tables[axis];
        (0..self.len())
            .map(|node| {
                let mut acc = 0.0;
                for k in 0..s {
                    acc += t.w[node * s + k] * f[t.idx[node * s + k] as usize];
                }
                acc
            })
            .collect()
    }

    /// Geometer's Laplacian −Δ in polar form; radial data see no angular
    /// differencing error.
    pub fn laplacian(&self, f: &[f64]) -> Vec<f64> {
        let n = self.n;
        let s = self.stencil;
        let mut out = vec![0.0; self.len()];
        for (a, t) in self.tables.iter().enumerate() {
            for (node, o) in out.iter_mut().enumerate() {
                let (mut d1, mut d2) = (0.0, 0.0);
                for k in 0..s {
                    let v = f[t.idx[node * s + k] as usize];
                    d1 += t.w[node * s + k] * v;
                    d2 += t.w2[node * s + k] * v;
                }
                let c = &self.lap_coef[(node * n + a) * 2..(node * n + a) * 2 + 2];
                *o -= c[0] * d2 + c[1] * d1;
            }
        }
        out
    }

    /// Cartesian gradient components.
    pub fn gradient(&self, f: &[f64]) -> Vec<Vec<f64>> {
        let n = self.n;
        let d: Vec<Vec<f64>> = (0..n).map(|a| self.axis_derivative(a, f)).collect();
        let mut g = vec![vec![0.0; self.len()]; n];
        for node in 0..self.len() {
            for a in 0..n {
                let da = d[a][node];
                let b = &self.grad_basis[(node * n + a) * n..(node * n + a + 1) * n];
                for k in 0..n {
                    g[k][node] += da * b[k];
                }
            }
        }
        g
    }

    fn locate(&self, axis: usize, t: f64) -> isize {
        // largest virtual index p with coord(p) <= t (within one period / r-range)
        if axis == 0 {
            if t >= 0.0 {
                let p = self.radial.partition_point(|&r| r <= t) as isize - 1;
                if p < 0 {
                    -1
                } else {
                    p
                }
            } else {
                let q = self.radial.partition_point(|&r| r < -t) as isize;
                -1 - q
            }
        } else if axis < self.n - 1 {
            let th = &self.rule.thetas[axis - 1];
            th.partition_point(|&x| x <= t) as isize - 1
        } else {
            (t / (2.0 * PI / self.rule.n_phi as f64)).floor() as isize
        }
    }

    /// Lagrange stencil (virtual start, weights) for a coordinate value.
    fn interp_axis(&self, axis: usize, t: f64, s: usize) -> (isize, Vec<f64>) {
        let p = self.locate(axis, t);
        let st = self.window(axis, p - (s as isize - 1) / 2, s);
        let xs: Vec<f64> = (0..s as isize).map(|k| self.coord(axis, st + k)).collect();
        (st, fornberg(t, &xs, 0)[0].clone())
    }

    /// Interpolation weights for an arbitrary point: (node, weight) pairs.
    pub fn interp_weights(&self, x: &[f64]) -> Result<Vec<(usize, f64)>> {
        let (r, ang) = cartesian_to_spherical(x);
        if r > self.radius * (1.0 + 1e-10) {
            return Err(Error::OutsideDomain(format!("|x| = {r} > R = {}", self.radius)));
        }
        let n = self.n;
        let s = self.interp.min(self.radial.len());
        let mut coords = vec![r];
        coords.extend_from_slice(&ang);
        let stencils: Vec<(isize, Vec<f64>)> = (0..n).map(|a| self.interp_axis(a, coords[a], s)).collect();
        let mut out = Vec::with_capacity(s.pow(n as u32));
        let mut counter = vec![0usize; n];
        let mut v = vec![0isize; n];
        loop {
            let mut w = 1.0;
            for a in 0..n {
                w *= stencils[a].1[counter[a]];
                v[a] = stencils[a].0 + counter[a] as isize;
            }
            if w != 0.0 {
                out.push((self.resolve(&mut v), w));
            }
            let mut a = n;
            loop {
                if a == 0 {
                    return Ok(out);
                }
                a -= 1;
                counter[a] += 1;
                if counter[a] < s {
                    break;
                }
                counter[a] = 0;
            }
        }
    }

    /// Radial interpolation along grid ray `ia` to radius `rho` (may be 0).
    pub fn ray_weights(&self, ia: usize, rho: f64) -> Vec<(usize, f64)> {
        let s = self.interp.max(6).min(self.radial.len());
        let (st, w) = self.interp_axis(0, rho, s);
        let multi = self.rule.unflatten(ia);
        (0..s)
            .map(|k| {
                let mut v: Vec<isize> = std::iter::once(st + k as isize).chain(multi.iter().map(|&x| x as isize)).collect();
                (self.resolve(&mut v), w[k])
            })
            .collect()
    }

    /// ∫_{|x| = rho} f dσ / rho^{n-1}, i.e. the angular integral at radius
    /// rho, by radial interpolation along each grid ray.
    pub fn sphere_integral(&self, f: &[f64], rho: f64) -> f64 {
        let s = self.interp.max(6).min(self.radial.len());
        let (st, w) = self.interp_axis(0, rho, s);
        let nang = self.rule.len();
        let mut acc = 0.0;
        for ia in 0..nang {
            let multi = self.rule.unflatten(ia);
            let anti = self.rule.flatten(&self.rule.antipode(&multi));
            let mut v = 0.0;
            for k in 0..s {
                let vi = st + k as isize;
                let node = if vi >= 0 { self.node(vi as usize, ia) } else { self.node((-1 - vi) as usize, anti) };
                v += w[k] * f[node];
            }
            acc += self.rule.weight(&multi) * v;
        }
        acc
    }

    /// Radial breakpoints for composite quadrature on [0, rho].
    pub fn radial_panels(&self, rho: f64) -> Vec<f64> {
        let mut b = vec![0.0];
        for &r in &self.radial {
            if r < rho * (1.0 - 1e-12) {
                b.push(r);
            }
        }
        b.push(rho);
        b
    }

    /// ∫_{|x|<rho} f from a radial profile S(r) = ∫_{S^{n-1}} f(rω) dω.
    pub fn radial_integral<F: Fn(f64) -> f64>(&self, rho: f64, profile: F) -> f64 {
        let b = self.radial_panels(rho);
        let mut acc = 0.0;
        for w in b.windows(2) {
            if w[1] <= w[0] {
                continue;
            }
            let (xs, ws) = gauss_legendre(6, w[0], w[1]);
            for (r, wt) in xs.iter().zip(&ws) {
                acc += wt * r.powi(self.n as i32 - 1) * profile(*r);
            }
        }
        acc
    }
}

/// Columns ∂x/∂q_a of the hyperspherical map at (r, angles).
fn coordinate_columns(r: f64, ang: &[f64]) -> Vec<Vec<f64>> {
    let n = ang.len() + 1;
    let mut cols = vec![angles_to_unit(ang)];
    for a in 0..n - 1 {
        cols.push(analytic_angle_derivative(ang, a).into_iter().map(|v| r * v).collect());
    }
    cols
}

fn analytic_angle_derivative(ang: &[f64], a: usize) -> Vec<f64> {
    let n = ang.len() + 1;
    let mut x = vec![0.0; n];
    let mut s = 1.0;
    for k in 0..n - 2 {
        // x_k = s * cos θ_k where s = Π_{j<k} sin θ_j
        x[k] = if k == a {
            -s * ang[k].sin()
        } else if k > a {
            s * ang[k].cos()
        } else {
            0.0
        };
        s *= if k == a { ang[k].cos() } else { ang[k].sin() };
    }
    let phi = ang[n - 2];
    if a == n - 2 {
        x[n - 2] = -s * phi.sin();
        x[n - 1] = s * phi.cos();
    } else {
        x[n - 2] = s * phi.cos();
        x[n - 1] = s * phi.sin();
    }
    x
}

/// A computational domain.
#[derive(Clone, Debug, PartialEq)]
pub enum Grid {
    Torus(TorusGrid),
    Ball(BallGrid),
}

/// Serializable grid descriptor used by snapshots.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridDescriptor {
    Torus { n: usize, m: usize, length: f64 },
    Ball(BallSpec),
}

impl Grid {
    pub fn dim(&self) -> usize {
        match self {
            Grid::Torus(t) => t.dim(),
            Grid::Ball(b) => b.dim(),
        }
    }

    pub fn len(&self) -> usize {
        match self {
            Grid::Torus(t) => t.len(),
            Grid::Ball(b) => b.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, idx: usize) -> Vec<f64> {
        match self {
            Grid::Torus(t) => t.point(idx),
            Grid::Ball(b) => b.point(idx).to_vec(),
        }
    }

    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.point(i)).collect()
    }

    /// Distance used for concentration diagnostics (periodic on the torus).
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            Grid::Torus(t) => t.distance(x, y),
            Grid::Ball(_) => x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt(),
        }
    }

    /// Characteristic length: L for the torus, R for the ball.
    pub fn scale(&self) -> f64 {
        match self {
            Grid::Torus(t) => t.length(),
            Grid::Ball(b) => b.radius(),
        }
    }

    pub fn descriptor(&self) -> GridDescriptor {
        match self {
            Grid::Torus(t) => GridDescriptor::Torus { n: t.dim(), m: t.m(), length: t.length() },
            Grid::Ball(b) => GridDescriptor::Ball(b.spec()),
        }
    }

    pub fn from_descriptor(d: &GridDescriptor) -> Result<Self> {
        Ok(match d {
            GridDescriptor::Torus { n, m, length } => Grid::Torus(TorusGrid::new(*n, *m, *length)?),
            GridDescriptor::Ball(spec) => Grid::Ball(BallGrid::from_spec(spec)?),
        })
    }

    pub fn as_torus(&self) -> Option<&TorusGrid> {
        match self {
            Grid::Torus(t) => Some(t),
            _ => None,
        }
    }

    pub fn as_ball(&self) -> Option<&BallGrid> {
        match self {
            Grid::Ball(b) => Some(b),
            _ => None,
        }
    }

    pub fn into_arc(self) -> Arc<Grid> {
        Arc::new(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn torus_validation() {
        assert!(TorusGrid::unit(3, 6).is_err());
        assert!(TorusGrid::unit(3, 9).is_err());
        assert!(matches!(TorusGrid::unit(6, 8), Err(Error::Dimension(6))));
        let g = TorusGrid::unit(3, 8).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(g.multi_index(g.flat_index(&[1, 2, 3])), vec![1, 2, 3]);
    }

    #[test]
    fn fft_roundtrip() {
        let g = TorusGrid::unit(3, 8).unwrap();
        let f: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let back = g.inverse_real(g.forward(&f));
        for (a, b) in f.iter().zip(&back) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn ball_validation() {
        assert!(BallGrid::new(3, 1.0, vec![0.0, 0.2, 0.4, 0.6], &[4], 8, 3).is_err());
        assert!(BallGrid::new(3, 1.0, vec![0.1, 0.3, 0.2, 0.6], &[4], 8, 3).is_err());
        assert!(BallGrid::new(3, 1.0, vec![0.1, 0.3, 0.5, 0.7], &[4], 8, 3).is_ok());
    }

    #[test]
    fn uniform_ball_last_node_on_sphere() {
        let g = BallGrid::uniform(3, 2.0, 16, &[6], 8).unwrap();
        assert!((g.radial().last().unwrap() - 2.0).abs() < 1e-14);
        let h = g.radial()[1] - g.radial()[0];
        assert!((2.0 * g.radial()[0] - h).abs() < 1e-14);
    }

    #[test]
    fn ball_gradient_of_linear_is_accurate() {
        for n in 3..=5 {
            let (t, p) = default_angular(n);
            let g = BallGrid::uniform(n, 1.0, 12, &t, p).unwrap();
            let c: Vec<f64> = (0..n).map(|k| 0.3 + 0.1 * k as f64).collect();
            let f: Vec<f64> = (0..g.len()).map(|i| g.point(i).iter().zip(&c).map(|(x, c)| x * c).sum()).collect();
            let gr = g.gradient(&f);
            for k in 0..n {
                let err = gr[k].iter().map(|v| (v - c[k]).abs()).fold(0.0, f64::max);
                assert!(err < 5e-4, "n={n} k={k} err={err}");
            }
        }
    }

    #[test]
    fn ball_interpolation_of_quadratic() {
        let g = BallGrid::uniform(3, 1.0, 16, &[10], 20).unwrap();
        let f: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.point(i);
                x[0] * x[1] + 2.0 * x[2] * x[2] - x[0]
            })
            .collect();
        for x in [[0.1, -0.2, 0.3], [0.0, 0.0, 0.01], [0.5, 0.5, -0.5], [0.0, 0.0, -0.99]] {
            let v: f64 = g.interp_weights(&x).unwrap().iter().map(|(i, w)| w * f[*i]).sum();
            let exact = x[0] * x[1] + 2.0 * x[2] * x[2] - x[0];
            assert!((v - exact).abs() < 1e-3, "{x:?}: {v} vs {exact}");
        }
    }
}
