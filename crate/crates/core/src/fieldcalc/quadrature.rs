//! One-dimensional Gauss rules, hypersphere product rules and Fornberg
//! finite-difference weights.

use nalgebra::{DMatrix, SymmetricEigen};
use std::f64::consts::PI;

/// Surface area of the unit sphere S^{d} in R^{d+1}.
pub fn sphere_area(d: usize) -> f64 {
    // ω_d = 2 π^{(d+1)/2} / Γ((d+1)/2)
    let k = d + 1;
    let half = k as f64 / 2.0;
    2.0 * PI.powf(half) / gamma(half)
}

/// Gamma function for positive half-integers and integers (exact recurrences).
pub fn gamma(x: f64) -> f64 {
    let twice = (2.0 * x).round();
    assert!((twice - 2.0 * x).abs() < 1e-12 && x > 0.0, "gamma: only half-integers supported");
    let twice = twice as i64;
    if twice % 2 == 0 {
        (1..(twice / 2)).map(|k| k as f64).product()
    } else {
        // Γ(k + 1/2) = (2k)! / (4^k k!) √π
        let mut g = PI.sqrt();
        let mut y = 0.5;
        while y + 0.25 < x {
            g *= y;
            y += 1.0;
        }
        g
    }
}

/// Gauss–Jacobi rule on [-1, 1] for the symmetric weight (1 - t²)^a, a ≥ 0.
/// Nodes ascending.
pub fn gauss_jacobi_symmetric(npts: usize, a: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(npts >= 1);
    let mut j = DMatrix::<f64>::zeros(npts, npts);
    for k in 1..npts {
        let kf = k as f64;
        let beta = kf * (kf + 2.0 * a) / ((2.0 * kf + 2.0 * a + 1.0) * (2.0 * kf + 2.0 * a - 1.0));
        let b = beta.sqrt();
        j[(k, k - 1)] = b;
        j[(k - 1, k)] = b;
    }
    // total mass ∫(1-t²)^a dt = 2^{2a+1} Γ(a+1)² / Γ(2a+2)
    let mu0 = 2f64.powf(2.0 * a + 1.0) * gamma(a + 1.0).powi(2) / gamma(2.0 * a + 2.0);
    let eig = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..npts).map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    // symmetrize against eigen-solver noise
    let mut nodes: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let mut weights: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    for i in 0..npts / 2 {
        let k = npts - 1 - i;
        let t = 0.5 * (nodes[k] - nodes[i]);
        nodes[i] = -t;
        nodes[k] = t;
        let w = 0.5 * (weights[i] + weights[k]);
        weights[i] = w;
        weights[k] = w;
    }
    if npts % 2 == 1 {
        nodes[npts / 2] = 0.0;
    }
    let s: f64 = weights.iter().sum();
    for w in &mut weights {
        *w *= mu0 / s;
    }
    (nodes, weights)
}

/// Gauss–Legendre rule mapped to [a, b].
pub fn gauss_legendre(npts: usize, a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let (t, w) = gauss_jacobi_symmetric(npts, 0.0);
    let h = 0.5 * (b - a);
    let c = 0.5 * (b + a);
    (t.iter().map(|t| c + h * t).collect(), w.iter().map(|w| w * h).collect())
}

/// Product quadrature on S^{n-1} in hyperspherical coordinates
/// x₁ = cos θ₁, x₂ = sin θ₁ cos θ₂, …, x_n = sin θ₁ ⋯ sin θ_{n-2} sin φ.
#[derive(Clone, Debug, PartialEq)]
pub struct SphereRule {
    pub n: usize,
    /// polar angles per level, ascending in θ
    pub thetas: Vec<Vec<f64>>,
    pub theta_weights: Vec<Vec<f64>>,
    pub n_phi: usize,
}

impl SphereRule {
    pub fn new(n: usize, n_theta: &[usize], n_phi: usize) -> Self {
        assert!(n >= 2 && n_theta.len() == n - 2);
        assert!(n_phi >= 2 && n_phi % 2 == 0, "n_phi must be even");
        let mut thetas = Vec::new();
        let mut theta_weights = Vec::new();
        for (k, &nt) in n_theta.iter().enumerate() {
            // θ_{k+1} carries sin^{p} with p = n - 2 - k
            let p = (n - 2 - k) as f64;
            let (t, w) = gauss_jacobi_symmetric(nt, (p - 1.0) / 2.0);
            // t = cos θ, ascending θ means descending t
            thetas.push(t.iter().rev().map(|t| t.acos()).collect());
            theta_weights.push(w.iter().rev().copied().collect());
        }
        SphereRule { n, thetas, theta_weights, n_phi }
    }

    pub fn phi(&self, j: usize) -> f64 {
        2.0 * PI * j as f64 / self.n_phi as f64
    }

    pub fn phi_weight(&self) -> f64 {
        2.0 * PI / self.n_phi as f64
    }

    /// Number of directions.
    pub fn len(&self) -> usize {
        self.thetas.iter().map(|t| t.len()).product::<usize>() * self.n_phi
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Per-level sizes, last entry n_phi.
    pub fn shape(&self) -> Vec<usize> {
        let mut s: Vec<usize> = self.thetas.iter().map(|t| t.len()).collect();
        s.push(self.n_phi);
        s
    }

    /// Multi-index (row-major over `shape`) of a flat direction index.
    pub fn unflatten(&self, mut idx: usize) -> Vec<usize> {
        let shape = self.shape();
        let mut out = vec![0; shape.len()];
        for a in (0..shape.len()).rev() {
            out[a] = idx % shape[a];
            idx /= shape[a];
        }
        out
    }

    pub fn flatten(&self, multi: &[usize]) -> usize {
        let shape = self.shape();
        let mut idx = 0;
        for a in 0..shape.len() {
            idx = idx * shape[a] + multi[a];
        }
        idx
    }

    /// Angles (θ₁..θ_{n-2}, φ) of a direction multi-index.
    pub fn angles(&self, multi: &[usize]) -> Vec<f64> {
        let mut a: Vec<f64> = (0..self.n - 2).map(|k| self.thetas[k][multi[k]]).collect();
        a.push(self.phi(multi[self.n - 2]));
        a
    }

    pub fn weight(&self, multi: &[usize]) -> f64 {
        let mut w = self.phi_weight();
        for k in 0..self.n - 2 {
            w *= self.theta_weights[k][multi[k]];
        }
        w
    }

    /// All (unit direction, weight) pairs in flat order.
    pub fn directions(&self) -> Vec<(Vec<f64>, f64)> {
        (0..self.len())
            .map(|i| {
                let m = self.unflatten(i);
                (angles_to_unit(&self.angles(&m)), self.weight(&m))
            })
            .collect()
    }

    /// Multi-index of the antipodal direction.
    pub fn antipode(&self, multi: &[usize]) -> Vec<usize> {
        let mut out = multi.to_vec();
        for k in 0..self.n - 2 {
            out[k] = self.thetas[k].len() - 1 - multi[k];
        }
        out[self.n - 2] = (multi[self.n - 2] + self.n_phi / 2) % self.n_phi;
        out
    }
}

/// Unit vector for hyperspherical angles (θ₁..θ_{n-2}, φ).
pub fn angles_to_unit(angles: &[f64]) -> Vec<f64> {
    let n = angles.len() + 1;
    let mut x = vec![0.0; n];
    let mut s = 1.0;
    for k in 0..n - 2 {
        x[k] = s * angles[k].cos();
        s *= angles[k].sin();
    }
    let phi = angles[n - 2];
    x[n - 2] = s * phi.cos();
    x[n - 1] = s * phi.sin();
    x
}

/// Inverse of the hyperspherical map: returns (r, angles).
pub fn cartesian_to_spherical(x: &[f64]) -> (f64, Vec<f64>) {
    let n = x.len();
    let r = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut angles = vec![0.0; n - 1];
    for k in 0..n - 2 {
        let tail = x[k + 1..].iter().map(|v| v * v).sum::<f64>().sqrt();
        angles[k] = tail.atan2(x[k]);
    }
    let mut phi = x[n - 1].atan2(x[n - 2]);
    if phi < 0.0 {
        phi += 2.0 * PI;
    }
    angles[n - 2] = phi;
    (r, angles)
}

/// Fornberg weights: `w[d][j]` approximates the d-th derivative at `z`
/// from samples at `xs[j]`, for d = 0..=m.
pub fn fornberg(z: f64, xs: &[f64], m: usize) -> Vec<Vec<f64>> {
    let np = xs.len();
    let mut c = vec![vec![0.0; np]; m + 1];
    let mut c1 = 1.0;
    let mut c4 = xs[0] - z;
    c[0][0] = 1.0;
    for i in 1..np {
        let mn = i.min(m);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = xs[i] - z;
        for j in 0..i {
            let c3 = xs[i] - xs[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    c[k][i] = c1 * (k as f64 * c[k - 1][i - 1] - c5 * c[k][i - 1]) / c2;
                }
                c[0][i] = -c1 * c5 * c[0][i - 1] / c2;
            }
            for k in (1..=mn).rev() {
                c[k][j] = (c4 * c[k][j] - k as f64 * c[k - 1][j]) / c3;
            }
            c[0][j] = c4 * c[0][j] / c3;
        }
        c1 = c2;
    }
    c
}
