//! Neumann Green 1-forms of the Lamé operator on a ball.
//!
//! For a source x and direction eᵢ the form G_i(x,·) = Γ_i + H_i solves
//!
//!   Δ⃗G_i = δ_x eᵢ - Σ_j K_j(x)ᵢ K_j   in B_R,   𝓛G_i·ν = 0 on ∂B_R,
//!
//! with ⟨G_i, K_j⟩ = 0 for the L²-orthonormal conformal Killing basis K_j.
//! Γ_i(y) = -𝒢ᵢ(y - x) is the free-space part; the regular part H_i is a
//! Galerkin solution in Legendre-product polynomials of degree ≤ P. The
//! polynomial space contains every conformal Killing field, so the kernel
//! is represented exactly and removed by the augmentation A + BBᵀ.
//!
//! With these conventions, for smooth X:
//!   X - π_R X = ∫⟨Δ⃗X, G(x,·)⟩ + ∫_∂B ⟨𝓛X·ν, G(x,·)⟩.

use nalgebra::{Cholesky, DMatrix, Dyn};

use super::kernels::{lame_fundamental_eval, lame_fundamental_jacobian};
use crate::error::{Error, Result};
use crate::fieldcalc::ops::{integrate, KernelQuadrature};
use crate::fieldcalc::quadrature::{gauss_legendre, SphereRule};
use crate::fieldcalc::{BallGrid, Grid, ScalarField, VectorField};

#[derive(Clone, Debug)]
pub struct NeumannOptions {
    /// total polynomial degree of the regular part
    pub degree: usize,
    /// polar levels of the boundary rule (n_phi is twice this)
    pub boundary_theta: usize,
}

impl NeumannOptions {
    pub fn default_for(n: usize) -> Self {
        match n {
            3 => NeumannOptions { degree: 10, boundary_theta: 32 },
            4 => NeumannOptions { degree: 6, boundary_theta: 16 },
            _ => NeumannOptions { degree: 4, boundary_theta: 10 },
        }
    }
}

fn legendre(t: f64, p: usize) -> (Vec<f64>, Vec<f64>) {
    let mut v = vec![0.0; p + 1];
    let mut d = vec![0.0; p + 1];
    v[0] = 1.0;
    if p >= 1 {
        v[1] = t;
        d[1] = 1.0;
    }
    for k in 1..p {
        let kf = k as f64;
        v[k + 1] = ((2.0 * kf + 1.0) * t * v[k] - kf * v[k - 1]) / (kf + 1.0);
        d[k + 1] = d[k - 1] + (2.0 * kf + 1.0) * v[k];
    }
    (v, d)
}

fn multi_indices(n: usize, p: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == n {
            out.push(cur.clone());
            return;
        }
        for a in 0..=left {
            cur.push(a);
            rec(n, left - a, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, p, &mut Vec::new(), &mut out);
    out.sort_by_key(|a| a.iter().sum::<usize>());
    out
}

/// Raw conformal Killing fields in z = y/R: translations, rotations, the
/// dilation and the special conformal fields. Returns (value, jacobian
/// `J[i*n+j] = ∂_{y_i} W_j`).
fn raw_killing(n: usize, r: f64, idx: usize, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let z: Vec<f64> = y.iter().map(|v| v / r).collect();
    let mut val = vec![0.0; n];
    let mut jac = vec![0.0; n * n];
    let nrot = n * (n - 1) / 2;
    if idx < n {
        val[idx] = 1.0;
    } else if idx < n + nrot {
        let mut k = idx - n;
        let (mut a, mut b) = (0, 1);
        'outer: for aa in 0..n {
            for bb in aa + 1..n {
                if k == 0 {
                    a = aa;
                    b = bb;
                    break 'outer;
                }
                k -= 1;
            }
        }
        val[b] = z[a];
        val[a] = -z[b];
        jac[a * n + b] = 1.0 / r;
        jac[b * n + a] = -1.0 / r;
    } else if idx == n + nrot {
        val.copy_from_slice(&z);
        for i in 0..n {
            jac[i * n + i] = 1.0 / r;
        }
    } else {
        let a = idx - n - nrot - 1;
        let z2: f64 = z.iter().map(|v| v * v).sum();
        for j in 0..n {
            val[j] = 2.0 * z[a] * z[j] - if j == a { z2 } else { 0.0 };
        }
        for i in 0..n {
            for j in 0..n {
                let mut v = 0.0;
                if i == a {
                    v += 2.0 * z[j];
                }
                if i == j {
                    v += 2.0 * z[a];
                }
                if j == a {
                    v -= 2.0 * z[i];
                }
                jac[i * n + j] = v / r;
            }
        }
    }
    (val, jac)
}

/// Dimension of the conformal Killing algebra of ℝⁿ.
pub fn killing_dim(n: usize) -> usize {
    (n + 1) * (n + 2) / 2
}

/// Tensor rule on B_R: Gauss-Legendre in r times a product sphere rule.
fn ball_rule(n: usize, r: f64, nr: usize, sphere: &SphereRule) -> Vec<(Vec<f64>, f64)> {
    let (rs, ws) = gauss_legendre(nr, 0.0, r);
    let dirs = sphere.directions();
    let mut out = Vec::with_capacity(nr * dirs.len());
    for (rho, w) in rs.iter().zip(&ws) {
        for (d, wd) in &dirs {
            out.push((d.iter().map(|v| rho * v).collect(), w * wd * rho.powi(n as i32 - 1)));
        }
    }
    out
}

pub struct NeumannGreenForms {
    n: usize,
    radius: f64,
    degree: usize,
    grid: BallGrid,
    exps: Vec<Vec<usize>>,
    chol: Cholesky<f64, Dyn>,
    /// orthonormal K_j = Σ_k kcoef[(j,k)] k_k
    kcoef: DMatrix<f64>,
    /// B[(c·nb + α), j] = ∫ p_α (K_j)_c
    bmat: DMatrix<f64>,
    bnd_points: Vec<Vec<f64>>,
    bnd_weights: Vec<f64>,
    /// scalar basis values at boundary points (rows) times weights
    bnd_basis: DMatrix<f64>,
    polar: SphereRule,
}

impl std::fmt::Debug for NeumannGreenForms {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "NeumannGreenForms(n={}, R={}, degree={})", self.n, self.radius, self.degree)
    }
}

impl NeumannGreenForms {
    pub fn build(grid: &BallGrid) -> Result<Self> {
        Self::build_with(grid, &NeumannOptions::default_for(grid.dim()))
    }

    pub fn build_with(grid: &BallGrid, opts: &NeumannOptions) -> Result<Self> {
        let n = grid.dim();
        let r = grid.radius();
        let p = opts.degree;
        if p < 2 {
            return Err(Error::InvalidArgument("Neumann forms need degree ≥ 2 to contain the kernel".into()));
        }
        if grid.radial().len() < 8 {
            return Err(Error::InvalidGrid("Neumann forms need at least 8 radial nodes".into()));
        }
        let exps = multi_indices(n, p);
        let nb = exps.len();
        let nk = killing_dim(n);

        let sphere = SphereRule::new(n, &vec![p + 1; n - 2], 2 * p + 2);
        let quad = ball_rule(n, r, p + n / 2 + 1, &sphere);
        let nq = quad.len();

        // weighted basis derivative tables
        let mut dk: Vec<DMatrix<f64>> = vec![DMatrix::zeros(nq, nb); n];
        let mut vals = DMatrix::zeros(nq, nb);
        let mut kvals: Vec<DMatrix<f64>> = vec![DMatrix::zeros(nq, nk); n];
        for (q, (y, w)) in quad.iter().enumerate() {
            let (v, g) = basis_eval(&exps, n, r, p, y);
            let sw = w.sqrt();
            for a in 0..nb {
                vals[(q, a)] = v[a] * w;
                for k in 0..n {
                    dk[k][(q, a)] = g[a * n + k] * sw;
                }
            }
            for j in 0..nk {
                let (kv, _) = raw_killing(n, r, j, y);
                for c in 0..n {
                    kvals[c][(q, j)] = kv[c];
                }
            }
        }

        // orthonormalise the kernel basis
        let mut gram = DMatrix::zeros(nk, nk);
        for (q, (_, w)) in quad.iter().enumerate() {
            for a in 0..nk {
                for b in 0..nk {
                    gram[(a, b)] += w * (0..n).map(|c| kvals[c][(q, a)] * kvals[c][(q, b)]).sum::<f64>();
                }
            }
        }
        let gl = Cholesky::new(gram).ok_or_else(|| Error::Singular("conformal Killing Gram matrix".into()))?;
        let linv = gl.l().try_inverse().ok_or_else(|| Error::Singular("conformal Killing Gram factor".into()))?;
        let kcoef = linv;

        // B = ∫ p_α (K_j)_c
        let mut bmat = DMatrix::zeros(n * nb, nk);
        for c in 0..n {
            let kc = &kvals[c] * kcoef.transpose();
            let blk = vals.transpose() * kc;
            bmat.view_mut((c * nb, 0), (nb, nk)).copy_from(&blk);
        }

        // M^{kl} = ∫ ∂_k p_α ∂_l p_β
        let mut mkl: Vec<Vec<DMatrix<f64>>> = vec![vec![DMatrix::zeros(0, 0); n]; n];
        for k in 0..n {
            for l in k..n {
                let m = dk[k].transpose() * &dk[l];
                if l != k {
                    mkl[l][k] = m.transpose();
                }
                mkl[k][l] = m;
            }
        }
        let mut s = DMatrix::zeros(nb, nb);
        for k in 0..n {
            s += &mkl[k][k];
        }
        let two_n = 2.0 / n as f64;
        let mut a = DMatrix::zeros(n * nb, n * nb);
        for c in 0..n {
            for d in 0..n {
                let mut blk = &mkl[d][c] - &mkl[c][d] * two_n;
                if c == d {
                    blk += &s;
                }
                a.view_mut((c * nb, d * nb), (nb, nb)).copy_from(&blk);
            }
        }
        let scale = r.powi(-2);
        a += &bmat * bmat.transpose() * scale;
        let a = (&a + a.transpose()) * 0.5;
        let chol = Cholesky::new(a).ok_or_else(|| Error::Singular("augmented Lamé stiffness".into()))?;

        let bsphere = SphereRule::new(n, &vec![opts.boundary_theta; n - 2], 2 * opts.boundary_theta);
        let mut bnd_points = Vec::new();
        let mut bnd_weights = Vec::new();
        for (d, w) in bsphere.directions() {
            bnd_points.push(d.iter().map(|v| v * r).collect::<Vec<f64>>());
            bnd_weights.push(w * r.powi(n as i32 - 1));
        }
        let mut bnd_basis = DMatrix::zeros(bnd_points.len(), nb);
        for (q, y) in bnd_points.iter().enumerate() {
            let v = basis_values(&exps, r, p, y);
            for a in 0..nb {
                bnd_basis[(q, a)] = v[a] * bnd_weights[q];
            }
        }

        Ok(NeumannGreenForms {
            n,
            radius: r,
            degree: p,
            grid: grid.clone(),
            exps,
            chol,
            kcoef,
            bmat,
            bnd_points,
            bnd_weights,
            bnd_basis,
            polar: KernelQuadrature::default_for(n).rule,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn grid(&self) -> &BallGrid {
        &self.grid
    }

    pub fn kernel_dim(&self) -> usize {
        killing_dim(self.n)
    }

    /// All orthonormal kernel fields at y: values `[j][i]` and jacobians `[j][k*n+i]`.
    pub fn kernel_all(&self, y: &[f64]) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let n = self.n;
        let nk = self.kernel_dim();
        let raw: Vec<(Vec<f64>, Vec<f64>)> = (0..nk).map(|k| raw_killing(n, self.radius, k, y)).collect();
        let mut vals = vec![vec![0.0; n]; nk];
        let mut jacs = vec![vec![0.0; n * n]; nk];
        for j in 0..nk {
            for (k, (kv, kj)) in raw.iter().enumerate().take(j + 1) {
                let c = self.kcoef[(j, k)];
                for i in 0..n {
                    vals[j][i] += c * kv[i];
                }
                for i in 0..n * n {
                    jacs[j][i] += c * kj[i];
                }
            }
        }
        (vals, jacs)
    }

    /// Orthonormal kernel field K_j at y: (value, jacobian).
    pub fn kernel_eval(&self, j: usize, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let n = self.n;
        let mut v = vec![0.0; n];
        let mut jac = vec![0.0; n * n];
        for k in 0..=j {
            let c = self.kcoef[(j, k)];
            if c == 0.0 {
                continue;
            }
            let (kv, kj) = raw_killing(n, self.radius, k, y);
            for i in 0..n {
                v[i] += c * kv[i];
            }
            for i in 0..n * n {
                jac[i] += c * kj[i];
            }
        }
        (v, jac)
    }

    /// π_R W: L²-orthogonal projection of a grid field on the kernel,
    /// with the Gram matrix taken in the grid quadrature.
    pub fn project(&self, w: &VectorField) -> Result<VectorField> {
        if w.grid().as_ball().is_none() {
            return Err(Error::UnsupportedDomain("projection needs a ball grid".into()));
        }
        let n = self.n;
        let nk = self.kernel_dim();
        let kf: Vec<VectorField> = (0..nk).map(|j| VectorField::from_fn(w.grid().clone(), |y| self.kernel_eval(j, y).0)).collect();
        let inner = |a: &VectorField, b: &VectorField| -> f64 {
            let d: Vec<f64> = (0..a.len()).map(|i| (0..n).map(|c| a.comp(c)[i] * b.comp(c)[i]).sum()).collect();
            integrate(&ScalarField::new(a.grid().clone(), d).unwrap())
        };
        let mut gram = DMatrix::zeros(nk, nk);
        let mut rhs = DMatrix::zeros(nk, 1);
        for a in 0..nk {
            for b in a..nk {
                let v = inner(&kf[a], &kf[b]);
                gram[(a, b)] = v;
                gram[(b, a)] = v;
            }
            rhs[(a, 0)] = inner(&kf[a], w);
        }
        let coef = gram.lu().solve(&rhs).ok_or_else(|| Error::Singular("kernel Gram matrix on grid".into()))?;
        let mut out = VectorField::zeros(w.grid().clone());
        for (j, k) in kf.iter().enumerate() {
            out = out.add(&k.scale(coef[(j, 0)]))?;
        }
        Ok(out)
    }

    /// Coefficients ⟨X, K_j⟩ of a closed-form field (tensor Gauss rule on B_R).
    pub fn kernel_coefficients_fn<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F) -> Vec<f64> {
        let n = self.n;
        let p = self.degree + 4;
        let sphere = SphereRule::new(n, &vec![p + 1; n - 2], 2 * p + 2);
        let mut out = vec![0.0; self.kernel_dim()];
        for (y, w) in ball_rule(n, self.radius, p + n / 2 + 1, &sphere) {
            let fy = f(&y);
            let (kall, _) = self.kernel_all(&y);
            for (o, kv) in out.iter_mut().zip(&kall) {
                *o += w * kv.iter().zip(&fy).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        out
    }

    /// π_R X at y for a closed-form field.
    pub fn project_fn<F: Fn(&[f64]) -> Vec<f64>>(&self, f: F, y: &[f64]) -> Vec<f64> {
        let c = self.kernel_coefficients_fn(f);
        let mut out = vec![0.0; self.n];
        let (kall, _) = self.kernel_all(y);
        for (cj, kv) in c.iter().zip(&kall) {
            for i in 0..self.n {
                out[i] += cj * kv[i];
            }
        }
        out
    }

    /// Green forms with source x (all n directions).
    pub fn source(&self, x: &[f64]) -> Result<GreenSource<'_>> {
        let n = self.n;
        if x.len() != n {
            return Err(Error::ShapeMismatch("source point dimension".into()));
        }
        let rx = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rx >= self.radius {
            return Err(Error::OutsideDomain(format!("source |x| = {rx} not inside B_{}", self.radius)));
        }
        let nb = self.exps.len();
        let nk = self.kernel_dim();
        // boundary traction of Γ_i: t[c][(q, i)] = (𝓛Γ_i·ν)_c
        let npts = self.bnd_points.len();
        let mut t: Vec<DMatrix<f64>> = vec![DMatrix::zeros(npts, n); n];
        for (q, y) in self.bnd_points.iter().enumerate() {
            let d: Vec<f64> = y.iter().zip(x).map(|(a, b)| a - b).collect();
            let jac = lame_fundamental_jacobian(&d)?;
            let nu: Vec<f64> = y.iter().map(|v| v / self.radius).collect();
            for i in 0..n {
                // ∂_k Γ_il = -∂_k 𝒢_il
                let dg = |k: usize, l: usize| -jac[(k * n + i) * n + l];
                let div: f64 = (0..n).map(|m| dg(m, m)).sum();
                for k in 0..n {
                    let mut tr = 0.0;
                    for l in 0..n {
                        let mut lk = dg(k, l) + dg(l, k);
                        if k == l {
                            lk -= 2.0 / n as f64 * div;
                        }
                        tr += lk * nu[l];
                    }
                    t[k][(q, i)] = tr;
                }
            }
        }
        let kx = self.kernel_all(x).0;
        let mut rhs = DMatrix::zeros(n * nb, n);
        for c in 0..n {
            let blk = self.bnd_basis.transpose() * &t[c];
            for i in 0..n {
                for a in 0..nb {
                    let mut v = -blk[(a, i)];
                    for j in 0..nk {
                        v -= kx[j][i] * self.bmat[(c * nb + a, j)];
                    }
                    rhs[(c * nb + a, i)] = v;
                }
            }
        }
        let coeffs = self.chol.solve(&rhs);
        // gauge: ⟨G_i, K_j⟩ = 0
        let hk = self.bmat.transpose() * &coeffs;
        let gk = self.gamma_kernel_moments(x)?;
        let mut gauge = DMatrix::zeros(nk, n);
        for j in 0..nk {
            for i in 0..n {
                gauge[(j, i)] = -gk[(j, i)] - hk[(j, i)];
            }
        }
        Ok(GreenSource { forms: self, x: x.to_vec(), coeffs, gauge })
    }

    /// ⟨Γ_i(x,·), K_j⟩ by polar quadrature about x.
    fn gamma_kernel_moments(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        let n = self.n;
        let nk = self.kernel_dim();
        let (ts, wts) = gauss_legendre(4, 0.0, 1.0);
        let r2 = self.radius * self.radius;
        let x2: f64 = x.iter().map(|v| v * v).sum();
        let mut out = DMatrix::zeros(nk, n);
        for (d, wd) in self.polar.directions() {
            let xd: f64 = x.iter().zip(&d).map(|(a, b)| a * b).sum();
            let rmax = -xd + (xd * xd + r2 - x2).sqrt();
            let g = lame_fundamental_eval(&d)?;
            for (t, wt) in ts.iter().zip(&wts) {
                let rho = rmax * t;
                let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + rho * b).collect();
                // ρ^{n-1} Γ(ρd) = -ρ 𝒢(d)
                let w = wd * wt * rmax * rho;
                let (kall, _) = self.kernel_all(&y);
                for (j, kv) in kall.iter().enumerate() {
                    for i in 0..n {
                        let s: f64 = (0..n).map(|m| g[i * n + m] * kv[m]).sum();
                        out[(j, i)] -= w * s;
                    }
                }
            }
        }
        Ok(out)
    }

    /// Boundary points and weights of the traction quadrature.
    pub fn boundary_rule(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.bnd_points, &self.bnd_weights)
    }

    /// Measured constants C(δ) = sup (|x-y||∇G| + |G|)|x-y|^{n-2} over a
    /// fixed sample of pairs in B_{R-δ}. Larger δ filters a subset, so the
    /// constants are non-increasing in δ.
    pub fn kernel_bound(&self, deltas: &[f64]) -> Result<Vec<(f64, f64)>> {
        let n = self.n;
        let r = self.radius;
        for &d in deltas {
            if !(0.0..r).contains(&d) {
                return Err(Error::InvalidArgument(format!("δ = {d} must lie in [0, R)")));
            }
        }
        let dmin = deltas.iter().cloned().fold(f64::INFINITY, f64::min);
        let samples = sample_points(n, r);
        let mut records: Vec<(f64, f64)> = Vec::new(); // (max radius of the pair, value)
        for x in samples.iter().filter(|p| norm(p) <= r - dmin) {
            let src = self.source(x)?;
            for y in samples.iter().filter(|p| norm(p) <= r - dmin) {
                let dxy = x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
                if dxy < 1e-3 * r {
                    continue;
                }
                let g = src.eval(y)?;
                let gj = src.jacobian(y)?;
                let gn = g.iter().map(|v| v * v).sum::<f64>().sqrt();
                let gjn = gj.iter().map(|v| v * v).sum::<f64>().sqrt();
                let val = (dxy * gjn + gn) * dxy.powi(n as i32 - 2);
                records.push((norm(x).max(norm(y)), val));
            }
        }
        Ok(deltas.iter().map(|&d| (d, records.iter().filter(|(m, _)| *m <= r - d).map(|(_, v)| *v).fold(0.0, f64::max))).collect())
    }

    /// max |G_i(x,y)_j - G_j(y,x)_i| over the given pairs.
    pub fn reciprocity_defect(&self, pairs: &[(Vec<f64>, Vec<f64>)]) -> Result<f64> {
        let n = self.n;
        let mut worst = 0.0f64;
        for (x, y) in pairs {
            let gxy = self.source(x)?.eval(y)?;
            let gyx = self.source(y)?.eval(x)?;
            for i in 0..n {
                for j in 0..n {
                    worst = worst.max((gxy[i * n + j] - gyx[j * n + i]).abs());
                }
            }
        }
        Ok(worst)
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn sample_points(n: usize, r: f64) -> Vec<Vec<f64>> {
    let mut out = vec![vec![0.0; n]];
    let rule = SphereRule::new(n, &vec![2; n - 2], 4);
    for frac in [0.2, 0.45, 0.7, 0.85] {
        for (k, (d, _)) in rule.directions().into_iter().enumerate() {
            // rotate alternate shells so directions do not line up
            let tilt = if k % 2 == 0 { 0.0 } else { 0.3 };
            let mut p: Vec<f64> = d.iter().map(|v| v * frac * r).collect();
            p[0] += tilt * 0.1 * r * frac;
            let s = norm(&p);
            for v in p.iter_mut() {
                *v *= frac * r / s;
            }
            out.push(p);
        }
    }
    out
}

fn basis_values(exps: &[Vec<usize>], r: f64, p: usize, y: &[f64]) -> Vec<f64> {
    let tabs: Vec<Vec<f64>> = y.iter().map(|v| legendre(v / r, p).0).collect();
    exps.iter().map(|e| e.iter().zip(&tabs).map(|(&k, t)| t[k]).product()).collect()
}

/// Scalar Legendre-product basis at y: values and gradients (`g[a*n + k]`).
fn basis_eval(exps: &[Vec<usize>], n: usize, r: f64, p: usize, y: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let tabs: Vec<(Vec<f64>, Vec<f64>)> = y.iter().map(|v| legendre(v / r, p)).collect();
    let mut vals = Vec::with_capacity(exps.len());
    let mut grads = Vec::with_capacity(exps.len() * n);
    for e in exps {
        let mut v = 1.0;
        for k in 0..n {
            v *= tabs[k].0[e[k]];
        }
        vals.push(v);
        for k in 0..n {
            let mut g = tabs[k].1[e[k]] / r;
            for m in 0..n {
                if m != k {
                    g *= tabs[m].0[e[m]];
                }
            }
            grads.push(g);
        }
    }
    (vals, grads)
}

/// Green forms for one source point.
pub struct GreenSource<'a> {
    forms: &'a NeumannGreenForms,
    x: Vec<f64>,
    coeffs: DMatrix<f64>,
    gauge: DMatrix<f64>,
}

impl GreenSource<'_> {
    pub fn source_point(&self) -> &[f64] {
        &self.x
    }

    /// G_i(x,y)_j at index i·n + j.
    pub fn eval(&self, y: &[f64]) -> Result<Vec<f64>> {
        let f = self.forms;
        let n = f.n;
        let nb = f.exps.len();
        let d: Vec<f64> = y.iter().zip(&self.x).map(|(a, b)| a - b).collect();
        let mut out: Vec<f64> = lame_fundamental_eval(&d)?.into_iter().map(|v| -v).collect();
        let v = basis_values(&f.exps, f.radius, f.degree, y);
        for i in 0..n {
            let col = self.coeffs.column(i);
            for j in 0..n {
                out[i * n + j] += col.rows(j * nb, nb).iter().zip(&v).map(|(c, b)| c * b).sum::<f64>();
            }
        }
        let (kall, _) = f.kernel_all(y);
        for (k, kv) in kall.iter().enumerate() {
            for i in 0..n {
                for j in 0..n {
                    out[i * n + j] += self.gauge[(k, i)] * kv[j];
                }
            }
        }
        Ok(out)
    }

    /// ∂_{y_k} G_i(x,y)_j at index (k·n + i)·n + j.
    pub fn jacobian(&self, y: &[f64]) -> Result<Vec<f64>> {
        let f = self.forms;
        let n = f.n;
        let nb = f.exps.len();
        let d: Vec<f64> = y.iter().zip(&self.x).map(|(a, b)| a - b).collect();
        let mut out: Vec<f64> = lame_fundamental_jacobian(&d)?.into_iter().map(|v| -v).collect();
        let (_, g) = basis_eval(&f.exps, n, f.radius, f.degree, y);
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    out[(k * n + i) * n + j] += (0..nb).map(|a| self.coeffs[(j * nb + a, i)] * g[a * n + k]).sum::<f64>();
                }
            }
        }
        let (_, jall) = f.kernel_all(y);
        for (m, kj) in jall.iter().enumerate() {
            for k in 0..n {
                for i in 0..n {
                    for j in 0..n {
                        out[(k * n + i) * n + j] += self.gauge[(m, i)] * kj[k * n + j];
                    }
                }
            }
        }
        Ok(out)
    }
}

/// Build the forms for a ball grid with default resolution.
pub fn neumann_green_build(grid: &Grid) -> Result<NeumannGreenForms> {
    match grid {
        Grid::Ball(b) => NeumannGreenForms::build(b),
        Grid::Torus(_) => Err(Error::UnsupportedDomain("Neumann Green forms live on ball grids".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::ops::arc;
    use crate::fieldcalc::sampler::conformal_killing_from_jacobian;

    #[test]
    fn raw_killing_fields_are_conformal_killing() {
        for n in 3..=5 {
            let y: Vec<f64> = (0..n).map(|k| 0.2 - 0.13 * k as f64).collect();
            for j in 0..killing_dim(n) {
                let (_, jac) = raw_killing(n, 2.0, j, &y);
                let l = conformal_killing_from_jacobian(&jac, n);
                assert!(l.iter().all(|v| v.abs() < 1e-14), "n={n} j={j}");
            }
        }
    }

    #[test]
    fn legendre_recurrence() {
        let (v, d) = legendre(0.3, 4);
        let p4 = (35.0 * 0.3f64.powi(4) - 30.0 * 0.09 + 3.0) / 8.0;
        assert!((v[4] - p4).abs() < 1e-14);
        assert!((d[2] - 3.0 * 0.3).abs() < 1e-14);
    }

    #[test]
    fn projection_keeps_rotations() {
        let grid = BallGrid::uniform(3, 1.0, 16, &[8], 16).unwrap();
        let forms = NeumannGreenForms::build_with(&grid, &NeumannOptions { degree: 4, boundary_theta: 12 }).unwrap();
        let g = arc(Grid::Ball(grid));
        let rot = VectorField::from_fn(g, |x| vec![-x[1], x[0], 0.0]);
        let p = forms.project(&rot).unwrap();
        assert!(p.sub(&rot).unwrap().sup() < 1e-10);
    }
}
