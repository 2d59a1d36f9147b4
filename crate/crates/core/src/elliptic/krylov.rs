//! Restarted GMRES with right preconditioning.

#[derive(Clone, Debug)]
pub struct GmresOptions {
    pub restart: usize,
    pub max_iter: usize,
    /// stop when ‖b - Ax‖ ≤ rtol·‖b‖ + atol
    pub rtol: f64,
    pub atol: f64,
}

impl Default for GmresOptions {
    fn default() -> Self {
        GmresOptions { restart: 40, max_iter: 400, rtol: 1e-11, atol: 0.0 }
    }
}

#[derive(Clone, Debug)]
pub struct GmresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Solve A x = b. `precond` applies an approximation of A⁻¹.
pub fn gmres<A, M>(mut apply: A, mut precond: M, b: &[f64], x0: Option<&[f64]>, opts: &GmresOptions) -> GmresOutcome
where
    A: FnMut(&[f64]) -> Vec<f64>,
    M: FnMut(&[f64]) -> Vec<f64>,
{
    let len = b.len();
    let mut x = x0.map(|v| v.to_vec()).unwrap_or_else(|| vec![0.0; len]);
    let target = opts.rtol * norm(b) + opts.atol;
    let mut iterations = 0;
    loop {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        if beta <= target || iterations >= opts.max_iter {
            return GmresOutcome { x, iterations, residual: beta, converged: beta <= target };
        }
        let m = opts.restart.min(opts.max_iter - iterations);
        let mut v: Vec<Vec<f64>> = vec![r.iter().map(|t| t / beta).collect()];
        let mut z: Vec<Vec<f64>> = Vec::with_capacity(m);
        let mut hmat = vec![vec![0.0; m]; m + 1];
        let (mut cs, mut sn) = (vec![0.0; m], vec![0.0; m]);
        let mut g = vec![0.0; m + 1];
        g[0] = beta;
        let mut k = 0;
        while k < m {
            let zk = precond(&v[k]);
            let mut w = apply(&zk);
            z.push(zk);
            for (j, vj) in v.iter().enumerate() {
                let hj = dot(&w, vj);
                hmat[j][k] = hj;
                for (a, b) in w.iter_mut().zip(vj) {
                    *a -= hj * b;
                }
            }
            let hn = norm(&w);
            hmat[k + 1][k] = hn;
            for j in 0..k {
                let t = cs[j] * hmat[j][k] + sn[j] * hmat[j + 1][k];
                hmat[j + 1][k] = -sn[j] * hmat[j][k] + cs[j] * hmat[j + 1][k];
                hmat[j][k] = t;
            }
            let d = hmat[k][k].hypot(hmat[k + 1][k]);
            if d == 0.0 {
                cs[k] = 1.0;
                sn[k] = 0.0;
            } else {
                cs[k] = hmat[k][k] / d;
                sn[k] = hmat[k + 1][k] / d;
            }
            hmat[k][k] = d;
            hmat[k + 1][k] = 0.0;
            g[k + 1] = -sn[k] * g[k];
            g[k] *= cs[k];
            iterations += 1;
            k += 1;
            if g[k].abs() <= target || hn <= 1e-300 {
                break;
            }
            v.push(w.iter().map(|t| t / hn).collect());
        }
        // back substitution for the k×k triangular system
        let mut y = vec![0.0; k];
        for i in (0..k).rev() {
            let s: f64 = (i + 1..k).map(|j| hmat[i][j] * y[j]).sum();
            y[i] = if hmat[i][i] != 0.0 { (g[i] - s) / hmat[i][i] } else { 0.0 };
        }
        for (j, yj) in y.iter().enumerate() {
            for (a, b) in x.iter_mut().zip(&z[j]) {
                *a += yj * b;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_nonsymmetric_system() {
        let n = 60;
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let mut s = 4.0 * x[i];
                    if i > 0 {
                        s -= 1.5 * x[i - 1];
                    }
                    if i + 1 < n {
                        s -= 0.5 * x[i + 1];
                    }
                    s
                })
                .collect()
        };
        let xs: Vec<f64> = (0..n).map(|i| (i as f64 * 0.3).sin()).collect();
        let b = apply(&xs);
        let out =
            gmres(apply, |v: &[f64]| v.iter().map(|t| t / 4.0).collect(), &b, None, &GmresOptions { restart: 10, ..Default::default() });
        assert!(out.converged);
        for (a, b) in out.x.iter().zip(&xs) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
