//! Central finite differences of closed-form functions (orders 2, 4, 6).

use crate::error::{Error, Result};

/// Weights of the first derivative at offsets 1..=p and of the second
/// derivative at offsets 0..=p.
fn weights(order: usize) -> Result<(&'static [f64], &'static [f64])> {
    match order {
        2 => Ok((&[0.5], &[-2.0, 1.0])),
        4 => Ok((&[2.0 / 3.0, -1.0 / 12.0], &[-2.5, 4.0 / 3.0, -1.0 / 12.0])),
        6 => Ok((&[0.75, -0.15, 1.0 / 60.0], &[-49.0 / 18.0, 1.5, -0.15, 1.0 / 90.0])),
        _ => Err(Error::InvalidArgument(format!("finite-difference order {order} not in {{2, 4, 6}}"))),
    }
}

fn shifted(x: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut y = x.to_vec();
    for &(a, d) in moves {
        y[a] += d;
    }
    y
}

fn axpy(acc: &mut [f64], w: f64, v: &[f64]) {
    for (a, b) in acc.iter_mut().zip(v) {
        *a += w * b;
    }
}

/// Jacobian of a vector function, `J[i*n + j] = ∂_i f_j`.
pub fn jacobian<F>(f: F, x: &[f64], h: f64, order: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let (d1, _) = weights(order)?;
    let n = x.len();
    let mut jac = Vec::new();
    for i in 0..n {
        let mut acc: Vec<f64> = Vec::new();
        for (p, w) in d1.iter().enumerate() {
            let s = (p + 1) as f64 * h;
            let plus = f(&shifted(x, &[(i, s)]));
            let minus = f(&shifted(x, &[(i, -s)]));
            if acc.is_empty() {
                acc = vec![0.0; plus.len()];
            }
            axpy(&mut acc, w / h, &plus);
            axpy(&mut acc, -w / h, &minus);
        }
        jac.push(acc);
    }
    let m = jac[0].len();
    Ok((0..n).flat_map(|i| (0..m).map(move |j| (i, j))).map(|(i, j)| jac[i][j]).collect())
}

/// Second derivatives of every component: `out[c][i*n + j] = ∂_i∂_j f_c`.
pub fn hessians<F>(f: F, x: &[f64], h: f64, order: usize) -> Result<Vec<Vec<f64>>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let (d1, d2) = weights(order)?;
    let n = x.len();
    let f0 = f(x);
    let m = f0.len();
    let mut out = vec![vec![0.0; n * n]; m];
    let h2 = h * h;
    for i in 0..n {
        let mut acc = vec![0.0; m];
        axpy(&mut acc, d2[0] / h2, &f0);
        for (p, w) in d2.iter().enumerate().skip(1) {
            let s = p as f64 * h;
            axpy(&mut acc, w / h2, &f(&shifted(x, &[(i, s)])));
            axpy(&mut acc, w / h2, &f(&shifted(x, &[(i, -s)])));
        }
        for c in 0..m {
            out[c][i * n + i] = acc[c];
        }
        for j in i + 1..n {
            let mut acc = vec![0.0; m];
            for (p, wp) in d1.iter().enumerate() {
                for (q, wq) in d1.iter().enumerate() {
                    let (sp, sq) = ((p + 1) as f64 * h, (q + 1) as f64 * h);
                    let w = wp * wq / h2;
                    axpy(&mut acc, w, &f(&shifted(x, &[(i, sp), (j, sq)])));
                    axpy(&mut acc, -w, &f(&shifted(x, &[(i, sp), (j, -sq)])));
                    axpy(&mut acc, -w, &f(&shifted(x, &[(i, -sp), (j, sq)])));
                    axpy(&mut acc, w, &f(&shifted(x, &[(i, -sp), (j, -sq)])));
                }
            }
            for c in 0..m {
                out[c][i * n + j] = acc[c];
                out[c][j * n + i] = acc[c];
            }
        }
    }
    Ok(out)
}

/// Gradient of a scalar function.
pub fn gradient<F>(f: F, x: &[f64], h: f64, order: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    jacobian(|y| vec![f(y)], x, h, order)
}

/// Geometer Laplacian -Σ∂²f.
pub fn laplacian<F>(f: F, x: &[f64], h: f64, order: usize) -> Result<f64>
where
    F: Fn(&[f64]) -> f64,
{
    let n = x.len();
    let hs = hessians(|y| vec![f(y)], x, h, order)?;
    Ok(-(0..n).map(|i| hs[0][i * n + i]).sum::<f64>())
}

/// Lamé operator Δ⃗W = -div 𝓛W of a vector function.
pub fn lame<F>(f: F, x: &[f64], h: f64, order: usize) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
{
    let n = x.len();
    let hs = hessians(f, x, h, order)?;
    let k = 1.0 - 2.0 / n as f64;
    Ok((0..n)
        .map(|i| {
            let lap: f64 = (0..n).map(|j| hs[i][j * n + j]).sum();
            let grad_div: f64 = (0..n).map(|j| hs[j][i * n + j]).sum();
            -lap - k * grad_div
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_on_low_degree_polynomials() {
        let f = |x: &[f64]| x[0] * x[0] * x[1] - 3.0 * x[1] * x[2] + x[2];
        let x = [0.3, -0.7, 1.1];
        for order in [2, 4, 6] {
            let g = gradient(f, &x, 1e-2, order).unwrap();
            assert!((g[0] - 2.0 * x[0] * x[1]).abs() < 1e-9);
            assert!((g[2] - (1.0 - 3.0 * x[1])).abs() < 1e-9);
            let h = hessians(|y| vec![f(y)], &x, 1e-2, order).unwrap();
            assert!((h[0][1] - 2.0 * x[0]).abs() < 1e-8);
            assert!((h[0][5] + 3.0).abs() < 1e-8);
            assert!((laplacian(f, &x, 1e-2, order).unwrap() + 2.0 * x[1]).abs() < 1e-8);
        }
        assert!(gradient(f, &x, 1e-2, 3).is_err());
    }

    #[test]
    fn lame_of_quadratic_field() {
        // W = (x₂², 0, 0): 𝓛W has only off-diagonal 2x₂, -div gives (-2, 0, 0)
        let w = |x: &[f64]| vec![x[1] * x[1], 0.0, 0.0];
        let l = lame(w, &[0.1, 0.2, 0.3], 1e-2, 4).unwrap();
        assert!((l[0] + 2.0).abs() < 1e-8 && l[1].abs() < 1e-8 && l[2].abs() < 1e-8);
    }
}
