//! Fundamental solution of the Lamé operator: harmonicity away from the
//! pole, symmetry and homogeneity of degree 2 − n.

use conformal_drift::elliptic::{lame_fundamental_eval, lame_fundamental_residual};

fn main() -> conformal_drift::Result<()> {
    for n in 3..=5 {
        let y: Vec<f64> = (0..n).map(|k| if k == 0 { 0.6 } else if k == 1 { -0.8 } else { 0.0 }).collect();
        let g = lame_fundamental_eval(&y)?;
        let asym = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| (g[i * n + j] - g[j * n + i]).abs()).fold(0.0, f64::max);
        let y2: Vec<f64> = y.iter().map(|v| 3.0 * v).collect();
        let g2 = lame_fundamental_eval(&y2)?;
        let s = 3f64.powi(n as i32 - 2);
        let hom = g.iter().zip(&g2).map(|(a, b)| (a - s * b).abs()).fold(0.0, f64::max);
        println!("n = {n}: FD residual {:.2e}  asymmetry {asym:.1e}  homogeneity {hom:.1e}", lame_fundamental_residual(&y, 1e-3)?);
    }
    Ok(())
}
