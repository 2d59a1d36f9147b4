//! Green representation checks for the scalar Laplacian and the Lamé
//! operator.

use serde::{Deserialize, Serialize};

use super::kernels::green_scalar_eval;
use super::neumann::NeumannGreenForms;
use crate::error::{Error, Result};
use crate::fieldcalc::ops::{conformal_killing, default_sphere_rule, lame_apply, laplacian, sphere_average};
use crate::fieldcalc::quadrature::gauss_legendre;
use crate::fieldcalc::sampler::{grid_weights, FieldSampler, PointEval, TorusInterp};
use crate::fieldcalc::{ScalarField, VectorField};

const INTERP: TorusInterp = TorusInterp::Local(8);

fn radial_rule(len: f64, panels: usize, pts: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::new();
    let h = len / panels as f64;
    for p in 0..panels {
        let (xs, ws) = gauss_legendre(pts, p as f64 * h, (p + 1) as f64 * h);
        out.extend(xs.into_iter().zip(ws));
    }
    out
}

/// max over `points` of |u(x) - ∫_{B_x(ρ)} Γ_ρ(x,y) Δu(y) dy - ū_x(ρ)|, where
/// Γ_ρ vanishes on ∂B_x(ρ) and ū_x(ρ) is the sphere average.
pub fn representation_check_scalar(u: &ScalarField, points: &[Vec<f64>], rho: f64) -> Result<f64> {
    let n = u.dim();
    let lap = laplacian(u);
    let ls = FieldSampler::values_only(&lap, INTERP);
    let us = FieldSampler::values_only(u, INTERP);
    let dirs = default_sphere_rule(n).directions();
    let radial = radial_rule(rho, 4, 8);
    let mut worst = 0.0f64;
    for x in points {
        let avg = sphere_average(u, x, rho)?;
        let mut vol = 0.0;
        for (d, wd) in &dirs {
            for &(s, ws) in &radial {
                let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + s * b).collect();
                let z: Vec<f64> = d.iter().map(|v| s * v).collect();
                let g = green_scalar_eval(&vec![0.0; n], &z, rho / 3.0)?;
                vol += wd * ws * s.powi(n as i32 - 1) * g * ls.value(&y)?;
            }
        }
        worst = worst.max((us.value(x)? - vol - avg).abs());
    }
    Ok(worst)
}

/// Defects of the Neumann representation X - π_R X = ∫⟨Δ⃗X, G⟩ + ∫_∂B⟨𝓛X·ν, G⟩.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct LameRepresentation {
    /// max |reconstruction - (X - π_R X)|
    pub value_defect: f64,
    /// max |𝓛(reconstruction) - 𝓛X| (𝓛 by differences in the source point)
    pub lw_defect: f64,
    /// max |boundary term|
    pub boundary_term: f64,
}

type Traction = (Vec<f64>, Vec<f64>, f64);

/// ∫⟨F, G(x,·)⟩ + Σ_b w_b⟨t_b, G(x, y_b)⟩ and the size of the boundary part.
fn reconstruct_with(
    forms: &NeumannGreenForms,
    x: &[f64],
    f: &dyn Fn(&[f64]) -> Result<Vec<f64>>,
    bnd: &[Traction],
) -> Result<(Vec<f64>, f64)> {
    let n = forms.dim();
    let r = forms.radius();
    let src = forms.source(x)?;
    let mut out = vec![0.0; n];
    let x2: f64 = x.iter().map(|v| v * v).sum();
    for (d, wd) in default_sphere_rule(n).directions() {
        let xd: f64 = x.iter().zip(&d).map(|(a, b)| a * b).sum();
        let rmax = -xd + (xd * xd + r * r - x2).sqrt();
        for (s, wr) in radial_rule(rmax, 3, 8) {
            let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + s * b).collect();
            let fy = f(&y)?;
            let g = src.eval(&y)?;
            let wt = wd * wr * s.powi(n as i32 - 1);
            for i in 0..n {
                out[i] += wt * (0..n).map(|j| fy[j] * g[i * n + j]).sum::<f64>();
            }
        }
    }
    let mut bterm = vec![0.0; n];
    for (y, t, wgt) in bnd {
        let g = src.eval(y)?;
        for i in 0..n {
            bterm[i] += wgt * (0..n).map(|j| t[j] * g[i * n + j]).sum::<f64>();
        }
    }
    let mut bmax = 0.0f64;
    for i in 0..n {
        bmax = bmax.max(bterm[i].abs());
        out[i] += bterm[i];
    }
    Ok((out, bmax))
}

/// Right-hand side of the Neumann representation at x for closed-form
/// data: `lame` gives Δ⃗X and `traction` gives 𝓛X·ν on the sphere.
pub fn lame_reconstruct_fn<F, T>(forms: &NeumannGreenForms, x: &[f64], lame: F, traction: T) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Vec<f64>,
    T: Fn(&[f64]) -> Vec<f64>,
{
    let (pts, wts) = forms.boundary_rule();
    let bnd: Vec<Traction> = pts.iter().zip(wts).map(|(y, w)| (y.clone(), traction(y), *w)).collect();
    Ok(reconstruct_with(forms, x, &|y| Ok(lame(y)), &bnd)?.0)
}

pub fn representation_check_lame(forms: &NeumannGreenForms, w: &VectorField, points: &[Vec<f64>]) -> Result<LameRepresentation> {
    let n = w.dim();
    let ball = w.grid().as_ball().ok_or_else(|| Error::UnsupportedDomain("Lamé representation needs a ball grid".into()))?;
    let r = forms.radius();
    if (ball.radius() - r).abs() > 1e-12 * r || (ball.radial().last().unwrap() - r).abs() > 1e-12 * r {
        return Err(Error::InvalidGrid("field grid must end on the sphere of the forms' radius".into()));
    }
    let f = lame_apply(w);
    let fcomps = f.comps().to_vec();
    let lw = conformal_killing(w);
    let proj = forms.project(w)?;
    let rest = w.sub(&proj)?;
    let ws: Vec<FieldSampler> = (0..n).map(|c| FieldSampler::values_only(&rest.component(c), INTERP)).collect();
    let lws: Vec<FieldSampler> =
        lw.comps().iter().map(|c| FieldSampler::values_only(&ScalarField::new(w.grid().clone(), c.clone()).unwrap(), INTERP)).collect();

    // traction 𝓛X·ν at the outer ring of nodes
    let rule = ball.rule();
    let ir = ball.radial().len() - 1;
    let mut bnd: Vec<Traction> = Vec::new();
    for ia in 0..ball.n_ang() {
        let node = ball.node(ir, ia);
        let y = ball.point(node).to_vec();
        let wgt = rule.weight(&rule.unflatten(ia)) * r.powi(n as i32 - 1);
        let s = lw.at(node);
        let t: Vec<f64> = (0..n).map(|k| (0..n).map(|l| s[k * n + l] * y[l] / r).sum()).collect();
        bnd.push((y, t, wgt));
    }
    let fsample = |y: &[f64]| -> Result<Vec<f64>> {
        let wts = grid_weights(w.grid(), y, INTERP)?;
        Ok(fcomps.iter().map(|c| wts.iter().map(|(i, a)| a * c[*i]).sum()).collect())
    };
    let reconstruct = |x: &[f64]| reconstruct_with(forms, x, &fsample, &bnd);
    let h = 0.02 * r;
    let mut rep = LameRepresentation::default();
    for x in points {
        let (rec, bmax) = reconstruct(x)?;
        rep.boundary_term = rep.boundary_term.max(bmax);
        for i in 0..n {
            rep.value_defect = rep.value_defect.max((rec[i] - ws[i].value(x)?).abs());
        }
        // J[k][j] = ∂_k rec_j by fourth-order differences
        let mut jac = vec![0.0; n * n];
        for k in 0..n {
            let shifted = |s: f64| -> Result<Vec<f64>> {
                let mut y = x.clone();
                y[k] += s;
                Ok(reconstruct(&y)?.0)
            };
            let (p1, m1, p2, m2) = (shifted(h)?, shifted(-h)?, shifted(2.0 * h)?, shifted(-2.0 * h)?);
            for j in 0..n {
                jac[k * n + j] = (8.0 * (p1[j] - m1[j]) - (p2[j] - m2[j])) / (12.0 * h);
            }
        }
        let div: f64 = (0..n).map(|k| jac[k * n + k]).sum();
        for a in 0..n {
            for b in a..n {
                let mut v = jac[a * n + b] + jac[b * n + a];
                if a == b {
                    v -= 2.0 / n as f64 * div;
                }
                let idx = crate::fieldcalc::sym_index(a, b, n);
                rep.lw_defect = rep.lw_defect.max((v - lws[idx].value(x)?).abs());
            }
        }
    }
    Ok(rep)
}
