//! Differential operators, integrals and norms on grid fields.
//!
//! Sign convention: `laplacian` is the geometer's Laplacian Δ = -div ∇ and
//! `lame_apply` is Δ⃗W = -div(𝓛W), so both are non-negative operators.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::field::{same_grid, sym_index, sym_len, ScalarField, SymTensorField, VectorField};
use super::grid::{Grid, TorusGrid};
use super::quadrature::{gauss_legendre, sphere_area, SphereRule};
use super::sampler::{FieldSampler, PointEval, TorusInterp};
use crate::error::{Error, Result};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn d1_symbol(t: &TorusGrid, a: usize) -> impl Fn(&[i64], &[bool]) -> Complex64 + '_ {
    let ks = t.kscale();
    move |k, nyq| {
        if nyq[a] {
            zero()
        } else {
            Complex64::new(0.0, ks * k[a] as f64)
        }
    }
}

/// Cartesian gradient.
pub fn grad(f: &ScalarField) -> VectorField {
    let grid = f.grid().clone();
    let comps = match &*grid {
        Grid::Torus(t) => {
            let spec = t.forward(f.data());
            (0..t.dim()).map(|a| t.apply_symbol(&spec, d1_symbol(t, a))).collect()
        }
        Grid::Ball(b) => b.gradient(f.data()),
    };
    VectorField::new(grid, comps).expect("gradient shape")
}

/// Jacobian `J[i][j] = ∂_i W_j`.
pub fn jacobian(w: &VectorField) -> Vec<Vec<Vec<f64>>> {
    let n = w.dim();
    let mut jac = vec![vec![Vec::new(); n]; n];
    match &**w.grid() {
        Grid::Torus(t) => {
            for j in 0..n {
                let spec = t.forward(w.comp(j));
                for i in 0..n {
                    jac[i][j] = t.apply_symbol(&spec, d1_symbol(t, i));
                }
            }
        }
        Grid::Ball(b) => {
            for j in 0..n {
                let g = b.gradient(w.comp(j));
                for (i, gi) in g.into_iter().enumerate() {
                    jac[i][j] = gi;
                }
            }
        }
    }
    jac
}

/// Hessian ∇²f (symmetric, not trace-free).
pub fn hessian(f: &ScalarField) -> SymTensorField {
    let grid = f.grid().clone();
    let n = grid.dim();
    let mut comps = vec![Vec::new(); sym_len(n)];
    match &*grid {
        Grid::Torus(t) => {
            let spec = t.forward(f.data());
            let ks = t.kscale();
            for a in 0..n {
                for b in a..n {
                    comps[sym_index(a, b, n)] = t.apply_symbol(&spec, |k, nyq| {
                        if a != b && (nyq[a] || nyq[b]) {
                            zero()
                        } else {
                            Complex64::new(-ks * ks * (k[a] * k[b]) as f64, 0.0)
                        }
                    });
                }
            }
        }
        Grid::Ball(bg) => {
            let g = bg.gradient(f.data());
            let gg: Vec<Vec<Vec<f64>>> = g.iter().map(|c| bg.gradient(c)).collect();
            for a in 0..n {
                for b in a..n {
                    comps[sym_index(a, b, n)] = gg[a][b].iter().zip(&gg[b][a]).map(|(x, y)| 0.5 * (x + y)).collect();
                }
            }
        }
    }
    SymTensorField::new(grid, comps, false).expect("hessian shape")
}

/// Geometer's Laplacian Δf = -Σ ∂²f of the flat metric.
pub fn laplacian(f: &ScalarField) -> ScalarField {
    match &**f.grid() {
        Grid::Torus(t) => {
            let ks = t.kscale();
            let spec = t.forward(f.data());
            let data = t.apply_symbol(&spec, |k, _| Complex64::new(ks * ks * k.iter().map(|v| (v * v) as f64).sum::<f64>(), 0.0));
            f.with_data(data)
        }
        Grid::Ball(b) => f.with_data(b.laplacian(f.data())),
    }
}

pub fn divergence(w: &VectorField) -> ScalarField {
    let n = w.dim();
    match &**w.grid() {
        Grid::Torus(t) => {
            let mut acc = vec![zero(); t.len()];
            for a in 0..n {
                let spec = t.forward(w.comp(a));
                for (idx, z) in spec.into_iter().enumerate() {
                    let mi = t.multi_index(idx);
                    if !t.is_nyquist(mi[a]) {
                        acc[idx] += z * Complex64::new(0.0, t.kscale() * t.wavenumber(mi[a]) as f64);
                    }
                }
            }
            ScalarField::new(w.grid().clone(), t.inverse_real(acc)).unwrap()
        }
        Grid::Ball(b) => {
            let mut acc = vec![0.0; b.len()];
            for a in 0..n {
                let g = b.gradient(w.comp(a));
                for (s, v) in acc.iter_mut().zip(&g[a]) {
                    *s += v;
                }
            }
            ScalarField::new(w.grid().clone(), acc).unwrap()
        }
    }
}

/// Conformal Killing operator 𝓛W = ∇W + ∇Wᵀ - (2/n)(div W) δ (trace-free).
pub fn conformal_killing(w: &VectorField) -> SymTensorField {
    let n = w.dim();
    let jac = jacobian(w);
    let len = w.len();
    let mut comps = vec![vec![0.0; len]; sym_len(n)];
    for i in 0..len {
        let div: f64 = (0..n).map(|a| jac[a][a][i]).sum();
        for a in 0..n {
            for b in a..n {
                let mut v = jac[a][b][i] + jac[b][a][i];
                if a == b {
                    v -= 2.0 * div / n as f64;
                }
                comps[sym_index(a, b, n)][i] = v;
            }
        }
        // remove roundoff trace
        let tr: f64 = (0..n).map(|a| comps[sym_index(a, a, n)][i]).sum::<f64>() / n as f64;
        for a in 0..n {
            comps[sym_index(a, a, n)][i] -= tr;
        }
    }
    SymTensorField::new(w.grid().clone(), comps, true).expect("conformal Killing shape")
}

/// (div T)_i = Σ_j ∂_j T_ij.
pub fn div_sym(t: &SymTensorField) -> VectorField {
    let n = t.dim();
    let grid = t.grid().clone();
    let comps = match &*grid {
        Grid::Torus(tg) => {
            let specs: Vec<Vec<Complex64>> = t.comps().iter().map(|c| tg.forward(c)).collect();
            let mut kcache = Vec::with_capacity(tg.len());
            for idx in 0..tg.len() {
                let mi = tg.multi_index(idx);
                let row: Vec<Complex64> = (0..n)
                    .map(|a| if tg.is_nyquist(mi[a]) { zero() } else { Complex64::new(0.0, tg.kscale() * tg.wavenumber(mi[a]) as f64) })
                    .collect();
                kcache.push(row);
            }
            (0..n)
                .map(|i| {
                    let acc: Vec<Complex64> =
                        (0..tg.len()).map(|idx| (0..n).map(|j| specs[sym_index(i, j, n)][idx] * kcache[idx][j]).sum()).collect();
                    tg.inverse_real(acc)
                })
                .collect()
        }
        Grid::Ball(b) => {
            let grads: Vec<Vec<Vec<f64>>> = t.comps().iter().map(|c| b.gradient(c)).collect();
            (0..n)
                .map(|i| {
                    let mut acc = vec![0.0; b.len()];
                    for j in 0..n {
                        for (s, v) in acc.iter_mut().zip(&grads[sym_index(i, j, n)][j]) {
                            *s += v;
                        }
                    }
                    acc
                })
                .collect()
        }
    };
    VectorField::new(grid, comps).unwrap()
}

/// Lamé operator Δ⃗W = -div(𝓛W).
pub fn lame_apply(w: &VectorField) -> VectorField {
    div_sym(&conformal_killing(w)).scale(-1.0)
}

/// |∫⟨Δ⃗X, Y⟩ − ½∫⟨𝓛X, 𝓛Y⟩|.
pub fn lame_symmetry_defect(x: &VectorField, y: &VectorField) -> Result<f64> {
    let a = l2_inner_vec(&lame_apply(x), y)?;
    let b = 0.5 * l2_inner_sym(&conformal_killing(x), &conformal_killing(y))?;
    Ok((a - b).abs())
}

/// ∫ f over the domain.
pub fn integrate(f: &ScalarField) -> f64 {
    match &**f.grid() {
        Grid::Torus(t) => f.data().iter().sum::<f64>() * t.cell_volume(),
        Grid::Ball(b) => b.radial_integral(b.radius(), |r| b.sphere_integral(f.data(), r)),
    }
}

pub fn l2_inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    Ok(integrate(&f.mul(g)?))
}

/// ∫⟨X, Y⟩ for vector fields.
pub fn l2_inner_vec(x: &VectorField, y: &VectorField) -> Result<f64> {
    Ok(integrate(&x.dot(y)?))
}

/// ∫⟨S, T⟩ = ∫ Σ_ij S_ij T_ij for symmetric tensors.
pub fn l2_inner_sym(s: &SymTensorField, t: &SymTensorField) -> Result<f64> {
    same_grid(s.grid(), t.grid())?;
    let n = s.dim();
    let mut data = vec![0.0; s.len()];
    for a in 0..n {
        for b in a..n {
            let w = if a == b { 1.0 } else { 2.0 };
            for (i, d) in data.iter_mut().enumerate() {
                *d += w * s.get(a, b)[i] * t.get(a, b)[i];
            }
        }
    }
    Ok(integrate(&ScalarField::new(s.grid().clone(), data)?))
}

/// Default direction rule for spheres that are not centred on a ball grid.
pub fn default_sphere_rule(n: usize) -> SphereRule {
    match n {
        3 => SphereRule::new(3, &[16], 32),
        4 => SphereRule::new(4, &[10, 10], 20),
        _ => SphereRule::new(5, &[8, 8, 8], 16),
    }
}

fn check_ball_fits(grid: &Grid, x: &[f64], r: f64) -> Result<()> {
    match grid {
        Grid::Ball(b) => {
            let c = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            if c + r > b.radius() * (1.0 + 1e-12) {
                return Err(Error::OutsideDomain(format!("sphere B_{r}(x) with |x| = {c} leaves B_{}", b.radius())));
            }
        }
        Grid::Torus(t) => {
            if r > 0.5 * t.length() {
                return Err(Error::OutsideDomain(format!("radius {r} exceeds half the torus period")));
            }
        }
    }
    Ok(())
}

/// Average of f over the sphere ∂B_R(x).
pub fn sphere_average(f: &ScalarField, x: &[f64], r: f64) -> Result<f64> {
    let grid = f.grid();
    check_ball_fits(grid, x, r)?;
    let n = grid.dim();
    if let Grid::Ball(b) = &**grid {
        if x.iter().all(|v| v.abs() < 1e-14) {
            return Ok(b.sphere_integral(f.data(), r) / sphere_area(n - 1));
        }
    }
    let rule = match &**grid {
        Grid::Ball(b) => b.rule().clone(),
        Grid::Torus(_) => default_sphere_rule(n),
    };
    let sampler = FieldSampler::values_only(f, TorusInterp::Local(6));
    let mut acc = 0.0;
    for (dir, w) in rule.directions() {
        let y: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + r * d).collect();
        acc += w * sampler.value(&y)?;
    }
    Ok(acc / sphere_area(n - 1))
}

/// Resolution knobs for [`newton_kernel_integral_fn`].
#[derive(Clone, Debug)]
pub struct KernelQuadrature {
    pub panels: usize,
    pub gauss: usize,
    pub rule: SphereRule,
}

impl KernelQuadrature {
    pub fn default_for(n: usize) -> Self {
        let rule = match n {
            3 => SphereRule::new(3, &[32], 64),
            4 => SphereRule::new(4, &[12, 12], 24),
            _ => SphereRule::new(5, &[8, 8, 8], 16),
        };
        KernelQuadrature { panels: 32, gauss: 8, rule }
    }
}

/// ∫_{B_R(x)} |x-y|^p f(y) dy for a pointwise-defined f, p > -n.
///
/// Polar coordinates about x; the first radial panel uses the substitution
/// r = r₁ t^{1/(p+n)} which absorbs the kernel singularity.
pub fn newton_kernel_integral_fn<F>(n: usize, f: F, x: &[f64], r: f64, p: f64, q: &KernelQuadrature) -> Result<f64>
where
    F: Fn(&[f64]) -> Result<f64>,
{
    if p <= -(n as f64) {
        return Err(Error::InvalidArgument(format!("kernel exponent p = {p} must exceed -n")));
    }
    let dirs = q.rule.directions();
    let shell = |rho: f64| -> Result<f64> {
        let mut acc = 0.0;
        for (d, w) in &dirs {
            let y: Vec<f64> = x.iter().zip(d).map(|(a, b)| a + rho * b).collect();
            acc += w * f(&y)?;
        }
        Ok(acc)
    };
    let e = p + n as f64;
    let r1 = r / q.panels as f64;
    let mut total = 0.0;
    // first panel: ∫_0^{r1} r^{e-1} S(r) dr = r1^e/e ∫_0^1 S(r1 t^{1/e}) dt
    let (ts, ws) = gauss_legendre(2 * q.gauss, 0.0, 1.0);
    for (t, w) in ts.iter().zip(&ws) {
        total += w * r1.powf(e) / e * shell(r1 * t.powf(1.0 / e))?;
    }
    for k in 1..q.panels {
        let (rs, ws) = gauss_legendre(q.gauss, k as f64 * r1, (k + 1) as f64 * r1);
        for (rho, w) in rs.iter().zip(&ws) {
            total += w * rho.powf(e - 1.0) * shell(*rho)?;
        }
    }
    Ok(total)
}

/// ∫_{B_R(x)} |x-y|^p f(y) dy for a grid field.
pub fn newton_kernel_integral(f: &ScalarField, x: &[f64], r: f64, p: f64) -> Result<f64> {
    check_ball_fits(f.grid(), x, r)?;
    let sampler = FieldSampler::values_only(f, TorusInterp::Local(6));
    newton_kernel_integral_fn(f.dim(), |y| sampler.value(y), x, r, p, &KernelQuadrature::default_for(f.dim()))
}

/// Sup, C¹, C² norms and (optionally) the Hölder seminorm of exponent η.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Norms {
    pub sup: f64,
    pub c1: f64,
    pub c2: f64,
    pub holder: Option<f64>,
}

pub fn norms(f: &ScalarField, holder_eta: Option<f64>) -> Norms {
    let sup = f.sup();
    let c1 = sup + grad(f).sup();
    let c2 = c1 + hessian(f).sup();
    let holder = holder_eta.map(|eta| holder_seminorm(f, eta));
    Norms { sup, c1, c2, holder }
}

/// max |f(x) - f(y)| / |x - y|^η over node pairs with |x - y| ≤ L/4.
pub fn holder_seminorm(f: &ScalarField, eta: f64) -> f64 {
    let grid = f.grid();
    let rad = 0.25 * grid.scale();
    let data = f.data();
    match &**grid {
        Grid::Torus(t) => {
            let n = t.dim();
            let h = t.spacing();
            let kmax = (rad / h).floor() as i64;
            let m = t.m() as i64;
            let side = (2 * kmax + 1) as usize;
            let mut offsets = Vec::new();
            for code in 0..side.pow(n as u32) {
                let mut c = code;
                let o: Vec<i64> = (0..n)
                    .map(|_| {
                        let v = (c % side) as i64 - kmax;
                        c /= side;
                        v
                    })
                    .collect();
                let d2: i64 = o.iter().map(|v| v * v).sum();
                // keep one of each ±offset pair
                let positive = o.iter().find(|&&v| v != 0).is_some_and(|&v| v > 0);
                if positive && (d2 as f64) * h * h <= rad * rad * (1.0 + 1e-12) {
                    offsets.push((o, (d2 as f64).sqrt() * h));
                }
            }
            let mut best = 0.0f64;
            for idx in 0..t.len() {
                let mi = t.multi_index(idx);
                for (off, d) in &offsets {
                    let j: Vec<usize> = mi.iter().zip(off).map(|(&a, &b)| (a as i64 + b).rem_euclid(m) as usize).collect();
                    let v = (data[idx] - data[t.flat_index(&j)]).abs() / d.powf(eta);
                    best = best.max(v);
                }
            }
            best
        }
        Grid::Ball(b) => {
            let pts: Vec<&[f64]> = (0..b.len()).map(|i| b.point(i)).collect();
            let mut best = 0.0f64;
            for i in 0..pts.len() {
                for j in i + 1..pts.len() {
                    let d = pts[i].iter().zip(pts[j]).map(|(a, c)| (a - c) * (a - c)).sum::<f64>().sqrt();
                    if d > 1e-14 && d <= rad {
                        best = best.max((data[i] - data[j]).abs() / d.powf(eta));
                    }
                }
            }
            best
        }
    }
}

/// Convenience: grid as an `Arc`.
pub fn arc(grid: Grid) -> Arc<Grid> {
    Arc::new(grid)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::grid::BallGrid;
    use std::f64::consts::PI;

    fn torus(n: usize, m: usize) -> Arc<Grid> {
        arc(Grid::Torus(TorusGrid::unit(n, m).unwrap()))
    }

    #[test]
    fn torus_laplacian_of_mode() {
        let g = torus(3, 16);
        let tp = 2.0 * PI;
        let f = ScalarField::from_fn(g, |x| (tp * x[0]).sin() * (2.0 * tp * x[2]).cos());
        let l = laplacian(&f);
        for (i, v) in l.data().iter().enumerate() {
            assert!((v - 5.0 * tp * tp * f.data()[i]).abs() < 1e-9);
        }
        let h = hessian(&f);
        for i in 0..f.len() {
            assert!((h.trace().data()[i] + l.data()[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn conformal_killing_trace_free_and_kills_rotations() {
        let mut prev = f64::INFINITY;
        for nt in [8, 16] {
            let g = arc(Grid::Ball(BallGrid::uniform(3, 1.0, 10, &[nt], 2 * nt).unwrap()));
            let rot = VectorField::from_fn(g.clone(), |x| vec![-x[1], x[0], 0.0]);
            let l = conformal_killing(&rot);
            assert!(l.trace().sup() < 1e-12);
            let dil = VectorField::from_fn(g, |x| x.to_vec());
            let err = l.sup().max(conformal_killing(&dil).sup());
            assert!(err < 1e-3 && err < prev, "{err}");
            prev = err;
        }
        assert!(prev < 1e-5, "{prev}");
    }

    #[test]
    fn ball_volume_and_sphere_average() {
        for n in 3..=5 {
            let g = arc(Grid::Ball(BallGrid::uniform_default(n, 1.0, 16).unwrap()));
            let one = ScalarField::constant(g.clone(), 1.0);
            let vol = sphere_area(n - 1) / n as f64;
            assert!((integrate(&one) - vol).abs() < 1e-12);
            let r2 = ScalarField::from_fn(g, |x| x.iter().map(|v| v * v).sum());
            assert!((sphere_average(&r2, &vec![0.0; n], 0.5).unwrap() - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn newton_integral_constant() {
        let g = torus(3, 16);
        let one = ScalarField::constant(g, 1.0);
        let v = newton_kernel_integral(&one, &[0.5, 0.5, 0.5], 0.3, -1.0).unwrap();
        assert!((v - 2.0 * PI * 0.09).abs() < 1e-10);
        assert!(newton_kernel_integral(&one, &[0.5, 0.5, 0.5], 0.3, -3.0).is_err());
    }

    #[test]
    fn lame_is_symmetric_on_random_pairs() {
        use crate::fieldcalc::random::band_limited_vector;
        use rand::SeedableRng;
        let g = torus(3, 16);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2);
        for _ in 0..3 {
            let x = band_limited_vector(g.clone(), &mut rng, 3, 4);
            let y = band_limited_vector(g.clone(), &mut rng, 3, 4);
            assert!(lame_symmetry_defect(&x, &y).unwrap() <= 1e-10);
        }
    }
}
