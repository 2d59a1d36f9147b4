//! Critical points of a positive field on the torus and the greedy choice of
//! concentration points.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::fieldcalc::{grad, FieldSampler, Grid, PointEval, ScalarField, SobolevExponents, TorusGrid, TorusInterp};

/// Which algebraic form of the separation criterion is tested.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub enum CriterionForm {
    /// d^{(n−2)/2} u ≥ 1
    #[default]
    Root,
    /// dⁿ u^q ≥ 1
    Power,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Extremum {
    Max,
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CriticalPoint {
    pub x: Vec<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub kind: Extremum,
}

#[derive(Clone, Debug)]
pub struct SelectionOptions {
    pub form: CriterionForm,
    /// accept a refined point when |∇u| ≤ grad_tol·‖∇u‖_sup
    pub grad_tol: f64,
    pub newton_iters: usize,
    /// points per axis of the local interpolant used by Newton
    pub stencil: usize,
}

impl Default for SelectionOptions {
    fn default() -> Self {
        SelectionOptions { form: CriterionForm::Root, grad_tol: 1e-6, newton_iters: 12, stencil: 6 }
    }
}

/// Selected points in acceptance order, with every critical point that was
/// considered.
#[derive(Clone, Debug, Serialize)]
pub struct ConcentrationSet {
    pub n: usize,
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
    /// row-major N×N
    pub distances: Vec<f64>,
    pub critical: Vec<CriticalPoint>,
    pub form: CriterionForm,
    #[serde(skip)]
    pub grid: Arc<Grid>,
}

impl ConcentrationSet {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.distances[i * self.len() + j]
    }
}

/// Both post-conditions of the selection, evaluated independently.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionCheck {
    /// min over i ≠ j of d(xᵢ,xⱼ)^{(n−2)/2}u(xᵢ); +∞ for a single point
    pub separation_min: f64,
    /// max over critical x of (minᵢ d(xᵢ,x))^{(n−2)/2}u(x)
    pub critical_max: f64,
    pub separation_ok: bool,
    pub critical_ok: bool,
}

impl SelectionCheck {
    pub fn ok(&self) -> bool {
        self.separation_ok && self.critical_ok
    }
}

fn criterion(form: CriterionForm, n: usize, d: f64, u: f64) -> f64 {
    let nf = n as f64;
    match form {
        CriterionForm::Root => d.powf(0.5 * (nf - 2.0)) * u,
        CriterionForm::Power => d.powi(n as i32) * u.powf(2.0 * nf / (nf - 2.0)),
    }
}

/// |(d^{(n−2)/2}u)^q − dⁿu^q| relative to dⁿu^q.
pub fn q_power_defect(n: usize, d: f64, u: f64) -> f64 {
    let q = 2.0 * n as f64 / (n as f64 - 2.0);
    let a = criterion(CriterionForm::Root, n, d, u).powf(q);
    let b = criterion(CriterionForm::Power, n, d, u);
    if b == 0.0 {
        a.abs()
    } else {
        (a - b).abs() / b
    }
}

fn neighbour_offsets(n: usize) -> Vec<Vec<i64>> {
    (0..3usize.pow(n as u32))
        .map(|mut c| {
            (0..n)
                .map(|_| {
                    let v = (c % 3) as i64 - 1;
                    c /= 3;
                    v
                })
                .collect::<Vec<i64>>()
        })
        .filter(|o| o.iter().any(|&v| v != 0))
        .collect()
}

fn shifted(t: &TorusGrid, mi: &[usize], off: &[i64]) -> usize {
    let m = t.m() as i64;
    let j: Vec<usize> = mi.iter().zip(off).map(|(&a, &b)| (a as i64 + b).rem_euclid(m) as usize).collect();
    t.flat_index(&j)
}

fn wrap(t: &TorusGrid, x: &mut [f64]) {
    let l = t.length();
    for v in x.iter_mut() {
        *v = v.rem_euclid(l);
        if *v >= l {
            *v = 0.0;
        }
    }
}

/// Newton on ∇u = 0 with steps capped at one cell. Returns the final
/// gradient norm and whether x moved.
fn newton(sampler: &FieldSampler, t: &TorusGrid, x: &mut [f64], h: f64, thresh: f64, iters: usize) -> Result<(f64, bool)> {
    let n = x.len();
    let mut g = sampler.gradient(x)?;
    let mut gn = g.iter().map(|c| c * c).sum::<f64>().sqrt();
    let mut moved = false;
    let mut it = 0;
    while gn > thresh && it < iters {
        it += 1;
        let hm = DMatrix::from_row_slice(n, n, &sampler.hessian(x)?);
        let Some(step) = hm.lu().solve(&DVector::from_column_slice(&g)) else {
            break;
        };
        let len = step.norm();
        let s = if len > h { h / len } else { 1.0 };
        for a in 0..n {
            x[a] -= s * step[a];
        }
        wrap(t, x);
        moved = true;
        g = sampler.gradient(x)?;
        gn = g.iter().map(|c| c * c).sum::<f64>().sqrt();
    }
    Ok((gn, moved))
}

/// Local extrema of the grid values, refined to critical points of the
/// interpolant. Candidates whose refinement does not reach the gradient
/// threshold are dropped.
pub fn critical_points(u: &ScalarField, opts: &SelectionOptions) -> Result<Vec<CriticalPoint>> {
    let t = u
        .grid()
        .as_torus()
        .ok_or_else(|| Error::UnsupportedDomain("concentration-point selection runs on torus grids".into()))?;
    let n = t.dim();
    let h = t.spacing();
    let data = u.data();
    let gsup = grad(u).sup();
    let thresh = opts.grad_tol * gsup;
    let sampler = FieldSampler::with_mode(u, TorusInterp::Local(opts.stencil));
    let mut spectral: Option<FieldSampler> = None;
    let offsets = neighbour_offsets(n);

    let mut found: Vec<CriticalPoint> = Vec::new();
    for idx in 0..t.len() {
        let mi = t.multi_index(idx);
        let v = data[idx];
        let (mut is_max, mut is_min) = (true, true);
        for off in &offsets {
            let w = data[shifted(t, &mi, off)];
            is_max &= v >= w;
            is_min &= v <= w;
            if !is_max && !is_min {
                break;
            }
        }
        if !is_max && !is_min {
            continue;
        }
        let kind = if is_max { Extremum::Max } else { Extremum::Min };
        let mut x = t.point(idx);
        let mut moved = false;
        // per-axis parabola through the three nodes
        for a in 0..n {
            let mut e = vec![0i64; n];
            e[a] = 1;
            let up = data[shifted(t, &mi, &e)];
            e[a] = -1;
            let um = data[shifted(t, &mi, &e)];
            let den = up - 2.0 * v + um;
            if den != 0.0 {
                let dx = (-0.5 * (up - um) / den).clamp(-0.5, 0.5) * h;
                if dx != 0.0 {
                    x[a] += dx;
                    moved = true;
                }
            }
        }
        let start = x.clone();
        let (mut gn, mut stepped) = newton(&sampler, t, &mut x, h, thresh, opts.newton_iters)?;
        let mut used = &sampler;
        if gn > thresh {
            // the local interpolant's gradient jumps between cells; retry on
            // the smooth trigonometric interpolant
            let s = spectral.get_or_insert_with(|| FieldSampler::with_mode(u, TorusInterp::Spectral));
            x = start;
            (gn, stepped) = newton(s, t, &mut x, h, thresh, opts.newton_iters)?;
            used = s;
        }
        moved |= stepped;
        if gn > thresh {
            continue;
        }
        wrap(t, &mut x);
        let value = if moved { used.value(&x)? } else { v };
        found.push(CriticalPoint { x, value, grad_norm: gn, kind });
    }

    // Newton from neighbouring nodes may land on the same point; bucket by
    // nearest node and compare within the surrounding block
    let m = t.m() as i64;
    let key = |x: &[f64]| -> Vec<usize> { x.iter().map(|v| ((v / h).round() as i64).rem_euclid(m) as usize).collect() };
    let mut buckets: HashMap<Vec<usize>, Vec<usize>> = HashMap::new();
    let mut out: Vec<CriticalPoint> = Vec::with_capacity(found.len());
    let mut block = offsets.clone();
    block.push(vec![0; n]);
    for c in found {
        let kc = key(&c.x);
        let mut dup = None;
        'search: for off in &block {
            let kk: Vec<usize> = kc.iter().zip(off).map(|(&a, &b)| (a as i64 + b).rem_euclid(m) as usize).collect();
            if let Some(list) = buckets.get(&kk) {
                for &k in list {
                    if t.distance(&out[k].x, &c.x) < 0.5 * h {
                        dup = Some(k);
                        break 'search;
                    }
                }
            }
        }
        match dup {
            Some(k) => {
                if c.value > out[k].value {
                    out[k] = c;
                }
            }
            None => {
                buckets.entry(kc).or_default().push(out.len());
                out.push(c);
            }
        }
    }
    Ok(out)
}

fn lex_cmp(a: &[f64], b: &[f64]) -> std::cmp::Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Equal => continue,
            o => return o,
        }
    }
    std::cmp::Ordering::Equal
}

pub fn select_concentration_points(u: &ScalarField) -> Result<ConcentrationSet> {
    select_concentration_points_with(u, &SelectionOptions::default())
}

/// Greedy construction: critical points by decreasing u (lexicographic
/// tie-break), each accepted when the criterion against every accepted point
/// reaches 1. The result is verified before it is returned.
pub fn select_concentration_points_with(u: &ScalarField, opts: &SelectionOptions) -> Result<ConcentrationSet> {
    let n = u.dim();
    SobolevExponents::new(n)?;
    if u.min() <= 0.0 {
        return Err(Error::Positivity(format!("min u = {:e}", u.min())));
    }
    let grid = u.grid().clone();
    let mut crit = critical_points(u, opts)?;
    if crit.is_empty() {
        return Err(Error::Selection("no critical points found".into()));
    }
    crit.sort_by(|a, b| b.value.total_cmp(&a.value).then_with(|| lex_cmp(&a.x, &b.x)));

    let mut accepted: Vec<usize> = Vec::new();
    for (k, c) in crit.iter().enumerate() {
        if accepted.iter().all(|&i| criterion(opts.form, n, grid.distance(&crit[i].x, &c.x), c.value) >= 1.0) {
            accepted.push(k);
        }
    }
    let points: Vec<Vec<f64>> = accepted.iter().map(|&i| crit[i].x.clone()).collect();
    let values: Vec<f64> = accepted.iter().map(|&i| crit[i].value).collect();
    let mut distances = vec![0.0; points.len() * points.len()];
    for i in 0..points.len() {
        for j in 0..points.len() {
            distances[i * points.len() + j] = grid.distance(&points[i], &points[j]);
        }
    }
    let set = ConcentrationSet { n, points, values, distances, critical: crit, form: opts.form, grid };
    let check = verify_selection(&set);
    if !check.ok() {
        return Err(Error::Selection(format!(
            "post-hoc check failed: separation {:e}, critical {:e}",
            check.separation_min, check.critical_max
        )));
    }
    Ok(set)
}

/// Recomputes both inequalities from the stored points, values and distances.
pub fn verify_selection(set: &ConcentrationSet) -> SelectionCheck {
    let n = set.n;
    let len = set.len();
    let mut separation_min = f64::INFINITY;
    for i in 0..len {
        for j in 0..len {
            if i != j {
                separation_min = separation_min.min(criterion(set.form, n, set.distance(i, j), set.values[i]));
            }
        }
    }
    let critical_max = set
        .critical
        .iter()
        .map(|c| {
            let d = set.points.iter().map(|p| set.grid.distance(p, &c.x)).fold(f64::INFINITY, f64::min);
            criterion(set.form, n, d, c.value)
        })
        .fold(f64::NEG_INFINITY, f64::max);
    SelectionCheck { separation_min, critical_max, separation_ok: separation_min >= 1.0, critical_ok: critical_max <= 1.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fieldcalc::{arc, BallGrid};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn torus(n: usize, m: usize) -> Arc<Grid> {
        arc(Grid::Torus(TorusGrid::unit(n, m).unwrap()))
    }

    fn bump(c: &[f64], kappa: f64) -> impl Fn(&[f64]) -> f64 + '_ {
        move |x: &[f64]| (kappa * x.iter().zip(c).map(|(a, b)| (2.0 * PI * (a - b)).cos() - 1.0).sum::<f64>()).exp()
    }

    #[test]
    fn single_bump_gives_its_center() {
        let c = [0.31, 0.55, 0.42];
        let b = bump(&c, 3.0);
        let u = ScalarField::from_fn(torus(3, 24), |x| 1.0 + 4.0 * b(x));
        let s = select_concentration_points(&u).unwrap();
        assert_eq!(s.len(), 1);
        let d: f64 = s.points[0].iter().zip(&c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(d < 1e-4, "{:?}", s.points[0]);
        assert!(verify_selection(&s).ok());
    }

    #[test]
    fn constant_field_picks_first_node() {
        let u = ScalarField::constant(torus(3, 8), 0.5);
        let s = select_concentration_points(&u).unwrap();
        assert_eq!(s.points, vec![vec![0.0; 3]]);
        let chk = verify_selection(&s);
        assert!(chk.separation_min.is_infinite());
        // farthest point is at √3/2
        assert!(chk.critical_max <= 0.75f64.powf(0.25) * 0.5 + 1e-12);
    }

    #[test]
    fn separated_bumps_are_both_selected() {
        let (c1, c2) = ([0.25, 0.25, 0.25], [0.75, 0.75, 0.75]);
        let (b1, b2) = (bump(&c1, 4.0), bump(&c2, 4.0));
        let u = ScalarField::from_fn(torus(3, 24), |x| 1.0 + 4.0 * b1(x) + 3.0 * b2(x));
        let s = select_concentration_points(&u).unwrap();
        assert_eq!(s.len(), 2);
        assert!(s.values[0] > s.values[1]);
        assert!(s.distance(0, 1) > 0.8);
    }

    fn random_field(rng: &mut ChaCha8Rng, n: usize, m: usize) -> ScalarField {
        let modes: Vec<(Vec<f64>, f64, f64)> = (0..4)
            .map(|_| ((0..n).map(|_| rng.gen_range(-2i32..=2) as f64).collect(), rng.gen_range(0.1..0.6), rng.gen_range(0.0..2.0 * PI)))
            .collect();
        let base = 1.2 + modes.iter().map(|m| m.1).sum::<f64>();
        ScalarField::from_fn(torus(n, m), move |x| {
            base + modes.iter().map(|(k, a, p)| a * (2.0 * PI * k.iter().zip(x).map(|(s, t)| s * t).sum::<f64>() + p).cos()).sum::<f64>()
        })
    }

    #[test]
    fn random_fields_pass_verifier_in_both_forms() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..10 {
            let u = random_field(&mut rng, 3, 12);
            let a = select_concentration_points(&u).unwrap();
            let b = select_concentration_points_with(&u, &SelectionOptions { form: CriterionForm::Power, ..Default::default() }).unwrap();
            assert!(verify_selection(&a).ok() && verify_selection(&b).ok());
            assert_eq!(a.points, b.points);
        }
    }

    #[test]
    fn q_power_forms_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in 3..=5 {
            for _ in 0..200 {
                let (d, u) = (rng.gen_range(1e-3..2.0), rng.gen_range(1e-2..50.0));
                assert!(q_power_defect(n, d, u) <= 1e-12);
            }
        }
    }

    #[test]
    fn rejects_ball_and_nonpositive() {
        let g = arc(Grid::Ball(BallGrid::uniform_default(3, 1.0, 8).unwrap()));
        assert!(matches!(select_concentration_points(&ScalarField::constant(g, 1.0)), Err(Error::UnsupportedDomain(_))));
        assert!(matches!(select_concentration_points(&ScalarField::constant(torus(3, 8), 0.0)), Err(Error::Positivity(_))));
    }
}
