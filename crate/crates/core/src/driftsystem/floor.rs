//! Minimum-principle lower bound for positive solutions.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::conformal::GeneralCoefficients;
use crate::error::Result;
use crate::fieldcalc::{SobolevExponents, SymTensorField};

/// Outcome of [`positivity_floor`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Floor {
    /// every positive solution satisfies u ≥ ε
    Bound(f64),
    /// the inequality fails at every point for every m: no positive solution
    Infeasible,
}

impl Floor {
    pub fn epsilon(&self) -> Option<f64> {
        match self {
            Floor::Bound(e) => Some(*e),
            Floor::Infeasible => None,
        }
    }
}

/// Scan range and resolution of the root search.
#[derive(Clone, Copy, Debug)]
pub struct FloorSearch {
    pub m_min: f64,
    pub m_max: f64,
    pub per_decade: usize,
}

impl Default for FloorSearch {
    fn default() -> Self {
        FloorSearch { m_min: 1e-8, m_max: 1e8, per_decade: 64 }
    }
}

/// h m^{q+2} − f m^{2q} − a + b m^q, i.e. m^{q+1} times the minimum-principle
/// expression h m − f m^{q-1} − a/m^{q+1} + b/m.
fn scaled_inequality(q: f64, h: f64, f: f64, a: f64, b: f64, m: f64) -> f64 {
    let mq = m.powf(q);
    h * mq * m * m - f * mq * mq - a + b * mq
}

/// Smallest m in (0, m_max] with h m − f m^{q-1} − a/m^{q+1} + b/m ≥ 0.
/// `Some(0.0)` when the inequality already holds at `m_min`, `None` when it
/// holds nowhere on the scan.
pub fn floor_at_point(q: f64, h: f64, f: f64, a: f64, b: f64, search: &FloorSearch) -> Option<f64> {
    let p = |m| scaled_inequality(q, h, f, a, b, m);
    if p(search.m_min) >= 0.0 {
        return Some(0.0);
    }
    let decades = (search.m_max / search.m_min).log10();
    let steps = (decades * search.per_decade as f64).ceil() as usize;
    let ratio = (search.m_max / search.m_min).powf(1.0 / steps as f64);
    let mut lo = search.m_min;
    for k in 1..=steps {
        let hi = if k == steps { search.m_max } else { search.m_min * ratio.powi(k as i32) };
        if p(hi) >= 0.0 {
            let (mut a, mut c) = (lo, hi);
            for _ in 0..200 {
                let mid = 0.5 * (a + c);
                if mid <= a || mid >= c {
                    break;
                }
                if p(mid) >= 0.0 {
                    c = mid;
                } else {
                    a = mid;
                }
            }
            return Some(c);
        }
        lo = hi;
    }
    None
}

/// ε = min over points of the pointwise floor, with a = ρ₁ + |Ψ + ρ₂𝓛W|²
/// when `lw` is given and the lower bound a ≥ ρ₁ otherwise. Points where the
/// inequality has no solution cannot host the minimum of u and are skipped.
pub fn positivity_floor(gc: &GeneralCoefficients, lw: Option<&SymTensorField>) -> Result<Floor> {
    positivity_floor_with(gc, lw, &FloorSearch::default())
}

pub fn positivity_floor_with(gc: &GeneralCoefficients, lw: Option<&SymTensorField>, search: &FloorSearch) -> Result<Floor> {
    gc.check()?;
    let q = SobolevExponents::new(gc.dim())?.q();
    let a = match lw {
        Some(l) => gc.a_field(Some(l))?,
        None => gc.rho1.clone(),
    };
    let mut cache: HashMap<[u64; 4], Option<f64>> = HashMap::new();
    let mut best: Option<f64> = None;
    for i in 0..a.len() {
        let k = [gc.h.data()[i], gc.f.data()[i], a.data()[i], gc.b.data()[i]];
        let key = k.map(f64::to_bits);
        let m = *cache.entry(key).or_insert_with(|| floor_at_point(q, k[0], k[1], k[2], k[3], search));
        if let Some(m) = m {
            best = Some(best.map_or(m, |b: f64| b.min(m)));
        }
    }
    Ok(best.map_or(Floor::Infeasible, Floor::Bound))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::conformal::UniformCoefficients;
    use crate::fieldcalc::{arc, Grid, ScalarField, TorusGrid};

    fn uniform(h: f64, f: f64, a: f64, b: f64) -> GeneralCoefficients {
        let g = arc(Grid::Torus(TorusGrid::unit(3, 8).unwrap()));
        GeneralCoefficients::uniform(g, UniformCoefficients { h, f, rho1: a, b, ..Default::default() })
    }

    #[test]
    fn no_positive_root_is_infeasible() {
        // m⁸ − m¹² − 1 < 0 for all m > 0 (max of m⁸ − m¹² is 4/27)
        assert_eq!(positivity_floor(&uniform(1.0, 1.0, 1.0, 0.0), None).unwrap(), Floor::Infeasible);
    }

    #[test]
    fn steep_h_root_matches_fine_sampling() {
        let eps = positivity_floor(&uniform(100.0, 1.0, 1.0, 0.0), None).unwrap().epsilon().unwrap();
        let p = |m: f64| 100.0 * m.powi(8) - m.powi(12) - 1.0;
        assert!(p(eps) >= 0.0 && p(eps - 1e-10) < 0.0);
        // independent oracle: Newton from the left on the monotone branch
        let mut m = 0.5f64;
        for _ in 0..50 {
            m -= p(m) / (800.0 * m.powi(7) - 12.0 * m.powi(11));
        }
        assert!((eps - m).abs() < 1e-12, "{eps} vs {m}");
    }

    #[test]
    fn floor_grows_with_a() {
        let e1 = positivity_floor(&uniform(100.0, 1.0, 1.0, 0.0), None).unwrap().epsilon().unwrap();
        let e2 = positivity_floor(&uniform(100.0, 1.0, 1.5, 0.0), None).unwrap().epsilon().unwrap();
        assert!(e2 > e1);
    }

    #[test]
    fn worst_point_wins() {
        let mut gc = uniform(100.0, 1.0, 1.0, 0.0);
        gc.rho1 = ScalarField::from_fn(gc.grid().clone(), |x| if x[0] < 0.5 { 1.0 } else { 2.0 });
        let e = positivity_floor(&gc, None).unwrap().epsilon().unwrap();
        let e1 = positivity_floor(&uniform(100.0, 1.0, 1.0, 0.0), None).unwrap().epsilon().unwrap();
        assert_eq!(e, e1);
    }
}
