//! Monotonicity of sphere averages, which holds for subharmonic fields
//! (−Δu ≥ 0 with the geometer sign convention used here, i.e. ∑∂ᵢ²u ≥ 0).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fieldcalc::{sphere_average, ScalarField};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SubharmonicCheck {
    pub radii: Vec<f64>,
    pub averages: Vec<f64>,
    /// max over consecutive radii of ū(Rₖ) − ū(Rₖ₊₁), clipped at 0
    pub max_violation: f64,
    pub tolerance: f64,
    pub monotone: bool,
}

/// Relative quadrature tolerance applied to the decrements.
pub const AVERAGE_RTOL: f64 = 1e-9;

pub fn subharmonic_average_check(u: &ScalarField, center: &[f64], radii: &[f64]) -> Result<SubharmonicCheck> {
    if radii.is_empty() || radii[0] <= 0.0 || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("radii must be positive and strictly increasing: {radii:?}")));
    }
    if center.len() != u.dim() {
        return Err(Error::ShapeMismatch(format!("center has {} coordinates, expected {}", center.len(), u.dim())));
    }
    let averages = radii.iter().map(|&r| sphere_average(u, center, r)).collect::<Result<Vec<f64>>>()?;
    let scale = averages.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = AVERAGE_RTOL * (1.0 + scale);
    let max_violation = averages.windows(2).map(|w| w[0] - w[1]).fold(0.0f64, f64::max);
    Ok(SubharmonicCheck { radii: radii.to_vec(), averages, max_violation, tolerance, monotone: max_violation <= tolerance })
}
