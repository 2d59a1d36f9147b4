//! Blow-up detection and the empirical stability harness.

pub mod concentration;
pub mod harnack;
pub mod influence;
pub mod psi;
pub mod subharmonic;
pub mod sweep;

pub use concentration::{
    critical_points, q_power_defect, select_concentration_points, select_concentration_points_with, verify_selection, ConcentrationSet,
    CriterionForm, CriticalPoint, Extremum, SelectionCheck, SelectionOptions,
};
pub use harnack::{harnack_quotient, harnack_quotient_eval, HarnackQuotients};
pub use influence::{influence_radius, InfluenceRadius};
pub use psi::{psi_at, psi_field, rescaled_normalization, PsiField};
pub use subharmonic::{subharmonic_average_check, SubharmonicCheck};
pub use sweep::{stability_sweep, SweepPlan, SweepReport, SweepStep};
