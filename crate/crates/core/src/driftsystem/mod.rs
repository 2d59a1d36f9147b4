//! The coupled scalar/vector system: residuals in both coefficient languages,
//! positivity floor, manufactured problems and the alternating solver.

pub mod floor;
pub mod manufactured;
pub mod residual;
pub mod solve;

pub use floor::{floor_at_point, positivity_floor, positivity_floor_with, Floor, FloorSearch};
pub use manufactured::{manufactured_coefficients, manufactured_system, reference_problem, DriftSystem};
pub use residual::{physical_scalar_residual, scalar_residual, vector_residual, vector_source_terms};
pub use solve::{check_gates, coupled_iterate, coupled_solve, GateReport, Solution, SolveOptions, SolveReport, TraceRow};
