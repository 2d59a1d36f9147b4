//! Linear solvers and Green machinery for Δ + h and the Lamé operator Δ⃗.

pub mod kernels;
pub mod krylov;
pub mod neumann;
pub mod periodic;
pub mod representation;

pub use kernels::{green_scalar_eval, lame_fundamental_eval, lame_fundamental_jacobian, lame_fundamental_residual};
pub use krylov::{gmres, GmresOptions, GmresOutcome};
pub use neumann::{neumann_green_build, GreenSource, NeumannGreenForms, NeumannOptions};
pub use periodic::{
    coercivity_probe, lame_spectral_inverse, scalar_spectral_inverse, solve_lame_periodic, solve_scalar_periodic,
    solve_scalar_periodic_with,
};
pub use representation::{lame_reconstruct_fn, representation_check_lame, representation_check_scalar, LameRepresentation};
