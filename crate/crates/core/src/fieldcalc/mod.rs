//! Grids, fields and the differential/integral operators acting on them.

pub mod fd;
pub mod field;
pub mod grid;
pub mod ops;
pub mod quadrature;
pub mod random;
pub mod sampler;
pub mod snapshot;

pub use field::{same_grid, same_grid_all, sym_index, sym_len, ScalarField, SobolevExponents, SymTensorField, VectorField};
pub use grid::{BallGrid, BallSpec, Grid, GridDescriptor, TorusGrid};
pub use ops::{
    arc, conformal_killing, div_sym, divergence, grad, hessian, integrate, jacobian, l2_inner, l2_inner_vec, lame_apply, lame_symmetry_defect, laplacian,
    newton_kernel_integral, norms, sphere_average, Norms,
};
pub use sampler::{FieldSampler, PointEval, TorusInterp, VectorFieldSampler, VectorPointEval};
