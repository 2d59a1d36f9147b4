//! Coefficient bundles and conformal transformation laws: physical→general
//! substitution, volumetric momentum, change of chart, blow-up rescalings,
//! initial-data reconstruction and constraint residuals.

pub mod bundle;
pub mod coefficients;
pub mod initial_data;
pub mod metric;
pub mod rescale;
pub mod transform;

pub use bundle::{read_general, read_manifest, read_physical, write_general, write_physical, Manifest};
pub use coefficients::{
    physical_to_general, scalar_residual_in, volumetric_momentum, GeneralCoefficients, PhysicalCoefficients, Potential, UniformCoefficients,
};
pub use initial_data::{constraint_residual, reconstruct_initial_data, ConstraintResidual, InitialData};
pub use metric::ConformalMetric;
pub use rescale::{blowup_rescale, mu_at, normalized_quantity, BlowupRescale, Hatted, RescaledScalar, RescaledVector};
pub use transform::{killing_covariance_defect, lame_covariance_defect, laplace_covariance_defect, transform_system, TransformedSystem};
