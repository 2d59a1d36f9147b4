//! Closed-form blow-up profiles and the identities they satisfy.

pub mod cgs;
pub mod drift;
pub mod pohozaev;
pub mod profile;
pub mod remainder;

pub use cgs::{cgs_radial_oracle, cgs_radial_oracle_with, oracle_error, OracleOptions, RadialProfile};
pub use drift::{drift_decay_constant, drift_killing, drift_profile_v, drift_vector, DriftProfile};
pub use pohozaev::{pohozaev_balance, pohozaev_balance_with, PohozaevAudit, PohozaevTolerances};
pub use profile::{bubble_eval, bubble_residual, observed_orders, BubbleParams, BubbleValues, RadialPower};
pub use remainder::{remainder_extract_h, Remainder};
