pub mod bubbles;
pub mod cli;
pub mod conformal;
pub mod diagnostics;
pub mod driftsystem;
pub mod elliptic;
pub mod error;
pub mod fieldcalc;

pub use error::{Error, Result};
