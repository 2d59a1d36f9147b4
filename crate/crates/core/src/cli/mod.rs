//! Configuration and subcommand dispatch behind the `conformal-drift` binary.

pub mod config;
pub mod dispatch;

pub use config::{parse_config, parse_config_str, BubbleConfig, CoefficientSource, Command, GridSpec, PohozaevConfig, RunConfig, DEFAULTS};
pub use dispatch::{artifact_manifest, dispatch, Check, Outcome};
