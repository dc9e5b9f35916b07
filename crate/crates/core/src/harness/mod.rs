//! Experiment harness: configuration files, the stability experiment, Itô and
//! quadratic variation checks, and the self test.

pub mod config;
pub mod ito;
pub mod selftest;
pub mod stability;

pub use config::Config;
pub use ito::{ito_residual, qv_check, qv_statistic, ItoFunction, QvReport};
pub use selftest::{selftest, ConstantTable, SelfTestReport};
pub use stability::{stability_experiment, StabilityConfig, StabilityRow, StabilityTable};
