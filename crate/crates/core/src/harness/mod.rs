//! Experiment configuration, exponent fitting, report emission, and the
//! pipeline runner behind the CLI.

pub mod config;
pub mod fit;
pub mod report;
pub mod runner;

pub use config::ExperimentConfig;
pub use fit::{fit_exponent, ExponentFit, FitVerdict, SlopeTarget, DEFINITIVE_R_SQUARED};
