//! Command-line front end: configuration, figure datasets, sweeps and the
//! verification report.

pub mod config;
pub mod figures;
pub mod output;
pub mod sweep;
pub mod verify;

use thiserror::Error;

use crate::geophase::PhaseError;
use crate::quadrature::QuadratureError;
use crate::spectra::SpectraError;

pub use config::{BathMode, EvaluatorChoice, OutputFormat, PartialConfig, RunConfig};
pub use output::Dataset;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Resolves defaults ← figure defaults ← `user` and builds the dataset.
pub fn cmd_figure(name: &str, user: &PartialConfig) -> Result<(RunConfig, Dataset), CliError> {
    let layer = figures::figure_defaults(name)?.overlay(user);
    let cfg = RunConfig::resolve(&layer)?;
    let data = figures::run_figure(name, &cfg, user)?;
    Ok((cfg, data))
}

pub fn cmd_sweep(
    user: &PartialConfig,
    spec: &sweep::SweepSpec,
) -> Result<(RunConfig, Dataset), CliError> {
    let cfg = RunConfig::resolve(user)?;
    let data = sweep::run_sweep(&cfg, spec)?;
    Ok((cfg, data))
}

pub fn cmd_verify(user: &PartialConfig) -> Result<(RunConfig, verify::Report), CliError> {
    let cfg = RunConfig::resolve(user)?;
    let report = verify::run_verify(&cfg)?;
    Ok((cfg, report))
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{operation}: {source}")]
    Numerical {
        operation: String,
        source: PhaseError,
    },
    #[error("cannot write {path}: {message}")]
    Output { path: String, message: String },
    #[error("verification failed: {0}")]
    Verification(String),
}

impl CliError {
    pub fn numerical(operation: impl Into<String>, source: impl Into<PhaseError>) -> Self {
        Self::Numerical {
            operation: operation.into(),
            source: source.into(),
        }
    }

    /// 0 success, 1 verification failure, 2 configuration or domain error,
    /// 3 numerical convergence failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Verification(_) => 1,
            Self::Numerical { source, .. } if is_convergence(source) => 3,
            _ => 2,
        }
    }
}

fn is_convergence(e: &PhaseError) -> bool {
    fn spectra(e: &SpectraError) -> bool {
        match e {
            SpectraError::Quadrature(QuadratureError::NotConverged { .. }) => true,
            SpectraError::AtGridPoint { source, .. } => spectra(source),
            _ => false,
        }
    }
    match e {
        PhaseError::Quadrature(QuadratureError::NotConverged { .. }) => true,
        PhaseError::Spectra(s) => spectra(s),
        _ => false,
    }
}

impl From<SpectraError> for CliError {
    fn from(e: SpectraError) -> Self {
        Self::numerical("dephasing_profile", e)
    }
}

impl From<PhaseError> for CliError {
    fn from(e: PhaseError) -> Self {
        Self::numerical("geometric phase", e)
    }
}
