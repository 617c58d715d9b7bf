//! Experiment harness behind the `mixopt` binary.
//!
//! Each subcommand reads an [`ExperimentConfig`], runs one of the core
//! algorithms over the configured seeds and writes CSV tables plus a JSON
//! summary into the output directory. Files carry the SHA-256 of the
//! effective configuration in a leading `#` comment.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
#![allow(clippy::needless_range_loop)]

pub mod commands;
pub mod config;
pub mod output;

use std::path::PathBuf;

pub use config::{ExperimentConfig, Kind, Preset};
pub use output::Output;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("invariant failure: {0}")]
    Invariant(String),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Core(mixopt_core::Error),
}

impl From<mixopt_core::Error> for HarnessError {
    fn from(e: mixopt_core::Error) -> Self {
        use mixopt_core::Error as E;
        match e {
            E::Invariant(msg) => HarnessError::Invariant(msg),
            E::InvalidInput(msg) => HarnessError::Config(msg),
            E::DimensionMismatch { .. } => HarnessError::Config(e.to_string()),
            other => HarnessError::Core(other),
        }
    }
}

impl HarnessError {
    /// 2 for configuration problems, 3 for invariant failures, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Invariant(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, HarnessError>;

/// Validates `cfg` and runs one subcommand into `out_dir`, returning the
/// paths written.
pub fn run(kind: Kind, cfg: &ExperimentConfig, out_dir: PathBuf) -> Result<Vec<PathBuf>> {
    cfg.validate(kind)?;
    let out = Output::create(out_dir, kind, cfg)?;
    match kind {
        Kind::Mixture => commands::mixture::cmd_mixture(cfg, &out).map(|_| ()),
        Kind::Coerm => commands::coerm::cmd_coerm(cfg, &out).map(|_| ()),
        Kind::Wstar => commands::wstar::cmd_wstar(cfg, &out).map(|_| ()),
        Kind::Online => commands::online::cmd_online(cfg, &out).map(|_| ()),
        Kind::Grouped => commands::grouped::cmd_grouped(cfg, &out).map(|_| ()),
        Kind::Phase => commands::phase::cmd_phase(cfg, &out).map(|_| ()),
    }?;
    Ok(out.written())
}
