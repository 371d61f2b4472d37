//! Scenario runner: TOML scenarios in, long-format CSV tables and a JSON
//! manifest out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod presets;
pub mod run;
pub mod sweep;

use std::path::PathBuf;

use thiserror::Error;

pub use config::{load_config, parse_config, parse_orders, Scenario, ScenarioConfig};
pub use run::{run_scenario, write_bundle, Bundle};
pub use sweep::{run_sweep, write_sweep, SweepParam};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error(transparent)]
    Numerical(#[from] spopo::Error),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest: {0}")]
    Json(#[from] serde_json::Error),
    #[error("worker pool: {0}")]
    Pool(#[from] rayon::ThreadPoolBuildError),
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Self::Io {
            path: path.into(),
            source,
        }
    }
}

/// Runs `f` on a pool of `jobs` workers (0 picks the core count).
pub fn with_pool<T: Send>(
    jobs: usize,
    f: impl FnOnce() -> T + Send,
) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
    Ok(pool.install(f))
}
