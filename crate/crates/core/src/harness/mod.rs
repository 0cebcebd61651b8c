//! Experiment sweeps, extremal search over product sets, point-set files and
//! the fixed verification battery.

mod config;
mod fqset;
mod row;
mod search;
mod suite;
mod sweep;

use thiserror::Error;

pub use config::{ExperimentConfig, Family, PinPolicy, SeedSpec, SweepCheck};
pub use fqset::{load_pointset, read_fqset, read_jsonl, save_pointset, write_fqset, write_jsonl, FQSET_MAGIC, FQSET_VERSION};
pub use row::{ResultRow, RowStatus, CODE_VERSION};
pub use search::{factor_sizes, i_scaled_grid, product_delta, search_extremal, SearchMove, SearchOutcome, RESTART_INTERVAL};
pub use suite::{run_criterion, run_suite, write_suite, CriterionOutcome, KappaRow, SuiteOutcome, CRITERIA};
pub use sweep::{plan, run_cell, run_sweep, sweep, Cell, SweepSummary};

use crate::analysis::AnalysisError;
use crate::field::FieldError;
use crate::space::SpaceError;
use crate::spectra::SpectrumError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed header: {0}")]
    BadHeader(String),
    #[error("bad modulus: {0}")]
    BadModulus(String),
    #[error("coordinate out of range on line {line}")]
    CoordinateOutOfRange { line: usize },
    #[error("header declares {expected} points, found {found} distinct")]
    SizeMismatch { expected: usize, found: usize },
    #[error("cannot split {target} into {d} factor sizes of at most {q}")]
    BadFactorization { target: u64, d: usize, q: u32 },
    #[error("cell {cell} exceeds a resource cap: {reason}")]
    CapExceeded { cell: String, reason: String },
    #[error(transparent)]
    Field(#[from] FieldError),
    #[error(transparent)]
    Space(#[from] SpaceError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
}

/// Runs `f` on a pool sized by `FQDIST_THREADS` when set, else on the global
/// pool.
pub fn with_thread_pool<T: Send>(f: impl FnOnce() -> T + Send) -> Result<T, HarnessError> {
    match std::env::var("FQDIST_THREADS") {
        Ok(v) => {
            let n: usize = v.trim().parse().map_err(|_| HarnessError::Config(format!("FQDIST_THREADS='{v}' is not a thread count")))?;
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Config(e.to_string()))?;
            Ok(pool.install(f))
        }
        Err(_) => Ok(f()),
    }
}
