//! Monte-Carlo studies: phase-transition grids with logistic 50% crossings,
//! histograms of false selections in successful OMP_e runs, and small-instance
//! sweeps that certify the online recovery condition on exact RICs.
//!
//! All studies derive one seed per trial from the master seed and the trial's
//! coordinates, and aggregate in a fixed order, so results do not depend on the
//! number of worker threads.

mod histogram;
mod logistic;
mod phase;
mod sweep;

use serde::Serialize;
use thiserror::Error;

use crate::guarantees::GuaranteeError;
use crate::recovery::RecoveryError;

pub use histogram::{run_nf_histogram, HistogramConfig, NfHistogram};
pub use logistic::{fit_rho_50, FitDiagnostics, FitMethod};
pub use phase::{
    build_transition_curves, cell_dimensions, default_rho_grid, run_phase_grid, CellResult, CurvePoint,
    PhaseGridConfig, TransitionCurve,
};
pub use sweep::{guarantee_sweep, Certificate, MatrixFamily, SweepConfig, SweepInstance, SweepSummary};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("logistic fit is degenerate: {0}")]
    DegenerateData(String),
    #[error("need at least 3 distinct rho values, got {0}")]
    InsufficientData(usize),
    #[error(transparent)]
    Guarantee(#[from] GuaranteeError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error("thread pool: {0}")]
    ThreadPool(String),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub(crate) fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> Result<T, ExperimentError> {
    match threads {
        None => Ok(f()),
        Some(t) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| ExperimentError::ThreadPool(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// `# key: <json>` header lines for CSV artifacts.
pub fn comment_header<T: Serialize>(key: &str, value: &T) -> String {
    format!("# {key}: {}\n", serde_json::to_string(value).expect("config is serializable"))
}

/// Serializes `records` as CSV below a comment header.
pub(crate) fn write_csv<R: Serialize>(header: &str, records: &[R]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in records {
        w.serialize(r)?;
    }
    let body = w.into_inner().map_err(|e| ExperimentError::InvalidConfig(e.to_string()))?;
    Ok(format!("{header}{}", String::from_utf8(body).expect("csv output is utf-8")))
}
