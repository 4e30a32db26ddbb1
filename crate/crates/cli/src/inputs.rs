//! Loading and generating dictionaries, signals and measurements.

use std::fs;
use std::path::Path;

use clap::ValueEnum;
use serde::{Deserialize, Serialize};
use sparsebench::ensembles::{gen_gaussian_matrix, gen_partial_orthogonal_matrix, gen_sparse_signal};
use sparsebench::rng::derive_seed;
use sparsebench::{DenseMatrix, DenseVector, EnsembleKind, ObservationMatrix, SparseSignal};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MatrixKind {
    Gaussian,
    PartialOrthogonal,
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))
}

/// A dictionary from `.json` (as written by gen-matrix) or plain CSV.
pub fn load_matrix(path: &Path) -> Result<ObservationMatrix, CliError> {
    let text = read(path)?;
    if path.extension().is_some_and(|e| e == "json") {
        serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    } else {
        let m = DenseMatrix::from_csv(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(ObservationMatrix::any_shape(m))
    }
}

pub fn load_signal(path: &Path) -> Result<SparseSignal, CliError> {
    serde_json::from_str(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_vector(path: &Path) -> Result<DenseVector, CliError> {
    DenseVector::from_csv(&read(path)?).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Instance seeds split into a matrix stream and a signal stream, the same way
/// the experiments do, so gen-matrix + gen-signal reproduce a recover run.
pub fn gen_matrix(
    kind: MatrixKind,
    m: usize,
    n: usize,
    normalize: bool,
    seed: u64,
) -> Result<ObservationMatrix, CliError> {
    let s = derive_seed(seed, &[0]);
    Ok(match kind {
        MatrixKind::Gaussian => gen_gaussian_matrix(m, n, s, normalize)?,
        MatrixKind::PartialOrthogonal => gen_partial_orthogonal_matrix(m, n, s, normalize)?,
    })
}

pub fn gen_signal(n: usize, k: usize, ensemble: EnsembleKind, seed: u64) -> Result<SparseSignal, CliError> {
    Ok(gen_sparse_signal(n, k, ensemble, derive_seed(seed, &[1]))?)
}
