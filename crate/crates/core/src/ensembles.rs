//! Observation matrices and sparse signal ensembles.
//!
//! Gaussian matrices have i.i.d. `N(0, 1/M)` entries and, by default, unit-norm
//! columns. Signals come in three flavours that differ only in how the nonzero
//! values are drawn: standard Gaussian, uniform on `[-1, 1]` and constant
//! amplitude with random signs (CARS).
//!
//! Two extra matrix families exist for small certificate sweeps, where tiny
//! Gaussian matrices have restricted isometry constants far too large for any
//! recovery guarantee to apply: row subsets of Haar orthogonal matrices, and a
//! structured "one wrong step" construction (see [`gen_adversarial_instance`]).

use std::fmt;
use std::str::FromStr;

use rand::seq::index::sample;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::linalg::{dot, norm2, Cholesky, DenseMatrix, DenseVector, LinalgError};
use crate::rng;

/// Column norms must be within this of 1 for a matrix to count as normalized.
pub const NORMALIZED_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EnsembleError {
    #[error("invalid dimensions: need 1 <= m < n, got m = {m}, n = {n}")]
    InvalidDimensions { m: usize, n: usize },
    #[error("invalid sparsity: need 1 <= k < n, got k = {k}, n = {n}")]
    InvalidSparsity { k: usize, n: usize },
    #[error("invalid signal: {0}")]
    InvalidSignal(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnsembleKind {
    Gaussian,
    Uniform,
    Cars,
}

impl EnsembleKind {
    pub const ALL: [EnsembleKind; 3] = [EnsembleKind::Gaussian, EnsembleKind::Uniform, EnsembleKind::Cars];

    pub fn name(self) -> &'static str {
        match self {
            EnsembleKind::Gaussian => "gaussian",
            EnsembleKind::Uniform => "uniform",
            EnsembleKind::Cars => "cars",
        }
    }
}

impl fmt::Display for EnsembleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EnsembleKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "gaussian" => Ok(EnsembleKind::Gaussian),
            "uniform" => Ok(EnsembleKind::Uniform),
            "cars" => Ok(EnsembleKind::Cars),
            other => Err(format!("unknown ensemble {other:?} (expected gaussian, uniform or cars)")),
        }
    }
}

/// The dictionary `Φ` together with how it was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationMatrix {
    matrix: DenseMatrix,
    column_normalized: bool,
    seed: Option<u64>,
}

impl ObservationMatrix {
    /// Wraps an underdetermined matrix (`M < N`).
    pub fn new(matrix: DenseMatrix) -> Result<Self, EnsembleError> {
        if matrix.rows() >= matrix.cols() {
            return Err(EnsembleError::InvalidDimensions { m: matrix.rows(), n: matrix.cols() });
        }
        Ok(Self::any_shape(matrix))
    }

    /// Wraps a matrix of any shape. Square and tall dictionaries only make sense
    /// for degenerate checks such as orthonormal bases.
    pub fn any_shape(matrix: DenseMatrix) -> Self {
        let column_normalized =
            matrix.column_norms().iter().all(|n| (n - 1.0).abs() <= NORMALIZED_TOLERANCE);
        Self { matrix, column_normalized, seed: None }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn matrix(&self) -> &DenseMatrix {
        &self.matrix
    }

    pub fn rows(&self) -> usize {
        self.matrix.rows()
    }

    pub fn cols(&self) -> usize {
        self.matrix.cols()
    }

    pub fn column_normalized(&self) -> bool {
        self.column_normalized
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `Φ x` for a sparse signal, touching only the support columns.
    pub fn measure(&self, x: &SparseSignal) -> Result<DenseVector, EnsembleError> {
        if x.n() != self.cols() {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("signal of length {}", self.cols()),
                found: x.n().to_string(),
            }
            .into());
        }
        let mut y = vec![0.0; self.rows()];
        for (&t, &v) in x.support().iter().zip(x.values()) {
            crate::linalg::axpy(v, self.matrix.column(t), &mut y);
        }
        Ok(DenseVector::new(y)?)
    }

    /// Short content hash, stable across runs and platforms.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        h.update((self.rows() as u64).to_le_bytes());
        h.update((self.cols() as u64).to_le_bytes());
        for v in self.matrix.as_column_major() {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
    }
}

fn normalize_columns(matrix: &mut DenseMatrix) {
    for j in 0..matrix.cols() {
        let col = matrix.column_mut(j);
        let norm = norm2(col);
        if norm > 0.0 {
            col.iter_mut().for_each(|v| *v /= norm);
        }
    }
}

/// `m × n` matrix with i.i.d. `N(0, 1/m)` entries, columns optionally rescaled to
/// unit norm.
pub fn gen_gaussian_matrix(
    m: usize,
    n: usize,
    seed: u64,
    normalize: bool,
) -> Result<ObservationMatrix, EnsembleError> {
    if m == 0 || m >= n {
        return Err(EnsembleError::InvalidDimensions { m, n });
    }
    let mut stream = rng::stream(seed);
    let scale = 1.0 / (m as f64).sqrt();
    let data: Vec<f64> = (0..m * n)
        .map(|_| {
            let z: f64 = StandardNormal.sample(&mut stream);
            z * scale
        })
        .collect();
    let mut matrix = DenseMatrix::from_column_major(m, n, data)?;
    if normalize {
        normalize_columns(&mut matrix);
    }
    let mut obs = ObservationMatrix::new(matrix)?.with_seed(seed);
    obs.column_normalized = normalize;
    Ok(obs)
}

/// Haar-distributed orthogonal `n × n` matrix (Gram–Schmidt on Gaussian columns).
fn random_orthogonal<R: Rng>(n: usize, stream: &mut R) -> DenseMatrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut *stream)).collect();
        for _pass in 0..2 {
            for q in &cols {
                let s = dot(q, &v);
                v.iter_mut().zip(q).for_each(|(vi, qi)| *vi -= s * qi);
            }
        }
        let norm = norm2(&v);
        if norm > 1e-8 {
            v.iter_mut().for_each(|e| *e /= norm);
            cols.push(v);
        }
    }
    DenseMatrix::from_columns(&cols).expect("orthogonal factor is well formed")
}

/// The first `m` rows of a Haar orthogonal `n × n` matrix: a random tight frame.
pub fn gen_partial_orthogonal_matrix(
    m: usize,
    n: usize,
    seed: u64,
    normalize: bool,
) -> Result<ObservationMatrix, EnsembleError> {
    if m == 0 || m >= n {
        return Err(EnsembleError::InvalidDimensions { m, n });
    }
    let mut stream = rng::stream(seed);
    let q = random_orthogonal(n, &mut stream);
    let rows: Vec<Vec<f64>> = (0..m).map(|i| q.row(i)).collect();
    let mut matrix = DenseMatrix::from_rows(&rows)?;
    if normalize {
        normalize_columns(&mut matrix);
    }
    Ok(ObservationMatrix::new(matrix)?.with_seed(seed))
}

/// A K-sparse ground-truth vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal", into = "RawSignal")]
pub struct SparseSignal {
    n: usize,
    support: Vec<usize>,
    values: Vec<f64>,
    ensemble: EnsembleKind,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct RawSignal {
    n: usize,
    k: usize,
    ensemble: EnsembleKind,
    seed: u64,
    support: Vec<usize>,
    values: Vec<f64>,
}

impl TryFrom<RawSignal> for SparseSignal {
    type Error = EnsembleError;
    fn try_from(raw: RawSignal) -> Result<Self, EnsembleError> {
        if raw.k != raw.support.len() {
            return Err(EnsembleError::InvalidSignal(format!(
                "k = {} but support has {} entries",
                raw.k,
                raw.support.len()
            )));
        }
        SparseSignal::new(raw.n, raw.support, raw.values, raw.ensemble, raw.seed)
    }
}

impl From<SparseSignal> for RawSignal {
    fn from(s: SparseSignal) -> Self {
        RawSignal { n: s.n, k: s.support.len(), ensemble: s.ensemble, seed: s.seed, support: s.support, values: s.values }
    }
}

impl SparseSignal {
    /// Validates and sorts the support (values follow their indices).
    pub fn new(
        n: usize,
        support: Vec<usize>,
        values: Vec<f64>,
        ensemble: EnsembleKind,
        seed: u64,
    ) -> Result<Self, EnsembleError> {
        if support.len() != values.len() {
            return Err(EnsembleError::InvalidSignal(format!(
                "{} support indices but {} values",
                support.len(),
                values.len()
            )));
        }
        if support.is_empty() || support.len() >= n {
            return Err(EnsembleError::InvalidSparsity { k: support.len(), n });
        }
        let mut pairs: Vec<(usize, f64)> = support.into_iter().zip(values).collect();
        pairs.sort_by_key(|p| p.0);
        for w in pairs.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(EnsembleError::InvalidSignal(format!("duplicate support index {}", w[0].0)));
            }
        }
        for &(i, v) in &pairs {
            if i >= n {
                return Err(EnsembleError::InvalidSignal(format!("support index {i} out of range for n = {n}")));
            }
            if v == 0.0 || !v.is_finite() {
                return Err(EnsembleError::InvalidSignal(format!("value at index {i} must be finite and nonzero")));
            }
            let ok = match ensemble {
                EnsembleKind::Gaussian => true,
                EnsembleKind::Uniform => (-1.0..=1.0).contains(&v),
                EnsembleKind::Cars => v.abs() == 1.0,
            };
            if !ok {
                return Err(EnsembleError::InvalidSignal(format!("value {v} not admissible for the {ensemble} ensemble")));
            }
        }
        let (support, values) = pairs.into_iter().unzip();
        Ok(Self { n, support, values, ensemble, seed })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.support.len()
    }

    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ensemble(&self) -> EnsembleKind {
        self.ensemble
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn contains(&self, index: usize) -> bool {
        self.support.binary_search(&index).is_ok()
    }

    pub fn to_dense(&self) -> DenseVector {
        let mut x = vec![0.0; self.n];
        for (&i, &v) in self.support.iter().zip(&self.values) {
            x[i] = v;
        }
        DenseVector::new(x).expect("signal values are finite")
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.values)
    }
}

/// Random `k`-sparse signal of length `n` with a uniformly chosen support.
pub fn gen_sparse_signal(
    n: usize,
    k: usize,
    ensemble: EnsembleKind,
    seed: u64,
) -> Result<SparseSignal, EnsembleError> {
    if k == 0 || k >= n {
        return Err(EnsembleError::InvalidSparsity { k, n });
    }
    let mut stream = rng::stream(seed);
    let support = sample(&mut stream, n, k).into_vec();
    let values = (0..k)
        .map(|_| match ensemble {
            EnsembleKind::Gaussian => loop {
                let v: f64 = StandardNormal.sample(&mut stream);
                if v != 0.0 {
                    break v;
                }
            },
            EnsembleKind::Uniform => loop {
                let v: f64 = stream.random_range(-1.0..=1.0);
                if v != 0.0 {
                    break v;
                }
            },
            EnsembleKind::Cars => {
                if stream.random::<bool>() {
                    1.0
                } else {
                    -1.0
                }
            }
        })
        .collect();
    SparseSignal::new(n, support, values, ensemble, seed)
}

/// Orthonormal basis of the complement of the all-ones vector in `R^c` (Helmert
/// rows), used to build an equiangular simplex frame of `c` unit vectors in
/// `R^{c-1}` with pairwise inner products `-1/(c-1)`.
fn simplex_frame(c: usize) -> Vec<Vec<f64>> {
    let dim = c - 1;
    let mut cols = vec![vec![0.0; dim]; c];
    for k in 1..=dim {
        let norm = ((k * (k + 1)) as f64).sqrt();
        for (i, col) in cols.iter_mut().enumerate() {
            col[k - 1] = match i.cmp(&k) {
                std::cmp::Ordering::Less => 1.0 / norm,
                std::cmp::Ordering::Equal => -(k as f64) / norm,
                std::cmp::Ordering::Greater => 0.0,
            };
        }
    }
    let scale = 1.0 / (1.0 - 1.0 / c as f64).sqrt();
    for col in &mut cols {
        col.iter_mut().for_each(|v| *v *= scale);
    }
    cols
}

/// A small instance on which OMP provably takes one wrong step and then recovers.
///
/// The support columns and one decoy column span a `(k+1)`-dimensional block
/// whose Gram matrix is
///
/// ```text
/// [ I - 11ᵀ/(k(k+1))    (1+η)/(k+1) · 1 ]
/// [ (1+η)/(k+1) · 1ᵀ    1 + 1/(k+1)     ]
/// ```
///
/// with restricted isometry constant close to `1/√(k+1)`. For a near-flat signal
/// on the support the decoy correlates strictly better with `y` than any true
/// column, so the first selection is wrong. The remaining `n - k - 1` columns
/// form a simplex frame in the orthogonal complement, so `M = N - 1`. A random
/// rotation of the measurement space, a random column order and random column
/// signs are applied on top.
pub fn gen_adversarial_instance(
    k: usize,
    n: usize,
    seed: u64,
) -> Result<(ObservationMatrix, SparseSignal), EnsembleError> {
    if k == 0 || n < k + 4 {
        return Err(EnsembleError::InvalidSparsity { k, n });
    }
    let mut stream = rng::stream(seed);
    let eta: f64 = stream.random_range(0.01..0.05);
    let kf = k as f64;
    let block = k + 1;
    let mut gram = vec![0.0; block * block];
    for i in 0..k {
        for j in 0..k {
            gram[i * block + j] = if i == j { 1.0 } else { 0.0 } - 1.0 / (kf * (kf + 1.0));
        }
        gram[i * block + k] = (1.0 + eta) / (kf + 1.0);
        gram[k * block + i] = (1.0 + eta) / (kf + 1.0);
    }
    gram[k * block + k] = 1.0 + 1.0 / (kf + 1.0);
    let chol = Cholesky::factor(&gram, block)?;
    // G = L Lᵀ, so the rows of L are vectors with exactly this Gram matrix.
    let block_cols: Vec<Vec<f64>> = (0..block).map(|j| chol.lower_row(j).to_vec()).collect();

    let c = n - block;
    let m = n - 1;
    let frame = simplex_frame(c);
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    for bc in &block_cols {
        let mut v = vec![0.0; m];
        v[..block].copy_from_slice(bc);
        cols.push(v);
    }
    for fc in &frame {
        let mut v = vec![0.0; m];
        v[block..].copy_from_slice(fc);
        cols.push(v);
    }

    let rotation = random_orthogonal(m, &mut stream);
    let perm = sample(&mut stream, n, n).into_vec();
    let mut placed = vec![Vec::new(); n];
    let mut signs = vec![1.0; n];
    for (orig, &dest) in perm.iter().enumerate() {
        let s = if stream.random::<bool>() { 1.0 } else { -1.0 };
        let rotated = rotation.matvec(&cols[orig]).expect("dimensions agree").into_inner();
        placed[dest] = rotated.into_iter().map(|v| s * v).collect();
        signs[dest] = s;
    }
    let matrix = DenseMatrix::from_columns(&placed)?;

    let support: Vec<usize> = perm[..k].to_vec();
    let values: Vec<f64> = support
        .iter()
        .map(|&dest| {
            let xi: f64 = stream.random_range(-eta / 4.0..=eta / 4.0);
            signs[dest] * (1.0 + xi)
        })
        .collect();
    let phi = ObservationMatrix::new(matrix)?.with_seed(seed);
    let signal = SparseSignal::new(n, support, values, EnsembleKind::Gaussian, seed)?;
    Ok((phi, signal))
}
