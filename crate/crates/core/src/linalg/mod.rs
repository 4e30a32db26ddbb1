//! Dense linear algebra substrate.
//!
//! Matrices are stored column-major: entry `(i, j)` lives at `data[j * rows + i]`,
//! so every column is a contiguous slice. Dictionary columns are the unit of work
//! for every recovery algorithm in this crate, which is why that layout was chosen.

mod cholesky;
mod eigen;
mod qr;

use std::fmt::Write as _;
use std::ops::{Deref, Index};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cholesky::Cholesky;
pub use eigen::{jacobi_eigenvalues_in_place, symmetric_eigenvalues};
pub use qr::{HouseholderQr, IncrementalQr};

/// Relative threshold on the triangular factor's diagonal below which a column
/// set is treated as linearly dependent.
pub const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("matrix must have at least one row and one column")]
    Empty,
    #[error("non-finite entry at position {0}")]
    NonFinite(usize),
    #[error("matrix is rank deficient: effective rank {rank} of {cols} columns")]
    RankDeficient { rank: usize, cols: usize },
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("csv parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, LinalgError>;

fn check_finite(values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(LinalgError::NonFinite(i)),
        None => Ok(()),
    }
}

/// Dense real matrix, column-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawMatrix", into = "RawMatrix")]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    rows: usize,
    cols: usize,
    /// Column-major entries.
    data: Vec<f64>,
}

impl TryFrom<RawMatrix> for DenseMatrix {
    type Error = LinalgError;
    fn try_from(raw: RawMatrix) -> Result<Self> {
        DenseMatrix::from_column_major(raw.rows, raw.cols, raw.data)
    }
}

impl From<DenseMatrix> for RawMatrix {
    fn from(m: DenseMatrix) -> Self {
        RawMatrix { rows: m.rows, cols: m.cols, data: m.data }
    }
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        Ok(Self { rows, cols, data: vec![0.0; rows * cols] })
    }

    pub fn identity(n: usize) -> Result<Self> {
        let mut m = Self::zeros(n, n)?;
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        Ok(m)
    }

    pub fn from_column_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(LinalgError::Empty);
        }
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        check_finite(&data)?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_row_major(rows: usize, cols: usize, data: &[f64]) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{} entries", rows * cols),
                found: format!("{} entries", data.len()),
            });
        }
        let mut col_major = vec![0.0; data.len()];
        for i in 0..rows {
            for j in 0..cols {
                col_major[j * rows + i] = data[i * cols + j];
            }
        }
        Self::from_column_major(rows, cols, col_major)
    }

    /// Builds a matrix from nested rows, e.g. `&[[1.0, 2.0], [3.0, 4.0]]`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut flat = Vec::with_capacity(n_rows * n_cols);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: format!("{n_cols} columns"),
                    found: format!("{} columns in row {i}", r.len()),
                });
            }
            flat.extend_from_slice(r);
        }
        Self::from_row_major(n_rows, n_cols, &flat)
    }

    pub fn from_columns<C: AsRef<[f64]>>(columns: &[C]) -> Result<Self> {
        let n_cols = columns.len();
        let n_rows = columns.first().map_or(0, |c| c.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for (j, c) in columns.iter().enumerate() {
            let c = c.as_ref();
            if c.len() != n_rows {
                return Err(LinalgError::DimensionMismatch {
                    expected: format!("{n_rows} rows"),
                    found: format!("{} rows in column {j}", c.len()),
                });
            }
            data.extend_from_slice(c);
        }
        Self::from_column_major(n_rows, n_cols, data)
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn columns(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.rows)
    }

    pub fn as_column_major(&self) -> &[f64] {
        &self.data
    }

    /// Mutable column access. Callers must keep entries finite.
    pub(crate) fn column_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> DenseMatrix {
        let mut data = vec![0.0; self.data.len()];
        for j in 0..self.cols {
            for i in 0..self.rows {
                data[i * self.cols + j] = self.data[j * self.rows + i];
            }
        }
        DenseMatrix { rows: self.cols, cols: self.rows, data }
    }

    /// Submatrix made of the listed columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<DenseMatrix> {
        let mut data = Vec::with_capacity(self.rows * indices.len());
        for &j in indices {
            if j >= self.cols {
                return Err(LinalgError::DimensionMismatch {
                    expected: format!("column index < {}", self.cols),
                    found: j.to_string(),
                });
            }
            data.extend_from_slice(self.column(j));
        }
        DenseMatrix::from_column_major(self.rows, indices.len(), data)
    }

    /// `A * x`.
    pub fn matvec(&self, x: &[f64]) -> Result<DenseVector> {
        if x.len() != self.cols {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("vector of length {}", self.cols),
                found: format!("length {}", x.len()),
            });
        }
        let mut out = vec![0.0; self.rows];
        for (col, &xj) in self.columns().zip(x) {
            if xj != 0.0 {
                axpy(xj, col, &mut out);
            }
        }
        Ok(DenseVector(out))
    }

    /// `Aᵀ * v`.
    pub fn matvec_transpose(&self, v: &[f64]) -> Result<DenseVector> {
        if v.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("vector of length {}", self.rows),
                found: format!("length {}", v.len()),
            });
        }
        Ok(DenseVector(self.columns().map(|c| dot(c, v)).collect()))
    }

    /// Gram matrix `AᵀA` (cols × cols, symmetric).
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut data = vec![0.0; n * n];
        for j in 0..n {
            for i in 0..=j {
                let g = dot(self.column(i), self.column(j));
                data[j * n + i] = g;
                data[i * n + j] = g;
            }
        }
        DenseMatrix { rows: n, cols: n, data }
    }

    /// Euclidean norm of every column.
    pub fn column_norms(&self) -> Vec<f64> {
        self.columns().map(norm2).collect()
    }

    /// Serializes as CSV, one matrix row per line, 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.rows {
            for j in 0..self.cols {
                if j > 0 {
                    out.push(',');
                }
                write!(out, "{:.16e}", self.get(i, j)).unwrap();
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV produced by [`DenseMatrix::to_csv`]. Lines starting with `#`
    /// are ignored.
    pub fn from_csv(text: &str) -> Result<DenseMatrix> {
        let rows = parse_csv_rows(text)?;
        DenseMatrix::from_rows(&rows)
    }
}

impl Index<(usize, usize)> for DenseMatrix {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[j * self.rows + i]
    }
}

fn parse_csv_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| LinalgError::Parse(e.to_string()))?;
        let row = record
            .iter()
            .map(|field| {
                field
                    .parse::<f64>()
                    .map_err(|_| LinalgError::Parse(format!("record {}: bad number {field:?}", line + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(LinalgError::Empty);
    }
    Ok(rows)
}

/// Dense real vector with finite entries.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DenseVector(Vec<f64>);

impl TryFrom<Vec<f64>> for DenseVector {
    type Error = LinalgError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        DenseVector::new(v)
    }
}

impl From<DenseVector> for Vec<f64> {
    fn from(v: DenseVector) -> Self {
        v.0
    }
}

impl Deref for DenseVector {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DenseVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn norm2(&self) -> f64 {
        norm2(&self.0)
    }

    pub fn norm1(&self) -> f64 {
        self.0.iter().map(|v| v.abs()).sum()
    }

    pub fn norm_inf(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Serializes as CSV, one entry per line.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for v in &self.0 {
            writeln!(out, "{v:.16e}").unwrap();
        }
        out
    }

    /// Accepts either one entry per line or a single row.
    pub fn from_csv(text: &str) -> Result<DenseVector> {
        let rows = parse_csv_rows(text)?;
        let values = if rows.len() == 1 {
            rows.into_iter().next().unwrap()
        } else {
            let mut out = Vec::with_capacity(rows.len());
            for (i, r) in rows.into_iter().enumerate() {
                if r.len() != 1 {
                    return Err(LinalgError::Parse(format!(
                        "record {}: expected one value per line, found {}",
                        i + 1,
                        r.len()
                    )));
                }
                out.push(r[0]);
            }
            out
        };
        DenseVector::new(values)
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// `y += alpha * x`.
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Minimizes `||A c - b||₂` by Householder QR.
///
/// Fails with [`LinalgError::RankDeficient`] when some diagonal entry of R falls
/// below `RANK_TOLERANCE` times the largest one.
pub fn least_squares(a: &DenseMatrix, b: &[f64]) -> Result<DenseVector> {
    if b.len() != a.rows() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("rhs of length {}", a.rows()),
            found: format!("length {}", b.len()),
        });
    }
    if a.rows() < a.cols() {
        return Err(LinalgError::RankDeficient { rank: a.rows(), cols: a.cols() });
    }
    HouseholderQr::factor(a)?.solve(b)
}

/// Smallest and largest singular values, computed by one-sided Jacobi rotations.
pub fn extreme_singular_values(a: &DenseMatrix) -> (f64, f64) {
    let sv = eigen::singular_values(a);
    let max = sv.iter().copied().fold(0.0, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    (if min.is_finite() { min } else { 0.0 }, max)
}

/// Inner product of every column of `phi` with `r`.
pub fn residual_correlations(phi: &DenseMatrix, r: &[f64]) -> Result<DenseVector> {
    phi.matvec_transpose(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{a} vs {b} (tol {tol})");
    }

    #[test]
    fn least_squares_single_unit_column() {
        let a = DenseMatrix::from_rows(&[[1.0], [0.0]]).unwrap();
        let c = least_squares(&a, &[3.0, 5.0]).unwrap();
        assert_close(c[0], 3.0, 1e-14);
    }

    #[test]
    fn least_squares_identity_returns_rhs() {
        let a = DenseMatrix::identity(4).unwrap();
        let b = [1.5, -2.0, 0.25, 7.0];
        let c = least_squares(&a, &b).unwrap();
        for (ci, bi) in c.iter().zip(&b) {
            assert_close(*ci, *bi, 1e-14);
        }
    }

    #[test]
    fn least_squares_line_fit() {
        // Normal equations [[3,6],[6,14]] c = [7,17] give c = (-2/3, 3/2).
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [1.0, 2.0], [1.0, 3.0]]).unwrap();
        let c = least_squares(&a, &[1.0, 2.0, 4.0]).unwrap();
        assert_close(c[0], -2.0 / 3.0, 1e-13);
        assert_close(c[1], 1.5, 1e-13);
    }

    #[test]
    fn least_squares_detects_dependent_columns() {
        let a = DenseMatrix::from_rows(&[[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]]).unwrap();
        let err = least_squares(&a, &[1.0, 2.0, 3.0]).unwrap_err();
        assert!(matches!(err, LinalgError::RankDeficient { rank: 1, cols: 2 }));
    }

    #[test]
    fn least_squares_rejects_wrong_rhs_length() {
        let a = DenseMatrix::identity(3).unwrap();
        assert!(matches!(
            least_squares(&a, &[1.0, 2.0]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn singular_values_identity_and_diagonal() {
        let (lo, hi) = extreme_singular_values(&DenseMatrix::identity(5).unwrap());
        assert_close(lo, 1.0, 1e-14);
        assert_close(hi, 1.0, 1e-14);
        let d = DenseMatrix::from_rows(&[[2.0, 0.0], [0.0, 3.0], [0.0, 0.0]]).unwrap();
        let (lo, hi) = extreme_singular_values(&d);
        assert_close(lo, 2.0, 1e-14);
        assert_close(hi, 3.0, 1e-14);
    }

    #[test]
    fn singular_values_shear() {
        // AᵀA = [[1,1],[1,2]], eigenvalues (3 ± √5)/2, so σ = golden ratio and its inverse.
        let a = DenseMatrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let (lo, hi) = extreme_singular_values(&a);
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert_close(hi, phi, 1e-12);
        assert_close(lo, 1.0 / phi, 1e-12);
    }

    #[test]
    fn singular_values_zero_matrix() {
        let z = DenseMatrix::zeros(3, 2).unwrap();
        assert_eq!(extreme_singular_values(&z), (0.0, 0.0));
    }

    #[test]
    fn correlations() {
        let id = DenseMatrix::identity(3).unwrap();
        let c = residual_correlations(&id, &[0.0, 4.0, -1.0]).unwrap();
        assert_eq!(c.as_slice(), &[0.0, 4.0, -1.0]);
        let z = residual_correlations(&id, &[0.0; 3]).unwrap();
        assert!(z.iter().all(|&v| v == 0.0));
        let phi = DenseMatrix::from_rows(&[[1.0, 0.0], [1.0, 1.0]]).unwrap();
        let c = residual_correlations(&phi, &[1.0, 2.0]).unwrap();
        assert_eq!(c.as_slice(), &[3.0, 2.0]);
        assert!(matches!(
            residual_correlations(&phi, &[1.0]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(matches!(
            DenseMatrix::from_row_major(1, 2, &[1.0, f64::NAN]),
            Err(LinalgError::NonFinite(1))
        ));
        assert!(matches!(DenseMatrix::zeros(0, 3), Err(LinalgError::Empty)));
        assert!(DenseVector::new(vec![f64::INFINITY]).is_err());
    }

    #[test]
    fn csv_round_trip_is_exact() {
        let m = DenseMatrix::from_rows(&[[0.1, -1.0 / 3.0, 1e-300], [std::f64::consts::PI, 2.5e17, -0.0]])
            .unwrap();
        let back = DenseMatrix::from_csv(&m.to_csv()).unwrap();
        assert_eq!(back.as_column_major(), m.as_column_major());
        let v = DenseVector::new(vec![1.0 / 7.0, -2e-9]).unwrap();
        assert_eq!(DenseVector::from_csv(&v.to_csv()).unwrap(), v);
    }

    #[test]
    fn csv_reports_bad_numbers() {
        let err = DenseMatrix::from_csv("1,2\n3,abc\n").unwrap_err();
        assert!(matches!(err, LinalgError::Parse(msg) if msg.contains("abc")));
        assert!(DenseMatrix::from_csv("1,2\n3\n").is_err());
    }

    #[test]
    fn transpose_and_select() {
        let m = DenseMatrix::from_rows(&[[1.0, 2.0, 3.0], [4.0, 5.0, 6.0]]).unwrap();
        let t = m.transpose();
        assert_eq!(t.rows(), 3);
        assert_eq!(t[(2, 1)], 6.0);
        let s = m.select_columns(&[2, 0]).unwrap();
        assert_eq!(s.column(0), &[3.0, 6.0]);
        assert_eq!(s.column(1), &[1.0, 4.0]);
    }
}
