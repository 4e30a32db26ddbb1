use super::{dot, norm2, DenseMatrix, DenseVector, LinalgError, Result, RANK_TOLERANCE};

/// Householder QR of a tall matrix, kept in compact form.
#[derive(Debug, Clone)]
pub struct HouseholderQr {
    rows: usize,
    cols: usize,
    /// Householder vectors, one per column, each of length `rows - k`.
    reflectors: Vec<Vec<f64>>,
    /// Upper triangle of R, column-major `cols × cols`.
    r: Vec<f64>,
}

impl HouseholderQr {
    pub fn factor(a: &DenseMatrix) -> Result<Self> {
        let (m, n) = (a.rows(), a.cols());
        if m < n {
            return Err(LinalgError::RankDeficient { rank: m, cols: n });
        }
        let mut work = a.as_column_major().to_vec();
        let mut reflectors = Vec::with_capacity(n);
        let mut r = vec![0.0; n * n];
        for k in 0..n {
            let x = &work[k * m + k..(k + 1) * m];
            let alpha = {
                let norm = norm2(x);
                if x[0] >= 0.0 {
                    -norm
                } else {
                    norm
                }
            };
            let mut v = x.to_vec();
            v[0] -= alpha;
            let vnorm = norm2(&v);
            if vnorm > 0.0 {
                v.iter_mut().for_each(|e| *e /= vnorm);
            }
            // Apply H = I - 2vvᵀ to the trailing columns.
            for j in k + 1..n {
                let col = &mut work[j * m + k..(j + 1) * m];
                let s = 2.0 * dot(&v, col);
                for (c, vi) in col.iter_mut().zip(&v) {
                    *c -= s * vi;
                }
            }
            for i in 0..k {
                r[k * n + i] = work[k * m + i];
            }
            r[k * n + k] = alpha;
            reflectors.push(v);
        }
        let qr = Self { rows: m, cols: n, reflectors, r };
        qr.check_rank()?;
        Ok(qr)
    }

    fn check_rank(&self) -> Result<()> {
        let n = self.cols;
        let diag: Vec<f64> = (0..n).map(|k| self.r[k * n + k].abs()).collect();
        let max = diag.iter().copied().fold(0.0, f64::max);
        let rank = diag.iter().filter(|&&d| d > RANK_TOLERANCE * max && d > 0.0).count();
        if rank < n {
            return Err(LinalgError::RankDeficient { rank, cols: n });
        }
        Ok(())
    }

    /// Least-squares solution of `A c ≈ b`.
    pub fn solve(&self, b: &[f64]) -> Result<DenseVector> {
        if b.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("rhs of length {}", self.rows),
                found: format!("length {}", b.len()),
            });
        }
        let mut qtb = b.to_vec();
        for (k, v) in self.reflectors.iter().enumerate() {
            let tail = &mut qtb[k..];
            let s = 2.0 * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
        let n = self.cols;
        let mut c = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = qtb[i];
            for j in i + 1..n {
                acc -= self.r[j * n + i] * c[j];
            }
            c[i] = acc / self.r[i * n + i];
        }
        DenseVector::new(c)
    }
}

/// Thin QR factorization grown one column at a time.
///
/// Columns are orthogonalized by modified Gram–Schmidt with one full
/// reorthogonalization pass, which keeps `Q` orthonormal to working precision
/// even when the appended columns are nearly dependent.
#[derive(Debug, Clone)]
pub struct IncrementalQr {
    rows: usize,
    /// Orthonormal columns, column-major.
    q: Vec<f64>,
    /// Column `j` of R holds `j + 1` entries.
    r: Vec<Vec<f64>>,
    max_diag: f64,
}

impl IncrementalQr {
    pub fn new(rows: usize) -> Self {
        Self { rows, q: Vec::new(), r: Vec::new(), max_diag: 0.0 }
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    pub fn q_column(&self, j: usize) -> &[f64] {
        &self.q[j * self.rows..(j + 1) * self.rows]
    }

    /// Appends a column. On rank deficiency the factorization is left unchanged.
    pub fn push(&mut self, column: &[f64]) -> Result<()> {
        if column.len() != self.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("column of length {}", self.rows),
                found: format!("length {}", column.len()),
            });
        }
        let l = self.len();
        let mut v = column.to_vec();
        let mut coeffs = vec![0.0; l + 1];
        for _pass in 0..2 {
            for (j, c) in coeffs.iter_mut().enumerate().take(l) {
                let qj = &self.q[j * self.rows..(j + 1) * self.rows];
                let s = dot(qj, &v);
                *c += s;
                for (vi, qi) in v.iter_mut().zip(qj) {
                    *vi -= s * qi;
                }
            }
        }
        let rho = norm2(&v);
        let scale = self.max_diag.max(rho);
        if rho == 0.0 || rho <= RANK_TOLERANCE * scale {
            return Err(LinalgError::RankDeficient { rank: l, cols: l + 1 });
        }
        coeffs[l] = rho;
        v.iter_mut().for_each(|e| *e /= rho);
        self.q.extend_from_slice(&v);
        self.r.push(coeffs);
        self.max_diag = scale;
        Ok(())
    }

    /// Solves `R c = z` where `z = Qᵀ y` has been accumulated by the caller.
    pub fn solve_triangular(&self, z: &[f64]) -> Vec<f64> {
        let n = self.len();
        debug_assert_eq!(z.len(), n);
        let mut c = vec![0.0; n];
        for i in (0..n).rev() {
            let mut acc = z[i];
            for (j, cj) in c.iter().enumerate().skip(i + 1) {
                acc -= self.r[j][i] * cj;
            }
            c[i] = acc / self.r[i][i];
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn incremental_matches_householder() {
        let a = DenseMatrix::from_rows(&[
            [1.0, 2.0, 0.5],
            [0.0, 1.0, -1.0],
            [3.0, -1.0, 2.0],
            [1.0, 1.0, 1.0],
            [-2.0, 0.5, 0.0],
        ])
        .unwrap();
        let b = [1.0, -2.0, 0.5, 3.0, 1.0];
        let direct = HouseholderQr::factor(&a).unwrap().solve(&b).unwrap();
        let mut inc = IncrementalQr::new(5);
        let mut z = Vec::new();
        let mut r = b.to_vec();
        for j in 0..3 {
            inc.push(a.column(j)).unwrap();
            let q = inc.q_column(j);
            let s = dot(q, &r);
            for (ri, qi) in r.iter_mut().zip(q) {
                *ri -= s * qi;
            }
            z.push(s);
        }
        let c = inc.solve_triangular(&z);
        for (x, y) in c.iter().zip(direct.iter()) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn incremental_rejects_dependent_column() {
        let mut inc = IncrementalQr::new(3);
        inc.push(&[1.0, 1.0, 0.0]).unwrap();
        inc.push(&[0.0, 1.0, 1.0]).unwrap();
        let err = inc.push(&[1.0, 2.0, 1.0]).unwrap_err();
        assert!(matches!(err, LinalgError::RankDeficient { rank: 2, cols: 3 }));
        assert_eq!(inc.len(), 2);
        assert!(inc.push(&[0.0, 0.0, 0.0]).is_err());
    }
}
