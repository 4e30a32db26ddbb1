use super::{dot, DenseMatrix};

const MAX_SWEEPS: usize = 100;

/// Cyclic Jacobi eigenvalue iteration on a symmetric `n × n` matrix stored densely
/// (either order, since it is symmetric). On return the diagonal holds the
/// eigenvalues in no particular order; the off-diagonal part is destroyed.
pub fn jacobi_eigenvalues_in_place(a: &mut [f64], n: usize) {
    debug_assert_eq!(a.len(), n * n);
    if n < 2 {
        return;
    }
    let total: f64 = a.iter().map(|v| v * v).sum();
    if total == 0.0 {
        return;
    }
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= 1e-32 * total {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                let tau = s / (1.0 + c);
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for r in 0..n {
                    if r == p || r == q {
                        continue;
                    }
                    let g = a[r * n + p];
                    let h = a[r * n + q];
                    let new_rp = g - s * (h + g * tau);
                    let new_rq = h + s * (g - h * tau);
                    a[r * n + p] = new_rp;
                    a[p * n + r] = new_rp;
                    a[r * n + q] = new_rq;
                    a[q * n + r] = new_rq;
                }
            }
        }
    }
}

/// Eigenvalues of a symmetric matrix, ascending.
pub fn symmetric_eigenvalues(a: &DenseMatrix) -> Vec<f64> {
    assert_eq!(a.rows(), a.cols(), "symmetric_eigenvalues needs a square matrix");
    let n = a.rows();
    let mut work = a.as_column_major().to_vec();
    jacobi_eigenvalues_in_place(&mut work, n);
    let mut ev: Vec<f64> = (0..n).map(|i| work[i * n + i]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

/// All `min(rows, cols)` singular values via one-sided (Hestenes) Jacobi.
pub(super) fn singular_values(a: &DenseMatrix) -> Vec<f64> {
    let a = if a.rows() < a.cols() { a.transpose() } else { a.clone() };
    let (m, n) = (a.rows(), a.cols());
    let mut w = a.as_column_major().to_vec();
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..n {
            for j in i + 1..n {
                let (ci, cj) = (&w[i * m..(i + 1) * m], &w[j * m..(j + 1) * m]);
                let alpha = dot(ci, ci);
                let beta = dot(cj, cj);
                let gamma = dot(ci, cj);
                if gamma == 0.0 || gamma.abs() <= 1e-15 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for r in 0..m {
                    let x = w[i * m + r];
                    let y = w[j * m + r];
                    w[i * m + r] = c * x - s * y;
                    w[j * m + r] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    w.chunks_exact(m).map(|c| dot(c, c).sqrt()).collect()
}
