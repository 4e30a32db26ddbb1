//! Independent reference implementations, built on nalgebra, used as test
//! oracles for the production solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use sparsebench::DenseMatrix;

pub fn to_na(a: &DenseMatrix) -> DMatrix<f64> {
    DMatrix::from_column_slice(a.rows(), a.cols(), a.as_column_major())
}

fn columns(a: &DMatrix<f64>, idx: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(a.nrows(), idx.len(), |i, j| a[(i, idx[j])])
}

/// Least-squares residual `y − A_S x_S` with a fresh SVD solve.
pub fn ls_residual(a: &DMatrix<f64>, idx: &[usize], y: &DVector<f64>) -> DVector<f64> {
    if idx.is_empty() {
        return y.clone();
    }
    let sub = columns(a, idx);
    let x = sub.clone().svd(true, true).solve(y, 1e-13).expect("svd solve");
    y - sub * x
}

/// Textbook OMP: recompute the least-squares fit from scratch every iteration.
/// Ties go to the lowest index.
pub fn naive_omp(phi: &DenseMatrix, y: &[f64], k: usize) -> Vec<usize> {
    let a = to_na(phi);
    let y = DVector::from_column_slice(y);
    let mut selected: Vec<usize> = Vec::new();
    for _ in 0..k {
        let r = ls_residual(&a, &selected, &y);
        let c = a.transpose() * r;
        let mut best: Option<(usize, f64)> = None;
        for j in 0..a.ncols() {
            if selected.contains(&j) {
                continue;
            }
            if best.is_none_or(|(_, v)| c[j].abs() > v) {
                best = Some((j, c[j].abs()));
            }
        }
        selected.push(best.unwrap().0);
    }
    selected
}

/// Calls `f` on every `k`-subset of `0..n` in lexicographic order.
pub fn for_each_subset(n: usize, k: usize, mut f: impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        f(&idx);
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// The `k`-column support with the smallest least-squares residual.
pub fn best_support(phi: &DenseMatrix, y: &[f64], k: usize) -> (Vec<usize>, f64) {
    let a = to_na(phi);
    let y = DVector::from_column_slice(y);
    let mut best = (Vec::new(), f64::INFINITY);
    for_each_subset(a.ncols(), k, |s| {
        let r = ls_residual(&a, s, &y).norm();
        if r < best.1 {
            best = (s.to_vec(), r);
        }
    });
    best
}

/// Minimum ℓ₁ norm over the basic solutions of `Φx = y` (square nonsingular
/// column subsets). For a full-row-rank `Φ` this is the LP optimum.
pub fn min_l1_vertex(phi: &DenseMatrix, y: &[f64]) -> (Vec<f64>, f64) {
    let a = to_na(phi);
    let (m, n) = a.shape();
    let y = DVector::from_column_slice(y);
    let mut best = (Vec::new(), f64::INFINITY);
    for_each_subset(n, m, |s| {
        let sub = columns(&a, s);
        if sub.determinant().abs() < 1e-12 {
            return;
        }
        let xs = sub.lu().solve(&y).expect("nonsingular");
        let l1 = xs.iter().map(|v| v.abs()).sum::<f64>();
        if l1 < best.1 - 1e-12 {
            let mut x = vec![0.0; n];
            for (i, &j) in s.iter().enumerate() {
                x[j] = xs[i];
            }
            best = (x, l1);
        }
    });
    best
}

/// `δ_k` from the singular values of every `k`-column submatrix.
pub fn ric_by_svd(phi: &DenseMatrix, k: usize) -> f64 {
    let a = to_na(phi);
    let mut delta: f64 = 0.0;
    for_each_subset(a.ncols(), k, |s| {
        let sv = columns(&a, s).singular_values();
        let (hi, lo) = (sv.max(), if k > a.nrows() { 0.0 } else { sv.min() });
        delta = delta.max(hi * hi - 1.0).max(1.0 - lo * lo);
    });
    delta
}

/// `Φ` with two unit columns at angle `θ`.
pub fn two_column(theta: f64) -> DenseMatrix {
    DenseMatrix::from_columns(&[vec![1.0, 0.0], vec![theta.cos(), theta.sin()]]).unwrap()
}
