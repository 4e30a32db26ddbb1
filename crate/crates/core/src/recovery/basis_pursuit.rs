//! ℓ₁ minimization as a linear program.
//!
//! `min ||x||₁ s.t. Φx = y` is solved in the split form
//! `min 1ᵀ(u + v) s.t. Φ(u − v) = y, u, v ≥ 0` by a Mehrotra predictor–corrector
//! interior point method. With `A = [Φ, −Φ]` the normal equations collapse to
//! `Φ diag(d_u + d_v) Φᵀ`, an `M × M` system factored by Cholesky.
//!
//! Before iterating, the rows of `Φ` are orthonormalized (dropping dependent
//! rows, which also detects measurements outside the range of `Φ`). The LP is
//! solved in those coordinates, which improves conditioning considerably.

use serde::{Deserialize, Serialize};

use super::{check_measurements, Algorithm, RecoveryError, RecoveryTrace, TerminationReason};
use crate::ensembles::ObservationMatrix;
use crate::linalg::{dot, norm2, Cholesky, DenseMatrix, DenseVector, LinalgError};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BpOptions {
    pub max_iterations: usize,
    /// Required duality gap relative to `1 + ||x̃||₁`.
    pub gap_tolerance: f64,
    /// Required `||Φx̃ − y||₂` relative to `||y||₂`.
    pub feasibility_tolerance: f64,
}

impl Default for BpOptions {
    fn default() -> Self {
        Self { max_iterations: 200, gap_tolerance: 1e-8, feasibility_tolerance: 1e-8 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BpSolution {
    pub x: DenseVector,
    pub iterations: usize,
    /// `cᵀz − bᵀλ` at termination.
    pub duality_gap: f64,
    /// `||Φx̃ − y||₂` in the original coordinates.
    pub residual: f64,
}

impl BpSolution {
    /// Packages the solution as a trace; entries with `|x̃_i| > 1e-9·||x̃||_∞`
    /// are reported as selected.
    pub fn into_trace(self, y_norm: f64) -> RecoveryTrace {
        let cutoff = 1e-9 * self.x.norm_inf();
        let selected = self.x.iter().enumerate().filter(|(_, v)| v.abs() > cutoff).map(|(i, _)| i).collect();
        RecoveryTrace {
            algorithm: Algorithm::Bp,
            policy: None,
            selected,
            residual_norms: vec![y_norm, self.residual],
            terminated_by: TerminationReason::Converged,
            estimate: Some(self.x),
        }
    }
}

pub fn basis_pursuit(phi: &ObservationMatrix, y: &[f64]) -> Result<RecoveryTrace, RecoveryError> {
    let sol = basis_pursuit_with(phi, y, &BpOptions::default())?;
    Ok(sol.into_trace(norm2(y)))
}

/// Orthonormal rows spanning the row space of `Φ`, and `y` expressed against
/// them. Returns `Infeasible` if a dependent row carries an inconsistent entry
/// of `y`.
fn orthonormalize_rows(a: &DenseMatrix, y: &[f64]) -> Result<(Vec<Vec<f64>>, Vec<f64>), RecoveryError> {
    let mut q: Vec<Vec<f64>> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let y_scale = norm2(y);
    for i in 0..a.rows() {
        let mut v = a.row(i);
        let mut b = y[i];
        let row_norm = norm2(&v);
        for _pass in 0..2 {
            for (qj, bj) in q.iter().zip(&beta) {
                let s = dot(qj, &v);
                v.iter_mut().zip(qj).for_each(|(vi, qi)| *vi -= s * qi);
                b -= s * bj;
            }
        }
        let rest = norm2(&v);
        if rest <= 1e-10 * row_norm.max(f64::MIN_POSITIVE) {
            if b.abs() > 1e-8 * y_scale.max(row_norm * y_scale) {
                return Err(RecoveryError::Infeasible { residual: b.abs() });
            }
            continue;
        }
        v.iter_mut().for_each(|e| *e /= rest);
        q.push(v);
        beta.push(b / rest);
    }
    Ok((q, beta))
}

/// Step to the boundary of the nonnegative orthant along `dx`, capped at 1.
fn max_step(x: &[f64], dx: &[f64]) -> f64 {
    x.iter().zip(dx).filter(|(_, d)| **d < 0.0).fold(1.0, |a, (xi, di)| a.min(-xi / di))
}

struct Normal<'a> {
    rows: &'a [Vec<f64>],
    n: usize,
}

impl Normal<'_> {
    fn m(&self) -> usize {
        self.rows.len()
    }

    /// `A w` with `A = [Q, −Q]`.
    fn apply(&self, w: &[f64]) -> Vec<f64> {
        let n = self.n;
        self.rows
            .iter()
            .map(|q| q.iter().enumerate().map(|(j, qj)| qj * (w[j] - w[n + j])).sum())
            .collect()
    }

    /// `Aᵀ λ`.
    fn apply_t(&self, lambda: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; 2 * n];
        for (q, l) in self.rows.iter().zip(lambda) {
            for j in 0..n {
                out[j] += q[j] * l;
            }
        }
        for j in 0..n {
            out[n + j] = -out[j];
        }
        out
    }

    /// Factors `A D Aᵀ = Q diag(d_u + d_v) Qᵀ`, regularizing if needed.
    fn factor(&self, d: &[f64]) -> Result<Cholesky, RecoveryError> {
        let (m, n) = (self.m(), self.n);
        let w: Vec<f64> = (0..n).map(|j| d[j] + d[n + j]).collect();
        let mut g = vec![0.0; m * m];
        for i in 0..m {
            for k in 0..=i {
                let s: f64 = self.rows[i].iter().zip(&self.rows[k]).zip(&w).map(|((a, b), c)| a * b * c).sum();
                g[i * m + k] = s;
                g[k * m + i] = s;
            }
        }
        let trace: f64 = (0..m).map(|i| g[i * m + i]).sum::<f64>() / m as f64;
        let mut shift = 0.0;
        for _ in 0..8 {
            match Cholesky::factor(&g, m) {
                Ok(c) => return Ok(c),
                Err(LinalgError::NotPositiveDefinite) => {
                    let next = if shift == 0.0 { 1e-14 * trace } else { shift * 100.0 };
                    for i in 0..m {
                        g[i * m + i] += next - shift;
                    }
                    shift = next;
                }
                Err(e) => return Err(e.into()),
            }
        }
        Err(LinalgError::NotPositiveDefinite.into())
    }
}

/// Basis pursuit with explicit solver settings.
pub fn basis_pursuit_with(phi: &ObservationMatrix, y: &[f64], opts: &BpOptions) -> Result<BpSolution, RecoveryError> {
    let a = phi.matrix();
    let n = a.cols();
    check_measurements(a.rows(), y)?;
    let y_norm = norm2(y);
    if y_norm == 0.0 {
        return Ok(BpSolution { x: DenseVector::zeros(n), iterations: 0, duality_gap: 0.0, residual: 0.0 });
    }
    let (rows, b) = orthonormalize_rows(a, y)?;
    let sys = Normal { rows: &rows, n };
    let nz = 2 * n;
    let c = vec![1.0; nz];
    // Internal targets are tighter than the contract so that mapping back to the
    // original coordinates does not lose it.
    let inner_tol = 1e-2 * opts.gap_tolerance.min(opts.feasibility_tolerance);

    // Mehrotra's starting point. Rows of Q are orthonormal, so A Aᵀ = 2I.
    let mut z: Vec<f64> = sys.apply_t(&b).iter().map(|v| v / 2.0).collect();
    let mut lambda = vec![0.0; sys.m()];
    let mut s = c.clone();
    let dz = (-1.5 * z.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    let ds = (-1.5 * s.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    z.iter_mut().for_each(|v| *v += dz);
    s.iter_mut().for_each(|v| *v += ds);
    let zs = dot(&z, &s);
    let (sz, ss): (f64, f64) = (z.iter().sum(), s.iter().sum());
    let (dz2, ds2) = (0.5 * zs / ss, 0.5 * zs / sz);
    z.iter_mut().for_each(|v| *v += dz2);
    s.iter_mut().for_each(|v| *v += ds2);

    let b_norm = norm2(&b);
    let mut gap = f64::INFINITY;
    let mut infeas = f64::INFINITY;
    for iter in 0..opts.max_iterations {
        let az = sys.apply(&z);
        let r_b: Vec<f64> = b.iter().zip(&az).map(|(bi, ai)| bi - ai).collect();
        let atl = sys.apply_t(&lambda);
        let r_c: Vec<f64> = (0..nz).map(|i| c[i] - atl[i] - s[i]).collect();
        let primal = z.iter().sum::<f64>();
        gap = primal - dot(&b, &lambda);
        infeas = norm2(&r_b) / b_norm;
        let dual_infeas = norm2(&r_c) / (1.0 + (nz as f64).sqrt());
        let mu = dot(&z, &s) / nz as f64;

        if infeas <= inner_tol && dual_infeas <= inner_tol && gap.abs() <= inner_tol * (1.0 + primal) {
            let x: Vec<f64> = (0..n).map(|j| z[j] - z[n + j]).collect();
            let fx = a.matvec(&x)?;
            let residual = fx.iter().zip(y).map(|(u, v)| (u - v) * (u - v)).sum::<f64>().sqrt();
            let x1: f64 = x.iter().map(|v| v.abs()).sum();
            if residual <= opts.feasibility_tolerance * y_norm && gap.abs() <= opts.gap_tolerance * (1.0 + x1) {
                return Ok(BpSolution { x: DenseVector::new(x)?, iterations: iter, duality_gap: gap, residual });
            }
        }

        let d: Vec<f64> = z.iter().zip(&s).map(|(zi, si)| zi / si).collect();
        let chol = sys.factor(&d)?;
        // Shared part of the right-hand side: r_b + A D r_c.
        let d_rc: Vec<f64> = d.iter().zip(&r_c).map(|(di, ri)| di * ri).collect();
        let a_d_rc = sys.apply(&d_rc);
        let solve = |r_xs: &[f64]| {
            let s_inv_rxs: Vec<f64> = r_xs.iter().zip(&s).map(|(r, si)| r / si).collect();
            let a_sr = sys.apply(&s_inv_rxs);
            let rhs: Vec<f64> = (0..sys.m()).map(|i| r_b[i] - a_sr[i] + a_d_rc[i]).collect();
            let dl = chol.solve(&rhs);
            let atdl = sys.apply_t(&dl);
            let ds: Vec<f64> = (0..nz).map(|i| r_c[i] - atdl[i]).collect();
            let dz: Vec<f64> = (0..nz).map(|i| s_inv_rxs[i] - d[i] * ds[i]).collect();
            (dz, dl, ds)
        };

        let r_aff: Vec<f64> = z.iter().zip(&s).map(|(zi, si)| -zi * si).collect();
        let (dz_a, _, ds_a) = solve(&r_aff);
        let ap = max_step(&z, &dz_a);
        let ad = max_step(&s, &ds_a);
        let mu_aff = (0..nz).map(|i| (z[i] + ap * dz_a[i]) * (s[i] + ad * ds_a[i])).sum::<f64>() / nz as f64;
        let sigma = (mu_aff / mu).powi(3).min(1.0);

        let r_cc: Vec<f64> = (0..nz).map(|i| sigma * mu - z[i] * s[i] - dz_a[i] * ds_a[i]).collect();
        let (dzv, dl, dsv) = solve(&r_cc);
        let ap = (0.995 * max_step(&z, &dzv)).min(1.0);
        let ad = (0.995 * max_step(&s, &dsv)).min(1.0);
        for i in 0..nz {
            z[i] += ap * dzv[i];
            s[i] += ad * dsv[i];
        }
        for (l, d) in lambda.iter_mut().zip(&dl) {
            *l += ad * d;
        }
    }
    Err(RecoveryError::NotConverged { iterations: opts.max_iterations, gap, infeasibility: infeas })
}
