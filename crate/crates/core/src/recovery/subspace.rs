use super::{check_measurements, scatter, Algorithm, RecoveryError, RecoveryTrace, TerminationReason};
use crate::ensembles::ObservationMatrix;
use crate::linalg::{least_squares, norm2, DenseMatrix, LinalgError};

/// Round cap for subspace pursuit.
pub const SP_MAX_ROUNDS: usize = 100;

/// A residual this small relative to `||y||₂` counts as an exact fit.
const ZERO_RESIDUAL: f64 = 1e-12;

/// Indices of the `k` largest `|values|`, ascending; ties go to lower indices.
fn top_k(values: &[f64], k: usize, exclude: &[usize]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).filter(|i| !exclude.contains(i)).collect();
    idx.sort_by(|&a, &b| values[b].abs().total_cmp(&values[a].abs()).then(a.cmp(&b)));
    idx.truncate(k);
    idx.sort_unstable();
    idx
}

struct Fit {
    support: Vec<usize>,
    coeffs: Vec<f64>,
    residual: Vec<f64>,
    norm: f64,
}

fn fit(a: &DenseMatrix, y: &[f64], support: Vec<usize>) -> Result<Fit, LinalgError> {
    let sub = a.select_columns(&support)?;
    let coeffs = least_squares(&sub, y)?.into_inner();
    let approx = sub.matvec(&coeffs)?;
    let residual: Vec<f64> = y.iter().zip(approx.iter()).map(|(a, b)| a - b).collect();
    let norm = norm2(&residual);
    Ok(Fit { support, coeffs, residual, norm })
}

/// Subspace pursuit for a `k`-sparse target.
///
/// Starts from the `k` columns most correlated with `y`. Each round merges in
/// the `k` columns most correlated with the residual, solves least squares on
/// the merged set, keeps the `k` largest coefficients and refits. The loop ends
/// when a round fails to strictly decrease the residual (the previous support is
/// kept), when the residual vanishes, or after [`SP_MAX_ROUNDS`] rounds.
pub fn subspace_pursuit(phi: &ObservationMatrix, y: &[f64], k: usize) -> Result<RecoveryTrace, RecoveryError> {
    let a = phi.matrix();
    let (m, n) = (a.rows(), a.cols());
    check_measurements(m, y)?;
    if k == 0 || 2 * k > m || k >= n {
        return Err(RecoveryError::InvalidInput(format!(
            "subspace pursuit needs 1 <= k, 2k <= m and k < n (k = {k}, m = {m}, n = {n})"
        )));
    }
    let y_norm = norm2(y);
    let mut residual_norms = vec![y_norm];

    let rank_err = |support: &[usize], residual_norms: &[f64], coeffs: &[f64]| RecoveryError::RankDeficient {
        trace: Box::new(RecoveryTrace {
            algorithm: Algorithm::Sp,
            policy: None,
            selected: support.to_vec(),
            residual_norms: residual_norms.to_vec(),
            terminated_by: TerminationReason::MaxIterations,
            estimate: Some(scatter(n, support, coeffs)),
        }),
    };
    let lift = |r: Result<Fit, LinalgError>, support: &[usize], norms: &[f64], coeffs: &[f64]| match r {
        Ok(f) => Ok(f),
        Err(LinalgError::RankDeficient { .. }) => Err(rank_err(support, norms, coeffs)),
        Err(e) => Err(RecoveryError::from(e)),
    };

    let init = top_k(&a.matvec_transpose(y)?, k, &[]);
    let mut current = lift(fit(a, y, init.clone()), &init, &residual_norms, &vec![0.0; k])?;
    residual_norms.push(current.norm);

    let mut terminated_by = TerminationReason::MaxIterations;
    for _round in 0..SP_MAX_ROUNDS {
        if current.norm <= ZERO_RESIDUAL * y_norm {
            terminated_by = TerminationReason::ResidueBelowEpsilon;
            break;
        }
        let corr = a.matvec_transpose(&current.residual)?;
        let mut merged = current.support.clone();
        merged.extend(top_k(&corr, k, &current.support));
        merged.sort_unstable();
        let wide = lift(fit(a, y, merged.clone()), &current.support, &residual_norms, &current.coeffs)?;
        let mut order: Vec<usize> = (0..merged.len()).collect();
        order.sort_by(|&i, &j| wide.coeffs[j].abs().total_cmp(&wide.coeffs[i].abs()).then(i.cmp(&j)));
        let mut pruned: Vec<usize> = order[..k].iter().map(|&i| merged[i]).collect();
        pruned.sort_unstable();
        let next = lift(fit(a, y, pruned), &current.support, &residual_norms, &current.coeffs)?;
        if next.norm >= current.norm {
            terminated_by = TerminationReason::ResidualStalled;
            break;
        }
        residual_norms.push(next.norm);
        current = next;
    }
    if terminated_by == TerminationReason::MaxIterations && current.norm <= ZERO_RESIDUAL * y_norm {
        terminated_by = TerminationReason::ResidueBelowEpsilon;
    }

    Ok(RecoveryTrace {
        algorithm: Algorithm::Sp,
        policy: None,
        estimate: Some(scatter(n, &current.support, &current.coeffs)),
        selected: current.support,
        residual_norms,
        terminated_by,
    })
}
