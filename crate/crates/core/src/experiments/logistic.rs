use serde::{Deserialize, Serialize};

use super::{CellResult, ExperimentError};

const MAX_ITERATIONS: usize = 100;
const STEP_TOLERANCE: f64 = 1e-8;
const MIN_SLOPE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Maximum-likelihood logistic regression.
    Logistic,
    /// Successes and failures are separated in ρ; midpoint of the gap.
    Midpoint,
    /// Every trial succeeded; the crossing lies beyond the grid.
    AllSuccess,
    /// Every trial failed; the crossing lies below the grid.
    AllFailure,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitDiagnostics {
    pub method: FitMethod,
    pub converged: bool,
    pub iterations: usize,
    pub intercept: f64,
    pub slope: f64,
    /// The estimate lies outside the sampled ρ range.
    pub extrapolated: bool,
}

fn log_likelihood(a: f64, b: f64, data: &[(f64, f64, f64)]) -> f64 {
    data.iter()
        .map(|&(x, s, n)| {
            let eta = a + b * x;
            // log σ(η) and log(1 − σ(η)) without overflow.
            let log_p = -(-eta).exp().ln_1p();
            let log_q = -eta.exp().ln_1p();
            let log_p = if log_p.is_finite() { log_p } else { eta };
            let log_q = if log_q.is_finite() { log_q } else { -eta };
            s * log_p + (n - s) * log_q
        })
        .sum()
}

/// ρ at which the fitted success probability crosses 50%.
///
/// Fits `P(success) = 1/(1 + exp(−(a + bρ)))` by iteratively reweighted least
/// squares. Data whose successes and failures are separated in ρ have no
/// finite maximum-likelihood estimate; for those the midpoint between the
/// largest ρ with a success and the smallest ρ with a failure is returned,
/// flagged as [`FitMethod::Midpoint`]. Constant responses (all success, all
/// failure, or a flat fit) are `DegenerateData`.
pub fn fit_rho_50(cells: &[CellResult]) -> Result<(f64, FitDiagnostics), ExperimentError> {
    let mut rhos: Vec<f64> = cells.iter().map(|c| c.rho).collect();
    rhos.sort_by(f64::total_cmp);
    rhos.dedup();
    if rhos.len() < 3 {
        return Err(ExperimentError::InsufficientData(rhos.len()));
    }
    let (lo, hi) = (rhos[0], rhos[rhos.len() - 1]);
    let data: Vec<(f64, f64, f64)> =
        cells.iter().filter(|c| c.trials > 0).map(|c| (c.rho, c.successes as f64, c.trials as f64)).collect();
    let total_s: f64 = data.iter().map(|d| d.1).sum();
    let total_n: f64 = data.iter().map(|d| d.2).sum();
    if total_s == 0.0 {
        return Err(ExperimentError::DegenerateData("no successes".into()));
    }
    if total_s == total_n {
        return Err(ExperimentError::DegenerateData("no failures".into()));
    }

    let s_max = data.iter().filter(|d| d.1 > 0.0).map(|d| d.0).fold(f64::NEG_INFINITY, f64::max);
    let f_min = data.iter().filter(|d| d.1 < d.2).map(|d| d.0).fold(f64::INFINITY, f64::min);
    if s_max <= f_min {
        let mid = 0.5 * (s_max + f_min);
        return Ok((
            mid,
            FitDiagnostics {
                method: FitMethod::Midpoint,
                converged: false,
                iterations: 0,
                intercept: f64::NAN,
                slope: f64::NAN,
                extrapolated: false,
            },
        ));
    }

    let (mut a, mut b) = (0.0f64, 0.0f64);
    let mut ll = log_likelihood(a, b, &data);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let (mut g0, mut g1, mut h00, mut h01, mut h11) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for &(x, s, n) in &data {
            let p = 1.0 / (1.0 + (-(a + b * x)).exp());
            let w = n * p * (1.0 - p);
            let e = s - n * p;
            g0 += e;
            g1 += e * x;
            h00 += w;
            h01 += w * x;
            h11 += w * x * x;
        }
        let det = h00 * h11 - h01 * h01;
        if !(det > 0.0) {
            break;
        }
        let mut da = (h11 * g0 - h01 * g1) / det;
        let mut db = (h00 * g1 - h01 * g0) / det;
        // Newton steps on a concave likelihood; halve if overshooting.
        let mut next = log_likelihood(a + da, b + db, &data);
        let mut halvings = 0;
        while next < ll - 1e-12 * ll.abs() && halvings < 30 {
            da *= 0.5;
            db *= 0.5;
            next = log_likelihood(a + da, b + db, &data);
            halvings += 1;
        }
        a += da;
        b += db;
        ll = next;
        if da.abs().max(db.abs()) < STEP_TOLERANCE {
            converged = true;
            break;
        }
    }
    if b.abs() < MIN_SLOPE {
        return Err(ExperimentError::DegenerateData(format!("fitted slope {b:.3e} is flat")));
    }
    let rho = -a / b;
    let extrapolated = !(lo..=hi).contains(&rho);
    Ok((rho, FitDiagnostics { method: FitMethod::Logistic, converged, iterations, intercept: a, slope: b, extrapolated }))
}
