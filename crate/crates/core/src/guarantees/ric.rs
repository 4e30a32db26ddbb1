//! Restricted isometry constants.
//!
//! `δ_k` is the smallest constant with
//! `(1 − δ)||x||² ≤ ||Φx||² ≤ (1 + δ)||x||²` for every `k`-sparse `x`, i.e. the
//! largest deviation from 1 of any eigenvalue of any `k × k` principal submatrix
//! of the Gram matrix `ΦᵀΦ`. Here it is computed by brute force over subsets.

use rand::seq::index::sample;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::GuaranteeError;
use crate::ensembles::ObservationMatrix;
use crate::linalg::{jacobi_eigenvalues_in_place, DenseMatrix};
use crate::rng;

/// Largest number of subsets [`exact_ric`] will enumerate.
pub const RIC_BUDGET: u128 = 2_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exactness {
    Exact,
    /// The value is a lower bound on the true constant.
    LowerBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RicEntry {
    pub k: usize,
    pub delta: f64,
    pub exactness: Exactness,
}

/// RICs of one matrix for orders `1..=k_max`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RicTable {
    pub matrix_id: String,
    pub k_max: usize,
    pub deltas: Vec<RicEntry>,
}

impl RicTable {
    /// Exact constants for every order up to `k_max`.
    pub fn exact(phi: &ObservationMatrix, k_max: usize) -> Result<Self, GuaranteeError> {
        let gram = phi.matrix().gram();
        let mut deltas = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            deltas.push(RicEntry { k, delta: exact_ric_gram(&gram, k, RIC_BUDGET)?, exactness: Exactness::Exact });
        }
        Ok(Self { matrix_id: phi.fingerprint(), k_max, deltas })
    }

    /// Monte-Carlo lower bounds for every order (exact where `samples` covers all
    /// subsets).
    pub fn monte_carlo(phi: &ObservationMatrix, k_max: usize, samples: usize, seed: u64) -> Result<Self, GuaranteeError> {
        let mut deltas = Vec::with_capacity(k_max);
        for k in 1..=k_max {
            let sub_seed = rng::derive_seed(seed, &[k as u64]);
            let (delta, exhaustive) = monte_carlo_ric_labelled(phi, k, samples, sub_seed)?;
            let exactness = if exhaustive { Exactness::Exact } else { Exactness::LowerBound };
            deltas.push(RicEntry { k, delta, exactness });
        }
        Ok(Self { matrix_id: phi.fingerprint(), k_max, deltas })
    }

    pub fn from_entries(matrix_id: impl Into<String>, deltas: Vec<RicEntry>) -> Self {
        let k_max = deltas.iter().map(|e| e.k).max().unwrap_or(0);
        Self { matrix_id: matrix_id.into(), k_max, deltas }
    }

    pub fn get(&self, k: usize) -> Result<&RicEntry, GuaranteeError> {
        self.deltas.iter().find(|e| e.k == k).ok_or(GuaranteeError::RicIndexMissing(k))
    }

    pub fn get_exact(&self, k: usize) -> Result<f64, GuaranteeError> {
        let e = self.get(k)?;
        match e.exactness {
            Exactness::Exact => Ok(e.delta),
            Exactness::LowerBound => Err(GuaranteeError::NotExact(k)),
        }
    }

    /// Whether `δ_k ≤ δ_{k+1}` across consecutive exact entries.
    pub fn is_monotone(&self) -> bool {
        let mut exact: Vec<&RicEntry> = self.deltas.iter().filter(|e| e.exactness == Exactness::Exact).collect();
        exact.sort_by_key(|e| e.k);
        exact.windows(2).all(|w| w[0].delta <= w[1].delta)
    }
}

pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// `max(λ_max − 1, 1 − λ_min)` of the principal submatrix of `gram` on `subset`.
fn subset_deviation(gram: &DenseMatrix, subset: &[usize], work: &mut Vec<f64>) -> f64 {
    let k = subset.len();
    if k == 1 {
        return (gram.get(subset[0], subset[0]) - 1.0).abs();
    }
    work.clear();
    for &j in subset {
        for &i in subset {
            work.push(gram.get(i, j));
        }
    }
    if k == 2 {
        let (a, b, d) = (work[0], work[1], work[3]);
        let mid = 0.5 * (a + d);
        let rad = (0.25 * (a - d) * (a - d) + b * b).sqrt();
        return (mid + rad - 1.0).max(1.0 - (mid - rad));
    }
    jacobi_eigenvalues_in_place(work, k);
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..k {
        let ev = work[i * k + i];
        lo = lo.min(ev);
        hi = hi.max(ev);
    }
    (hi - 1.0).max(1.0 - lo)
}

/// Advances `idx` to the next combination of `0..n` in lexicographic order,
/// keeping `idx[..fixed]` unchanged. Returns false when exhausted.
fn next_combination(idx: &mut [usize], n: usize, fixed: usize) -> bool {
    let k = idx.len();
    let mut i = k;
    while i > fixed {
        i -= 1;
        if idx[i] < n - (k - i) {
            idx[i] += 1;
            for j in i + 1..k {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

pub(crate) fn exact_ric_gram(gram: &DenseMatrix, k: usize, budget: u128) -> Result<f64, GuaranteeError> {
    let n = gram.cols();
    if k == 0 || k > n {
        return Err(GuaranteeError::InvalidInput(format!("RIC order must be in 1..={n}, got {k}")));
    }
    let required = binomial(n, k);
    if required > budget {
        return Err(GuaranteeError::BudgetExceeded { k, required, budget });
    }
    // Split by the first index; max is exact in floating point, so the
    // reduction order cannot change the result.
    let best = (0..=n - k)
        .into_par_iter()
        .map(|first| {
            let mut idx: Vec<usize> = (first..first + k).collect();
            let mut work = Vec::with_capacity(k * k);
            let mut best = subset_deviation(gram, &idx, &mut work);
            while next_combination(&mut idx, n, 1) {
                best = best.max(subset_deviation(gram, &idx, &mut work));
            }
            best
        })
        .reduce(|| 0.0, f64::max);
    Ok(best)
}

/// Exact `δ_k` by enumerating all `C(N, k)` column subsets.
///
/// Columns need not be normalized. Fails with `BudgetExceeded` when the subset
/// count is above [`RIC_BUDGET`]; use [`monte_carlo_ric`] instead.
pub fn exact_ric(phi: &ObservationMatrix, k: usize) -> Result<f64, GuaranteeError> {
    exact_ric_gram(&phi.matrix().gram(), k, RIC_BUDGET)
}

fn monte_carlo_ric_labelled(
    phi: &ObservationMatrix,
    k: usize,
    samples: usize,
    seed: u64,
) -> Result<(f64, bool), GuaranteeError> {
    let n = phi.cols();
    if k == 0 || k > n {
        return Err(GuaranteeError::InvalidInput(format!("RIC order must be in 1..={n}, got {k}")));
    }
    let gram = phi.matrix().gram();
    let total = binomial(n, k);
    if samples as u128 >= total {
        return Ok((exact_ric_gram(&gram, k, total)?, true));
    }
    let mut stream = rng::stream(seed);
    let mut work = Vec::with_capacity(k * k);
    let mut best = 0.0f64;
    for _ in 0..samples {
        let mut subset = sample(&mut stream, n, k).into_vec();
        subset.sort_unstable();
        best = best.max(subset_deviation(&gram, &subset, &mut work));
    }
    Ok((best, false))
}

/// Lower bound on `δ_k` from `samples` random `k`-subsets. When `samples` is at
/// least `C(N, k)` every subset is visited once instead, so the value is exact.
pub fn monte_carlo_ric(phi: &ObservationMatrix, k: usize, samples: usize, seed: u64) -> Result<f64, GuaranteeError> {
    monte_carlo_ric_labelled(phi, k, samples, seed).map(|(d, _)| d)
}

/// Exact RICs of one matrix, computed on demand and cached.
///
/// [`RicOracle::entry_for_check`] exploits monotonicity: computing orders in
/// ascending sequence, the first exact `δ_j ≥ bound` already proves
/// `δ_k ≥ bound` for every `k ≥ j`, so higher orders need not be enumerated to
/// refute a condition. Orders above `M` always have `δ_k ≥ 1` because the
/// submatrix is singular.
#[derive(Debug, Clone)]
pub struct RicOracle {
    gram: DenseMatrix,
    rows: usize,
    cache: Vec<Option<f64>>,
    budget: u128,
}

impl RicOracle {
    pub fn new(phi: &ObservationMatrix) -> Self {
        Self::with_budget(phi, RIC_BUDGET)
    }

    pub fn with_budget(phi: &ObservationMatrix, budget: u128) -> Self {
        let gram = phi.matrix().gram();
        let n = gram.cols();
        Self { gram, rows: phi.rows(), cache: vec![None; n + 1], budget }
    }

    pub fn exact(&mut self, k: usize) -> Result<f64, GuaranteeError> {
        if let Some(Some(d)) = self.cache.get(k) {
            return Ok(*d);
        }
        let d = exact_ric_gram(&self.gram, k, self.budget)?;
        self.cache[k] = Some(d);
        Ok(d)
    }

    /// An entry for order `k` good enough to decide `δ_k < bound`: either the
    /// exact value, or a lower bound that is already `≥ bound`.
    pub fn entry_for_check(&mut self, k: usize, bound: f64) -> Result<RicEntry, GuaranteeError> {
        if k > self.rows {
            return Ok(RicEntry { k, delta: 1.0, exactness: Exactness::LowerBound });
        }
        for j in 1..k {
            let d = self.exact(j)?;
            if d >= bound {
                return Ok(RicEntry { k, delta: d, exactness: Exactness::LowerBound });
            }
        }
        Ok(RicEntry { k, delta: self.exact(k)?, exactness: Exactness::Exact })
    }

    /// Everything computed so far, as a table.
    pub fn table(&self, matrix_id: impl Into<String>) -> RicTable {
        let deltas = self
            .cache
            .iter()
            .enumerate()
            .filter_map(|(k, d)| d.map(|delta| RicEntry { k, delta, exactness: Exactness::Exact }))
            .collect();
        RicTable::from_entries(matrix_id, deltas)
    }
}
