use serde::{Deserialize, Serialize};

use super::{Exactness, GuaranteeError, RicEntry, RicTable};
use crate::ensembles::{EnsembleKind, ObservationMatrix, SparseSignal};
use crate::linalg::dot;

/// RIP threshold on `δ_{K+1}` under which OMP recovers every K-sparse signal in
/// exactly K iterations: `1/(√K + 1)`.
pub fn wang_bound(k: usize) -> f64 {
    1.0 / ((k as f64).sqrt() + 1.0)
}

/// Threshold on `δ_{K+n_f+1}` that makes the next OMP iteration succeed once
/// `n_c` correct indices are in the support estimate: `1/(√(K − n_c) + 1)`.
///
/// Panics if `n_c > k`.
pub fn online_bound(k: usize, n_c: usize) -> f64 {
    assert!(n_c <= k, "n_c = {n_c} exceeds k = {k}");
    1.0 / (((k - n_c) as f64).sqrt() + 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    /// The condition holds on exact constants.
    Certified,
    /// The condition fails (the RIC, or a lower bound of it, is at or above the bound).
    Violated,
    /// Only a lower bound is known and it lies below the threshold.
    Inconclusive,
}

impl Verdict {
    pub fn holds(self) -> bool {
        self == Verdict::Certified
    }

    /// `value < bound` judged with the exactness of `value`. Constants of one or
    /// more mean the RIP fails at that order, so nothing is certified.
    pub fn of(entry: &RicEntry, bound: f64) -> Verdict {
        if entry.delta >= 1.0 || entry.delta >= bound {
            Verdict::Violated
        } else if entry.exactness == Exactness::Exact {
            Verdict::Certified
        } else {
            Verdict::Inconclusive
        }
    }
}

/// Online condition at state `(n_c, n_f)`: `δ_{k+n_f+1} < online_bound(k, n_c)`.
pub fn check_online_iteration(ric: &RicTable, k: usize, n_c: usize, n_f: usize) -> Result<Verdict, GuaranteeError> {
    if n_c > k {
        return Err(GuaranteeError::InvalidInput(format!("n_c = {n_c} exceeds k = {k}")));
    }
    let entry = ric.get(k + n_f + 1)?;
    Ok(Verdict::of(entry, online_bound(k, n_c)))
}

/// Lower end of the `n_c` range in which Theorem 4 guarantees recovery:
/// `(8K + 4√K − 4)/9`, defined for `K ≥ 25`.
pub fn nc_lower_bound(k: usize) -> Result<f64, GuaranteeError> {
    if k < 25 {
        return Err(GuaranteeError::KTooSmall(k));
    }
    let kf = k as f64;
    Ok((8.0 * kf + 4.0 * kf.sqrt() - 4.0) / 9.0)
}

/// `K ≥ 25`, `1 ≤ n_f < ⌈K/2⌉` and `K > n_c ≥ nc_lower_bound(K)`.
pub fn check_thrm4_preconditions(k: usize, n_c: usize, n_f: usize) -> bool {
    let Ok(lower) = nc_lower_bound(k) else {
        return false;
    };
    n_f >= 1 && n_f < k.div_ceil(2) && n_c < k && n_c as f64 >= lower
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationBounds {
    /// `max_{t ∈ T} |⟨φ_t, y⟩|`.
    pub observed: f64,
    /// `√(1 + δ_K²)·||x||₂`.
    pub general_bound: f64,
    /// `1 + δ_K·√(K − 1)`, only for constant-amplitude signals.
    pub cars_bound: Option<f64>,
}

/// Upper bounds on the correlation between the measurements and the support
/// columns. `delta_k` must be the RIC of order `K` (or an upper bound on it).
pub fn correlation_bounds(
    phi: &ObservationMatrix,
    x: &SparseSignal,
    delta_k: f64,
) -> Result<CorrelationBounds, GuaranteeError> {
    if !phi.column_normalized() {
        return Err(GuaranteeError::ColumnsNotNormalized);
    }
    let y = phi.measure(x).map_err(|e| GuaranteeError::InvalidInput(e.to_string()))?;
    let observed = x
        .support()
        .iter()
        .map(|&t| dot(phi.matrix().column(t), &y).abs())
        .fold(0.0, f64::max);
    let general_bound = (1.0 + delta_k * delta_k).sqrt() * x.norm2();
    let cars_bound = (x.ensemble() == EnsembleKind::Cars).then(|| 1.0 + delta_k * ((x.k() - 1) as f64).sqrt());
    Ok(CorrelationBounds { observed, general_bound, cars_bound })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;

    fn table(values: &[f64]) -> RicTable {
        RicTable::from_entries(
            "t",
            values.iter().enumerate().map(|(i, &d)| RicEntry { k: i + 1, delta: d, exactness: Exactness::Exact }).collect(),
        )
    }

    #[test]
    fn bound_values() {
        assert_eq!(wang_bound(1), 0.5);
        assert!((wang_bound(4) - 1.0 / 3.0).abs() < 1e-15);
        assert!((wang_bound(25) - 1.0 / 6.0).abs() < 1e-15);
        assert_eq!(online_bound(7, 7), 1.0);
        assert!((online_bound(40, 36) - 1.0 / 3.0).abs() < 1e-15);
        for k in 1..200 {
            assert_eq!(online_bound(k, 0), wang_bound(k));
        }
    }

    #[test]
    fn online_checks() {
        let zeros = table(&[0.0; 10]);
        for n_c in 0..=3 {
            for n_f in 0..=6 {
                assert_eq!(check_online_iteration(&zeros, 3, n_c, n_f).unwrap(), Verdict::Certified);
            }
        }
        let ones = table(&[1.0; 10]);
        assert_eq!(check_online_iteration(&ones, 3, 3, 0).unwrap(), Verdict::Violated);
        let mut t = table(&[0.0; 42]);
        t.deltas.push(RicEntry { k: 43, delta: 0.3, exactness: Exactness::Exact });
        assert_eq!(check_online_iteration(&t, 40, 36, 2).unwrap(), Verdict::Certified);
        assert!(matches!(check_online_iteration(&zeros, 9, 0, 5), Err(GuaranteeError::RicIndexMissing(15))));
    }

    #[test]
    fn lower_bounds_never_certify() {
        let lb = RicEntry { k: 3, delta: 0.1, exactness: Exactness::LowerBound };
        assert_eq!(Verdict::of(&lb, 0.5), Verdict::Inconclusive);
        assert_eq!(Verdict::of(&RicEntry { delta: 0.6, ..lb }, 0.5), Verdict::Violated);
    }

    #[test]
    fn theorem4_preconditions() {
        assert_eq!(nc_lower_bound(25).unwrap(), 24.0);
        assert!((nc_lower_bound(100).unwrap() - 836.0 / 9.0).abs() < 1e-12);
        assert!(nc_lower_bound(24).is_err());
        assert!(!check_thrm4_preconditions(24, 23, 1));
        assert!(check_thrm4_preconditions(25, 24, 1));
        assert!(!check_thrm4_preconditions(25, 24, 13));
        assert!(check_thrm4_preconditions(25, 24, 12));
        assert!(!check_thrm4_preconditions(25, 23, 1));
        assert!(!check_thrm4_preconditions(25, 25, 1));
        let admissible: Vec<usize> = (0..100).filter(|&n_c| check_thrm4_preconditions(100, n_c, 1)).collect();
        assert_eq!(admissible, (93..100).collect::<Vec<_>>());
        for k in 25..2000 {
            assert!(nc_lower_bound(k + 1).unwrap() > nc_lower_bound(k).unwrap());
        }
    }

    #[test]
    fn correlation_bounds_orthonormal() {
        let phi = ObservationMatrix::any_shape(DenseMatrix::identity(6).unwrap());
        let x = SparseSignal::new(6, vec![1, 4], vec![1.0, -1.0], EnsembleKind::Cars, 0).unwrap();
        let b = correlation_bounds(&phi, &x, 0.0).unwrap();
        assert_eq!(b.observed, 1.0);
        assert_eq!(b.cars_bound, Some(1.0));
        assert!((b.general_bound - 2f64.sqrt()).abs() < 1e-15);
        let skewed = ObservationMatrix::any_shape(DenseMatrix::from_rows(&[[2.0, 0.0, 0.0], [0.0, 1.0, 1.0]]).unwrap());
        assert!(matches!(correlation_bounds(&skewed, &x, 0.0), Err(GuaranteeError::ColumnsNotNormalized)));
    }
}
