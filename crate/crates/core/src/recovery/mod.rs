//! Sparse recovery algorithms.
//!
//! * [`omp`] — orthogonal matching pursuit, terminated either after a fixed number
//!   of iterations (OMP_K) or once the relative residual is small (OMP_e).
//! * [`subspace_pursuit`] — the fixed-cardinality swap method.
//! * [`basis_pursuit`] — ℓ₁ minimization through a primal-dual interior point LP
//!   solver.
//!
//! All three return a [`RecoveryTrace`]; [`diagnose`] compares a trace against the
//! ground truth support.

mod basis_pursuit;
mod omp;
mod subspace;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ensembles::SparseSignal;
use crate::linalg::{DenseVector, LinalgError};

pub use basis_pursuit::{basis_pursuit, basis_pursuit_with, BpOptions, BpSolution};
pub use omp::omp;
pub use subspace::{subspace_pursuit, SP_MAX_ROUNDS};

/// Default OMP_e residual threshold, relative to `||y||₂`.
pub const DEFAULT_EPSILON: f64 = 1e-6;

/// Relative error below which a recovery counts as exact.
pub const EXACT_RECOVERY_TOLERANCE: f64 = 1e-2;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RecoveryError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    /// The selected columns became linearly dependent. The trace holds everything
    /// computed before the failing step.
    #[error("rank-deficient column set after {} selections", .trace.selected.len())]
    RankDeficient { trace: Box<RecoveryTrace> },
    #[error("measurements are not in the range of the dictionary (residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("solver did not converge in {iterations} iterations (gap {gap:.3e}, infeasibility {infeasibility:.3e})")]
    NotConverged { iterations: usize, gap: f64, infeasibility: f64 },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "omp_k")]
    OmpK,
    #[serde(rename = "omp_e")]
    OmpE,
    #[serde(rename = "sp")]
    Sp,
    #[serde(rename = "bp")]
    Bp,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::OmpK, Algorithm::OmpE, Algorithm::Sp, Algorithm::Bp];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::OmpK => "omp_k",
            Algorithm::OmpE => "omp_e",
            Algorithm::Sp => "sp",
            Algorithm::Bp => "bp",
        }
    }

    /// Label used in plots and tables.
    pub fn label(self) -> &'static str {
        match self {
            Algorithm::OmpK => "OMP_K",
            Algorithm::OmpE => "OMP_e",
            Algorithm::Sp => "SP",
            Algorithm::Bp => "BP",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "omp_k" | "ompk" => Ok(Algorithm::OmpK),
            "omp_e" | "ompe" => Ok(Algorithm::OmpE),
            "sp" => Ok(Algorithm::Sp),
            "bp" => Ok(Algorithm::Bp),
            other => Err(format!("unknown algorithm {other:?} (expected omp_k, omp_e, sp or bp)")),
        }
    }
}

/// When OMP stops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TerminationPolicy {
    /// Exactly `k` iterations (OMP_K).
    SparsityK { k: usize },
    /// Stop once `||r||₂ ≤ epsilon·||y||₂`, or after `max_iterations` (OMP_e).
    Residue { epsilon: f64, max_iterations: usize },
}

impl TerminationPolicy {
    pub fn sparsity(k: usize) -> Result<Self, RecoveryError> {
        let p = TerminationPolicy::SparsityK { k };
        p.validate()?;
        Ok(p)
    }

    pub fn residue(epsilon: f64, max_iterations: usize) -> Result<Self, RecoveryError> {
        let p = TerminationPolicy::Residue { epsilon, max_iterations };
        p.validate()?;
        Ok(p)
    }

    /// OMP_e with the default threshold and at most `m` iterations.
    pub fn omp_e(m: usize) -> Self {
        TerminationPolicy::Residue { epsilon: DEFAULT_EPSILON, max_iterations: m.max(1) }
    }

    pub fn validate(&self) -> Result<(), RecoveryError> {
        match *self {
            TerminationPolicy::SparsityK { k: 0 } => {
                Err(RecoveryError::InvalidInput("sparsity k must be at least 1".into()))
            }
            TerminationPolicy::Residue { epsilon, .. } if !(epsilon > 0.0 && epsilon.is_finite()) => {
                Err(RecoveryError::InvalidInput(format!("epsilon must be positive, got {epsilon}")))
            }
            TerminationPolicy::Residue { max_iterations: 0, .. } => {
                Err(RecoveryError::InvalidInput("max_iterations must be at least 1".into()))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    SparsityReached,
    ResidueBelowEpsilon,
    MaxIterations,
    /// Subspace pursuit: a round failed to strictly decrease the residual.
    ResidualStalled,
    /// Basis pursuit: the LP optimality conditions were met.
    Converged,
}

/// What a recovery run did.
///
/// For OMP, `selected` lists the chosen indices in selection order and
/// `residual_norms[l]` is `||r^l||₂`, starting with `||y||₂`. For subspace
/// pursuit, `selected` is the final support (ascending) and `residual_norms`
/// holds one entry per accepted round. For basis pursuit, `selected` lists the
/// indices of nonzero estimate entries and `residual_norms` is `[||y||₂, ||Φx̃ − y||₂]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryTrace {
    pub algorithm: Algorithm,
    #[serde(default)]
    pub policy: Option<TerminationPolicy>,
    pub selected: Vec<usize>,
    pub residual_norms: Vec<f64>,
    pub terminated_by: TerminationReason,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub estimate: Option<DenseVector>,
}

impl RecoveryTrace {
    pub fn iterations(&self) -> usize {
        self.selected.len()
    }

    pub fn final_residual(&self) -> f64 {
        self.residual_norms.last().copied().unwrap_or(0.0)
    }

    /// The estimate; present on every trace returned by the solvers.
    pub fn estimate(&self) -> &DenseVector {
        self.estimate.as_ref().expect("solver traces always carry an estimate")
    }

    /// JSON form; the dense estimate is included only on request.
    pub fn to_json(&self, include_estimate: bool) -> serde_json::Value {
        let mut value = serde_json::to_value(self).expect("trace is serializable");
        if !include_estimate {
            if let Some(obj) = value.as_object_mut() {
                obj.remove("estimate");
            }
        }
        value
    }
}

/// Correct and false selections against the true support.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SupportDiagnostics {
    pub n_c: usize,
    pub n_f: usize,
    /// `(n_c, n_f)` after each iteration `l = 1..=L`.
    pub per_iteration: Vec<(usize, usize)>,
}

pub fn diagnose(trace: &RecoveryTrace, truth: &SparseSignal) -> Result<SupportDiagnostics, RecoveryError> {
    if let Some(est) = &trace.estimate {
        if est.len() != truth.n() {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("trace over n = {}", truth.n()),
                found: format!("n = {}", est.len()),
            }
            .into());
        }
    }
    if let Some(&bad) = trace.selected.iter().find(|&&i| i >= truth.n()) {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("indices below {}", truth.n()),
            found: bad.to_string(),
        }
        .into());
    }
    let mut per_iteration = Vec::with_capacity(trace.selected.len());
    let (mut n_c, mut n_f) = (0, 0);
    for &i in &trace.selected {
        if truth.contains(i) {
            n_c += 1;
        } else {
            n_f += 1;
        }
        per_iteration.push((n_c, n_f));
    }
    Ok(SupportDiagnostics { n_c, n_f, per_iteration })
}

/// `||x − x̃||₂ ≤ 10⁻²·||x||₂`.
pub fn is_exact_recovery(x: &SparseSignal, estimate: &[f64]) -> Result<bool, RecoveryError> {
    if estimate.len() != x.n() {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("estimate of length {}", x.n()),
            found: estimate.len().to_string(),
        }
        .into());
    }
    let truth = x.to_dense();
    let err: f64 = truth.iter().zip(estimate).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
    Ok(err <= EXACT_RECOVERY_TOLERANCE * x.norm2())
}

/// Scatters coefficients on `support` into a length-`n` vector.
pub(crate) fn scatter(n: usize, support: &[usize], coeffs: &[f64]) -> DenseVector {
    let mut x = vec![0.0; n];
    for (&i, &c) in support.iter().zip(coeffs) {
        x[i] = c;
    }
    DenseVector::new(x).expect("least-squares coefficients are finite")
}

pub(crate) fn check_measurements(m: usize, y: &[f64]) -> Result<(), RecoveryError> {
    if y.len() != m {
        return Err(LinalgError::DimensionMismatch {
            expected: format!("measurements of length {m}"),
            found: y.len().to_string(),
        }
        .into());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::EnsembleKind;

    fn truth() -> SparseSignal {
        SparseSignal::new(15, vec![3, 9, 12], vec![1.0, -2.0, 0.5], EnsembleKind::Gaussian, 0).unwrap()
    }

    fn trace(selected: Vec<usize>) -> RecoveryTrace {
        RecoveryTrace {
            algorithm: Algorithm::OmpE,
            policy: None,
            residual_norms: vec![0.0; selected.len() + 1],
            selected,
            terminated_by: TerminationReason::MaxIterations,
            estimate: None,
        }
    }

    #[test]
    fn diagnose_counts() {
        let d = diagnose(&trace(vec![3, 7, 9]), &truth()).unwrap();
        assert_eq!((d.n_c, d.n_f), (2, 1));
        assert_eq!(d.per_iteration, vec![(1, 0), (1, 1), (2, 1)]);
        let d = diagnose(&trace(vec![12, 3]), &truth()).unwrap();
        assert_eq!((d.n_c, d.n_f), (2, 0));
        let d = diagnose(&trace(vec![0, 1]), &truth()).unwrap();
        assert_eq!((d.n_c, d.n_f), (0, 2));
        assert!(diagnose(&trace(vec![20]), &truth()).is_err());
    }

    #[test]
    fn exact_recovery_threshold() {
        let x = truth();
        let dense = x.to_dense();
        assert!(is_exact_recovery(&x, &dense).unwrap());
        assert!(!is_exact_recovery(&x, &[0.0; 15]).unwrap());
        let mut near = dense.into_inner();
        near[0] += 0.5e-2 * x.norm2();
        assert!(is_exact_recovery(&x, &near).unwrap());
        near[0] += 0.6e-2 * x.norm2();
        assert!(!is_exact_recovery(&x, &near).unwrap());
        assert!(is_exact_recovery(&x, &[0.0; 3]).is_err());
    }

    #[test]
    fn policy_validation() {
        assert!(TerminationPolicy::sparsity(0).is_err());
        assert!(TerminationPolicy::residue(0.0, 5).is_err());
        assert!(TerminationPolicy::residue(1e-6, 0).is_err());
        assert!(TerminationPolicy::residue(1e-6, 5).is_ok());
    }

    #[test]
    fn trace_json_shape() {
        let mut t = trace(vec![1, 2]);
        t.estimate = Some(DenseVector::zeros(3));
        let v = t.to_json(false);
        assert!(v.get("estimate").is_none());
        assert_eq!(v["algorithm"], "omp_e");
        assert_eq!(v["terminated_by"], "max_iterations");
        assert!(t.to_json(true)["estimate"].is_array());
        let back: RecoveryTrace = serde_json::from_value(t.to_json(true)).unwrap();
        assert_eq!(back, t);
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
            assert_eq!(serde_json::to_value(a).unwrap(), a.name());
        }
    }
}
