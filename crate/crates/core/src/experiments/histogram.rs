use std::collections::BTreeMap;

use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{comment_header, with_threads, write_csv, ExperimentError};
use crate::ensembles::{gen_gaussian_matrix, gen_sparse_signal, EnsembleKind};
use crate::recovery::{diagnose, is_exact_recovery, omp, RecoveryError, TerminationPolicy};
use crate::rng::derive_seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistogramConfig {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub ensemble: EnsembleKind,
    pub seed: u64,
}

impl HistogramConfig {
    /// `(M, K, N) = (125, 40, 250)`, 200 trials: λ = 0.5, ρ = 0.32.
    pub fn paper_small(seed: u64) -> Self {
        Self { m: 125, k: 40, n: 250, trials: 200, ensemble: EnsembleKind::Gaussian, seed }
    }

    /// `(M, K, N) = (150, 52, 250)`, 200 trials: λ = 0.6, ρ ≈ 0.347.
    pub fn paper_large(seed: u64) -> Self {
        Self { m: 150, k: 52, n: 250, trials: 200, ensemble: EnsembleKind::Gaussian, seed }
    }
}

/// False selections `n_f` among the OMP_e runs that recovered the signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NfHistogram {
    pub m: usize,
    pub k: usize,
    pub n: usize,
    pub trials: usize,
    pub ensemble: EnsembleKind,
    pub seed: u64,
    /// OMP_K runs that selected exactly the true support.
    pub ompk_successes: usize,
    /// OMP_K runs passing the relative-error recovery test.
    pub ompk_tolerance_successes: usize,
    pub ompe_successes: usize,
    /// `n_f → number of successful OMP_e runs`.
    pub counts: BTreeMap<usize, usize>,
    pub max_nf: usize,
    /// Successful OMP_e runs whose iteration count differs from `K + n_f`.
    pub iteration_mismatches: usize,
    /// OMP_K-exact trials that OMP_e did not finish with `n_f = 0`.
    pub ompk_outside_zero_bin: usize,
    pub errors: usize,
}

#[derive(Serialize)]
struct Bin {
    n_f: usize,
    count: usize,
}

impl NfHistogram {
    pub fn to_csv(&self) -> Result<String, ExperimentError> {
        let bins: Vec<Bin> = self.counts.iter().map(|(&n_f, &count)| Bin { n_f, count }).collect();
        let summary = serde_json::json!({
            "m": self.m, "k": self.k, "n": self.n, "trials": self.trials,
            "ensemble": self.ensemble, "seed": self.seed,
            "ompk_successes": self.ompk_successes, "ompe_successes": self.ompe_successes,
        });
        write_csv(&comment_header("config", &summary), &bins)
    }
}

struct TrialOutcome {
    ompk_exact: bool,
    ompk_tolerance: bool,
    /// `(n_f, iterations)` when OMP_e recovered the signal.
    ompe: Option<(usize, usize)>,
    error: Option<String>,
}

fn run_trial(cfg: &HistogramConfig, seed: u64) -> Result<TrialOutcome, RecoveryError> {
    let phi = gen_gaussian_matrix(cfg.m, cfg.n, derive_seed(seed, &[0]), true)
        .map_err(|e| RecoveryError::InvalidInput(e.to_string()))?;
    let x = gen_sparse_signal(cfg.n, cfg.k, cfg.ensemble, derive_seed(seed, &[1]))
        .map_err(|e| RecoveryError::InvalidInput(e.to_string()))?;
    let y = phi.measure(&x).map_err(|e| RecoveryError::InvalidInput(e.to_string()))?;

    let mut out = TrialOutcome { ompk_exact: false, ompk_tolerance: false, ompe: None, error: None };
    match omp(&phi, &y, &TerminationPolicy::SparsityK { k: cfg.k }) {
        Ok(t) => {
            out.ompk_tolerance = is_exact_recovery(&x, t.estimate())?;
            out.ompk_exact = t.selected.iter().all(|&i| x.contains(i));
        }
        Err(e) => out.error = Some(format!("omp_k: {e}")),
    }
    match omp(&phi, &y, &TerminationPolicy::omp_e(cfg.m)) {
        Ok(t) => {
            if is_exact_recovery(&x, t.estimate())? {
                let d = diagnose(&t, &x)?;
                out.ompe = Some((d.n_f, t.iterations()));
            }
        }
        Err(e) => out.error = Some(format!("omp_e: {e}")),
    }
    Ok(out)
}

/// Runs OMP_K and OMP_e on `trials` random instances and histograms the number
/// of false selections in the OMP_e runs that recovered the signal.
pub fn run_nf_histogram(cfg: &HistogramConfig, threads: Option<usize>) -> Result<NfHistogram, ExperimentError> {
    if !(cfg.k >= 1 && cfg.k < cfg.m && cfg.m < cfg.n) {
        return Err(ExperimentError::InvalidConfig(format!(
            "need 1 <= k < m < n, got m = {}, k = {}, n = {}",
            cfg.m, cfg.k, cfg.n
        )));
    }
    let outcomes: Vec<Result<TrialOutcome, RecoveryError>> = with_threads(threads, || {
        (0..cfg.trials)
            .into_par_iter()
            .map(|t| run_trial(cfg, derive_seed(cfg.seed, &[t as u64])))
            .collect()
    })?;

    let mut h = NfHistogram {
        m: cfg.m,
        k: cfg.k,
        n: cfg.n,
        trials: cfg.trials,
        ensemble: cfg.ensemble,
        seed: cfg.seed,
        ompk_successes: 0,
        ompk_tolerance_successes: 0,
        ompe_successes: 0,
        counts: BTreeMap::new(),
        max_nf: 0,
        iteration_mismatches: 0,
        ompk_outside_zero_bin: 0,
        errors: 0,
    };
    for (t, o) in outcomes.into_iter().enumerate() {
        let o = match o {
            Ok(o) => o,
            Err(e) => {
                warn!("trial {t}: {e}");
                h.errors += 1;
                continue;
            }
        };
        if let Some(e) = &o.error {
            warn!("trial {t}: {e}");
            h.errors += 1;
        }
        h.ompk_successes += o.ompk_exact as usize;
        h.ompk_tolerance_successes += o.ompk_tolerance as usize;
        if let Some((n_f, iterations)) = o.ompe {
            h.ompe_successes += 1;
            *h.counts.entry(n_f).or_default() += 1;
            h.max_nf = h.max_nf.max(n_f);
            if iterations != cfg.k + n_f {
                h.iteration_mismatches += 1;
            }
        }
        if o.ompk_exact && o.ompe.map(|(n_f, _)| n_f) != Some(0) {
            h.ompk_outside_zero_bin += 1;
        }
    }
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn easy_regime_has_all_mass_at_zero() {
        let cfg = HistogramConfig { m: 40, k: 2, n: 80, trials: 30, ensemble: EnsembleKind::Gaussian, seed: 3 };
        let h = run_nf_histogram(&cfg, Some(2)).unwrap();
        assert_eq!(h.ompe_successes, 30);
        assert_eq!(h.counts.get(&0), Some(&30));
        assert_eq!(h.ompk_successes, 30);
        assert!(h.to_csv().unwrap().contains("n_f,count\n0,30\n"));
    }

    #[test]
    fn moderate_regime_invariants() {
        let cfg = HistogramConfig { m: 30, k: 10, n: 60, trials: 40, ensemble: EnsembleKind::Gaussian, seed: 8 };
        let h = run_nf_histogram(&cfg, None).unwrap();
        assert_eq!(h.counts.values().sum::<usize>(), h.ompe_successes);
        assert_eq!(h.iteration_mismatches, 0);
        assert_eq!(h.ompk_outside_zero_bin, 0);
        assert!(h.ompe_successes >= h.ompk_successes);
        assert_eq!(h, run_nf_histogram(&cfg, Some(1)).unwrap());
    }

    #[test]
    fn rejects_bad_dimensions() {
        let cfg = HistogramConfig { m: 10, k: 10, n: 20, trials: 1, ensemble: EnsembleKind::Cars, seed: 0 };
        assert!(run_nf_histogram(&cfg, None).is_err());
    }
}
