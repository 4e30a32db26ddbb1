use log::warn;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{comment_header, fit_rho_50, with_threads, write_csv, ExperimentError, FitMethod};
use crate::ensembles::{gen_gaussian_matrix, gen_sparse_signal, EnsembleKind};
use crate::recovery::{basis_pursuit, is_exact_recovery, omp, subspace_pursuit, Algorithm, TerminationPolicy};
use crate::rng::derive_seed;

/// Number of ρ points in the default grid.
pub const DEFAULT_RHO_POINTS: usize = 30;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PhaseGridConfig {
    pub n: usize,
    pub lambda_values: Vec<f64>,
    /// Fixed ρ values shared by every λ. Empty selects [`default_rho_grid`] per λ.
    pub rho_values: Vec<f64>,
    pub trials_per_cell: usize,
    pub algorithms: Vec<Algorithm>,
    pub ensemble: EnsembleKind,
    pub master_seed: u64,
    pub normalize_columns: bool,
}

impl Default for PhaseGridConfig {
    /// Desk-scale profile: N = 64, 50 trials per cell, λ = 0.1..0.9, no BP.
    fn default() -> Self {
        Self {
            n: 64,
            lambda_values: (1..=9).map(|i| i as f64 / 10.0).collect(),
            rho_values: Vec::new(),
            trials_per_cell: 50,
            algorithms: vec![Algorithm::OmpK, Algorithm::OmpE, Algorithm::Sp],
            ensemble: EnsembleKind::Gaussian,
            master_seed: 0,
            normalize_columns: true,
        }
    }
}

impl PhaseGridConfig {
    /// N = 250, 200 trials, all four algorithms.
    pub fn paper_scale() -> Self {
        Self { n: 250, trials_per_cell: 200, algorithms: Algorithm::ALL.to_vec(), ..Self::default() }
    }

    pub fn rho_grid(&self, m: usize) -> Vec<f64> {
        if self.rho_values.is_empty() {
            default_rho_grid(m)
        } else {
            self.rho_values.clone()
        }
    }

    /// Every `(λ-index, ρ-index, M, K)` cell of the grid, validated.
    pub fn cells(&self) -> Result<Vec<(usize, usize, usize, usize)>, ExperimentError> {
        if self.trials_per_cell == 0 {
            return Err(ExperimentError::InvalidConfig("trials_per_cell must be positive".into()));
        }
        if self.algorithms.is_empty() {
            return Err(ExperimentError::InvalidConfig("no algorithms selected".into()));
        }
        let mut out = Vec::new();
        for (li, &lambda) in self.lambda_values.iter().enumerate() {
            if !(lambda > 0.0 && lambda < 1.0) {
                return Err(ExperimentError::InvalidConfig(format!("lambda {lambda} outside (0, 1)")));
            }
            let m = (lambda * self.n as f64).round() as usize;
            for (ri, &rho) in self.rho_grid(m).iter().enumerate() {
                if !(rho > 0.0 && rho <= 1.0) {
                    return Err(ExperimentError::InvalidConfig(format!("rho {rho} outside (0, 1]")));
                }
                let (m, k) = cell_dimensions(self.n, lambda, rho);
                if m < 2 || k >= m || m >= self.n {
                    return Err(ExperimentError::InvalidConfig(format!(
                        "cell lambda = {lambda}, rho = {rho} gives M = {m}, K = {k} (need 2 <= M < N, K < M)"
                    )));
                }
                out.push((li, ri, m, k));
            }
        }
        Ok(out)
    }
}

/// `M = round(λN)`, `K = max(1, round(ρM))`.
pub fn cell_dimensions(n: usize, lambda: f64, rho: f64) -> (usize, usize) {
    let m = (lambda * n as f64).round() as usize;
    let k = ((rho * m as f64).round() as usize).max(1);
    (m, k)
}

/// Thirty evenly spaced ρ values from `1/M` to `1 − 1/M`, so that `K` runs from
/// 1 to `M − 1`.
pub fn default_rho_grid(m: usize) -> Vec<f64> {
    let mf = m as f64;
    let span = 1.0 - 2.0 / mf;
    (0..DEFAULT_RHO_POINTS).map(|j| 1.0 / mf + span * j as f64 / (DEFAULT_RHO_POINTS - 1) as f64).collect()
}

/// Successes of one algorithm in one grid cell. `rho` is the effective `K/M`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub lambda: f64,
    pub rho: f64,
    pub m: usize,
    pub k: usize,
    pub algorithm: Algorithm,
    pub ensemble: EnsembleKind,
    pub successes: usize,
    pub trials: usize,
    /// Trials in which the solver returned an error (counted as failures).
    pub errors: usize,
}

impl CellResult {
    pub fn rate(&self) -> f64 {
        self.successes as f64 / self.trials as f64
    }

    /// CSV table with the configuration in a comment header.
    pub fn to_csv<C: Serialize>(cells: &[CellResult], cfg: &C) -> Result<String, ExperimentError> {
        write_csv(&comment_header("config", cfg), cells)
    }
}

fn run_trial(cfg: &PhaseGridConfig, seed: u64, m: usize, k: usize) -> Vec<Result<bool, String>> {
    let n = cfg.n;
    let instance = gen_gaussian_matrix(m, n, derive_seed(seed, &[0]), cfg.normalize_columns)
        .and_then(|phi| Ok((gen_sparse_signal(n, k, cfg.ensemble, derive_seed(seed, &[1]))?, phi)));
    let (x, phi) = match instance {
        Ok(v) => v,
        Err(e) => return vec![Err(e.to_string()); cfg.algorithms.len()],
    };
    let y = phi.measure(&x).expect("dimensions agree");
    cfg.algorithms
        .iter()
        .map(|alg| {
            let trace = match alg {
                Algorithm::OmpK => omp(&phi, &y, &TerminationPolicy::SparsityK { k }),
                Algorithm::OmpE => omp(&phi, &y, &TerminationPolicy::omp_e(m)),
                Algorithm::Sp if 2 * k > m => {
                    return Ok(false);
                }
                Algorithm::Sp => subspace_pursuit(&phi, &y, k),
                Algorithm::Bp => basis_pursuit(&phi, &y),
            };
            trace
                .and_then(|t| is_exact_recovery(&x, t.estimate()))
                .map_err(|e| e.to_string())
        })
        .collect()
}

/// Runs every trial of every cell. Per-trial seeds depend only on the master
/// seed and the `(λ, ρ, trial)` indices, so the table is identical for any
/// number of `threads`.
///
/// Subspace pursuit needs `2K ≤ M`; cells beyond that count as failures.
pub fn run_phase_grid(cfg: &PhaseGridConfig, threads: Option<usize>) -> Result<Vec<CellResult>, ExperimentError> {
    let cells = cfg.cells()?;
    let tasks: Vec<(usize, usize)> =
        (0..cells.len()).flat_map(|c| (0..cfg.trials_per_cell).map(move |t| (c, t))).collect();
    let outcomes: Vec<Vec<Result<bool, String>>> = with_threads(threads, || {
        tasks
            .par_iter()
            .map(|&(c, t)| {
                let (li, ri, m, k) = cells[c];
                let seed = derive_seed(cfg.master_seed, &[li as u64, ri as u64, t as u64]);
                run_trial(cfg, seed, m, k)
            })
            .collect()
    })?;

    let mut results = Vec::with_capacity(cells.len() * cfg.algorithms.len());
    for (c, &(li, _ri, m, k)) in cells.iter().enumerate() {
        let trials = &outcomes[c * cfg.trials_per_cell..(c + 1) * cfg.trials_per_cell];
        for (a, &alg) in cfg.algorithms.iter().enumerate() {
            let mut successes = 0;
            let mut errors = 0;
            for (t, o) in trials.iter().enumerate() {
                match &o[a] {
                    Ok(true) => successes += 1,
                    Ok(false) => {}
                    Err(e) => {
                        errors += 1;
                        warn!("{alg} failed at lambda = {}, M = {m}, K = {k}, trial {t}: {e}", cfg.lambda_values[li]);
                    }
                }
            }
            results.push(CellResult {
                lambda: cfg.lambda_values[li],
                rho: k as f64 / m as f64,
                m,
                k,
                algorithm: alg,
                ensemble: cfg.ensemble,
                successes,
                trials: cfg.trials_per_cell,
                errors,
            });
        }
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub lambda: f64,
    pub rho_50: f64,
    pub method: FitMethod,
    pub converged: bool,
    pub iterations: usize,
    pub extrapolated: bool,
}

/// 50%-recovery ρ of one algorithm on one ensemble, per λ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransitionCurve {
    pub algorithm: Algorithm,
    pub ensemble: EnsembleKind,
    pub points: Vec<CurvePoint>,
}

#[derive(Serialize)]
struct CurveRow {
    algorithm: Algorithm,
    ensemble: EnsembleKind,
    lambda: f64,
    rho_50: f64,
    method: FitMethod,
    converged: bool,
    iterations: usize,
    extrapolated: bool,
}

impl TransitionCurve {
    pub fn at(&self, lambda: f64) -> Option<&CurvePoint> {
        self.points.iter().find(|p| (p.lambda - lambda).abs() < 1e-12)
    }

    pub fn to_csv<C: Serialize>(curves: &[TransitionCurve], cfg: &C) -> Result<String, ExperimentError> {
        let rows: Vec<CurveRow> = curves
            .iter()
            .flat_map(|c| {
                c.points.iter().map(move |p| CurveRow {
                    algorithm: c.algorithm,
                    ensemble: c.ensemble,
                    lambda: p.lambda,
                    rho_50: p.rho_50,
                    method: p.method,
                    converged: p.converged,
                    iterations: p.iterations,
                    extrapolated: p.extrapolated,
                })
            })
            .collect();
        write_csv(&comment_header("config", cfg), &rows)
    }
}

/// Fits one curve per `(ensemble, algorithm)` present in `cells`.
///
/// λ values where every trial succeeded (failed) get the largest (smallest)
/// sampled ρ, flagged as extrapolated.
pub fn build_transition_curves(cells: &[CellResult]) -> Result<Vec<TransitionCurve>, ExperimentError> {
    let mut keys: Vec<(EnsembleKind, Algorithm)> = cells.iter().map(|c| (c.ensemble, c.algorithm)).collect();
    keys.sort();
    keys.dedup();
    let mut curves = Vec::new();
    for (ensemble, algorithm) in keys {
        let mut lambdas: Vec<f64> =
            cells.iter().filter(|c| c.ensemble == ensemble && c.algorithm == algorithm).map(|c| c.lambda).collect();
        lambdas.sort_by(f64::total_cmp);
        lambdas.dedup();
        let mut points = Vec::new();
        for lambda in lambdas {
            let group: Vec<CellResult> = cells
                .iter()
                .filter(|c| c.ensemble == ensemble && c.algorithm == algorithm && c.lambda == lambda)
                .cloned()
                .collect();
            let lo = group.iter().map(|c| c.rho).fold(f64::INFINITY, f64::min);
            let hi = group.iter().map(|c| c.rho).fold(f64::NEG_INFINITY, f64::max);
            let point = match fit_rho_50(&group) {
                Ok((rho_50, d)) => CurvePoint {
                    lambda,
                    rho_50,
                    method: d.method,
                    converged: d.converged,
                    iterations: d.iterations,
                    extrapolated: d.extrapolated,
                },
                Err(ExperimentError::DegenerateData(_)) if group.iter().all(|c| c.successes == c.trials) => {
                    CurvePoint { lambda, rho_50: hi, method: FitMethod::AllSuccess, converged: false, iterations: 0, extrapolated: true }
                }
                Err(ExperimentError::DegenerateData(_)) if group.iter().all(|c| c.successes == 0) => {
                    CurvePoint { lambda, rho_50: lo, method: FitMethod::AllFailure, converged: false, iterations: 0, extrapolated: true }
                }
                Err(e) => return Err(e),
            };
            points.push(point);
        }
        curves.push(TransitionCurve { algorithm, ensemble, points });
    }
    Ok(curves)
}
