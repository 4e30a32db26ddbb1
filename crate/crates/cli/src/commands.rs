use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sparsebench::experiments::{
    build_transition_curves, guarantee_sweep, run_nf_histogram, run_phase_grid, CellResult, HistogramConfig,
    MatrixFamily, NfHistogram, PhaseGridConfig, SweepConfig, SweepInstance, TransitionCurve,
};
use sparsebench::guarantees::{certify_trace, Exactness, RicOracle, RicTable};
use sparsebench::plot::{histogram_svg, phase_svg};
use sparsebench::recovery::{
    basis_pursuit, diagnose, is_exact_recovery, omp, subspace_pursuit, Algorithm, RecoveryTrace, TerminationPolicy,
    DEFAULT_EPSILON,
};
use sparsebench::{EnsembleKind, ObservationMatrix, SparseSignal};

use crate::error::CliError;
use crate::inputs::{gen_matrix, gen_signal, load_matrix, load_signal, load_vector, MatrixKind};
use crate::settings::{seed_or_env, OutDir};

const DEFAULT_M: usize = 32;
const DEFAULT_N: usize = 64;
const DEFAULT_K: usize = 4;

fn dictionary(
    file: Option<&Path>,
    kind: Option<MatrixKind>,
    m: Option<usize>,
    n: Option<usize>,
    normalize: Option<bool>,
    seed: u64,
) -> Result<ObservationMatrix, CliError> {
    match file {
        Some(p) => load_matrix(p),
        None => gen_matrix(
            kind.unwrap_or(MatrixKind::Gaussian),
            m.unwrap_or(DEFAULT_M),
            n.unwrap_or(DEFAULT_N),
            normalize.unwrap_or(true),
            seed,
        ),
    }
}

// ---------------------------------------------------------------- gen-matrix

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenMatrix {
    #[arg(long, value_enum)]
    pub family: Option<MatrixKind>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Scale columns to unit norm (default true).
    #[arg(long)]
    pub normalize: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn gen_matrix_cmd(mut s: GenMatrix, out: &OutDir) -> Result<(), CliError> {
    s.family.get_or_insert(MatrixKind::Gaussian);
    s.m.get_or_insert(DEFAULT_M);
    s.n.get_or_insert(DEFAULT_N);
    s.normalize.get_or_insert(true);
    s.seed = Some(seed_or_env(s.seed)?);
    out.write_resolved("gen-matrix", &s)?;
    let phi = dictionary(None, s.family, s.m, s.n, s.normalize, s.seed.unwrap())?;
    out.write_json("matrix.json", &phi)?;
    out.write("matrix.csv", phi.matrix().to_csv())?;
    println!("matrix: {} x {} ({})", phi.rows(), phi.cols(), phi.fingerprint());
    Ok(())
}

// ---------------------------------------------------------------- gen-signal

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenSignal {
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub ensemble: Option<EnsembleKind>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn gen_signal_cmd(mut s: GenSignal, out: &OutDir) -> Result<(), CliError> {
    s.n.get_or_insert(DEFAULT_N);
    s.k.get_or_insert(DEFAULT_K);
    s.ensemble.get_or_insert(EnsembleKind::Gaussian);
    s.seed = Some(seed_or_env(s.seed)?);
    out.write_resolved("gen-signal", &s)?;
    let x = gen_signal(s.n.unwrap(), s.k.unwrap(), s.ensemble.unwrap(), s.seed.unwrap())?;
    out.write_json("signal.json", &x)?;
    println!("signal: n = {}, k = {}, support = {:?}", x.n(), x.k(), x.support());
    Ok(())
}

// ---------------------------------------------------------------- recover

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Recover {
    /// Dictionary file; generated from `--family/--m/--n/--seed` when absent.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Ground-truth signal (JSON from gen-signal); generated when absent and no
    /// measurements are given.
    #[arg(long)]
    pub signal: Option<PathBuf>,
    /// Measurement vector as CSV; defaults to `Φx` of the signal.
    #[arg(long)]
    pub measurements: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<MatrixKind>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    /// Sparsity; taken from the signal file when one is given.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub ensemble: Option<EnsembleKind>,
    #[arg(long)]
    pub normalize: Option<bool>,
    /// omp_k, omp_e, sp or bp.
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    /// Residual threshold for omp_e, relative to ||y||.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Iteration cap for omp_e (default M).
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn summarize(trace: &RecoveryTrace, truth: Option<&SparseSignal>) -> Result<String, CliError> {
    let mut out = String::new();
    let reason = serde_json::to_value(trace.terminated_by).expect("serializable");
    writeln!(out, "algorithm: {}", trace.algorithm.label()).unwrap();
    writeln!(out, "iterations: {}", trace.iterations()).unwrap();
    writeln!(out, "terminated_by: {}", reason.as_str().unwrap_or_default()).unwrap();
    writeln!(out, "final_residual: {:.3e}", trace.final_residual()).unwrap();
    if let Some(x) = truth {
        writeln!(out, "exact_recovery: {}", is_exact_recovery(x, trace.estimate())?).unwrap();
        if matches!(trace.algorithm, Algorithm::OmpK | Algorithm::OmpE) {
            let d = diagnose(trace, x)?;
            writeln!(out, "n_c: {}, n_f: {}", d.n_c, d.n_f).unwrap();
        }
    }
    Ok(out)
}

pub fn recover_cmd(mut s: Recover, out: &OutDir) -> Result<(), CliError> {
    let seed = seed_or_env(s.seed)?;
    s.seed = Some(seed);
    let phi = dictionary(s.matrix.as_deref(), s.family, s.m, s.n, s.normalize, seed)?;
    if s.matrix.is_none() {
        s.family.get_or_insert(MatrixKind::Gaussian);
        s.normalize.get_or_insert(true);
    }
    s.m = Some(phi.rows());
    s.n = Some(phi.cols());
    let truth = match (&s.signal, &s.measurements) {
        (Some(p), _) => Some(load_signal(p)?),
        (None, Some(_)) => None,
        (None, None) => {
            let e = *s.ensemble.get_or_insert(EnsembleKind::Gaussian);
            Some(gen_signal(phi.cols(), s.k.unwrap_or(DEFAULT_K), e, seed)?)
        }
    };
    if let (Some(x), Some(p)) = (&truth, &s.signal) {
        if x.n() != phi.cols() {
            return Err(CliError::Input(format!(
                "{}: signal length {} does not match the dictionary's {} columns",
                p.display(),
                x.n(),
                phi.cols()
            )));
        }
        if s.k.is_some_and(|k| k != x.k()) {
            return Err(CliError::Input(format!("{}: signal has k = {}, but k = {} was requested", p.display(), x.k(), s.k.unwrap())));
        }
    }
    if let Some(x) = &truth {
        s.k = Some(x.k());
    }
    let algorithm = *s.algorithm.get_or_insert(Algorithm::OmpK);
    let y = match &s.measurements {
        Some(p) => {
            let y = load_vector(p)?;
            if y.len() != phi.rows() {
                return Err(CliError::Input(format!(
                    "{}: {} measurements, but the dictionary has {} rows",
                    p.display(),
                    y.len(),
                    phi.rows()
                )));
            }
            y
        }
        None => phi.measure(truth.as_ref().expect("signal present without measurements"))?,
    };
    if algorithm == Algorithm::OmpE {
        s.epsilon.get_or_insert(DEFAULT_EPSILON);
        s.max_iterations.get_or_insert(phi.rows());
    }
    out.write_resolved("recover", &s)?;
    let need_k = || s.k.ok_or_else(|| CliError::Input(format!("field `k` is required for {algorithm}")));
    let trace = match algorithm {
        Algorithm::OmpK => omp(&phi, &y, &TerminationPolicy::sparsity(need_k()?)?)?,
        Algorithm::OmpE => {
            let policy = TerminationPolicy::residue(s.epsilon.unwrap(), s.max_iterations.unwrap())?;
            omp(&phi, &y, &policy)?
        }
        Algorithm::Sp => subspace_pursuit(&phi, &y, need_k()?)?,
        Algorithm::Bp => basis_pursuit(&phi, &y)?,
    };
    out.write_json("trace.json", &trace.to_json(true))?;
    print!("{}", summarize(&trace, truth.as_ref())?);
    Ok(())
}

// ---------------------------------------------------------------- ric

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum RicMode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ric {
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub family: Option<MatrixKind>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub normalize: Option<bool>,
    /// Largest order; constants are computed for 1..=k.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, value_enum)]
    pub mode: Option<RicMode>,
    /// Random subsets per order in mc mode.
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn ric_table_text(t: &RicTable) -> String {
    let mut out = format!("matrix {}\n{:>4} {:>12}  exactness\n", t.matrix_id, "k", "delta");
    for e in &t.deltas {
        let ex = match e.exactness {
            Exactness::Exact => "exact",
            Exactness::LowerBound => "lower_bound",
        };
        writeln!(out, "{:>4} {:>12.6}  {ex}", e.k, e.delta).unwrap();
    }
    out
}

pub fn ric_cmd(mut s: Ric, out: &OutDir) -> Result<(), CliError> {
    let seed = seed_or_env(s.seed)?;
    s.seed = Some(seed);
    let phi = dictionary(s.matrix.as_deref(), s.family, s.m, s.n, s.normalize, seed)?;
    s.m = Some(phi.rows());
    s.n = Some(phi.cols());
    let k = *s.k.get_or_insert(3);
    let mode = *s.mode.get_or_insert(RicMode::Exact);
    let samples = *s.samples.get_or_insert(10_000);
    if k == 0 || k > phi.cols() {
        return Err(CliError::Input(format!("field `k` must lie in 1..={}, got {k}", phi.cols())));
    }
    let resolved = out.write_resolved("ric", &s)?;
    let table = match mode {
        RicMode::Exact => RicTable::exact(&phi, k).map_err(|e| match CliError::from(e) {
            CliError::Budget { message, .. } => CliError::Budget {
                message,
                suggestion: format!(
                    "sparsebench ric --config {} --mode mc --samples 100000 --out {}",
                    resolved.display(),
                    out.dir().display()
                ),
            },
            other => other,
        })?,
        RicMode::Mc => RicTable::monte_carlo(&phi, k, samples, seed)?,
    };
    out.write_json("ric.json", &table)?;
    print!("{}", ric_table_text(&table));
    Ok(())
}

// ---------------------------------------------------------------- certify

fn parse_family(s: &str) -> Result<MatrixFamily, String> {
    match s.to_ascii_lowercase().replace('-', "_").as_str() {
        "gaussian" => Ok(MatrixFamily::Gaussian),
        "partial_orthogonal" => Ok(MatrixFamily::PartialOrthogonal),
        "adversarial" => Ok(MatrixFamily::Adversarial),
        _ => Err(format!("unknown family {s:?} (gaussian, partial-orthogonal, adversarial)")),
    }
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Certify {
    /// Certify one instance from files instead of running the sweep.
    #[arg(long, requires = "signal")]
    pub matrix: Option<PathBuf>,
    #[arg(long, requires = "matrix")]
    pub signal: Option<PathBuf>,
    /// Certify only this instance of the sweep.
    #[arg(long)]
    pub index: Option<usize>,
    #[arg(long)]
    pub instances: Option<usize>,
    #[arg(long)]
    pub n_max: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long, value_delimiter = ',', value_parser = parse_family)]
    pub families: Option<Vec<MatrixFamily>>,
    /// Reports printed as tables in sweep mode.
    #[arg(long)]
    pub tables: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Serialize)]
struct SingleReport<'a, I: Serialize> {
    instance: I,
    report: &'a sparsebench::guarantees::GuaranteeReport,
}

pub fn certify_cmd(mut s: Certify, out: &OutDir) -> Result<(), CliError> {
    if let (Some(mp), Some(sp)) = (s.matrix.clone(), s.signal.clone()) {
        out.write_resolved("certify", &s)?;
        let phi = load_matrix(&mp)?;
        let x = load_signal(&sp)?;
        let y = phi.measure(&x)?;
        let trace = omp(&phi, &y, &TerminationPolicy::omp_e(phi.rows()))?;
        let report = certify_trace(&mut RicOracle::new(&phi), &trace, &x)?;
        let instance = serde_json::json!({ "matrix": mp, "signal": sp });
        out.write_json("report.json", &SingleReport { instance, report: &report })?;
        print!("{}", report.to_table());
        return Ok(());
    }
    let d = SweepConfig::default();
    let cfg = SweepConfig {
        instances: *s.instances.get_or_insert(d.instances),
        n_max: *s.n_max.get_or_insert(d.n_max),
        k_max: *s.k_max.get_or_insert(d.k_max),
        families: s.families.get_or_insert(d.families).clone(),
        master_seed: *s.seed.get_or_insert(seed_or_env(None)?),
    };
    let tables = *s.tables.get_or_insert(1);
    out.write_resolved("certify", &s)?;
    if let Some(i) = s.index {
        let inst = SweepInstance::draw(&cfg, i);
        let report = inst.certify()?;
        out.write_json("report.json", &SingleReport { instance: &inst, report: &report })?;
        println!("instance {i}: {:?}, M = {}, N = {}, K = {}", inst.family, inst.m, inst.n, inst.k);
        print!("{}", report.to_table());
        return Ok(());
    }
    let summary = guarantee_sweep(&cfg, None)?;
    out.write_json("sweep.json", &summary)?;
    println!("instances: {} ({} errors)", summary.instances_run, summary.errors);
    println!("certified states: {} in {} instances", summary.certified_states, summary.certified_instances);
    println!("classical condition certified: {}", summary.wang_certified);
    println!("next-step violations: {}", summary.next_step_violations.len());
    println!("iteration-count violations: {}", summary.iteration_count_violations.len());
    println!("certificates beyond the classical condition: {}", summary.certificates.len());
    for c in summary.certificates.iter().take(tables) {
        let i = &c.instance;
        println!("\ninstance {}: {:?}, M = {}, N = {}, K = {}", i.index, i.family, i.m, i.n, i.k);
        print!("{}", c.report.to_table());
    }
    Ok(())
}

// ---------------------------------------------------------------- phase

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// N = 64, 50 trials per cell, BP left out unless requested.
    Desk,
    /// N = 250, 200 trials per cell.
    Paper,
}

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Phase {
    #[arg(long, value_enum)]
    pub profile: Option<Profile>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub lambda_values: Option<Vec<f64>>,
    /// Fixed ρ grid; empty selects 30 points from 1/M to 1 − 1/M.
    #[arg(long, value_delimiter = ',')]
    pub rho_values: Option<Vec<f64>>,
    #[arg(long)]
    pub trials_per_cell: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    pub algorithms: Option<Vec<Algorithm>>,
    #[arg(long, value_delimiter = ',')]
    pub ensembles: Option<Vec<EnsembleKind>>,
    #[arg(long)]
    pub normalize_columns: Option<bool>,
    #[arg(long)]
    pub seed: Option<u64>,
}

impl Phase {
    /// Fills every unset field from the profile.
    pub fn resolve(&mut self) -> Result<(), CliError> {
        let base = match *self.profile.get_or_insert(Profile::Desk) {
            Profile::Desk => PhaseGridConfig::default(),
            Profile::Paper => PhaseGridConfig::paper_scale(),
        };
        self.n.get_or_insert(base.n);
        self.lambda_values.get_or_insert(base.lambda_values);
        self.rho_values.get_or_insert(base.rho_values);
        self.trials_per_cell.get_or_insert(base.trials_per_cell);
        self.algorithms.get_or_insert(base.algorithms);
        self.ensembles.get_or_insert(EnsembleKind::ALL.to_vec());
        self.normalize_columns.get_or_insert(base.normalize_columns);
        self.seed = Some(seed_or_env(self.seed)?);
        Ok(())
    }

    pub fn grid(&self, ensemble: EnsembleKind) -> PhaseGridConfig {
        PhaseGridConfig {
            n: self.n.unwrap(),
            lambda_values: self.lambda_values.clone().unwrap(),
            rho_values: self.rho_values.clone().unwrap(),
            trials_per_cell: self.trials_per_cell.unwrap(),
            algorithms: self.algorithms.clone().unwrap(),
            ensemble,
            master_seed: self.seed.unwrap(),
            normalize_columns: self.normalize_columns.unwrap(),
        }
    }
}

#[derive(Serialize, Deserialize)]
pub struct CurvesArtifact {
    pub settings: serde_json::Value,
    pub curves: Vec<TransitionCurve>,
}

fn ensembles_of(curves: &[TransitionCurve]) -> Vec<EnsembleKind> {
    EnsembleKind::ALL.into_iter().filter(|e| curves.iter().any(|c| c.ensemble == *e)).collect()
}

pub fn phase_cmd(mut s: Phase, out: &OutDir) -> Result<(), CliError> {
    s.resolve()?;
    out.write_resolved("phase", &s)?;
    let mut cells: Vec<CellResult> = Vec::new();
    for &e in s.ensembles.as_ref().unwrap() {
        log::info!("running {e} grid");
        cells.extend(run_phase_grid(&s.grid(e), None)?);
    }
    let curves = build_transition_curves(&cells)?;
    out.write("cells.csv", CellResult::to_csv(&cells, &s)?)?;
    out.write("curves.csv", TransitionCurve::to_csv(&curves, &s)?)?;
    let settings = serde_json::to_value(&s).expect("serializable");
    out.write_json("curves.json", &CurvesArtifact { settings, curves: curves.clone() })?;
    out.write("phase.svg", phase_svg(&curves, &ensembles_of(&curves)))?;

    let lambdas = s.lambda_values.as_ref().unwrap();
    let mut header = format!("{:<10} {:<6}", "ensemble", "alg");
    for l in lambdas {
        write!(header, " {l:>6.2}").unwrap();
    }
    println!("rho_50 by lambda\n{header}");
    for c in &curves {
        let mut line = format!("{:<10} {:<6}", c.ensemble.name(), c.algorithm.label());
        for p in &c.points {
            write!(line, " {:>6.3}", p.rho_50).unwrap();
        }
        println!("{line}");
    }
    Ok(())
}

// ---------------------------------------------------------------- hist

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Hist {
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub ensemble: Option<EnsembleKind>,
    #[arg(long)]
    pub seed: Option<u64>,
}

pub fn hist_cmd(mut s: Hist, out: &OutDir) -> Result<(), CliError> {
    let d = HistogramConfig::paper_small(0);
    let cfg = HistogramConfig {
        m: *s.m.get_or_insert(d.m),
        k: *s.k.get_or_insert(d.k),
        n: *s.n.get_or_insert(d.n),
        trials: *s.trials.get_or_insert(d.trials),
        ensemble: *s.ensemble.get_or_insert(d.ensemble),
        seed: *s.seed.get_or_insert(seed_or_env(None)?),
    };
    out.write_resolved("hist", &s)?;
    let h = run_nf_histogram(&cfg, None)?;
    out.write("histogram.csv", h.to_csv()?)?;
    out.write_json("histogram.json", &h)?;
    out.write("histogram.svg", histogram_svg(&h))?;
    println!("M = {}, K = {}, N = {}, {} trials", h.m, h.k, h.n, h.trials);
    println!("OMP_K successes: {}", h.ompk_successes);
    println!("OMP_e successes: {}", h.ompe_successes);
    println!("max n_f: {} (ceil(K/2)-1 = {}, K/4 = {})", h.max_nf, h.k.div_ceil(2) - 1, h.k as f64 / 4.0);
    for (nf, count) in &h.counts {
        println!("  n_f = {nf:>3}: {count}");
    }
    Ok(())
}

// ---------------------------------------------------------------- plot

#[derive(Debug, Clone, Default, Args, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Plot {
    /// curves.json written by `phase`.
    #[arg(long)]
    pub curves: Option<PathBuf>,
    /// histogram.json written by `hist`.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(p).map_err(|e| CliError::Input(format!("cannot read {}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Input(format!("{}: {e}", p.display())))
}

pub fn plot_cmd(s: Plot, out: &OutDir) -> Result<(), CliError> {
    if s.curves.is_none() && s.histogram.is_none() {
        return Err(CliError::Input("nothing to plot: give --curves and/or --histogram".into()));
    }
    out.write_resolved("plot", &s)?;
    if let Some(p) = &s.curves {
        let a: CurvesArtifact = read_json(p)?;
        let path = out.write("phase.svg", phase_svg(&a.curves, &ensembles_of(&a.curves)))?;
        println!("wrote {}", path.display());
    }
    if let Some(p) = &s.histogram {
        let h: NfHistogram = read_json(p)?;
        let path = out.write("histogram.svg", histogram_svg(&h))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}
