//! Full-size phase-transition run (N = 250, 200 trials per cell, all four
//! algorithms, three ensembles). Takes hours; run with
//! `cargo test -p sparsebench --test paper_scale -- --ignored --nocapture`.

use sparsebench::experiments::{build_transition_curves, run_phase_grid, PhaseGridConfig};
use sparsebench::recovery::Algorithm;
use sparsebench::EnsembleKind;

#[test]
#[ignore = "hours of BP solves"]
fn paper_scale_phase_transitions() {
    let mut cells = Vec::new();
    for e in EnsembleKind::ALL {
        let cfg = PhaseGridConfig { ensemble: e, master_seed: 1, ..PhaseGridConfig::paper_scale() };
        cells.extend(run_phase_grid(&cfg, None).unwrap());
    }
    let curves = build_transition_curves(&cells).unwrap();
    for c in &curves {
        let pts: Vec<String> = c.points.iter().map(|p| format!("{:.3}", p.rho_50)).collect();
        println!("{:<8} {:<5} [{}]", c.ensemble.name(), c.algorithm.label(), pts.join(", "));
    }
    let find = |a, e| curves.iter().find(|c| c.algorithm == a && c.ensemble == e).unwrap();
    for e in EnsembleKind::ALL {
        let (ce, ck) = (find(Algorithm::OmpE, e), find(Algorithm::OmpK, e));
        for (pe, pk) in ce.points.iter().zip(&ck.points) {
            assert!(pe.rho_50 >= pk.rho_50 - 0.02, "{e} at lambda {}", pe.lambda);
        }
    }
    // OMP_e overtakes BP for Gaussian signals once λ is moderate.
    let (ce, cb) = (find(Algorithm::OmpE, EnsembleKind::Gaussian), find(Algorithm::Bp, EnsembleKind::Gaussian));
    for (pe, pb) in ce.points.iter().zip(&cb.points).filter(|(p, _)| p.lambda >= 0.3) {
        assert!(pe.rho_50 > pb.rho_50, "lambda {}: OMP_e {} vs BP {}", pe.lambda, pe.rho_50, pb.rho_50);
    }
}
