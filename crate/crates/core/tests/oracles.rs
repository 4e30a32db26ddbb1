mod common;

use common::{best_support, min_l1_vertex, naive_omp, ric_by_svd, two_column};
use sparsebench::ensembles::{gen_gaussian_matrix, gen_partial_orthogonal_matrix, gen_sparse_signal};
use sparsebench::guarantees::{exact_ric, monte_carlo_ric, RicTable};
use sparsebench::recovery::{basis_pursuit, omp, subspace_pursuit, TerminationPolicy, TerminationReason};
use sparsebench::rng::derive_seed;
use sparsebench::{DenseMatrix, EnsembleKind, ObservationMatrix};

#[test]
fn omp_matches_naive_omp_index_for_index() {
    for t in 0..100u64 {
        let seed = derive_seed(70, &[t]);
        let (m, n, k) = (20 + (t as usize % 4) * 10, 80, 2 + (t as usize % 9));
        let ens = EnsembleKind::ALL[t as usize % 3];
        let phi = gen_gaussian_matrix(m, n, derive_seed(seed, &[0]), t % 2 == 0).unwrap();
        let x = gen_sparse_signal(n, k, ens, derive_seed(seed, &[1])).unwrap();
        let y = phi.measure(&x).unwrap();
        let trace = omp(&phi, &y, &TerminationPolicy::SparsityK { k }).unwrap();
        assert_eq!(trace.selected, naive_omp(phi.matrix(), &y, k), "instance {t}");
    }
}

#[test]
fn subspace_pursuit_agrees_with_exhaustive_support_search() {
    // SP can stall in a local minimum (about 1% of instances at this size);
    // every disagreement with the brute-force support must be such a stall.
    let mut stalls = 0;
    for t in 0..50u64 {
        let seed = derive_seed(71, &[t]);
        let phi = gen_gaussian_matrix(20, 40, derive_seed(seed, &[0]), true).unwrap();
        let x = gen_sparse_signal(40, 3, EnsembleKind::Gaussian, derive_seed(seed, &[1])).unwrap();
        let y = phi.measure(&x).unwrap();
        let trace = subspace_pursuit(&phi, &y, 3).unwrap();
        let (support, residual) = best_support(phi.matrix(), &y, 3);
        assert!(residual < 1e-10);
        assert_eq!(support, x.support());
        if trace.selected != support {
            stalls += 1;
            assert_eq!(trace.terminated_by, TerminationReason::ResidualStalled, "instance {t}");
            assert!(trace.final_residual() > 1e-6 * y.norm2());
        } else {
            assert!(trace.final_residual() < 1e-10 * y.norm2());
        }
    }
    assert!(stalls <= 3, "{stalls} stalls in 50 instances");
}

#[test]
fn basis_pursuit_finds_the_minimum_l1_vertex_on_2x3() {
    // Vertices: (1, 1, 0) with ℓ₁ = 2 and (0, 0, 1) with ℓ₁ = 1.
    let phi = ObservationMatrix::new(DenseMatrix::from_rows(&[[1.0, 0.0, 1.0], [0.0, 1.0, 1.0]]).unwrap()).unwrap();
    let (vertex, l1) = min_l1_vertex(phi.matrix(), &[1.0, 1.0]);
    assert_eq!(l1, 1.0);
    let x = basis_pursuit(&phi, &[1.0, 1.0]).unwrap();
    for (a, b) in x.estimate().iter().zip(&vertex) {
        assert!((a - b).abs() < 1e-7, "{:?}", x.estimate());
    }

    // Asymmetric weights move the optimum to another vertex.
    let phi = ObservationMatrix::new(DenseMatrix::from_rows(&[[2.0, 0.0, 1.0], [0.0, 3.0, 1.0]]).unwrap()).unwrap();
    let y = [1.0, 2.0];
    let (vertex, l1) = min_l1_vertex(phi.matrix(), &y);
    let est = basis_pursuit(&phi, &y).unwrap();
    assert!((est.estimate().norm1() - l1).abs() < 1e-7);
    for (a, b) in est.estimate().iter().zip(&vertex) {
        assert!((a - b).abs() < 1e-6, "{:?} vs {vertex:?}", est.estimate());
    }
}

#[test]
fn basis_pursuit_objective_matches_vertex_enumeration() {
    for t in 0..30u64 {
        let phi = gen_gaussian_matrix(4, 9, derive_seed(72, &[t]), false).unwrap();
        let y: Vec<f64> = phi.matrix().row(0).iter().take(4).map(|v| v + 0.3).collect();
        let (_, l1) = min_l1_vertex(phi.matrix(), &y);
        let est = basis_pursuit(&phi, &y).unwrap();
        assert!((est.estimate().norm1() - l1).abs() <= 1e-7 * (1.0 + l1), "instance {t}: {} vs {l1}", est.estimate().norm1());
    }
}

#[test]
fn exact_ric_matches_svd_enumeration() {
    for t in 0..6u64 {
        let phi = if t % 2 == 0 {
            gen_gaussian_matrix(6, 10, t, true).unwrap()
        } else {
            gen_partial_orthogonal_matrix(6, 10, t, true).unwrap()
        };
        for k in 1..=5 {
            let a = exact_ric(&phi, k).unwrap();
            let b = ric_by_svd(phi.matrix(), k);
            assert!((a - b).abs() < 1e-10, "t = {t}, k = {k}: {a} vs {b}");
        }
    }
}

#[test]
fn two_column_ric_is_the_coherence() {
    for deg in [15.0f64, 30.0, 45.0, 60.0, 75.0, 90.0, 120.0] {
        let theta = deg.to_radians();
        let phi = ObservationMatrix::any_shape(two_column(theta));
        assert!(exact_ric(&phi, 1).unwrap() < 1e-12);
        assert!((exact_ric(&phi, 2).unwrap() - theta.cos().abs()).abs() < 1e-12, "{deg}");
    }
}

#[test]
fn monte_carlo_with_every_subset_equals_exact() {
    let phi = gen_gaussian_matrix(5, 9, 4, true).unwrap();
    let exact = RicTable::exact(&phi, 4).unwrap();
    let mc = RicTable::monte_carlo(&phi, 4, 126, 1).unwrap();
    for (a, b) in exact.deltas.iter().zip(&mc.deltas) {
        assert!((a.delta - b.delta).abs() < 1e-13);
        assert_eq!(b.exactness, sparsebench::guarantees::Exactness::Exact);
    }
    // Fewer samples give a lower bound.
    assert!(monte_carlo_ric(&phi, 4, 10, 1).unwrap() <= exact.deltas[3].delta + 1e-13);
}
