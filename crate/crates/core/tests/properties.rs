mod common;

use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use sparsebench::ensembles::{gen_gaussian_matrix, gen_partial_orthogonal_matrix, gen_sparse_signal};
use sparsebench::guarantees::{nc_lower_bound, online_bound, wang_bound, RicTable};
use sparsebench::linalg::{extreme_singular_values, least_squares, norm2};
use sparsebench::recovery::{basis_pursuit, omp, subspace_pursuit, TerminationPolicy};
use sparsebench::rng::{derive_seed, stream};
use sparsebench::{DenseMatrix, EnsembleKind, ObservationMatrix};

fn random_matrix(m: usize, k: usize, seed: u64) -> DenseMatrix {
    let mut s = stream(seed);
    let data: Vec<f64> = (0..m * k).map(|_| s.sample(StandardNormal)).collect();
    DenseMatrix::from_column_major(m, k, data).unwrap()
}

fn ensemble() -> impl Strategy<Value = EnsembleKind> {
    prop_oneof![Just(EnsembleKind::Gaussian), Just(EnsembleKind::Uniform), Just(EnsembleKind::Cars)]
}

/// `(Φ, x, y)` with `M ∈ [10, 30]`, `N = 2M`, `K ≤ M/3`.
fn instance() -> impl Strategy<Value = (ObservationMatrix, sparsebench::SparseSignal, Vec<f64>)> {
    (10usize..=30, 1usize..=10, ensemble(), any::<u64>(), any::<bool>()).prop_map(|(m, k, e, seed, orth)| {
        let n = 2 * m;
        let k = k.min(m / 3);
        let phi = if orth {
            gen_partial_orthogonal_matrix(m, n, derive_seed(seed, &[0]), true).unwrap()
        } else {
            gen_gaussian_matrix(m, n, derive_seed(seed, &[0]), true).unwrap()
        };
        let x = gen_sparse_signal(n, k, e, derive_seed(seed, &[1])).unwrap();
        let y = phi.measure(&x).unwrap().into_inner();
        (phi, x, y)
    })
}

fn residual(phi: &ObservationMatrix, est: &[f64], y: &[f64]) -> Vec<f64> {
    let fit = phi.matrix().matvec(est).unwrap();
    y.iter().zip(fit.iter()).map(|(a, b)| a - b).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn least_squares_residual_is_orthogonal(m in 1usize..=30, kf in 0.0f64..1.0, seed in any::<u64>()) {
        let k = 1 + ((m - 1) as f64 * kf) as usize;
        let a = random_matrix(m, k, seed);
        let b: Vec<f64> = random_matrix(m, 1, seed ^ 1).column(0).to_vec();
        let x = least_squares(&a, &b);
        prop_assume!(x.is_ok());
        let r = residual(&ObservationMatrix::any_shape(a.clone()), &x.unwrap(), &b);
        let c = a.matvec_transpose(&r).unwrap();
        prop_assert!(c.norm_inf() <= 1e-9 * norm2(&b));
    }

    #[test]
    fn singular_values_sandwich_every_image(m in 1usize..=12, kf in 0.0f64..1.0, seed in any::<u64>()) {
        let k = 1 + ((m - 1) as f64 * kf) as usize;
        let a = random_matrix(m, k, seed);
        let (lo, hi) = extreme_singular_values(&a);
        let mut s = stream(seed ^ 2);
        for _ in 0..100 {
            let v: Vec<f64> = (0..k).map(|_| s.sample(StandardNormal)).collect();
            let nv = norm2(&v);
            let v: Vec<f64> = v.iter().map(|x| x / nv).collect();
            let av = norm2(&a.matvec(&v).unwrap());
            prop_assert!(lo - 1e-9 <= av && av <= hi + 1e-9, "{lo} <= {av} <= {hi}");
        }
    }

    #[test]
    fn singular_values_match_brute_force_eigensolve(n in 2usize..=3, entries in prop::collection::vec(-3.0f64..3.0, 9)) {
        let a = DenseMatrix::from_column_major(n, n, entries[..n * n].to_vec()).unwrap();
        let na = common::to_na(&a);
        let eig = (na.transpose() * &na).symmetric_eigenvalues();
        let (lo, hi) = extreme_singular_values(&a);
        prop_assert!((lo - eig.min().max(0.0).sqrt()).abs() < 1e-8);
        prop_assert!((hi - eig.max().sqrt()).abs() < 1e-8);
    }

    #[test]
    fn signals_are_reproducible_with_unique_support(n in 5usize..200, kf in 0.0f64..1.0, e in ensemble(), seed in any::<u64>()) {
        let k = 1 + ((n - 2) as f64 * kf) as usize;
        let x = gen_sparse_signal(n, k, e, seed).unwrap();
        prop_assert_eq!(&x, &gen_sparse_signal(n, k, e, seed).unwrap());
        prop_assert!(x.support().windows(2).all(|w| w[0] < w[1]));
        prop_assert!(x.values().iter().all(|v| *v != 0.0));
        let energy: f64 = x.values().iter().map(|v| v * v).sum();
        prop_assert_eq!(x.norm2(), energy.sqrt());
        if e == EnsembleKind::Cars {
            prop_assert_eq!(x.norm2(), (k as f64).sqrt());
        }
    }

    #[test]
    fn omp_residual_is_orthogonal_to_the_selection_at_every_step((phi, x, y) in instance()) {
        let y_norm = norm2(&y);
        for l in 1..=x.k() {
            let t = omp(&phi, &y, &TerminationPolicy::SparsityK { k: l }).unwrap();
            let r = residual(&phi, t.estimate(), &y);
            for &i in &t.selected {
                let c: f64 = phi.matrix().column(i).iter().zip(&r).map(|(a, b)| a * b).sum();
                prop_assert!(c.abs() <= 1e-9 * y_norm, "step {l}, index {i}: {c}");
            }
        }
    }

    #[test]
    fn omp_k_is_a_prefix_of_omp_e((phi, x, y) in instance()) {
        let k = omp(&phi, &y, &TerminationPolicy::SparsityK { k: x.k() }).unwrap();
        let e = omp(&phi, &y, &TerminationPolicy::omp_e(phi.rows())).unwrap();
        let common = k.selected.len().min(e.selected.len());
        prop_assert_eq!(&k.selected[..common], &e.selected[..common]);
    }

    #[test]
    fn residuals_never_increase((phi, x, y) in instance()) {
        let e = omp(&phi, &y, &TerminationPolicy::omp_e(phi.rows())).unwrap();
        prop_assert!(e.residual_norms.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12)));
        if 2 * x.k() <= phi.rows() {
            let sp = subspace_pursuit(&phi, &y, x.k()).unwrap();
            prop_assert!(sp.residual_norms[1..].windows(2).all(|w| w[1] < w[0]));
        }
    }

    #[test]
    fn basis_pursuit_never_loses_to_the_truth(seed in any::<u64>(), m in 6usize..=16, k in 1usize..=4, e in ensemble()) {
        let n = 2 * m;
        let phi = gen_gaussian_matrix(m, n, derive_seed(seed, &[0]), true).unwrap();
        let x = gen_sparse_signal(n, k, e, derive_seed(seed, &[1])).unwrap();
        let y = phi.measure(&x).unwrap();
        let t = basis_pursuit(&phi, &y).unwrap();
        prop_assert!(t.estimate().norm1() <= x.to_dense().norm1() + 1e-7);
        prop_assert!(norm2(&residual(&phi, t.estimate(), &y)) <= 1e-8 * y.norm2());
    }

    #[test]
    fn successful_omp_k_finds_the_least_squares_best_support(seed in any::<u64>(), n in 8usize..=20, k in 1usize..=3) {
        let m = (n / 2).max(2 * k);
        let phi = gen_gaussian_matrix(m, n, derive_seed(seed, &[0]), true).unwrap();
        let x = gen_sparse_signal(n, k, EnsembleKind::Gaussian, derive_seed(seed, &[1])).unwrap();
        let y = phi.measure(&x).unwrap();
        let t = omp(&phi, &y, &TerminationPolicy::SparsityK { k }).unwrap();
        let mut sel = t.selected.clone();
        sel.sort_unstable();
        if sel == x.support() {
            let (best, _) = common::best_support(phi.matrix(), &y, k);
            prop_assert_eq!(sel, best);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn exact_ric_tables_are_monotone(seed in any::<u64>(), m in 3usize..=7) {
        let phi = gen_gaussian_matrix(m, m + 4, seed, true).unwrap();
        let t = RicTable::exact(&phi, m.min(6)).unwrap();
        prop_assert!(t.is_monotone());
        prop_assert!(t.deltas.windows(2).all(|w| w[0].delta <= w[1].delta + 1e-12));
    }

    #[test]
    fn rip_bounds_every_restricted_gram_product(seed in any::<u64>()) {
        // ||Φ_I*Φ_I z|| within (1 ± δ_|I|)||z||; ||Φ_I*Φ_J z|| ≤ δ_{|I|+|J|}||z|| for disjoint I, J.
        let phi = gen_gaussian_matrix(6, 10, seed, true).unwrap();
        let t = RicTable::exact(&phi, 4).unwrap();
        let na = common::to_na(phi.matrix());
        let mut s = stream(seed ^ 3);
        for _ in 0..40 {
            let mut idx: Vec<usize> = (0..10).collect();
            for i in 0..4 {
                let j = s.random_range(i..10);
                idx.swap(i, j);
            }
            let (a, b) = (s.random_range(1..=3usize), 1usize);
            let (i_set, j_set) = (&idx[..a], &idx[a..a + b]);
            let cols = |set: &[usize]| nalgebra::DMatrix::from_fn(6, set.len(), |r, c| na[(r, set[c])]);
            let (pi, pj) = (cols(i_set), cols(j_set));
            let z = nalgebra::DVector::from_fn(a, |_, _| s.sample::<f64, _>(StandardNormal));
            let g = (pi.transpose() * &pi * &z).norm();
            let d = t.deltas[a - 1].delta;
            prop_assert!((1.0 - d) * z.norm() <= g + 1e-9 && g <= (1.0 + d) * z.norm() + 1e-9);
            let w = nalgebra::DVector::from_fn(b, |_, _| s.sample::<f64, _>(StandardNormal));
            let cross = (pi.transpose() * &pj * &w).norm();
            prop_assert!(cross <= t.deltas[a + b - 1].delta * w.norm() + 1e-9);
        }
    }
}

#[test]
fn online_bound_with_no_correct_indices_is_the_classical_bound() {
    for k in 1..=10_000 {
        assert_eq!(online_bound(k, 0), wang_bound(k), "k = {k}");
    }
}

#[test]
fn nc_lower_bound_increases_with_k() {
    let values: Vec<f64> = (25..=5_000).map(|k| nc_lower_bound(k).unwrap()).collect();
    assert!(values.windows(2).all(|w| w[0] < w[1]));
    assert!(nc_lower_bound(24).is_err());
}
