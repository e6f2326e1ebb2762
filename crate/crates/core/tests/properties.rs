//! Property-based checks of the library's invariants.

use std::f64::consts::PI;

use dephaser::channel::{
    apply_channel, apply_superoperator, build_superoperator, case_ii_kraus, evolve_map, KrausSet, SpectralModel,
};
use dephaser::estimator::{simplex_project, solve_simplex_ls, solve_simplex_ls_with, SolverOptions};
use dephaser::measurement::{design_matrix, phase_probe_family, predict_probability, DesignMatrix};
use dephaser::operator::{
    devectorize, psd_defect, purity, random_density_matrix, random_hermitian, trace, trace_product, vectorize_matrix,
    ComplexMatrix, DensityMatrix, HermitianObservable,
};
use dephaser::rovib::{
    coherence_envelope, dephasing_kraus, evolve, thermal_distribution_reduced, BathModel, RovibParams,
};
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const OMEGA: f64 = 2.0 * PI / 500e-15;

fn max_diff(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Nearest coupling at or above `lambda` for which `pi / lambda` is an
/// exact revival time in floating point (`lambda * (pi / lambda) == pi`).
fn revival_coupling(mut lambda: f64) -> f64 {
    while lambda * (PI / lambda) != PI {
        lambda = lambda.next_up();
    }
    lambda
}

fn random_simplex<R: Rng>(n: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..n).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|x| x / s).collect()
}

fn random_spectral_model<R: Rng>(dim: usize, levels: usize, rng: &mut R) -> SpectralModel {
    let freqs = (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect();
    let shifts = (0..levels).map(|_| (0..dim).map(|_| rng.random_range(-5.0..5.0)).collect()).collect();
    SpectralModel::new(freqs, shifts).unwrap()
}

fn random_kraus<R: Rng>(dim: usize, count: usize, rng: &mut R) -> KrausSet {
    // Unitaries from the QR factor of Ginibre matrices, mixed with random
    // weights: a general (non-diagonal) trace-preserving channel.
    let ops = (0..count)
        .map(|_| {
            let g = ComplexMatrix::from_fn(dim, dim, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
            g.qr().q()
        })
        .collect();
    KrausSet::new(ops, random_simplex(count, rng)).unwrap()
}

fn objective(c: &DesignMatrix, y: &[f64], p: &[f64]) -> f64 {
    c.predict(p).unwrap().iter().zip(y).map(|(a, b)| (a - b).powi(2)).sum()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn trace_product_is_symmetric(seed in any::<u64>(), dim in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_density_matrix(dim, &mut rng);
        let b = random_density_matrix(dim, &mut rng);
        let ab = trace_product(&HermitianObservable::from(a.clone()), &b).unwrap();
        let ba = trace_product(&HermitianObservable::from(b), &a).unwrap();
        prop_assert!((ab - ba).abs() <= 1e-12);
    }

    #[test]
    fn purity_equals_self_trace_product(seed in any::<u64>(), dim in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(dim, &mut rng);
        let tp = trace_product(&HermitianObservable::from(rho.clone()), &rho).unwrap();
        prop_assert!((purity(&rho) - tp).abs() <= 1e-12);
    }

    #[test]
    fn vectorize_round_trips(seed in any::<u64>(), dim in 1usize..=12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = random_hermitian(dim, &mut rng);
        prop_assert_eq!(devectorize(&vectorize_matrix(&m)).unwrap(), m);
    }

    #[test]
    fn accepted_states_are_psd(seed in any::<u64>(), dim in 1usize..9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rho = random_density_matrix(dim, &mut rng);
        prop_assert!(psd_defect(rho.as_matrix()).unwrap() <= 1e-10);
    }

    #[test]
    fn dual_paths_agree(seed in any::<u64>(), dim in 2usize..=8, levels in 1usize..=20, t in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spectral_model(dim, levels, &mut rng);
        let w = random_simplex(levels, &mut rng);
        let rho = random_density_matrix(dim, &mut rng);
        let a = evolve_map(&spec, &w, &rho, t).unwrap();
        let b = apply_channel(&case_ii_kraus(&spec, &w, t).unwrap(), &rho).unwrap();
        prop_assert!(max_diff(a.as_matrix(), b.as_matrix()) <= 1e-12);
        prop_assert!((trace(a.as_matrix()).re - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn superoperator_matches_kraus_action(seed in any::<u64>(), dim in 1usize..=6, count in 1usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = random_kraus(dim, count, &mut rng);
        let rho = random_density_matrix(dim, &mut rng);
        let x = build_superoperator(&k).unwrap();
        let a = apply_superoperator(&x, &rho).unwrap();
        let b = apply_channel(&k, &rho).unwrap();
        prop_assert!(max_diff(a.as_matrix(), b.as_matrix()) <= 1e-12);
    }

    #[test]
    fn dephasing_superoperator_is_valid(seed in any::<u64>(), dim in 2usize..=6, levels in 1usize..=10, t in 0.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spectral_model(dim, levels, &mut rng);
        let w = random_simplex(levels, &mut rng);
        let x = build_superoperator(&case_ii_kraus(&spec, &w, t).unwrap()).unwrap();
        prop_assert!(x.psd_defect() <= 1e-10);
        prop_assert!(x.hermiticity_defect() <= 1e-12);
        prop_assert!(x.trace_preservation_defect() <= 1e-10);
    }

    #[test]
    fn diagonal_channels_keep_populations(seed in any::<u64>(), dim in 2usize..=8, levels in 1usize..=20, t in 0.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spectral_model(dim, levels, &mut rng);
        let w = random_simplex(levels, &mut rng);
        let rho = random_density_matrix(dim, &mut rng);
        let out = apply_channel(&case_ii_kraus(&spec, &w, t).unwrap(), &rho).unwrap();
        for n in 0..dim {
            prop_assert!((out.as_matrix()[(n, n)] - rho.as_matrix()[(n, n)]).norm() <= 1e-14);
        }
    }

    #[test]
    fn coherences_contract(seed in any::<u64>(), dim in 2usize..=8, levels in 1usize..=20, t in 0.0f64..50.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = random_spectral_model(dim, levels, &mut rng);
        let w = random_simplex(levels, &mut rng);
        let rho = random_density_matrix(dim, &mut rng);
        let out = evolve_map(&spec, &w, &rho, t).unwrap();
        for n in 0..dim {
            for m in 0..dim {
                if n != m {
                    prop_assert!(out.as_matrix()[(n, m)].norm() <= rho.as_matrix()[(n, m)].norm() + 1e-12);
                }
            }
        }
    }

    #[test]
    fn rovib_paths_agree_and_revive(seed in any::<u64>(), dim in 2usize..=8, j_max in 0usize..=50, lambda in (1e6f64..5e7).prop_map(revival_coupling), t in 0.0f64..2e-11, t_long in 0.0f64..2e-9) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = RovibParams::new(OMEGA, lambda, dim, j_max).unwrap();
        let w = random_simplex(j_max + 1, &mut rng);
        let bath = BathModel::new(lambda, w.clone()).unwrap();
        let rho = random_density_matrix(dim, &mut rng);
        let direct = evolve(&rho, &params, &bath, t).unwrap();
        let kraus = apply_channel(&dephasing_kraus(&params, &w, t).unwrap(), &rho).unwrap();
        let map = evolve_map(&params.spectral_model(), &w, &rho, t).unwrap();
        prop_assert!(max_diff(direct.as_matrix(), kraus.as_matrix()) <= 1e-12);
        prop_assert!(max_diff(direct.as_matrix(), map.as_matrix()) <= 1e-12);
        for n in 0..dim {
            prop_assert!((direct.as_matrix()[(n, n)] - rho.as_matrix()[(n, n)]).norm() <= 1e-14);
        }

        // Long times: independently rounded phase arguments of size |arg|
        // agree only to about |arg|·ε, so the bound tracks that floor.
        let direct_long = evolve(&rho, &params, &bath, t_long).unwrap();
        let kraus_long = apply_channel(&dephasing_kraus(&params, &w, t_long).unwrap(), &rho).unwrap();
        let max_arg = (dim - 1) as f64 * (OMEGA + lambda * (j_max * (j_max + 1)) as f64) * t_long;
        let floor = 1e-12 + 8.0 * f64::EPSILON * max_arg;
        prop_assert!(max_diff(direct_long.as_matrix(), kraus_long.as_matrix()) <= floor);

        let t_rev = PI / lambda;
        let revived = evolve(&rho, &params, &bath, t_rev).unwrap();
        let free = evolve(&rho, &params.with_lambda(0.0), &BathModel::new(0.0, w).unwrap(), t_rev).unwrap();
        prop_assert!(max_diff(revived.as_matrix(), free.as_matrix()) <= 1e-12);
    }

    #[test]
    fn envelope_is_bounded(seed in any::<u64>(), levels in 1usize..=150, d in -7i64..=7, t in 0.0f64..1e-6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let w = random_simplex(levels, &mut rng);
        prop_assert!(coherence_envelope(2.73e7, &w, d, t).norm() <= 1.0 + 1e-12);
    }

    #[test]
    fn thermal_weights_are_normalized_and_unimodal(beta in 1e-5f64..5.0, j_max in 0usize..=300) {
        let w = thermal_distribution_reduced(beta, j_max).unwrap().weights;
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        let peak = w.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        prop_assert!(w[..=peak].windows(2).all(|p| p[0] <= p[1]));
        prop_assert!(w[peak..].windows(2).all(|p| p[0] >= p[1]));
    }

    #[test]
    fn design_is_linear_and_valid(seed in any::<u64>(), dim in 2usize..=6, j_max in 0usize..=20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = RovibParams::new(OMEGA, 2.5e7, dim, j_max).unwrap();
        let rho = random_density_matrix(dim, &mut rng);
        let settings = phase_probe_family(dim, 12, 1e-7, seed).unwrap();
        let c = design_matrix(&settings, &rho, &params).unwrap();
        prop_assert!(c.matrix().iter().all(|&v| (-1e-10..=1.0 + 1e-10).contains(&v)));
        let w = random_simplex(j_max + 1, &mut rng);
        let bath = BathModel::new(params.lambda, w.clone()).unwrap();
        let pred = c.predict(&w).unwrap();
        for (r, s) in settings.iter().enumerate() {
            let direct = predict_probability(s, &evolve(&rho, &params, &bath, s.time).unwrap()).unwrap();
            prop_assert!((pred[r] - direct).abs() <= 1e-12);
        }
    }

    #[test]
    fn projection_is_idempotent(v in prop::collection::vec(-10.0f64..10.0, 1..30)) {
        let p = simplex_project(&v);
        prop_assert_eq!(simplex_project(&p), p.clone());
        prop_assert!(p.iter().all(|&x| x >= 0.0));
        prop_assert!((p.iter().sum::<f64>() - 1.0).abs() <= 1e-14);
    }

    #[test]
    fn least_squares_objective_is_convex(seed in any::<u64>(), rows in 1usize..30, cols in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = DesignMatrix::from_matrix(DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())).unwrap();
        let y: Vec<f64> = (0..rows).map(|_| rng.random::<f64>()).collect();
        let p = random_simplex(cols, &mut rng);
        let q = random_simplex(cols, &mut rng);
        for a in [0.25, 0.5, 0.75] {
            let mix: Vec<f64> = p.iter().zip(&q).map(|(x, z)| a * x + (1.0 - a) * z).collect();
            prop_assert!(objective(&c, &y, &mix) <= a * objective(&c, &y, &p) + (1.0 - a) * objective(&c, &y, &q) + 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 24, ..ProptestConfig::default() })]

    #[test]
    fn solver_beats_random_feasible_points(seed in any::<u64>(), rows in 1usize..40, cols in 1usize..20) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = DesignMatrix::from_matrix(DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())).unwrap();
        let y: Vec<f64> = (0..rows).map(|_| rng.random::<f64>()).collect();
        let r = solve_simplex_ls(&c, &y).unwrap();
        prop_assert!((r.weights.iter().sum::<f64>() - 1.0).abs() <= 1e-10);
        prop_assert!(r.weights.iter().all(|&w| w >= 0.0));
        let recomputed = objective(&c, &y, &r.weights);
        prop_assert!((recomputed - r.objective).abs() <= 1e-12 * recomputed.max(1e-300) + 1e-300);
        let initial = objective(&c, &y, &vec![1.0 / cols as f64; cols]);
        prop_assert!(r.objective <= initial * (1.0 + 1e-12));
        for _ in 0..1000 {
            let p = random_simplex(cols, &mut rng);
            prop_assert!(r.objective <= objective(&c, &y, &p) + 1e-12);
        }
    }

    #[test]
    fn solver_is_deterministic(seed in any::<u64>(), rows in 1usize..30, cols in 1usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let c = DesignMatrix::from_matrix(DMatrix::from_fn(rows, cols, |_, _| rng.random::<f64>())).unwrap();
        let y: Vec<f64> = (0..rows).map(|_| rng.random::<f64>()).collect();
        let opts = SolverOptions::default();
        prop_assert_eq!(solve_simplex_ls_with(&c, &y, &opts).unwrap(), solve_simplex_ls_with(&c, &y, &opts).unwrap());
    }
}

#[test]
fn validated_states_reject_bad_input() {
    let bad = ComplexMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![C64::new(1.5, 0.0), C64::new(-0.5, 0.0)]));
    assert!(DensityMatrix::new(bad).is_err());
}
