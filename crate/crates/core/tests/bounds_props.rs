use std::f64::consts::LN_2;

use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qgan_core::bounds::{
    best_data_state, best_pure_generator, discriminator_lower_bound, fvg_check, helstrom_success,
    nash_value, nash_value_from_t, overlap_fidelity, trace_distance, uhlmann_fidelity, BoundReport,
    Generator,
};
use qgan_core::linalg::CMatrix;
use qgan_core::qcore::{DensityMatrix, StateVector};

fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
    let d = 1usize << n;
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d)
        .prop_filter("nonzero", |v| {
            v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
        })
        .prop_map(|v| {
            StateVector::normalized(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap()
        })
}

/// Mixture of up to four random pure states with random weights.
fn arb_density(n: usize) -> impl Strategy<Value = DensityMatrix> {
    prop::collection::vec((arb_state(n), 0.05f64..1.0), 1..=4).prop_map(|parts| {
        let total: f64 = parts.iter().map(|(_, w)| w).sum();
        let states: Vec<StateVector> = parts.iter().map(|(s, _)| s.clone()).collect();
        let probs: Vec<f64> = parts.iter().map(|(_, w)| w / total).collect();
        DensityMatrix::from_ensemble(&states, &probs).unwrap()
    })
}

fn pair(n: usize) -> impl Strategy<Value = (DensityMatrix, DensityMatrix)> {
    (arb_density(n), arb_density(n))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn distances_stay_in_range((rho, sigma) in (1usize..=3).prop_flat_map(pair)) {
        let t = trace_distance(&rho, &sigma).unwrap();
        let f = uhlmann_fidelity(&rho, &sigma).unwrap();
        prop_assert!((0.0..=1.0).contains(&t));
        prop_assert!((0.0..=1.0).contains(&f));
        let (lo, hi) = fvg_check(&rho, &sigma).unwrap();
        prop_assert!(lo >= -1e-9 && hi >= -1e-9, "margins {lo} {hi}");
        prop_assert!((uhlmann_fidelity(&sigma, &rho).unwrap() - f).abs() < 1e-9);
        prop_assert!((trace_distance(&sigma, &rho).unwrap() - t).abs() < 1e-12);
    }

    #[test]
    fn pure_generator_conventions_agree(rho in arb_density(3), gamma in arb_state(3)) {
        let g = DensityMatrix::from_pure(&gamma);
        let f = uhlmann_fidelity(&rho, &g).unwrap();
        let overlap = overlap_fidelity(&gamma, &rho).unwrap();
        prop_assert!((f * f - overlap).abs() < 1e-9);

        let p = helstrom_success(&rho, &g, 0.5).unwrap();
        prop_assert!(p >= 1.0 - overlap / 2.0 - 1e-9);
        let (bound, satisfied) = discriminator_lower_bound(&rho, &gamma).unwrap();
        prop_assert!(satisfied);
        prop_assert!((bound - (1.0 - overlap / 2.0)).abs() < 1e-15);
        // The stronger T ≥ 1 − ⟨γ|ρ|γ⟩ for a pure γ.
        prop_assert!(trace_distance(&rho, &g).unwrap() >= 1.0 - overlap - 1e-9);

        let (lambda_max, v) = best_pure_generator(&rho).unwrap();
        prop_assert!(overlap <= lambda_max + 1e-9);
        prop_assert!((overlap_fidelity(&v, &rho).unwrap() - lambda_max).abs() < 1e-9);
    }

    #[test]
    fn data_optimum_never_beats_eigenvector(states in prop::collection::vec(arb_state(2), 1..6)) {
        let rho = DensityMatrix::uniform_ensemble(&states).unwrap();
        let (lambda_max, _) = best_pure_generator(&rho).unwrap();
        let (idx, p) = best_data_state(&rho, &states).unwrap();
        prop_assert!(p <= lambda_max + 1e-9);
        prop_assert!(idx < states.len());
    }

    #[test]
    fn nash_value_at_equilibrium(rho in arb_density(2)) {
        prop_assert!((nash_value(&rho, &rho).unwrap() + 2.0 * LN_2).abs() < 1e-12);
    }

    #[test]
    fn helstrom_is_a_probability((rho, sigma) in pair(2), prior in 0.0f64..=1.0) {
        let p = helstrom_success(&rho, &sigma, prior).unwrap();
        prop_assert!(p >= prior.max(1.0 - prior) - 1e-12 && p <= 1.0);
    }
}

#[test]
fn orthogonal_states_are_perfectly_distinguishable() {
    let a = DensityMatrix::from_pure(&StateVector::basis(2, 0));
    let b = DensityMatrix::from_pure(&StateVector::basis(2, 3));
    assert!((trace_distance(&a, &b).unwrap() - 1.0).abs() < 1e-12);
    assert!(uhlmann_fidelity(&a, &b).unwrap().abs() < 1e-12);
    assert!((helstrom_success(&a, &b, 0.5).unwrap() - 1.0).abs() < 1e-12);
    assert_eq!(nash_value(&a, &b).unwrap(), f64::NEG_INFINITY);
    assert!(helstrom_success(&a, &b, 1.5).is_err());
}

#[test]
fn nash_value_from_t_edges() {
    assert!((nash_value_from_t(0.0) + 2.0 * LN_2).abs() < 1e-15);
    assert_eq!(nash_value_from_t(0.5), f64::NEG_INFINITY);
    assert!(nash_value_from_t(0.25) < nash_value_from_t(0.0));
}

#[test]
fn perfect_and_orthogonal_generators_hit_the_trivial_bounds() {
    let x = StateVector::basis(2, 1);
    let rho = DensityMatrix::from_pure(&x);
    let (bound, ok) = discriminator_lower_bound(&rho, &x).unwrap();
    assert!((bound - 0.5).abs() < 1e-12 && ok);
    assert!((helstrom_success(&rho, &rho, 0.5).unwrap() - 0.5).abs() < 1e-12);
    let (bound, ok) = discriminator_lower_bound(&rho, &StateVector::basis(2, 2)).unwrap();
    assert!((bound - 1.0).abs() < 1e-12 && ok);
}

#[test]
fn maximally_mixed_data_caps_every_pure_generator() {
    let rho = DensityMatrix::from_matrix(CMatrix::identity(8).scaled(0.125)).unwrap();
    let (lambda_max, _) = best_pure_generator(&rho).unwrap();
    assert!((lambda_max - 0.125).abs() < 1e-12);
    let gamma = StateVector::normalized((0..8).map(|i| C64::new(i as f64, 1.0)).collect()).unwrap();
    assert!((overlap_fidelity(&gamma, &rho).unwrap() - 0.125).abs() < 1e-12);
}

#[test]
fn report_serializes_flat_with_null_for_minus_infinity() {
    let states = vec![StateVector::basis(1, 0), StateVector::basis(1, 1)];
    let rho = DensityMatrix::uniform_ensemble(&states).unwrap();
    let report = BoundReport::compute(&rho, &states, Generator::Pure(&states[0])).unwrap();
    assert!((report.lambda_max - 0.5).abs() < 1e-12);
    assert_eq!(report.p_data_max_index, 0);
    assert!(report.generator_bound_margin.unwrap() >= -1e-9);
    let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    for key in [
        "trace_distance",
        "uhlmann_fidelity",
        "helstrom_success",
        "lambda_max",
        "p_data_max",
        "nash_value",
    ] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
    assert!(report.table().contains("lambda_max"));

    let far = DensityMatrix::from_pure(&StateVector::basis(1, 1));
    let pure = DensityMatrix::from_pure(&states[0]);
    let report = BoundReport::compute(&pure, &states[..1], Generator::Mixed(&far)).unwrap();
    assert_eq!(report.nash_value, f64::NEG_INFINITY);
    assert!(report.overlap_fidelity.is_none());
    let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
    assert!(json["nash_value"].is_null());
}
