use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qgan_core::embedding::{EmbeddingSpec, FeatureVector};
use qgan_core::models::{
    build_qvc, product_iqgan_image, qvc_param_count, swap_test_states, IqganModel, ProductIqgan,
    QuganModel, SwapTestKind, Topology,
};
use qgan_core::qcore::{inner, StateVector};

fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 1 << n)
        .prop_filter("nonzero", |v| {
            v.iter().any(|(a, b)| a.abs() + b.abs() > 1e-3)
        })
        .prop_map(|v| {
            StateVector::normalized(v.into_iter().map(|(a, b)| C64::new(a, b)).collect()).unwrap()
        })
}

proptest! {
    #[test]
    fn both_swap_tests_measure_the_overlap(a in arb_state(3), b in arb_state(3)) {
        let want = 0.5 + 0.5 * inner(&a, &b).unwrap().norm_sqr();
        for kind in [SwapTestKind::Ancilla, SwapTestKind::Destructive] {
            prop_assert!((swap_test_states(&a, &b, kind).unwrap() - want).abs() < 1e-12);
        }
    }
}

#[test]
fn qvc_counts_match_builders() {
    for n in 2..=5 {
        for depth in 1..=3 {
            for topology in [Topology::Chain, Topology::Ring] {
                assert_eq!(
                    build_qvc(n, depth, topology).unwrap().n_params(),
                    qvc_param_count(n, depth, topology)
                );
            }
        }
    }
    assert_eq!(qvc_param_count(4, 2, Topology::Chain), 2 * (4 + 6));
    assert_eq!(qvc_param_count(4, 1, Topology::Ring), 4 + 8);
    assert!(build_qvc(1, 1, Topology::Chain).is_err());
    assert!(build_qvc(3, 0, Topology::Chain).is_err());
}

#[test]
fn architecture_documents_registers() {
    let model = IqganModel::new(EmbeddingSpec::angle(4), 2, Topology::Chain).unwrap();
    assert_eq!(model.total_qubits(), 9);
    let doc = model.architecture();
    assert_eq!(doc.registers.register_a.len(), 4);
    assert_eq!(doc.registers.register_b.len(), 4);
    assert!(doc.registers.ancilla.is_some());
    let json = serde_json::to_value(&doc).unwrap();
    assert!(json.get("gate_counts").is_some());

    let q = QuganModel::new(EmbeddingSpec::angle(3), 1, Topology::Ring)
        .unwrap()
        .with_swap_test(SwapTestKind::Destructive);
    assert!(q.architecture().registers.ancilla.is_none());
}

#[test]
fn mismatched_inputs_are_rejected() {
    let model = IqganModel::new(EmbeddingSpec::angle(3), 1, Topology::Chain).unwrap();
    assert!(model
        .encode(&FeatureVector::new(vec![0.1, 0.2]).unwrap(), None)
        .is_err());
    assert!(model.generator_state(&[0.0; 2]).is_err());
    assert!(FeatureVector::new(vec![1.5]).is_err());
    let a = StateVector::zero(2);
    let b = StateVector::zero(3);
    assert!(swap_test_states(&a, &b, SwapTestKind::Ancilla).is_err());
}

#[test]
fn product_model_renders_its_angles() {
    let model = ProductIqgan::new(2, 2);
    let thetas = [
        0.0,
        std::f64::consts::PI,
        std::f64::consts::FRAC_PI_2,
        -std::f64::consts::PI,
    ];
    let img = product_iqgan_image(&model, &thetas).unwrap();
    let want = [0.0, 1.0, 0.5, 1.0];
    for (a, b) in img.values().iter().zip(want) {
        assert!((a - b).abs() < 1e-12);
    }
}
