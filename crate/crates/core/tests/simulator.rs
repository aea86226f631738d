use approx::assert_abs_diff_eq;
use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use proptest::prelude::*;
use qgan_core::linalg::{eigh_hermitian, CMatrix};
use qgan_core::qcore::{
    inner, is_entanglement_free, Circuit, DensityMatrix, ProductState, StateVector,
};

fn state_from(re: &[f64], im: &[f64]) -> StateVector {
    let amps = re.iter().zip(im).map(|(&a, &b)| C64::new(a, b)).collect();
    StateVector::normalized(amps).unwrap()
}

fn arb_state(n: usize) -> impl Strategy<Value = StateVector> {
    let d = 1usize << n;
    (
        prop::collection::vec(-1.0f64..1.0, d),
        prop::collection::vec(-1.0f64..1.0, d),
    )
        .prop_filter("nonzero", |(re, im)| {
            re.iter().chain(im).any(|v| v.abs() > 1e-3)
        })
        .prop_map(|(re, im)| state_from(&re, &im))
}

#[derive(Debug, Clone)]
enum Op {
    Ry(usize),
    Ryy(usize, usize),
    Cry(usize, usize),
    Cnot(usize, usize),
    H(usize),
    X(usize),
    Cswap(usize, usize, usize),
}

fn arb_ops(n: usize) -> impl Strategy<Value = Vec<Op>> {
    let op = (0..7u8, 0..n, 1..n, 1..n).prop_map(move |(k, a, db, dc)| {
        let b = (a + db) % n;
        let mut c = (a + dc) % n;
        if c == b {
            c = (b + 1) % n;
            if c == a {
                c = (c + 1) % n;
            }
        }
        match k {
            0 => Op::Ry(a),
            1 => Op::Ryy(a, b),
            2 => Op::Cry(a, b),
            3 => Op::Cnot(a, b),
            4 => Op::H(a),
            5 => Op::X(a),
            _ if n >= 3 => Op::Cswap(a, b, c),
            _ => Op::Ry(a),
        }
    });
    prop::collection::vec(op, 1..16)
}

fn build(n: usize, ops: &[Op]) -> Circuit {
    let mut c = Circuit::new(n, ops.len());
    for (p, op) in ops.iter().enumerate() {
        match *op {
            Op::Ry(a) => c.ry(a, p),
            Op::Ryy(a, b) => c.ryy(a, b, p),
            Op::Cry(a, b) => c.cry(a, b, p),
            Op::Cnot(a, b) => c.cnot(a, b),
            Op::H(a) => c.h(a),
            Op::X(a) => c.x(a),
            Op::Cswap(a, b, t) => c.cswap(a, b, t),
        }
        .unwrap();
    }
    c
}

/// Dense unitary of one gate, built by explicit matrix algebra on the
/// big-endian basis.
fn dense_gate(n: usize, op: &Op, theta: f64) -> DMatrix<C64> {
    let d = 1usize << n;
    let (c, s) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
    let flip = |i: usize, q: usize| i ^ (1 << (n - 1 - q));
    let mut u = DMatrix::<C64>::zeros(d, d);
    let ry = |b_in: usize, b_out: usize, c: f64, s: f64| match (b_out, b_in) {
        (0, 0) | (1, 1) => c,
        (1, 0) => s,
        _ => -s,
    };
    for col in 0..d {
        match *op {
            Op::Ry(a) => {
                for out_bit in 0..2 {
                    let row = if bit(col, a) == out_bit {
                        col
                    } else {
                        flip(col, a)
                    };
                    u[(row, col)] += C64::new(ry(bit(col, a), out_bit, c, s), 0.0);
                }
            }
            Op::Ryy(a, b) => {
                // exp(−iθ YY/2) = cos·I − i sin·YY; YY|ab⟩ = −(−1)^{a⊕b}|āb̄⟩
                u[(col, col)] += C64::new(c, 0.0);
                let sign = if bit(col, a) == bit(col, b) {
                    -1.0
                } else {
                    1.0
                };
                u[(flip(flip(col, a), b), col)] += C64::new(0.0, -s) * sign;
            }
            Op::Cry(a, b) => {
                if bit(col, a) == 0 {
                    u[(col, col)] += C64::new(1.0, 0.0);
                } else {
                    for out_bit in 0..2 {
                        let row = if bit(col, b) == out_bit {
                            col
                        } else {
                            flip(col, b)
                        };
                        u[(row, col)] += C64::new(ry(bit(col, b), out_bit, c, s), 0.0);
                    }
                }
            }
            Op::Cnot(a, b) => {
                let row = if bit(col, a) == 1 { flip(col, b) } else { col };
                u[(row, col)] += C64::new(1.0, 0.0);
            }
            Op::H(a) => {
                let h = std::f64::consts::FRAC_1_SQRT_2;
                u[(col, col)] += C64::new(if bit(col, a) == 1 { -h } else { h }, 0.0);
                u[(flip(col, a), col)] += C64::new(h, 0.0);
            }
            Op::X(a) => u[(flip(col, a), col)] += C64::new(1.0, 0.0),
            Op::Cswap(a, b, t) => {
                let row = if bit(col, a) == 1 && bit(col, b) != bit(col, t) {
                    flip(flip(col, b), t)
                } else {
                    col
                };
                u[(row, col)] += C64::new(1.0, 0.0);
            }
        }
    }
    u
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn circuits_match_dense_unitaries(n in 2usize..=4, seed_ops in arb_ops(4), angles in prop::collection::vec(-6.3f64..6.3, 16), psi in arb_state(4)) {
        let ops: Vec<Op> = seed_ops.into_iter().filter(|op| match *op {
            Op::Ry(a) | Op::H(a) | Op::X(a) => a < n,
            Op::Ryy(a, b) | Op::Cry(a, b) | Op::Cnot(a, b) => a < n && b < n,
            Op::Cswap(a, b, t) => a < n && b < n && t < n,
        }).collect();
        prop_assume!(!ops.is_empty());
        let circuit = build(n, &ops);
        let params = &angles[..ops.len()];
        let start = StateVector::normalized(psi.amplitudes()[..1 << n].to_vec());
        prop_assume!(start.is_ok());
        let start = start.unwrap();
        let got = circuit.run(params, &start).unwrap();
        let mut v = nalgebra::DVector::from_vec(start.amplitudes().to_vec());
        for (op, &t) in ops.iter().zip(params) {
            v = dense_gate(n, op, t) * v;
        }
        for (a, b) in got.amplitudes().iter().zip(v.iter()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
        prop_assert!((got.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn product_simulation_agrees_when_entanglement_free(n in 1usize..=5, wires in prop::collection::vec(0usize..5, 1..10), angles in prop::collection::vec(-6.3f64..6.3, 10)) {
        let mut c = Circuit::new(n, wires.len());
        for (p, w) in wires.iter().enumerate() {
            c.ry(w % n, p).unwrap();
            if p % 3 == 0 {
                c.h(w % n).unwrap();
            }
        }
        prop_assert!(is_entanglement_free(&c));
        let params = &angles[..wires.len()];
        let full = c.run(params, &StateVector::zero(n)).unwrap();
        let product = ProductState::zero(n).run(&c, params).unwrap().to_state_vector();
        prop_assert!((inner(&full, &product).unwrap().norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn density_of_pure_state_is_valid(psi in arb_state(3)) {
        let rho = DensityMatrix::from_pure(&psi);
        prop_assert!((rho.matrix().trace().re - 1.0).abs() < 1e-12);
        prop_assert!(rho.matrix().hermitian_defect() < 1e-15);
        prop_assert!((rho.expectation(&psi).unwrap() - 1.0).abs() < 1e-12);
        let (values, _) = rho.eigh().unwrap();
        prop_assert!((values[0] - 1.0).abs() < 1e-10);
        prop_assert!(values[1..].iter().all(|v| v.abs() < 1e-10));
    }

    #[test]
    fn pure_and_mixed_partial_traces_agree(psi in arb_state(4), mask in 1u8..15) {
        let keep: Vec<usize> = (0..4).filter(|q| mask & (1 << q) != 0).collect();
        let from_state = psi.partial_trace(&keep).unwrap();
        let from_rho = DensityMatrix::from_pure(&psi).partial_trace(&keep).unwrap();
        prop_assert!(from_state.matrix().max_abs_diff(from_rho.matrix()) < 1e-12);
        prop_assert!((from_state.matrix().trace().re - 1.0).abs() < 1e-12);
        let marg = psi.marginal_probabilities(&keep).unwrap();
        for (i, p) in marg.iter().enumerate() {
            prop_assert!((p - from_state.diagonal()[i]).abs() < 1e-12);
        }
    }

    #[test]
    fn jacobi_eigensolver_matches_nalgebra(d_pow in 1u32..=4, re in prop::collection::vec(-1.0f64..1.0, 256), im in prop::collection::vec(-1.0f64..1.0, 256)) {
        let d = 1usize << d_pow;
        let mut m = CMatrix::zeros(d);
        for i in 0..d {
            for j in 0..d {
                m[(i, j)] = C64::new(re[i * 16 + j], im[i * 16 + j]);
            }
        }
        let h = m.add(&m.adjoint()).scaled(0.5);
        let eig = eigh_hermitian(&h).unwrap();
        let na = DMatrix::from_fn(d, d, |i, j| h[(i, j)]);
        let mut want: Vec<f64> = na.symmetric_eigen().eigenvalues.iter().copied().collect();
        want.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in eig.values.iter().zip(&want) {
            prop_assert!((a - b).abs() < 1e-10);
        }
        prop_assert!(h.max_abs_diff(&eig.map_spectrum(|v| v)) < 1e-10);
    }
}

#[test]
fn bell_state_reduces_to_maximally_mixed() {
    let mut c = Circuit::new(2, 0);
    c.h(0).unwrap();
    c.cnot(0, 1).unwrap();
    let bell = c.run(&[], &StateVector::zero(2)).unwrap();
    let r = bell.partial_trace(&[1]).unwrap();
    assert!(r.matrix().max_abs_diff(&CMatrix::identity(2).scaled(0.5)) < 1e-15);
    assert_abs_diff_eq!(bell.prob_one(0).unwrap(), 0.5, epsilon = 1e-15);
}

#[test]
fn ry_pi_flips_the_most_significant_qubit() {
    let mut c = Circuit::new(3, 1);
    c.ry(0, 0).unwrap();
    let out = c
        .run(&[std::f64::consts::PI], &StateVector::zero(3))
        .unwrap();
    assert_abs_diff_eq!(out.amplitudes()[0b100].re, 1.0, epsilon = 1e-15);
}

#[test]
fn cry_decomposition_matches_controlled_rotation() {
    let theta = 1.234;
    for control_bit in 0..2 {
        let mut c = Circuit::new(2, 1);
        c.cry(0, 1, 0).unwrap();
        let out = c
            .run(&[theta], &StateVector::basis(2, control_bit << 1))
            .unwrap();
        let p1 = out.prob_one(1).unwrap();
        let want = if control_bit == 1 {
            (theta / 2.0).sin().powi(2)
        } else {
            0.0
        };
        assert_abs_diff_eq!(p1, want, epsilon = 1e-14);
    }
}

#[test]
fn invalid_circuits_are_rejected() {
    let mut c = Circuit::new(2, 1);
    assert!(c.ry(2, 0).is_err());
    assert!(c.ry(0, 1).is_err());
    assert!(c.cnot(1, 1).is_err());
    assert!(c.cry(0, 0, 0).is_err());
    c.ry(0, 0).unwrap();
    assert!(c.run(&[0.0, 1.0], &StateVector::zero(2)).is_err());
    assert!(c.run(&[0.0], &StateVector::zero(3)).is_err());
}
