use num_complex::Complex64 as C64;

use super::circuit::{apply_in_place, Circuit, Gate, GateKind};
use super::state::{check_wire, StateVector};
use crate::error::{Error, Result};

/// Unentangled register: one 2-component unit vector per qubit.
///
/// Memory and time are linear in the qubit count, which is what makes the
/// qubit-per-pixel model tractable at hundreds of qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductState {
    qubits: Vec<[C64; 2]>,
}

impl ProductState {
    pub fn zero(n_qubits: usize) -> Self {
        Self {
            qubits: vec![[C64::new(1.0, 0.0), C64::new(0.0, 0.0)]; n_qubits],
        }
    }

    pub fn from_qubits(qubits: Vec<[C64; 2]>) -> Result<Self> {
        for q in &qubits {
            let norm = (q[0].norm_sqr() + q[1].norm_sqr()).sqrt();
            if (norm - 1.0).abs() > 1e-10 {
                return Err(Error::NotNormalized(norm));
            }
        }
        Ok(Self { qubits })
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn qubit(&self, index: usize) -> [C64; 2] {
        self.qubits[index]
    }

    pub fn qubits(&self) -> &[[C64; 2]] {
        &self.qubits
    }

    pub fn prob_one(&self, index: usize) -> Result<f64> {
        check_wire(index, self.n_qubits())?;
        Ok(self.qubits[index][1].norm_sqr().clamp(0.0, 1.0))
    }

    /// Full 2^n amplitude vector; qubit 0 is the most significant factor.
    pub fn to_state_vector(&self) -> StateVector {
        let mut amps = vec![C64::new(1.0, 0.0)];
        for q in &self.qubits {
            amps = amps.iter().flat_map(|a| [a * q[0], a * q[1]]).collect();
        }
        StateVector::from_raw(self.n_qubits(), amps)
    }

    /// Applies a single-qubit gate; entangling gates are rejected.
    pub fn apply(&self, gate: &Gate, angle: f64) -> Result<ProductState> {
        if gate.kind.arity() != 1 {
            return Err(Error::EntanglingOnProduct(format!("{:?}", gate.kind)));
        }
        gate.validate(self.n_qubits())?;
        let w = gate.wires[0];
        let mut out = self.clone();
        apply_in_place(
            &mut out.qubits[w],
            1,
            &Gate {
                wires: vec![0],
                ..gate.clone()
            },
            angle,
        );
        Ok(out)
    }

    /// Runs an entanglement-free circuit.
    pub fn run(&self, circuit: &Circuit, params: &[f64]) -> Result<ProductState> {
        if params.len() != circuit.n_params() {
            return Err(Error::ParamLength {
                expected: circuit.n_params(),
                actual: params.len(),
            });
        }
        let mut state = self.clone();
        for gate in circuit.gates() {
            state = state.apply(gate, gate.angle(params))?;
        }
        Ok(state)
    }
}

/// `product_apply` as a free function.
pub fn product_apply(state: &ProductState, gate: &Gate, angle: f64) -> Result<ProductState> {
    state.apply(gate, angle)
}

/// True when every gate in the circuit acts on a single qubit.
pub fn is_entanglement_free(circuit: &Circuit) -> bool {
    circuit
        .gates()
        .iter()
        .all(|g| g.kind.arity() == 1 && g.kind != GateKind::Cswap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::ParamRef;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    #[test]
    fn single_qubit_examples() {
        let fresh = ProductState::zero(2);
        let r = fresh
            .apply(&Gate::ry(1, ParamRef::new(0)), FRAC_PI_2)
            .unwrap();
        assert!((r.qubit(1)[0].re - FRAC_PI_4.cos()).abs() < 1e-15);
        assert!((r.qubit(1)[1].re - FRAC_PI_4.sin()).abs() < 1e-15);
        assert_eq!(r.qubit(0), fresh.qubit(0));

        let flipped = fresh.apply(&Gate::x(0), 0.0).unwrap();
        assert_eq!(flipped.prob_one(0).unwrap(), 1.0);

        let (a, b) = (0.4, 1.3);
        let g = Gate::ry(0, ParamRef::new(0));
        let two = fresh.apply(&g, a).unwrap().apply(&g, b).unwrap();
        let one = fresh.apply(&g, a + b).unwrap();
        for (x, y) in two.qubit(0).iter().zip(one.qubit(0).iter()) {
            assert!((x - y).norm() < 1e-15);
        }
    }

    #[test]
    fn entangling_gate_rejected() {
        let s = ProductState::zero(2);
        assert!(matches!(
            s.apply(&Gate::cnot(0, 1), 0.0),
            Err(Error::EntanglingOnProduct(_))
        ));
    }

    #[test]
    fn matches_full_simulation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 1..=10 {
            let mut circ = Circuit::new(n, n);
            for q in 0..n {
                circ.ry(q, q).unwrap();
                if rng.gen_bool(0.3) {
                    circ.h(q).unwrap();
                }
                if rng.gen_bool(0.3) {
                    circ.x(q).unwrap();
                }
                circ.ry(q, rng.gen_range(0..n)).unwrap();
            }
            let params: Vec<f64> = (0..n).map(|_| rng.gen_range(-PI..PI)).collect();
            assert!(is_entanglement_free(&circ));
            let prod = ProductState::zero(n)
                .run(&circ, &params)
                .unwrap()
                .to_state_vector();
            let full = circ.run(&params, &StateVector::zero(n)).unwrap();
            let diff = prod
                .amplitudes()
                .iter()
                .zip(full.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(diff < 1e-10, "n={n}");
        }
    }
}
