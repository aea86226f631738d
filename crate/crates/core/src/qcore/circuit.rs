use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2};

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use super::state::{bit_mask, check_wire, StateVector};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    /// exp(-iθY/2)
    Ry,
    /// exp(-iθ(Y⊗Y)/2)
    Ryy,
    H,
    X,
    Cnot,
    /// Controlled swap; wires are (control, a, b).
    Cswap,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::Ry | GateKind::H | GateKind::X => 1,
            GateKind::Ryy | GateKind::Cnot => 2,
            GateKind::Cswap => 3,
        }
    }

    pub fn is_parametric(self) -> bool {
        matches!(self, GateKind::Ry | GateKind::Ryy)
    }
}

/// Reference into a circuit's parameter vector. The gate angle is
/// `params[index] * scale`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRef {
    pub index: usize,
    pub scale: f64,
}

impl ParamRef {
    pub fn new(index: usize) -> Self {
        Self { index, scale: 1.0 }
    }

    pub fn scaled(index: usize, scale: f64) -> Self {
        Self { index, scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub wires: Vec<usize>,
    pub param: Option<ParamRef>,
}

impl Gate {
    pub fn ry(wire: usize, param: ParamRef) -> Self {
        Self {
            kind: GateKind::Ry,
            wires: vec![wire],
            param: Some(param),
        }
    }

    pub fn ryy(a: usize, b: usize, param: ParamRef) -> Self {
        Self {
            kind: GateKind::Ryy,
            wires: vec![a, b],
            param: Some(param),
        }
    }

    pub fn h(wire: usize) -> Self {
        Self {
            kind: GateKind::H,
            wires: vec![wire],
            param: None,
        }
    }

    pub fn x(wire: usize) -> Self {
        Self {
            kind: GateKind::X,
            wires: vec![wire],
            param: None,
        }
    }

    pub fn cnot(control: usize, target: usize) -> Self {
        Self {
            kind: GateKind::Cnot,
            wires: vec![control, target],
            param: None,
        }
    }

    pub fn cswap(control: usize, a: usize, b: usize) -> Self {
        Self {
            kind: GateKind::Cswap,
            wires: vec![control, a, b],
            param: None,
        }
    }

    /// Angle this gate receives for a given parameter vector (0 for fixed gates).
    pub fn angle(&self, params: &[f64]) -> f64 {
        self.param.map_or(0.0, |p| params[p.index] * p.scale)
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.wires.len() != self.kind.arity() {
            return Err(Error::Config(format!(
                "{:?} expects {} wires, got {}",
                self.kind,
                self.kind.arity(),
                self.wires.len()
            )));
        }
        for &w in &self.wires {
            check_wire(w, n_qubits)?;
        }
        for (i, a) in self.wires.iter().enumerate() {
            if self.wires[i + 1..].contains(a) {
                return Err(Error::DuplicateWires(self.wires.clone()));
            }
        }
        Ok(())
    }
}

/// Applies `gate` at `angle` to a copy of `state`.
pub fn apply_gate(state: &StateVector, gate: &Gate, angle: f64) -> Result<StateVector> {
    gate.validate(state.n_qubits())?;
    let mut out = state.clone();
    let n = out.n_qubits();
    apply_in_place(out.amplitudes_mut(), n, gate, angle);
    Ok(out)
}

/// Applies a validated gate in place.
pub(crate) fn apply_in_place(amps: &mut [C64], n: usize, gate: &Gate, angle: f64) {
    let w = &gate.wires;
    match gate.kind {
        GateKind::Ry => {
            let (s, c) = (angle / 2.0).sin_cos();
            let m = [[c, -s], [s, c]].map(|r| r.map(|x| C64::new(x, 0.0)));
            apply_1q(amps, n, w[0], m);
        }
        GateKind::H => {
            let h = C64::new(FRAC_1_SQRT_2, 0.0);
            apply_1q(amps, n, w[0], [[h, h], [h, -h]]);
        }
        GateKind::X => {
            let mask = bit_mask(w[0], n);
            for i in 0..amps.len() {
                if i & mask == 0 {
                    amps.swap(i, i | mask);
                }
            }
        }
        GateKind::Ryy => {
            let (s, c) = (angle / 2.0).sin_cos();
            let is = C64::new(0.0, s);
            let (ma, mb) = (bit_mask(w[0], n), bit_mask(w[1], n));
            for i in 0..amps.len() {
                if i & (ma | mb) != 0 {
                    continue;
                }
                let (i00, i01, i10, i11) = (i, i | mb, i | ma, i | ma | mb);
                let (a00, a01, a10, a11) = (amps[i00], amps[i01], amps[i10], amps[i11]);
                amps[i00] = a00 * c + is * a11;
                amps[i11] = a11 * c + is * a00;
                amps[i01] = a01 * c - is * a10;
                amps[i10] = a10 * c - is * a01;
            }
        }
        GateKind::Cnot => {
            let (mc, mt) = (bit_mask(w[0], n), bit_mask(w[1], n));
            for i in 0..amps.len() {
                if i & mc != 0 && i & mt == 0 {
                    amps.swap(i, i | mt);
                }
            }
        }
        GateKind::Cswap => {
            let (mc, ma, mb) = (bit_mask(w[0], n), bit_mask(w[1], n), bit_mask(w[2], n));
            for i in 0..amps.len() {
                if i & mc != 0 && i & ma != 0 && i & mb == 0 {
                    amps.swap(i, (i & !ma) | mb);
                }
            }
        }
    }
}

fn apply_1q(amps: &mut [C64], n: usize, wire: usize, m: [[C64; 2]; 2]) {
    let mask = bit_mask(wire, n);
    for i in 0..amps.len() {
        if i & mask == 0 {
            let (a, b) = (amps[i], amps[i | mask]);
            amps[i] = m[0][0] * a + m[0][1] * b;
            amps[i | mask] = m[1][0] * a + m[1][1] * b;
        }
    }
}

/// Applies the Hermitian generator G of a parametric gate (U = exp(-iθG)).
fn apply_generator(amps: &mut [C64], n: usize, gate: &Gate) {
    // Y/2 per wire; Y = [[0, -i], [i, 0]].
    let half_y = [
        [C64::new(0.0, 0.0), C64::new(0.0, -0.5)],
        [C64::new(0.0, 0.5), C64::new(0.0, 0.0)],
    ];
    match gate.kind {
        GateKind::Ry => apply_1q(amps, n, gate.wires[0], half_y),
        GateKind::Ryy => {
            apply_1q(amps, n, gate.wires[0], half_y);
            let y = half_y.map(|r| r.map(|x| x * 2.0));
            apply_1q(amps, n, gate.wires[1], y);
        }
        _ => unreachable!("generator requested for fixed gate"),
    }
}

/// Perturbation of a single gate's angle, used by the parameter-shift rule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Shift {
    pub gate: usize,
    pub delta: f64,
}

/// Ordered gate list acting on `n_qubits`, with `n_params` shared parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Circuit {
    n_qubits: usize,
    n_params: usize,
    gates: Vec<Gate>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_params: usize) -> Self {
        Self {
            n_qubits,
            n_params,
            gates: Vec::new(),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    /// Grows the parameter vector; returns the index of the first new slot.
    pub fn reserve_params(&mut self, count: usize) -> usize {
        let first = self.n_params;
        self.n_params += count;
        first
    }

    pub fn push(&mut self, gate: Gate) -> Result<()> {
        gate.validate(self.n_qubits)?;
        if let Some(p) = gate.param {
            if p.index >= self.n_params {
                return Err(Error::ParamIndex {
                    index: p.index,
                    n_params: self.n_params,
                });
            }
        }
        self.gates.push(gate);
        Ok(())
    }

    pub fn ry(&mut self, wire: usize, param: usize) -> Result<()> {
        self.push(Gate::ry(wire, ParamRef::new(param)))
    }

    pub fn ryy(&mut self, a: usize, b: usize, param: usize) -> Result<()> {
        self.push(Gate::ryy(a, b, ParamRef::new(param)))
    }

    /// Controlled-RY stored as RY(θ/2)·CNOT·RY(-θ/2)·CNOT on the target,
    /// so every parametric gate has a generator with eigenvalues ±½.
    pub fn cry(&mut self, control: usize, target: usize, param: usize) -> Result<()> {
        if control == target {
            return Err(Error::DuplicateWires(vec![control, target]));
        }
        self.push(Gate::ry(target, ParamRef::scaled(param, 0.5)))?;
        self.push(Gate::cnot(control, target))?;
        self.push(Gate::ry(target, ParamRef::scaled(param, -0.5)))?;
        self.push(Gate::cnot(control, target))
    }

    pub fn h(&mut self, wire: usize) -> Result<()> {
        self.push(Gate::h(wire))
    }

    pub fn x(&mut self, wire: usize) -> Result<()> {
        self.push(Gate::x(wire))
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.push(Gate::cnot(control, target))
    }

    pub fn cswap(&mut self, control: usize, a: usize, b: usize) -> Result<()> {
        self.push(Gate::cswap(control, a, b))
    }

    /// Indices and parameter references of every parametric gate.
    pub fn parametric_gates(&self) -> impl Iterator<Item = (usize, ParamRef)> + '_ {
        self.gates
            .iter()
            .enumerate()
            .filter_map(|(i, g)| g.param.map(|p| (i, p)))
    }

    fn check_inputs(&self, params: &[f64], initial: &StateVector) -> Result<()> {
        if params.len() != self.n_params {
            return Err(Error::ParamLength {
                expected: self.n_params,
                actual: params.len(),
            });
        }
        if initial.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                actual: initial.n_qubits(),
            });
        }
        Ok(())
    }

    pub fn run(&self, params: &[f64], initial: &StateVector) -> Result<StateVector> {
        self.run_shifted(params, initial, None)
    }

    /// Runs the circuit with one gate's angle offset by `shift.delta`.
    pub fn run_shifted(
        &self,
        params: &[f64],
        initial: &StateVector,
        shift: Option<Shift>,
    ) -> Result<StateVector> {
        self.check_inputs(params, initial)?;
        let mut state = initial.clone();
        let amps = state.amplitudes_mut();
        for (i, gate) in self.gates.iter().enumerate() {
            let mut angle = gate.angle(params);
            if let Some(s) = shift.filter(|s| s.gate == i) {
                angle += s.delta;
            }
            apply_in_place(amps, self.n_qubits, gate, angle);
        }
        Ok(state)
    }

    /// Reverse-mode gradient of a real cost of the output state.
    ///
    /// `cost` returns the loss and ∂L/∂ψ̄ (so that dL = 2·Re⟨g|dψ⟩).
    /// Costs one forward and one backward pass regardless of parameter count.
    pub fn adjoint_gradient<F>(
        &self,
        params: &[f64],
        initial: &StateVector,
        cost: F,
    ) -> Result<(f64, Vec<f64>)>
    where
        F: FnOnce(&StateVector) -> (f64, Vec<C64>),
    {
        let out = self.run(params, initial)?;
        let (loss, costate) = cost(&out);
        if costate.len() != out.dim() {
            return Err(Error::DimensionMismatch {
                expected: out.dim(),
                actual: costate.len(),
            });
        }
        let n = self.n_qubits;
        let mut phi = out.into_amplitudes();
        let mut lambda = costate;
        let mut scratch = vec![C64::new(0.0, 0.0); phi.len()];
        let mut grad = vec![0.0; self.n_params];
        for gate in self.gates.iter().rev() {
            let angle = gate.angle(params);
            if let Some(p) = gate.param {
                scratch.copy_from_slice(&phi);
                apply_generator(&mut scratch, n, gate);
                let overlap: C64 = lambda.iter().zip(&scratch).map(|(l, g)| l.conj() * g).sum();
                grad[p.index] += p.scale * 2.0 * overlap.im;
            }
            apply_in_place(&mut phi, n, gate, -angle);
            apply_in_place(&mut lambda, n, gate, -angle);
        }
        Ok((loss, grad))
    }
}

/// The standard two-term shift for gates with generator eigenvalues ±½.
pub const PARAMETER_SHIFT: f64 = FRAC_PI_2;
