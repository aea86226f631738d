//! Circuit builders for the IQGAN and QuGAN architectures and the swap-test
//! discriminator shared by both.
//!
//! Register layout for two-register models (ancilla variant):
//! qubit 0 is the swap-test ancilla, qubits `1..=w` hold register A and
//! `w+1..=2w` hold register B. The destructive variant drops the ancilla and
//! shifts both registers down by one.

use serde::{Deserialize, Serialize};

use crate::embedding::{
    amplitude_embed, angle_decode_product, angle_embed_product, angle_embed_with_offsets,
    EmbeddingKind, EmbeddingSpec, FeatureVector,
};
use crate::error::{Error, Result};
use crate::qcore::{Circuit, Gate, GateKind, ProductState, StateVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    /// Nearest-neighbour pairs (i, i+1), i = 0..n-2.
    #[default]
    Chain,
    /// Chain plus the wrap-around pair (n-1, 0).
    Ring,
}

impl Topology {
    fn pairs(self, n: usize) -> Vec<(usize, usize)> {
        let mut pairs: Vec<_> = (0..n - 1).map(|i| (i, i + 1)).collect();
        if self == Topology::Ring && n > 2 {
            pairs.push((n - 1, 0));
        }
        pairs
    }
}

/// Variational circuit of `depth` units, each `[RY on every qubit, RYY on
/// every pair, CRY on every pair]`, over an open chain.
pub fn build_qvc_layer(n_qubits: usize, depth: usize) -> Result<Circuit> {
    build_qvc(n_qubits, depth, Topology::Chain)
}

pub fn build_qvc(n_qubits: usize, depth: usize, topology: Topology) -> Result<Circuit> {
    if n_qubits < 2 {
        return Err(Error::Config(format!(
            "a QVC needs at least 2 qubits, got {n_qubits}"
        )));
    }
    if depth == 0 {
        return Err(Error::Config("QVC depth must be at least 1".into()));
    }
    let mut c = Circuit::new(n_qubits, 0);
    append_qvc(&mut c, &(0..n_qubits).collect::<Vec<_>>(), depth, topology)?;
    Ok(c)
}

/// Appends QVC layers on `wires` of an existing circuit, allocating fresh parameters.
pub fn append_qvc(
    circuit: &mut Circuit,
    wires: &[usize],
    depth: usize,
    topology: Topology,
) -> Result<()> {
    let n = wires.len();
    if n < 2 {
        return Err(Error::Config(format!(
            "a QVC needs at least 2 qubits, got {n}"
        )));
    }
    let pairs = topology.pairs(n);
    for _ in 0..depth {
        let first = circuit.reserve_params(n + 2 * pairs.len());
        let mut next = first;
        for &w in wires {
            circuit.ry(w, next)?;
            next += 1;
        }
        for &(a, b) in &pairs {
            circuit.ryy(wires[a], wires[b], next)?;
            next += 1;
        }
        for &(a, b) in &pairs {
            circuit.cry(wires[a], wires[b], next)?;
            next += 1;
        }
    }
    Ok(())
}

/// Parameter count of [`build_qvc`] without building it.
pub fn qvc_param_count(n_qubits: usize, depth: usize, topology: Topology) -> usize {
    let pairs = topology.pairs(n_qubits.max(2)).len();
    depth * (n_qubits + 2 * pairs)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SwapTestKind {
    /// H, controlled swaps, H on an ancilla; returns P(ancilla = 0).
    #[default]
    Ancilla,
    /// Ancilla-free Bell-basis variant; returns P(even AND-parity).
    Destructive,
}

fn check_registers(
    n: usize,
    reg_a: &[usize],
    reg_b: &[usize],
    ancilla: Option<usize>,
) -> Result<()> {
    if reg_a.len() != reg_b.len() || reg_a.is_empty() {
        return Err(Error::RegisterOverlap(format!(
            "register widths differ or are empty: {} vs {}",
            reg_a.len(),
            reg_b.len()
        )));
    }
    let mut all: Vec<usize> = reg_a.iter().chain(reg_b).copied().chain(ancilla).collect();
    if let Some(&q) = all.iter().find(|&&q| q >= n) {
        return Err(Error::WireOutOfRange {
            index: q,
            n_qubits: n,
        });
    }
    all.sort_unstable();
    if all.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::RegisterOverlap(format!(
            "A={reg_a:?} B={reg_b:?} ancilla={ancilla:?}"
        )));
    }
    Ok(())
}

/// Swap test on a joint state; returns P(ancilla = 0).
pub fn swap_test(
    full: &StateVector,
    reg_a: &[usize],
    reg_b: &[usize],
    ancilla: usize,
) -> Result<f64> {
    let n = full.n_qubits();
    check_registers(n, reg_a, reg_b, Some(ancilla))?;
    let mut c = Circuit::new(n, 0);
    c.h(ancilla)?;
    for (&a, &b) in reg_a.iter().zip(reg_b) {
        c.cswap(ancilla, a, b)?;
    }
    c.h(ancilla)?;
    let out = c.run(&[], full)?;
    Ok(1.0 - out.prob_one(ancilla)?)
}

/// Ancilla-free swap test: CNOT(a_i → b_i), H(a_i), then the probability that
/// the number of pairs measuring (1, 1) is even. Equals the ancilla variant's
/// P(0) on every input.
pub fn destructive_swap_test(full: &StateVector, reg_a: &[usize], reg_b: &[usize]) -> Result<f64> {
    let n = full.n_qubits();
    check_registers(n, reg_a, reg_b, None)?;
    let mut c = Circuit::new(n, 0);
    for (&a, &b) in reg_a.iter().zip(reg_b) {
        c.cnot(a, b)?;
        c.h(a)?;
    }
    let out = c.run(&[], full)?;
    let bit = |i: usize, q: usize| (i >> (n - 1 - q)) & 1;
    let p_even = out
        .probabilities()
        .iter()
        .enumerate()
        .filter(|(i, _)| {
            reg_a
                .iter()
                .zip(reg_b)
                .map(|(&a, &b)| bit(*i, a) & bit(*i, b))
                .sum::<usize>()
                % 2
                == 0
        })
        .map(|(_, p)| p)
        .sum::<f64>();
    Ok(p_even.clamp(0.0, 1.0))
}

/// Assembles `|0⟩_anc ⊗ |a⟩ ⊗ |b⟩` (or `|a⟩ ⊗ |b⟩`) and runs the chosen swap test.
pub fn swap_test_states(a: &StateVector, b: &StateVector, kind: SwapTestKind) -> Result<f64> {
    if a.n_qubits() != b.n_qubits() {
        return Err(Error::DimensionMismatch {
            expected: a.n_qubits(),
            actual: b.n_qubits(),
        });
    }
    let w = a.n_qubits();
    match kind {
        SwapTestKind::Ancilla => {
            let full = StateVector::zero(1).tensor(a).tensor(b);
            let ra: Vec<usize> = (1..=w).collect();
            let rb: Vec<usize> = (w + 1..=2 * w).collect();
            swap_test(&full, &ra, &rb, 0)
        }
        SwapTestKind::Destructive => {
            let full = a.tensor(b);
            let ra: Vec<usize> = (0..w).collect();
            let rb: Vec<usize> = (w..2 * w).collect();
            destructive_swap_test(&full, &ra, &rb)
        }
    }
}

/// Runs `circuit` on |0…0⟩, or on the angle-embedded noise when given.
pub fn generator_state(
    circuit: &Circuit,
    params: &[f64],
    noise: Option<&FeatureVector>,
    angle_scale: f64,
) -> Result<StateVector> {
    let n = circuit.n_qubits();
    let initial = match noise {
        None => StateVector::zero(n),
        Some(z) => {
            let mut spec = EmbeddingSpec::angle(n);
            spec.angle_scale = angle_scale;
            angle_embed_product(z, &spec)?.to_state_vector()
        }
    };
    circuit.run(params, &initial)
}

/// Encodes a classical sample into a register state according to `spec`.
pub fn encode_sample(
    spec: &EmbeddingSpec,
    sample: &FeatureVector,
    offsets: Option<&[f64]>,
) -> Result<StateVector> {
    match spec.kind {
        EmbeddingKind::Angle => {
            Ok(angle_embed_with_offsets(sample, spec, offsets)?.to_state_vector())
        }
        EmbeddingKind::Amplitude => Ok(amplitude_embed(sample.values(), spec.n_qubits)?.0),
    }
}

/// Fixed or trainable encoder on register A, generator QVC on register B,
/// swap test as a non-trainable discriminator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IqganModel {
    pub width: usize,
    pub depth: usize,
    pub topology: Topology,
    pub embedding: EmbeddingSpec,
    pub trainable_encoder: bool,
    pub swap_test: SwapTestKind,
    generator: Circuit,
}

impl IqganModel {
    pub fn new(embedding: EmbeddingSpec, depth: usize, topology: Topology) -> Result<Self> {
        let width = embedding.n_qubits;
        Ok(Self {
            width,
            depth,
            topology,
            embedding,
            trainable_encoder: false,
            swap_test: SwapTestKind::Ancilla,
            generator: build_qvc(width, depth, topology)?,
        })
    }

    pub fn with_trainable_encoder(mut self, on: bool) -> Result<Self> {
        if on && self.embedding.kind != EmbeddingKind::Angle {
            return Err(Error::Config(
                "trainable encoder requires angle embedding".into(),
            ));
        }
        self.trainable_encoder = on;
        Ok(self)
    }

    pub fn with_swap_test(mut self, kind: SwapTestKind) -> Self {
        self.swap_test = kind;
        self
    }

    pub fn generator(&self) -> &Circuit {
        &self.generator
    }

    pub fn n_generator_params(&self) -> usize {
        self.generator.n_params()
    }

    /// Generator parameters followed by encoder offsets (when trainable).
    pub fn n_params(&self) -> usize {
        self.generator.n_params()
            + if self.trainable_encoder {
                self.width
            } else {
                0
            }
    }

    pub fn total_qubits(&self) -> usize {
        2 * self.width + usize::from(self.swap_test == SwapTestKind::Ancilla)
    }

    pub fn split_params<'a>(&self, params: &'a [f64]) -> Result<(&'a [f64], Option<&'a [f64]>)> {
        if params.len() != self.n_params() {
            return Err(Error::ParamLength {
                expected: self.n_params(),
                actual: params.len(),
            });
        }
        let (g, e) = params.split_at(self.generator.n_params());
        Ok((g, self.trainable_encoder.then_some(e)))
    }

    pub fn encode(&self, sample: &FeatureVector, offsets: Option<&[f64]>) -> Result<StateVector> {
        if sample.len() > self.embedding.capacity()
            || (self.embedding.kind == EmbeddingKind::Angle && sample.len() != self.width)
        {
            return Err(Error::DimensionMismatch {
                expected: self.embedding.capacity(),
                actual: sample.len(),
            });
        }
        encode_sample(&self.embedding, sample, offsets)
    }

    /// |γ⟩ = G|0…0⟩
    pub fn generator_state(&self, params: &[f64]) -> Result<StateVector> {
        let (g, _) = self.split_params(params)?;
        generator_state(&self.generator, g, None, self.embedding.angle_scale)
    }
}

/// Swap-test P(0) between the encoded sample and the generator output.
pub fn iqgan_forward(model: &IqganModel, params: &[f64], sample: &FeatureVector) -> Result<f64> {
    let (_, offsets) = model.split_params(params)?;
    let x = model.encode(sample, offsets)?;
    let gamma = model.generator_state(params)?;
    swap_test_states(&x, &gamma, model.swap_test)
}

/// Discriminator and generator QVCs of identical shape; real data enters
/// through a fixed angle encoder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuganModel {
    pub width: usize,
    pub depth: usize,
    pub topology: Topology,
    pub embedding: EmbeddingSpec,
    pub swap_test: SwapTestKind,
    discriminator: Circuit,
    generator: Circuit,
}

impl QuganModel {
    pub fn new(embedding: EmbeddingSpec, depth: usize, topology: Topology) -> Result<Self> {
        let width = embedding.n_qubits;
        let qvc = build_qvc(width, depth, topology)?;
        Ok(Self {
            width,
            depth,
            topology,
            embedding,
            swap_test: SwapTestKind::Ancilla,
            discriminator: qvc.clone(),
            generator: qvc,
        })
    }

    /// Model from hand-built circuits, which must share one gate layout.
    pub fn from_circuits(
        discriminator: Circuit,
        generator: Circuit,
        embedding: EmbeddingSpec,
    ) -> Result<Self> {
        let same_shape = discriminator.n_qubits() == generator.n_qubits()
            && discriminator.n_params() == generator.n_params()
            && discriminator.gates().len() == generator.gates().len()
            && discriminator
                .gates()
                .iter()
                .zip(generator.gates())
                .all(|(a, b)| a.kind == b.kind && a.wires == b.wires);
        if !same_shape {
            return Err(Error::Config(
                "discriminator and generator circuits differ in shape".into(),
            ));
        }
        if embedding.n_qubits != generator.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: generator.n_qubits(),
                actual: embedding.n_qubits,
            });
        }
        Ok(Self {
            width: generator.n_qubits(),
            depth: 0,
            topology: Topology::Chain,
            embedding,
            swap_test: SwapTestKind::Ancilla,
            discriminator,
            generator,
        })
    }

    pub fn with_swap_test(mut self, kind: SwapTestKind) -> Self {
        self.swap_test = kind;
        self
    }

    pub fn discriminator(&self) -> &Circuit {
        &self.discriminator
    }

    pub fn generator(&self) -> &Circuit {
        &self.generator
    }

    pub fn encode(&self, sample: &FeatureVector) -> Result<StateVector> {
        encode_sample(&self.embedding, sample, None)
    }

    pub fn generator_state(
        &self,
        params: &[f64],
        noise: Option<&FeatureVector>,
    ) -> Result<StateVector> {
        generator_state(&self.generator, params, noise, self.embedding.angle_scale)
    }

    pub fn reference_state(&self, disc_params: &[f64]) -> Result<StateVector> {
        self.discriminator
            .run(disc_params, &StateVector::zero(self.width))
    }
}

/// Raw discriminator output: swap-test P(0) between the discriminator's
/// reference state D|0…0⟩ and `input`.
pub fn qugan_disc_out(model: &QuganModel, disc_params: &[f64], input: &StateVector) -> Result<f64> {
    if input.n_qubits() != model.width {
        return Err(Error::DimensionMismatch {
            expected: model.width,
            actual: input.n_qubits(),
        });
    }
    let delta = model.reference_state(disc_params)?;
    swap_test_states(&delta, input, model.swap_test)
}

/// Qubit-per-pixel IQGAN with no entangling gates: encoder and generator
/// coincide, so the trainable angles act as a per-pixel look-up table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductIqgan {
    pub width: usize,
    pub height: usize,
    pub angle_scale: f64,
    /// Standard deviation of additive Gaussian angle noise, if any.
    pub noise_std: Option<f64>,
}

impl ProductIqgan {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            angle_scale: std::f64::consts::PI,
            noise_std: None,
        }
    }

    pub fn n_pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn n_params(&self) -> usize {
        self.n_pixels()
    }

    /// ⊗_p RY(θ_p + ε_p)|0⟩
    pub fn state(&self, params: &[f64], noise: Option<&[f64]>) -> Result<ProductState> {
        if params.len() != self.n_pixels() {
            return Err(Error::ParamLength {
                expected: self.n_pixels(),
                actual: params.len(),
            });
        }
        let mut state = ProductState::zero(self.n_pixels());
        for (p, &theta) in params.iter().enumerate() {
            let eps = noise.map_or(0.0, |n| n[p]);
            state = state.apply(&Gate::ry(p, crate::qcore::ParamRef::new(0)), theta + eps)?;
        }
        Ok(state)
    }
}

/// Decoded image of a product-mode generator: P(1) = sin²(θ/2) per pixel,
/// read back through the angle-decoding formula.
pub fn product_iqgan_image(model: &ProductIqgan, params: &[f64]) -> Result<FeatureVector> {
    Ok(angle_decode_product(
        &model.state(params, None)?,
        model.angle_scale,
    ))
}

/// Human-readable architecture record written next to trained parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchitectureDoc {
    pub arch: String,
    pub registers: RegisterDoc,
    pub depth: usize,
    pub topology: Topology,
    pub embedding: Option<EmbeddingSpec>,
    pub swap_test: Option<SwapTestKind>,
    pub trainable_encoder: bool,
    pub n_params: Vec<usize>,
    pub gate_counts: Vec<(GateKind, usize)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegisterDoc {
    pub register_a: Vec<usize>,
    pub register_b: Vec<usize>,
    pub ancilla: Option<usize>,
}

impl RegisterDoc {
    fn two_register(width: usize, kind: SwapTestKind) -> Self {
        let off = usize::from(kind == SwapTestKind::Ancilla);
        Self {
            register_a: (off..off + width).collect(),
            register_b: (off + width..off + 2 * width).collect(),
            ancilla: (off == 1).then_some(0),
        }
    }
}

fn gate_counts(c: &Circuit) -> Vec<(GateKind, usize)> {
    let mut counts: Vec<(GateKind, usize)> = Vec::new();
    for g in c.gates() {
        match counts.iter_mut().find(|(k, _)| *k == g.kind) {
            Some((_, n)) => *n += 1,
            None => counts.push((g.kind, 1)),
        }
    }
    counts
}

impl IqganModel {
    pub fn architecture(&self) -> ArchitectureDoc {
        ArchitectureDoc {
            arch: "iqgan".into(),
            registers: RegisterDoc::two_register(self.width, self.swap_test),
            depth: self.depth,
            topology: self.topology,
            embedding: Some(self.embedding),
            swap_test: Some(self.swap_test),
            trainable_encoder: self.trainable_encoder,
            n_params: vec![self.n_params()],
            gate_counts: gate_counts(&self.generator),
        }
    }
}

impl QuganModel {
    pub fn architecture(&self) -> ArchitectureDoc {
        ArchitectureDoc {
            arch: "qugan".into(),
            registers: RegisterDoc::two_register(self.width, self.swap_test),
            depth: self.depth,
            topology: self.topology,
            embedding: Some(self.embedding),
            swap_test: Some(self.swap_test),
            trainable_encoder: false,
            n_params: vec![self.discriminator.n_params(), self.generator.n_params()],
            gate_counts: gate_counts(&self.generator),
        }
    }
}

impl ProductIqgan {
    pub fn architecture(&self) -> ArchitectureDoc {
        ArchitectureDoc {
            arch: "product".into(),
            registers: RegisterDoc {
                register_a: (0..self.n_pixels()).collect(),
                register_b: Vec::new(),
                ancilla: None,
            },
            depth: 1,
            topology: Topology::Chain,
            embedding: None,
            swap_test: None,
            trainable_encoder: false,
            n_params: vec![self.n_params()],
            gate_counts: vec![(GateKind::Ry, self.n_pixels())],
        }
    }
}
