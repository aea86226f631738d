//! A bias-only classical network against pure and ancilla-assisted quantum
//! generators, all trained to reproduce one random 8×8 image from noise.

use std::path::Path;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::datapipe::{write_pgm, PgmFormat};
use crate::embedding::{angle_embed, EmbeddingSpec, FeatureVector};
use crate::error::{Error, Result};
use crate::models::{build_qvc, Topology};
use crate::qcore::{Circuit, StateVector};
use crate::training::{Optimizer, OptimizerKind};

pub const TOY_SIDE: usize = 8;
pub const TOY_PIXELS: usize = TOY_SIDE * TOY_SIDE;
pub const TOY_VISIBLE: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    #[default]
    Sigmoid,
    Tanh,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Sigmoid => 1.0 / (1.0 + (-x).exp()),
            Activation::Tanh => x.tanh(),
        }
    }

    /// Derivative expressed through the activation's output.
    fn slope_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Sigmoid => y * (1.0 - y),
            Activation::Tanh => 1.0 - y * y,
        }
    }
}

/// Per-channel network with unit weights: `depth` hidden layers
/// `h ← act(h + b)`, then an output bias and a clamp to [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstrainedNet {
    pub width: usize,
    pub depth: usize,
    pub activation: Activation,
    /// `depth` hidden bias rows followed by the output bias row.
    pub biases: Vec<Vec<f64>>,
}

impl ConstrainedNet {
    pub fn new(depth: usize, activation: Activation) -> Self {
        Self {
            width: TOY_PIXELS,
            depth,
            activation,
            biases: vec![vec![0.0; TOY_PIXELS]; depth + 1],
        }
    }

    pub fn n_params(&self) -> usize {
        self.biases.len() * self.width
    }

    fn flat(&self) -> Vec<f64> {
        self.biases.concat()
    }

    fn set_flat(&mut self, p: &[f64]) {
        for (row, chunk) in self.biases.iter_mut().zip(p.chunks(self.width)) {
            row.copy_from_slice(chunk);
        }
    }
}

pub fn net_forward(net: &ConstrainedNet, noise: &[f64]) -> Result<Vec<f64>> {
    if noise.len() != net.width {
        return Err(Error::DimensionMismatch {
            expected: net.width,
            actual: noise.len(),
        });
    }
    Ok((0..net.width)
        .map(|c| {
            let mut h = noise[c];
            for layer in &net.biases[..net.depth] {
                h = net.activation.apply(h + layer[c]);
            }
            (h + net.biases[net.depth][c]).clamp(0.0, 1.0)
        })
        .collect())
}

/// MSE against `target` and its exact gradient in flattened bias order.
pub fn net_loss_and_grad(
    net: &ConstrainedNet,
    noise: &[f64],
    target: &[f64],
) -> Result<(f64, Vec<f64>)> {
    if noise.len() != net.width || target.len() != net.width {
        return Err(Error::DimensionMismatch {
            expected: net.width,
            actual: noise.len().min(target.len()),
        });
    }
    let w = net.width;
    let mut grad = vec![0.0; net.n_params()];
    let mut loss = 0.0;
    for c in 0..w {
        let mut outs = Vec::with_capacity(net.depth);
        let mut h = noise[c];
        for layer in &net.biases[..net.depth] {
            h = net.activation.apply(h + layer[c]);
            outs.push(h);
        }
        let pre = h + net.biases[net.depth][c];
        let y = pre.clamp(0.0, 1.0);
        let err = y - target[c];
        loss += err * err;
        let mut up = if (0.0..=1.0).contains(&pre) {
            2.0 * err / w as f64
        } else {
            0.0
        };
        grad[net.depth * w + c] = up;
        for l in (0..net.depth).rev() {
            up *= net.activation.slope_from_output(outs[l]);
            grad[l * w + c] = up;
        }
    }
    Ok((loss / w as f64, grad))
}

/// Uniform [0, 1] target and its unit-sum copy.
pub fn toy_target(seed: u64) -> (Vec<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw: Vec<f64> = (0..TOY_PIXELS).map(|_| rng.gen::<f64>()).collect();
    let sum: f64 = raw.iter().sum();
    let normalized = raw.iter().map(|v| v / sum).collect();
    (raw, normalized)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub net_depth: usize,
    pub activation: Activation,
    pub qvc_layers: usize,
    pub ancillas: usize,
    /// Noise draws averaged per update.
    pub noise_per_epoch: usize,
    /// Noise draws used for the final MSE and variability figures.
    pub eval_samples: usize,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            learning_rate: 0.01,
            optimizer: OptimizerKind::default(),
            net_depth: 1,
            activation: Activation::Sigmoid,
            qvc_layers: 4,
            ancillas: 6,
            noise_per_epoch: 1,
            eval_samples: 20,
        }
    }
}

fn uniform_noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen::<f64>()).collect()
}

/// Trains biases by gradient descent on MSE with fresh noise every epoch;
/// returns the per-epoch MSE.
pub fn train_net(
    net: &mut ConstrainedNet,
    target: &[f64],
    cfg: &ToyConfig,
    seed: u64,
) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params = net.flat();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, params.len());
    let mut trace = Vec::with_capacity(cfg.epochs);
    for _ in 0..cfg.epochs {
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for _ in 0..cfg.noise_per_epoch.max(1) {
            let z = uniform_noise(&mut rng, net.width);
            let (l, g) = net_loss_and_grad(net, &z, target)?;
            loss += l;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        let k = cfg.noise_per_epoch.max(1) as f64;
        grad.iter_mut().for_each(|g| *g /= k);
        trace.push(loss / k);
        opt.step(&mut params, &grad);
        net.set_flat(&params);
    }
    Ok(trace)
}

/// QVC over 6 visible qubits (leading wires) plus optional ancillas.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyQuantumGen {
    pub n_visible: usize,
    pub n_ancilla: usize,
    pub layers: usize,
    circuit: Circuit,
}

impl ToyQuantumGen {
    pub fn new(n_ancilla: usize, layers: usize) -> Result<Self> {
        let n = TOY_VISIBLE + n_ancilla;
        Ok(Self {
            n_visible: TOY_VISIBLE,
            n_ancilla,
            layers,
            circuit: build_qvc(n, layers, Topology::Chain)?,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_visible + self.n_ancilla
    }

    pub fn n_params(&self) -> usize {
        self.circuit.n_params()
    }

    pub fn circuit(&self) -> &Circuit {
        &self.circuit
    }

    fn input(&self, noise: &FeatureVector) -> Result<StateVector> {
        if noise.len() != self.n_qubits() {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits(),
                actual: noise.len(),
            });
        }
        angle_embed(noise, &EmbeddingSpec::angle(self.n_qubits()))
    }

    /// Outcome distribution of the visible register for one output state.
    fn readout(&self, state: &StateVector) -> Vec<f64> {
        let mut img = vec![0.0; 1 << self.n_visible];
        for (i, a) in state.amplitudes().iter().enumerate() {
            img[i >> self.n_ancilla] += a.norm_sqr();
        }
        img
    }
}

/// Visible-register outcome probabilities after angle-embedding `noise` and
/// running the QVC. With ancillas this is the diagonal of the reduced state.
pub fn toy_quantum_image(
    gen: &ToyQuantumGen,
    params: &[f64],
    noise: &FeatureVector,
) -> Result<Vec<f64>> {
    let out = gen.circuit.run(params, &gen.input(noise)?)?;
    Ok(gen.readout(&out))
}

/// MSE between the generated distribution and the unit-sum target, with its
/// reverse-mode gradient.
pub fn quantum_loss_and_grad(
    gen: &ToyQuantumGen,
    params: &[f64],
    noise: &FeatureVector,
    target_normalized: &[f64],
) -> Result<(f64, Vec<f64>)> {
    let input = gen.input(noise)?;
    let m = target_normalized.len() as f64;
    gen.circuit.adjoint_gradient(params, &input, |state| {
        let img = gen.readout(state);
        let diff: Vec<f64> = img
            .iter()
            .zip(target_normalized)
            .map(|(a, b)| a - b)
            .collect();
        let loss = diff.iter().map(|d| d * d).sum::<f64>() / m;
        let costate = state
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| a * (2.0 * diff[i >> gen.n_ancilla] / m))
            .collect::<Vec<C64>>();
        (loss, costate)
    })
}

pub fn train_quantum(
    gen: &ToyQuantumGen,
    target_normalized: &[f64],
    cfg: &ToyConfig,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut params: Vec<f64> = (0..gen.n_params())
        .map(|_| rng.gen_range(-0.1..=0.1))
        .collect();
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, params.len());
    let mut trace = Vec::with_capacity(cfg.epochs);
    let k = cfg.noise_per_epoch.max(1);
    for _ in 0..cfg.epochs {
        let mut loss = 0.0;
        let mut grad = vec![0.0; params.len()];
        for _ in 0..k {
            let z = FeatureVector::clamped(uniform_noise(&mut rng, gen.n_qubits()));
            let (l, g) = quantum_loss_and_grad(gen, &params, &z, target_normalized)?;
            loss += l;
            grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
        }
        grad.iter_mut().for_each(|g| *g /= k as f64);
        trace.push(loss / k as f64);
        opt.step(&mut params, &grad);
    }
    Ok((params, trace))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub name: String,
    pub n_params: usize,
    /// MSE against the raw target, quantum outputs rescaled by the target sum.
    pub mse: f64,
    /// MSE against the unit-sum target, classical outputs divided by the target sum.
    pub mse_normalized: f64,
    /// Mean over pixels of the population std across evaluation noise draws (raw scale).
    pub output_std: f64,
    /// Generated image on the first evaluation noise draw (raw scale).
    pub image: Vec<f64>,
    /// Outputs on five further noise draws (raw scale).
    pub samples: Vec<Vec<f64>>,
    pub mse_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyReport {
    pub seed: u64,
    pub config: ToyConfig,
    pub target: Vec<f64>,
    pub classical: ModelResult,
    pub pure: ModelResult,
    pub ancilla: ModelResult,
}

fn summarize(
    name: &str,
    n_params: usize,
    outputs: Vec<Vec<f64>>,
    samples: Vec<Vec<f64>>,
    raw: &[f64],
    mse_trace: Vec<f64>,
) -> ModelResult {
    let sum: f64 = raw.iter().sum();
    let m = raw.len() as f64;
    let n = outputs.len() as f64;
    let mse = outputs
        .iter()
        .map(|o| o.iter().zip(raw).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / m)
        .sum::<f64>()
        / n;
    let mse_normalized = mse / (sum * sum);
    let output_std = (0..raw.len())
        .map(|p| {
            let mean = outputs.iter().map(|o| o[p]).sum::<f64>() / n;
            (outputs.iter().map(|o| (o[p] - mean).powi(2)).sum::<f64>() / n).sqrt()
        })
        .sum::<f64>()
        / m;
    ModelResult {
        name: name.into(),
        n_params,
        mse,
        mse_normalized,
        output_std,
        image: outputs[0].clone(),
        samples,
        mse_trace,
    }
}

fn quantum_result(
    name: &str,
    gen: &ToyQuantumGen,
    raw: &[f64],
    normalized: &[f64],
    cfg: &ToyConfig,
    seed: u64,
) -> Result<ModelResult> {
    let (params, trace) = train_quantum(gen, normalized, cfg, seed)?;
    let sum: f64 = raw.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xE7A1);
    let mut draw = || -> Result<Vec<f64>> {
        let z = FeatureVector::clamped(uniform_noise(&mut rng, gen.n_qubits()));
        Ok(toy_quantum_image(gen, &params, &z)?
            .into_iter()
            .map(|p| p * sum)
            .collect())
    };
    let outputs = (0..cfg.eval_samples.max(1))
        .map(|_| draw())
        .collect::<Result<Vec<_>>>()?;
    let samples = (0..5).map(|_| draw()).collect::<Result<Vec<_>>>()?;
    Ok(summarize(
        name,
        gen.n_params(),
        outputs,
        samples,
        raw,
        trace,
    ))
}

/// Trains the classical net, the pure 6-qubit QVC and the ancilla QVC on the
/// same seeded target.
pub fn run_comparison(seed: u64, cfg: &ToyConfig) -> Result<ToyReport> {
    if cfg.epochs == 0 || cfg.qvc_layers == 0 || !(cfg.learning_rate > 0.0) {
        return Err(Error::Config(
            "toy comparison needs epochs, layers and learning_rate > 0".into(),
        ));
    }
    let (raw, normalized) = toy_target(seed);
    let pure = ToyQuantumGen::new(0, cfg.qvc_layers)?;
    let mixed = ToyQuantumGen::new(cfg.ancillas, cfg.qvc_layers)?;

    let classical = || -> Result<ModelResult> {
        let mut net = ConstrainedNet::new(cfg.net_depth, cfg.activation);
        let trace = train_net(&mut net, &raw, cfg, seed.wrapping_add(1))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xE7A1);
        let outputs = (0..cfg.eval_samples.max(1))
            .map(|_| net_forward(&net, &uniform_noise(&mut rng, TOY_PIXELS)))
            .collect::<Result<Vec<_>>>()?;
        let samples = (0..5)
            .map(|_| net_forward(&net, &uniform_noise(&mut rng, TOY_PIXELS)))
            .collect::<Result<Vec<_>>>()?;
        Ok(summarize(
            "classical",
            net.n_params(),
            outputs,
            samples,
            &raw,
            trace,
        ))
    };
    let (c, (p, a)) = rayon::join(classical, || {
        rayon::join(
            || quantum_result("pure", &pure, &raw, &normalized, cfg, seed.wrapping_add(2)),
            || {
                quantum_result(
                    "ancilla",
                    &mixed,
                    &raw,
                    &normalized,
                    cfg,
                    seed.wrapping_add(3),
                )
            },
        )
    });
    Ok(ToyReport {
        seed,
        config: cfg.clone(),
        target: raw,
        classical: c?,
        pure: p?,
        ancilla: a?,
    })
}

impl ToyReport {
    /// Writes report.json, PGM images and per-model MSE traces into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let json = serde_json::to_string_pretty(self)?;
        let path = dir.join("report.json");
        std::fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
        let pgm = |name: String, px: &[f64]| {
            write_pgm(&dir.join(name), TOY_SIDE, TOY_SIDE, px, PgmFormat::Binary)
        };
        pgm("target.pgm".into(), &self.target)?;
        for m in [&self.classical, &self.pure, &self.ancilla] {
            pgm(format!("{}.pgm", m.name), &m.image)?;
            for (i, s) in m.samples.iter().enumerate() {
                pgm(format!("{}_sample{i}.pgm", m.name), s)?;
            }
            let mut csv = String::from("epoch,mse\n");
            for (e, v) in m.mse_trace.iter().enumerate() {
                csv.push_str(&format!("{e},{v}\n"));
            }
            let path = dir.join(format!("{}_mse.csv", m.name));
            std::fs::write(&path, csv).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}
