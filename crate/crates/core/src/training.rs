//! Losses, parameter-shift gradients, optimizers and the training loops for
//! the IQGAN, QuGAN and product-mode models.

use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::FeatureVector;
use crate::error::{Error, Result};
use crate::models::{swap_test_states, IqganModel, ProductIqgan, QuganModel};
use crate::qcore::{Circuit, Shift, StateVector, PARAMETER_SHIFT};

/// Floor applied inside every logarithm.
pub const LOG_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum OptimizerKind {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for OptimizerKind {
    fn default() -> Self {
        OptimizerKind::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum NoiseKind {
    #[default]
    None,
    Uniform01,
    Gaussian {
        sigma: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeneratorLoss {
    /// −mean log D(G(z))
    #[default]
    NonSaturating,
    /// mean log(1 − D(G(z)))
    Saturating,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiscOutput {
    /// D' = 2·P(0) − 1, which spans [0, 1].
    #[default]
    Rescaled,
    /// Swap-test P(0) as is, confined to [½, 1].
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub log_every_batches: usize,
    pub noise: NoiseKind,
    /// Half-width of the uniform parameter initialization; 0 starts at all zeros.
    pub init_scale: f64,
    pub generator_loss: GeneratorLoss,
    pub disc_output: DiscOutput,
    pub disc_steps: usize,
    pub gen_steps: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            batch_size: 8,
            learning_rate: 0.01,
            optimizer: OptimizerKind::default(),
            seed: 0,
            log_every_batches: 40,
            noise: NoiseKind::None,
            init_scale: 0.1,
            generator_loss: GeneratorLoss::default(),
            disc_output: DiscOutput::default(),
            disc_steps: 1,
            gen_steps: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.epochs == 0 {
            return bad("epochs must be at least 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1");
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad("learning_rate must be positive");
        }
        if self.log_every_batches == 0 {
            return bad("log_every_batches must be at least 1");
        }
        if !(self.init_scale >= 0.0 && self.init_scale.is_finite()) {
            return bad("init_scale must be non-negative");
        }
        if self.disc_steps == 0 || self.gen_steps == 0 {
            return bad("disc_steps and gen_steps must be at least 1");
        }
        if let NoiseKind::Gaussian { sigma } = self.noise {
            if !(sigma >= 0.0 && sigma.is_finite()) {
                return bad("gaussian sigma must be non-negative");
            }
        }
        if let OptimizerKind::Adam { beta1, beta2, eps } = self.optimizer {
            if !(0.0..1.0).contains(&beta1) || !(0.0..1.0).contains(&beta2) || eps <= 0.0 {
                return bad("adam needs beta1, beta2 in [0, 1) and eps > 0");
            }
        }
        Ok(())
    }
}

/// First-order optimizer; `step` always descends.
#[derive(Debug, Clone)]
pub struct Optimizer {
    kind: OptimizerKind,
    lr: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Optimizer {
    pub fn new(kind: OptimizerKind, lr: f64, n_params: usize) -> Self {
        Self {
            kind,
            lr,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, g) in params.iter_mut().zip(grad) {
                    *p -= self.lr * g;
                }
            }
            OptimizerKind::Adam { beta1, beta2, eps } => {
                self.t += 1;
                let c1 = 1.0 - beta1.powi(self.t);
                let c2 = 1.0 - beta2.powi(self.t);
                for i in 0..params.len() {
                    self.m[i] = beta1 * self.m[i] + (1.0 - beta1) * grad[i];
                    self.v[i] = beta2 * self.v[i] + (1.0 - beta2) * grad[i] * grad[i];
                    let m_hat = self.m[i] / c1;
                    let v_hat = self.v[i] / c2;
                    params[i] -= self.lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub batch: usize,
    pub loss_d: Option<f64>,
    pub loss_g: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTrace {
    rows: Vec<TraceRow>,
}

impl LossTrace {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a row; batch indices must strictly increase.
    pub fn push(&mut self, row: TraceRow) -> Result<()> {
        if let Some(last) = self.rows.last() {
            if row.batch <= last.batch {
                return Err(Error::Config(format!(
                    "trace batch {} does not follow {}",
                    row.batch, last.batch
                )));
            }
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn rows(&self) -> &[TraceRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("batch,loss_d,loss_g\n");
        for r in &self.rows {
            let d = r.loss_d.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{},{},{}", r.batch, d, r.loss_g);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let parse_err = |line: usize, detail: String| Error::Parse {
            path: "<trace>".into(),
            line,
            detail,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == "batch,loss_d,loss_g" => {}
            _ => return Err(parse_err(1, "missing header batch,loss_d,loss_g".into())),
        }
        let mut trace = LossTrace::new();
        for (i, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 3 {
                return Err(parse_err(
                    i + 1,
                    format!("expected 3 fields, got {}", f.len()),
                ));
            }
            let num = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| parse_err(i + 1, e.to_string()))
            };
            let batch = f[0]
                .trim()
                .parse::<usize>()
                .map_err(|e| parse_err(i + 1, e.to_string()))?;
            let loss_d = if f[1].trim().is_empty() {
                None
            } else {
                Some(num(f[1])?)
            };
            trace.push(TraceRow {
                batch,
                loss_d,
                loss_g: num(f[2])?,
            })?;
        }
        Ok(trace)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// mean log D(x) + mean log(1 − D(G(z))), with both arguments clamped at [`LOG_CLAMP`].
pub fn gan_value(d_real: &[f64], d_fake: &[f64]) -> Result<f64> {
    if d_real.is_empty() || d_fake.is_empty() {
        return Err(Error::Empty("discriminator outputs"));
    }
    if let Some(&p) = d_real
        .iter()
        .chain(d_fake)
        .find(|p| !(-1e-12..=1.0 + 1e-12).contains(*p))
    {
        return Err(Error::BadProbabilities(p));
    }
    let real = d_real.iter().map(|&p| p.max(LOG_CLAMP).ln()).sum::<f64>() / d_real.len() as f64;
    let fake = d_fake
        .iter()
        .map(|&p| (1.0 - p).max(LOG_CLAMP).ln())
        .sum::<f64>()
        / d_fake.len() as f64;
    Ok(real + fake)
}

/// Parameter-shift gradient of a loss that is affine in expectation values
/// of the circuit output.
///
/// `loss_at(shift)` evaluates the loss with one gate's angle offset by
/// `shift.delta`, or unshifted for `None`. Each parametric gate contributes
/// `scale · ½[L(+π/2) − L(−π/2)]` to its parameter.
pub fn parameter_shift_grad<F>(circuit: &Circuit, loss_at: F) -> Result<Vec<f64>>
where
    F: Fn(Option<Shift>) -> Result<f64> + Sync,
{
    let gates: Vec<_> = circuit.parametric_gates().collect();
    let diffs: Vec<Result<f64>> = gates
        .par_iter()
        .map(|&(gate, _)| {
            let plus = loss_at(Some(Shift {
                gate,
                delta: PARAMETER_SHIFT,
            }))?;
            let minus = loss_at(Some(Shift {
                gate,
                delta: -PARAMETER_SHIFT,
            }))?;
            Ok(0.5 * (plus - minus))
        })
        .collect();
    let mut grad = vec![0.0; circuit.n_params()];
    for ((_, pref), d) in gates.iter().zip(diffs) {
        grad[pref.index] += pref.scale * d?;
    }
    Ok(grad)
}

/// Chain-rule variant for losses that are nonlinear in a vector of
/// expectation values `e(θ)`: returns Σ_k outer[k] · ∂e_k/∂θ.
pub fn parameter_shift_chain<F>(
    circuit: &Circuit,
    outer: &[f64],
    expectations_at: F,
) -> Result<Vec<f64>>
where
    F: Fn(Option<Shift>) -> Result<Vec<f64>> + Sync,
{
    parameter_shift_grad(circuit, |shift| {
        let e = expectations_at(shift)?;
        if e.len() != outer.len() {
            return Err(Error::DimensionMismatch {
                expected: outer.len(),
                actual: e.len(),
            });
        }
        Ok(e.iter().zip(outer).map(|(a, b)| a * b).sum())
    })
}

fn init_params(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> Vec<f64> {
    (0..n)
        .map(|_| {
            if scale > 0.0 {
                rng.gen_range(-scale..=scale)
            } else {
                0.0
            }
        })
        .collect()
}

fn epoch_batches(rng: &mut ChaCha8Rng, n: usize, batch_size: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    order.chunks(batch_size).map(<[usize]>::to_vec).collect()
}

fn sample_noise(rng: &mut ChaCha8Rng, kind: NoiseKind, len: usize) -> Option<Vec<f64>> {
    match kind {
        NoiseKind::None => None,
        NoiseKind::Uniform01 => Some((0..len).map(|_| rng.gen::<f64>()).collect()),
        NoiseKind::Gaussian { sigma } => {
            let normal = Normal::new(0.0, sigma).expect("sigma validated");
            Some((0..len).map(|_| normal.sample(rng)).collect())
        }
    }
}

/// Parameters of a run plus the snapshots taken at each logged row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    pub trace: LossTrace,
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

fn iqgan_states(
    model: &IqganModel,
    data: &[FeatureVector],
    offsets: Option<&[f64]>,
) -> Result<Vec<StateVector>> {
    data.iter().map(|f| model.encode(f, offsets)).collect()
}

/// mean over `batch` of 1 − swap-test P(0).
fn iqgan_loss(model: &IqganModel, encoded: &[&StateVector], gamma: &StateVector) -> Result<f64> {
    let mut total = 0.0;
    for x in encoded {
        total += 1.0 - swap_test_states(x, gamma, model.swap_test)?;
    }
    Ok(total / encoded.len() as f64)
}

/// Trains the generator (and trainable encoder offsets, if enabled) to
/// minimize mean(1 − swap-test P(0)) over each batch.
pub fn train_iqgan(
    model: &IqganModel,
    data: &[FeatureVector],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    if cfg.noise != NoiseKind::None {
        return Err(Error::Config(
            "the IQGAN generator takes no input noise".into(),
        ));
    }
    for f in data {
        model.encode(f, None)?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init_params(&mut rng, model.n_params(), cfg.init_scale);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, params.len());
    let n_gen = model.n_generator_params();
    let circuit = model.generator();
    let zero = StateVector::zero(model.width);

    let fixed = if model.trainable_encoder {
        None
    } else {
        Some(iqgan_states(model, data, None)?)
    };

    let loss_on = |params: &[f64], batch: &[usize]| -> Result<f64> {
        let gamma = circuit.run(&params[..n_gen], &zero)?;
        let owned;
        let encoded: Vec<&StateVector> = match &fixed {
            Some(all) => batch.iter().map(|&i| &all[i]).collect(),
            None => {
                owned = batch
                    .iter()
                    .map(|&i| model.encode(&data[i], Some(&params[n_gen..])))
                    .collect::<Result<Vec<_>>>()?;
                owned.iter().collect()
            }
        };
        iqgan_loss(model, &encoded, &gamma)
    };

    let mut trace = LossTrace::new();
    let mut snapshots = Vec::new();
    let mut global = 0;
    for epoch in 0..cfg.epochs {
        for batch in epoch_batches(&mut rng, data.len(), cfg.batch_size) {
            if epoch == 0 && global == 0 {
                trace.push(TraceRow {
                    batch: 0,
                    loss_d: None,
                    loss_g: loss_on(&params, &batch)?,
                })?;
                snapshots.push((0, params.clone()));
            }
            let grad = iqgan_gradient(model, data, fixed.as_deref(), &params, &batch)?;
            opt.step(&mut params, &grad);
            global += 1;
            if global % cfg.log_every_batches == 0 {
                trace.push(TraceRow {
                    batch: global,
                    loss_d: None,
                    loss_g: loss_on(&params, &batch)?,
                })?;
                snapshots.push((global, params.clone()));
            }
        }
        log::debug!("iqgan epoch {epoch} done, {global} batches");
    }
    Ok(TrainOutcome {
        params,
        trace,
        snapshots,
    })
}

fn iqgan_gradient(
    model: &IqganModel,
    data: &[FeatureVector],
    fixed: Option<&[StateVector]>,
    params: &[f64],
    batch: &[usize],
) -> Result<Vec<f64>> {
    let n_gen = model.n_generator_params();
    let circuit = model.generator();
    let zero = StateVector::zero(model.width);
    let encoded_owned;
    let encoded: Vec<&StateVector> = match fixed {
        Some(all) => batch.iter().map(|&i| &all[i]).collect(),
        None => {
            encoded_owned = batch
                .iter()
                .map(|&i| model.encode(&data[i], Some(&params[n_gen..])))
                .collect::<Result<Vec<_>>>()?;
            encoded_owned.iter().collect()
        }
    };
    let mut grad = parameter_shift_grad(circuit, |shift| {
        let gamma = circuit.run_shifted(&params[..n_gen], &zero, shift)?;
        iqgan_loss(model, &encoded, &gamma)
    })?;
    if model.trainable_encoder {
        let gamma = circuit.run(&params[..n_gen], &zero)?;
        let offsets = &params[n_gen..];
        let enc_grad: Vec<Result<f64>> = (0..model.width)
            .into_par_iter()
            .map(|j| {
                let shifted = |delta: f64| -> Result<f64> {
                    let mut o = offsets.to_vec();
                    o[j] += delta;
                    let xs = batch
                        .iter()
                        .map(|&i| model.encode(&data[i], Some(&o)))
                        .collect::<Result<Vec<_>>>()?;
                    iqgan_loss(model, &xs.iter().collect::<Vec<_>>(), &gamma)
                };
                Ok(0.5 * (shifted(PARAMETER_SHIFT)? - shifted(-PARAMETER_SHIFT)?))
            })
            .collect();
        for g in enc_grad {
            grad.push(g?);
        }
    }
    Ok(grad)
}

/// Outcome of adversarial training.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuganOutcome {
    pub disc_params: Vec<f64>,
    pub gen_params: Vec<f64>,
    pub trace: LossTrace,
    /// Generator parameters at each logged row.
    pub snapshots: Vec<(usize, Vec<f64>)>,
}

fn disc_prob(p0: f64, mode: DiscOutput) -> f64 {
    match mode {
        DiscOutput::Rescaled => (2.0 * p0 - 1.0).clamp(0.0, 1.0),
        DiscOutput::Raw => p0.clamp(0.0, 1.0),
    }
}

fn disc_outputs(
    model: &QuganModel,
    delta: &StateVector,
    inputs: &[&StateVector],
    mode: DiscOutput,
) -> Result<Vec<f64>> {
    inputs
        .iter()
        .map(|x| {
            Ok(disc_prob(
                swap_test_states(delta, x, model.swap_test)?,
                mode,
            ))
        })
        .collect()
}

fn generator_loss_value(d_fake: &[f64], kind: GeneratorLoss) -> f64 {
    let n = d_fake.len() as f64;
    match kind {
        GeneratorLoss::NonSaturating => {
            -d_fake.iter().map(|&p| p.max(LOG_CLAMP).ln()).sum::<f64>() / n
        }
        GeneratorLoss::Saturating => {
            d_fake
                .iter()
                .map(|&p| (1.0 - p).max(LOG_CLAMP).ln())
                .sum::<f64>()
                / n
        }
    }
}

/// ∂(generator loss)/∂d_fake_j, with the clamp's zero derivative respected.
fn generator_loss_outer(d_fake: &[f64], kind: GeneratorLoss) -> Vec<f64> {
    let n = d_fake.len() as f64;
    d_fake
        .iter()
        .map(|&p| match kind {
            GeneratorLoss::NonSaturating if p > LOG_CLAMP => -1.0 / (p * n),
            GeneratorLoss::Saturating if 1.0 - p > LOG_CLAMP => -1.0 / ((1.0 - p) * n),
            _ => 0.0,
        })
        .collect()
}

/// ∂(−gan_value)/∂d for the real and fake halves.
fn disc_loss_outer(d_real: &[f64], d_fake: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let nr = d_real.len() as f64;
    let nf = d_fake.len() as f64;
    let real = d_real
        .iter()
        .map(|&p| if p > LOG_CLAMP { -1.0 / (p * nr) } else { 0.0 })
        .collect();
    let fake = d_fake
        .iter()
        .map(|&p| {
            if 1.0 - p > LOG_CLAMP {
                1.0 / ((1.0 - p) * nf)
            } else {
                0.0
            }
        })
        .collect();
    (real, fake)
}

/// Chain factor from P(0) to the discriminator probability.
fn disc_scale(mode: DiscOutput) -> f64 {
    match mode {
        DiscOutput::Rescaled => 2.0,
        DiscOutput::Raw => 1.0,
    }
}

/// Alternating adversarial training: per batch, `disc_steps` ascents of the
/// GAN value in the discriminator parameters, then `gen_steps` descents of
/// the generator loss. Trace rows carry (GAN value, generator loss).
pub fn train_qugan(
    model: &QuganModel,
    data: &[FeatureVector],
    cfg: &TrainConfig,
) -> Result<QuganOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let real_states: Vec<StateVector> = data
        .iter()
        .map(|f| model.encode(f))
        .collect::<Result<_>>()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dc = model.discriminator();
    let gc = model.generator();
    let mut disc = init_params(&mut rng, dc.n_params(), cfg.init_scale);
    let mut gen = init_params(&mut rng, gc.n_params(), cfg.init_scale);
    let mut opt_d = Optimizer::new(cfg.optimizer, cfg.learning_rate, disc.len());
    let mut opt_g = Optimizer::new(cfg.optimizer, cfg.learning_rate, gen.len());
    let zero = StateVector::zero(model.width);
    let mode = cfg.disc_output;

    let mut trace = LossTrace::new();
    let mut snapshots = Vec::new();
    let mut global = 0;
    for _ in 0..cfg.epochs {
        for batch in epoch_batches(&mut rng, data.len(), cfg.batch_size) {
            let real: Vec<&StateVector> = batch.iter().map(|&i| &real_states[i]).collect();
            let noise: Vec<Option<FeatureVector>> = (0..batch.len())
                .map(|_| {
                    sample_noise(&mut rng, cfg.noise, model.width).map(|z| match cfg.noise {
                        // Gaussian noise is centred in the embedding range.
                        NoiseKind::Gaussian { .. } => {
                            FeatureVector::clamped(z.iter().map(|v| 0.5 + v).collect())
                        }
                        _ => FeatureVector::clamped(z),
                    })
                })
                .collect();
            let inputs: Vec<StateVector> = noise
                .iter()
                .map(|z| match z {
                    Some(z) => model.encode(z),
                    None => Ok(zero.clone()),
                })
                .collect::<Result<_>>()?;

            let losses = |disc: &[f64], gen: &[f64]| -> Result<(f64, f64)> {
                let delta = dc.run(disc, &zero)?;
                let fakes: Vec<StateVector> = inputs
                    .iter()
                    .map(|s| gc.run(gen, s))
                    .collect::<Result<_>>()?;
                let d_real = disc_outputs(model, &delta, &real, mode)?;
                let d_fake = disc_outputs(model, &delta, &fakes.iter().collect::<Vec<_>>(), mode)?;
                Ok((
                    gan_value(&d_real, &d_fake)?,
                    generator_loss_value(&d_fake, cfg.generator_loss),
                ))
            };
            if global == 0 {
                let (ld, lg) = losses(&disc, &gen)?;
                trace.push(TraceRow {
                    batch: 0,
                    loss_d: Some(ld),
                    loss_g: lg,
                })?;
                snapshots.push((0, gen.clone()));
            }

            let fakes: Vec<StateVector> = inputs
                .iter()
                .map(|s| gc.run(&gen, s))
                .collect::<Result<_>>()?;
            let fake_refs: Vec<&StateVector> = fakes.iter().collect();
            for _ in 0..cfg.disc_steps {
                let delta = dc.run(&disc, &zero)?;
                let d_real = disc_outputs(model, &delta, &real, mode)?;
                let d_fake = disc_outputs(model, &delta, &fake_refs, mode)?;
                let (or, of) = disc_loss_outer(&d_real, &d_fake);
                let outer: Vec<f64> = or.iter().chain(&of).map(|v| v * disc_scale(mode)).collect();
                let grad = parameter_shift_chain(dc, &outer, |shift| {
                    let delta = dc.run_shifted(&disc, &zero, shift)?;
                    real.iter()
                        .chain(&fake_refs)
                        .map(|x| swap_test_states(&delta, x, model.swap_test))
                        .collect()
                })?;
                opt_d.step(&mut disc, &grad);
            }
            let delta = dc.run(&disc, &zero)?;
            for _ in 0..cfg.gen_steps {
                let fakes: Vec<StateVector> = inputs
                    .iter()
                    .map(|s| gc.run(&gen, s))
                    .collect::<Result<_>>()?;
                let d_fake = disc_outputs(model, &delta, &fakes.iter().collect::<Vec<_>>(), mode)?;
                let outer: Vec<f64> = generator_loss_outer(&d_fake, cfg.generator_loss)
                    .into_iter()
                    .map(|v| v * disc_scale(mode))
                    .collect();
                let grad = parameter_shift_chain(gc, &outer, |shift| {
                    inputs
                        .iter()
                        .map(|s| {
                            swap_test_states(
                                &delta,
                                &gc.run_shifted(&gen, s, shift)?,
                                model.swap_test,
                            )
                        })
                        .collect()
                })?;
                opt_g.step(&mut gen, &grad);
            }
            global += 1;
            if global % cfg.log_every_batches == 0 {
                let (ld, lg) = losses(&disc, &gen)?;
                trace.push(TraceRow {
                    batch: global,
                    loss_d: Some(ld),
                    loss_g: lg,
                })?;
                snapshots.push((global, gen.clone()));
            }
        }
    }
    Ok(QuganOutcome {
        disc_params: disc,
        gen_params: gen,
        trace,
        snapshots,
    })
}

/// Per-pixel fidelity between RY(θ)|0⟩ and RY(πx)|0⟩ in a product model.
fn product_fidelity(model: &ProductIqgan, theta: f64, x: f64) -> f64 {
    let half = 0.5 * (theta - model.angle_scale * x);
    half.cos().powi(2)
}

/// Trains one angle per pixel to maximize the mean single-qubit fidelity
/// against the data; the loss is 1 − mean fidelity over pixels and samples.
pub fn train_product(
    model: &ProductIqgan,
    data: &[FeatureVector],
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    if data.is_empty() {
        return Err(Error::Empty("training data"));
    }
    let n = model.n_pixels();
    if let Some(f) = data.iter().find(|f| f.len() != n) {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: f.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut params = init_params(&mut rng, n, cfg.init_scale);
    let mut opt = Optimizer::new(cfg.optimizer, cfg.learning_rate, n);
    let noise_kind = match (cfg.noise, model.noise_std) {
        (NoiseKind::None, Some(sigma)) => NoiseKind::Gaussian { sigma },
        (k, _) => k,
    };

    // The loss is linear in each pixel's fidelity, so the shift rule is exact.
    let evaluate =
        |params: &[f64], batch: &[usize], noise: &[Option<Vec<f64>>]| -> (f64, Vec<f64>) {
            let mut loss = 0.0;
            let mut grad = vec![0.0; n];
            for (b, &i) in batch.iter().enumerate() {
                let x = data[i].values();
                for p in 0..n {
                    let theta = params[p] + noise[b].as_ref().map_or(0.0, |e| e[p]);
                    loss += 1.0 - product_fidelity(model, theta, x[p]);
                    let plus = 1.0 - product_fidelity(model, theta + PARAMETER_SHIFT, x[p]);
                    let minus = 1.0 - product_fidelity(model, theta - PARAMETER_SHIFT, x[p]);
                    grad[p] += 0.5 * (plus - minus);
                }
            }
            let norm = (batch.len() * n) as f64;
            grad.iter_mut().for_each(|g| *g /= norm);
            (loss / norm, grad)
        };

    let mut trace = LossTrace::new();
    let mut snapshots = Vec::new();
    let mut global = 0;
    for _ in 0..cfg.epochs {
        for batch in epoch_batches(&mut rng, data.len(), cfg.batch_size) {
            let noise: Vec<Option<Vec<f64>>> = batch
                .iter()
                .map(|_| sample_noise(&mut rng, noise_kind, n))
                .collect();
            let (loss, grad) = evaluate(&params, &batch, &noise);
            if global == 0 {
                trace.push(TraceRow {
                    batch: 0,
                    loss_d: None,
                    loss_g: loss,
                })?;
                snapshots.push((0, params.clone()));
            }
            opt.step(&mut params, &grad);
            global += 1;
            if global % cfg.log_every_batches == 0 {
                let (after, _) = evaluate(&params, &batch, &noise);
                trace.push(TraceRow {
                    batch: global,
                    loss_d: None,
                    loss_g: after,
                })?;
                snapshots.push((global, params.clone()));
            }
        }
    }
    Ok(TrainOutcome {
        params,
        trace,
        snapshots,
    })
}

/// Number of optimizer steps a run performs.
pub fn total_batches(n_samples: usize, cfg: &TrainConfig) -> usize {
    cfg.epochs * n_samples.div_ceil(cfg.batch_size)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::EmbeddingSpec;
    use crate::models::Topology;
    use crate::qcore::ParamRef;
    use std::f64::consts::{LN_2, PI};

    #[test]
    fn gan_value_examples() {
        assert!((gan_value(&[0.5], &[0.5]).unwrap() + 2.0 * LN_2).abs() < 1e-12);
        assert!(gan_value(&[1.0 - 1e-12], &[1e-12]).unwrap().abs() < 1e-9);
        let want = (0.8f64.ln() + 0.6f64.ln()) / 2.0 + (0.7f64.ln() + 0.9f64.ln()) / 2.0;
        assert!((gan_value(&[0.8, 0.6], &[0.3, 0.1]).unwrap() - want).abs() < 1e-12);
        assert!(gan_value(&[], &[0.1]).is_err());
        assert!(gan_value(&[1.5], &[0.1]).is_err());
        assert!(gan_value(&[0.0], &[1.0]).unwrap().is_finite());
    }

    fn z_expectation(state: &StateVector) -> f64 {
        let p = state.probabilities();
        p[0] - p[1]
    }

    #[test]
    fn shift_rule_on_single_ry() {
        let mut c = Circuit::new(1, 1);
        c.ry(0, 0).unwrap();
        let zero = StateVector::zero(1);
        for (theta, want) in [(0.0, 0.0), (PI / 2.0, -1.0)] {
            let g = parameter_shift_grad(&c, |s| {
                Ok(z_expectation(&c.run_shifted(&[theta], &zero, s)?))
            })
            .unwrap();
            assert!((g[0] - want).abs() < 1e-12);
        }
    }

    #[test]
    fn shift_rule_handles_shared_scaled_parameters() {
        let mut c = Circuit::new(2, 1);
        c.h(0).unwrap();
        c.cry(0, 1, 0).unwrap();
        c.push(crate::qcore::Gate::ry(0, ParamRef::scaled(0, 0.3)))
            .unwrap();
        let zero = StateVector::zero(2);
        let loss = |p: &[f64], s: Option<Shift>| -> Result<f64> {
            Ok(c.run_shifted(p, &zero, s)?.probabilities()[3] * 2.0 + 0.1)
        };
        let theta = 0.83;
        let g = parameter_shift_grad(&c, |s| loss(&[theta], s)).unwrap();
        let h = 1e-5;
        let fd =
            (loss(&[theta + h], None).unwrap() - loss(&[theta - h], None).unwrap()) / (2.0 * h);
        assert!((g[0] - fd).abs() < 1e-8);
    }

    #[test]
    fn optimizers_descend_a_quadratic() {
        for kind in [OptimizerKind::Sgd, OptimizerKind::default()] {
            let mut opt = Optimizer::new(kind, 0.1, 2);
            let mut p = vec![1.0, -2.0];
            for _ in 0..500 {
                let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
                opt.step(&mut p, &g);
            }
            assert!(p.iter().all(|x| x.abs() < 1e-2), "{kind:?}: {p:?}");
        }
    }

    #[test]
    fn trace_csv_round_trip_and_ordering() {
        let mut t = LossTrace::new();
        t.push(TraceRow {
            batch: 0,
            loss_d: None,
            loss_g: 0.25,
        })
        .unwrap();
        t.push(TraceRow {
            batch: 40,
            loss_d: Some(-1.3),
            loss_g: 0.125,
        })
        .unwrap();
        assert!(t
            .push(TraceRow {
                batch: 40,
                loss_d: None,
                loss_g: 0.0
            })
            .is_err());
        let csv = t.to_csv();
        assert_eq!(csv, "batch,loss_d,loss_g\n0,,0.25\n40,-1.3,0.125\n");
        assert_eq!(LossTrace::from_csv(&csv).unwrap(), t);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        for cfg in [
            TrainConfig {
                epochs: 0,
                ..Default::default()
            },
            TrainConfig {
                batch_size: 0,
                ..Default::default()
            },
            TrainConfig {
                learning_rate: 0.0,
                ..Default::default()
            },
            TrainConfig {
                log_every_batches: 0,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err());
        }
    }

    #[test]
    fn iqgan_zero_start_on_zero_data_has_zero_loss() {
        let model = IqganModel::new(EmbeddingSpec::angle(3), 1, Topology::Chain).unwrap();
        let cfg = TrainConfig {
            epochs: 1,
            batch_size: 1,
            init_scale: 0.0,
            ..Default::default()
        };
        let out = train_iqgan(&model, &[FeatureVector::zeros(3)], &cfg).unwrap();
        assert!(out.trace.rows()[0].loss_g.abs() < 1e-12);
    }

    #[test]
    fn product_training_reaches_single_image() {
        let model = ProductIqgan::new(2, 2);
        let img = FeatureVector::new(vec![0.1, 0.4, 0.7, 1.0]).unwrap();
        let cfg = TrainConfig {
            epochs: 400,
            batch_size: 1,
            learning_rate: 4.0,
            optimizer: OptimizerKind::Sgd,
            ..Default::default()
        };
        let out = train_product(&model, std::slice::from_ref(&img), &cfg).unwrap();
        // Angles are only defined modulo 2π, so compare decoded images.
        let got = crate::models::product_iqgan_image(&model, &out.params).unwrap();
        for (g, x) in got.values().iter().zip(img.values()) {
            assert!((g - x).abs() < 1e-4, "{g} vs {x}");
        }
        assert!(out.trace.last().unwrap().loss_g < 1e-6);
    }

    #[test]
    fn total_batch_count() {
        let cfg = TrainConfig {
            epochs: 3,
            batch_size: 4,
            ..Default::default()
        };
        assert_eq!(total_batches(10, &cfg), 9);
    }
}
