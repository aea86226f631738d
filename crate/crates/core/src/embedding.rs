//! Classical features to quantum states and back.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{ProductState, StateVector};

const FEATURE_TOL: f64 = 1e-9;
/// Single-qubit purity below `1 - PRODUCT_TOL` marks a state as entangled.
pub const PRODUCT_TOL: f64 = 1e-6;

/// Real features, each in [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(Vec<f64>);

impl FeatureVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        for (index, &value) in values.iter().enumerate() {
            if !(-FEATURE_TOL..=1.0 + FEATURE_TOL).contains(&value) || value.is_nan() {
                return Err(Error::FeatureRange { index, value });
            }
        }
        Ok(Self(
            values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect(),
        ))
    }

    /// Clamps every value into [0, 1].
    pub fn clamped(values: Vec<f64>) -> Self {
        Self(
            values
                .into_iter()
                .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
                .collect(),
        )
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_values(self) -> Vec<f64> {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EmbeddingKind {
    Angle,
    Amplitude,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub kind: EmbeddingKind,
    pub n_qubits: usize,
    /// Radians per unit feature for angle embedding.
    pub angle_scale: f64,
}

impl EmbeddingSpec {
    pub fn angle(n_qubits: usize) -> Self {
        Self {
            kind: EmbeddingKind::Angle,
            n_qubits,
            angle_scale: PI,
        }
    }

    pub fn amplitude(n_qubits: usize) -> Self {
        Self {
            kind: EmbeddingKind::Amplitude,
            n_qubits,
            angle_scale: PI,
        }
    }

    /// Number of classical values one register can carry.
    pub fn capacity(&self) -> usize {
        match self.kind {
            EmbeddingKind::Angle => self.n_qubits,
            EmbeddingKind::Amplitude => 1 << self.n_qubits,
        }
    }
}

/// ⊗_i RY(angle_scale · f_i)|0⟩ as a product state.
pub fn angle_embed_product(f: &FeatureVector, spec: &EmbeddingSpec) -> Result<ProductState> {
    angle_embed_with_offsets(f, spec, None)
}

/// Angle embedding with optional per-qubit trainable offsets added to each angle.
pub fn angle_embed_with_offsets(
    f: &FeatureVector,
    spec: &EmbeddingSpec,
    offsets: Option<&[f64]>,
) -> Result<ProductState> {
    if spec.kind != EmbeddingKind::Angle {
        return Err(Error::Config(
            "angle embedding requested with an amplitude spec".into(),
        ));
    }
    if f.len() != spec.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: spec.n_qubits,
            actual: f.len(),
        });
    }
    if let Some(o) = offsets {
        if o.len() != spec.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: spec.n_qubits,
                actual: o.len(),
            });
        }
    }
    let qubits = f
        .values()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let theta = spec.angle_scale * v + offsets.map_or(0.0, |o| o[i]);
            let (s, c) = (theta / 2.0).sin_cos();
            [C64::new(c, 0.0), C64::new(s, 0.0)]
        })
        .collect();
    Ok(ProductState::from_qubits(qubits).expect("rotation of |0⟩ is normalized"))
}

pub fn angle_embed(f: &FeatureVector, spec: &EmbeddingSpec) -> Result<StateVector> {
    Ok(angle_embed_product(f, spec)?.to_state_vector())
}

/// Zero-pads `v` to 2^n_qubits and normalizes it; returns the original norm.
pub fn amplitude_embed(v: &[f64], n_qubits: usize) -> Result<(StateVector, f64)> {
    let dim = 1usize << n_qubits;
    if v.len() > dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            actual: v.len(),
        });
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::ZeroVector);
    }
    let mut amps = vec![C64::new(0.0, 0.0); dim];
    for (a, &x) in amps.iter_mut().zip(v) {
        *a = C64::new(x / norm, 0.0);
    }
    Ok((StateVector::from_raw(n_qubits, amps), norm))
}

/// Inverts angle embedding on a product state.
pub fn angle_decode_product(state: &ProductState, angle_scale: f64) -> FeatureVector {
    let probs = (0..state.n_qubits()).map(|q| state.qubit(q)[1].norm_sqr());
    FeatureVector::clamped(probs.map(|p| decode_prob(p, angle_scale)).collect())
}

/// Inverts angle embedding, refusing entangled states.
pub fn angle_decode(state: &StateVector, angle_scale: f64) -> Result<FeatureVector> {
    for q in 0..state.n_qubits() {
        let red = state.partial_trace(&[q])?;
        let m = red.matrix();
        let purity =
            (m[(0, 0)] * m[(0, 0)] + m[(1, 1)] * m[(1, 1)]).re + 2.0 * m[(0, 1)].norm_sqr();
        if purity < 1.0 - PRODUCT_TOL {
            return Err(Error::NotProduct { qubit: q, purity });
        }
    }
    marginal_decode(state, angle_scale)
}

/// Per-qubit marginal decode; accepts entangled states and reads each qubit's
/// P(1) independently. Used when rendering generator outputs.
pub fn marginal_decode(state: &StateVector, angle_scale: f64) -> Result<FeatureVector> {
    let probs = (0..state.n_qubits())
        .map(|q| state.prob_one(q))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeatureVector::clamped(
        probs
            .into_iter()
            .map(|p| decode_prob(p, angle_scale))
            .collect(),
    ))
}

/// f = (2 / scale) · arcsin(√p)
pub fn decode_prob(p: f64, angle_scale: f64) -> f64 {
    (2.0 / angle_scale) * p.clamp(0.0, 1.0).sqrt().asin()
}

/// First `length` amplitude magnitudes, rescaled by `norm`.
pub fn amplitude_decode(state: &StateVector, length: usize, norm: f64) -> Vec<f64> {
    state
        .amplitudes()
        .iter()
        .take(length)
        .map(|a| a.norm() * norm)
        .collect()
}
