//! Distances, fidelities and discrimination bounds between a data density
//! matrix and a generator state.
//!
//! Two fidelity conventions appear here. [`uhlmann_fidelity`] is
//! `Tr√(√ρ σ √ρ)`, which for pure states is `|⟨ψ|φ⟩|`. [`overlap_fidelity`]
//! is `⟨γ|ρ|γ⟩`, the squared-overlap form used by the generator bounds.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{eigh_hermitian, CMatrix};
use crate::qcore::{DensityMatrix, StateVector};

/// Eigenvalues above this negative threshold are treated as rounding noise.
pub const PSD_FLOOR: f64 = -1e-10;

fn check_dims(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            actual: sigma.dim(),
        });
    }
    Ok(())
}

fn trace_norm(m: &CMatrix) -> Result<f64> {
    Ok(eigh_hermitian(m)?.values.iter().map(|v| v.abs()).sum())
}

/// Principal square root of a positive semidefinite matrix.
pub fn psd_sqrt(m: &CMatrix) -> Result<CMatrix> {
    let eig = eigh_hermitian(m)?;
    if let Some(&v) = eig.values.iter().find(|&&v| v < PSD_FLOOR) {
        return Err(Error::NotPositive(v));
    }
    Ok(eig.map_spectrum(|v| v.max(0.0).sqrt()))
}

/// ½‖ρ − σ‖₁
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    Ok((0.5 * trace_norm(&rho.matrix().sub(sigma.matrix()))?).clamp(0.0, 1.0))
}

/// Eigenvalues at or below this are dropped from a support projection.
pub const SUPPORT_TOL: f64 = 1e-13;

/// Tr√(√ρ σ √ρ)
///
/// Evaluated on the support of whichever state has the smaller rank, so the
/// inner matrix has no null space whose rounding noise would pass through
/// the square root.
pub fn uhlmann_fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dims(rho, sigma)?;
    let er = eigh_hermitian(rho.matrix())?;
    let es = eigh_hermitian(sigma.matrix())?;
    for e in [&er, &es] {
        if let Some(&v) = e.values.iter().find(|&&v| v < PSD_FLOOR) {
            return Err(Error::NotPositive(v));
        }
    }
    let rank =
        |e: &crate::linalg::HermitianEigen| e.values.iter().filter(|&&v| v > SUPPORT_TOL).count();
    let (a, b) = if rank(&er) <= rank(&es) {
        (&er, sigma)
    } else {
        (&es, rho)
    };
    let r = rank(a);
    let cols: Vec<Vec<_>> = (0..r).map(|k| a.vector(k)).collect();
    let b_cols: Vec<Vec<_>> = cols.iter().map(|u| b.matrix().matvec(u)).collect();
    let mut m = CMatrix::zeros(r);
    for i in 0..r {
        for j in 0..r {
            let v: num_complex::Complex64 = cols[i]
                .iter()
                .zip(&b_cols[j])
                .map(|(x, y)| x.conj() * y)
                .sum();
            m[(i, j)] = v * (a.values[i] * a.values[j]).sqrt();
        }
    }
    let m = m.add(&m.adjoint()).scaled(0.5);
    let f: f64 = eigh_hermitian(&m)?
        .values
        .iter()
        .map(|v| v.max(0.0).sqrt())
        .sum();
    Ok(f.clamp(0.0, 1.0))
}

/// ⟨γ|ρ|γ⟩
pub fn overlap_fidelity(gamma: &StateVector, rho: &DensityMatrix) -> Result<f64> {
    Ok(rho.expectation(gamma)?.clamp(0.0, 1.0))
}

/// Margins of `1 − F ≤ T ≤ √(1 − F²)` with the Uhlmann fidelity; both are
/// nonnegative when the inequalities hold.
pub fn fvg_check(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<(f64, f64)> {
    let t = trace_distance(rho, sigma)?;
    let f = uhlmann_fidelity(rho, sigma)?;
    Ok((t - (1.0 - f), (1.0 - f * f).max(0.0).sqrt() - t))
}

/// Optimal probability of telling ρ (prior `prior`) from σ with one measurement:
/// ½ + ½‖prior·ρ − (1 − prior)·σ‖₁.
pub fn helstrom_success(rho: &DensityMatrix, sigma: &DensityMatrix, prior: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&prior) {
        return Err(Error::PriorRange(prior));
    }
    check_dims(rho, sigma)?;
    let diff = rho
        .matrix()
        .scaled(prior)
        .sub(&sigma.matrix().scaled(1.0 - prior));
    Ok((0.5 + 0.5 * trace_norm(&diff)?).clamp(0.5, 1.0))
}

/// Value of the game at the Helstrom discriminator: log(½ + t) + log(½ − t)
/// with t = ½·trace_distance. Returns −∞ once the second term leaves its domain.
pub fn nash_value(rho_data: &DensityMatrix, rho_g: &DensityMatrix) -> Result<f64> {
    let t = 0.5 * trace_distance(rho_data, rho_g)?;
    Ok(nash_value_from_t(t))
}

pub fn nash_value_from_t(t: f64) -> f64 {
    if t >= 0.5 {
        f64::NEG_INFINITY
    } else {
        (0.5 + t).ln() + (0.5 - t).ln()
    }
}

/// Top eigenpair of ρ: the best fidelity any pure generator can reach and a
/// state that reaches it.
pub fn best_pure_generator(rho_data: &DensityMatrix) -> Result<(f64, StateVector)> {
    let (values, mut vectors) = rho_data.eigh()?;
    Ok((values[0].clamp(0.0, 1.0), vectors.swap_remove(0)))
}

/// Data state with the largest ⟨x_i|ρ|x_i⟩; ties go to the lowest index.
pub fn best_data_state(rho_data: &DensityMatrix, xs: &[StateVector]) -> Result<(usize, f64)> {
    if xs.is_empty() {
        return Err(Error::Empty("data states"));
    }
    let mut best = (0, f64::NEG_INFINITY);
    for (i, x) in xs.iter().enumerate() {
        let p = overlap_fidelity(x, rho_data)?;
        if p > best.1 {
            best = (i, p);
        }
    }
    Ok(best)
}

/// Returns `1 − ⟨γ|ρ|γ⟩/2` and whether the Helstrom success against |γ⟩⟨γ|
/// reaches it.
pub fn discriminator_lower_bound(
    rho_data: &DensityMatrix,
    gamma: &StateVector,
) -> Result<(f64, bool)> {
    let bound = 1.0 - overlap_fidelity(gamma, rho_data)? / 2.0;
    let p = helstrom_success(rho_data, &DensityMatrix::from_pure(gamma), 0.5)?;
    Ok((bound, p >= bound - 1e-9))
}

/// Every quantity relating a data density matrix to one generator, flat for JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub trace_distance: f64,
    pub uhlmann_fidelity: f64,
    /// ⟨γ|ρ|γ⟩; only for a pure generator.
    pub overlap_fidelity: Option<f64>,
    pub helstrom_success: f64,
    pub fvg_lower_margin: f64,
    pub fvg_upper_margin: f64,
    pub lambda_max: f64,
    pub p_data_max: f64,
    pub p_data_max_index: usize,
    /// 1 − p_data_max/2
    pub lower_bound_value: f64,
    /// 1 − lambda_max/2
    pub eigen_bound_value: f64,
    /// helstrom_success − (1 − overlap/2); pure generators only.
    pub generator_bound_margin: Option<f64>,
    /// trace_distance − (1 − overlap); pure generators only.
    pub strong_bound_margin: Option<f64>,
    /// −∞ is written as null.
    pub nash_value: f64,
}

pub enum Generator<'a> {
    Pure(&'a StateVector),
    Mixed(&'a DensityMatrix),
}

impl BoundReport {
    pub fn compute(
        rho_data: &DensityMatrix,
        data_states: &[StateVector],
        generator: Generator<'_>,
    ) -> Result<Self> {
        let owned;
        let (rho_g, gamma) = match generator {
            Generator::Pure(g) => {
                owned = DensityMatrix::from_pure(g);
                (&owned, Some(g))
            }
            Generator::Mixed(m) => (m, None),
        };
        let trace_distance = trace_distance(rho_data, rho_g)?;
        let helstrom = helstrom_success(rho_data, rho_g, 0.5)?;
        let (fvg_lower_margin, fvg_upper_margin) = fvg_check(rho_data, rho_g)?;
        let (lambda_max, _) = best_pure_generator(rho_data)?;
        let (p_data_max_index, p_data_max) = best_data_state(rho_data, data_states)?;
        let overlap = gamma.map(|g| overlap_fidelity(g, rho_data)).transpose()?;
        Ok(Self {
            trace_distance,
            uhlmann_fidelity: uhlmann_fidelity(rho_data, rho_g)?,
            overlap_fidelity: overlap,
            helstrom_success: helstrom,
            fvg_lower_margin,
            fvg_upper_margin,
            lambda_max,
            p_data_max,
            p_data_max_index,
            lower_bound_value: 1.0 - p_data_max / 2.0,
            eigen_bound_value: 1.0 - lambda_max / 2.0,
            generator_bound_margin: overlap.map(|f| helstrom - (1.0 - f / 2.0)),
            strong_bound_margin: overlap.map(|f| trace_distance - (1.0 - f)),
            nash_value: nash_value_from_t(0.5 * trace_distance),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Two-column text table.
    pub fn table(&self) -> String {
        let opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.6}"));
        let rows = [
            ("trace_distance", format!("{:.6}", self.trace_distance)),
            ("uhlmann_fidelity", format!("{:.6}", self.uhlmann_fidelity)),
            ("overlap_fidelity", opt(self.overlap_fidelity)),
            ("helstrom_success", format!("{:.6}", self.helstrom_success)),
            ("fvg_lower_margin", format!("{:.6}", self.fvg_lower_margin)),
            ("fvg_upper_margin", format!("{:.6}", self.fvg_upper_margin)),
            ("lambda_max", format!("{:.6}", self.lambda_max)),
            (
                "p_data_max",
                format!("{:.6} (state {})", self.p_data_max, self.p_data_max_index),
            ),
            (
                "lower_bound_value",
                format!("{:.6}", self.lower_bound_value),
            ),
            (
                "eigen_bound_value",
                format!("{:.6}", self.eigen_bound_value),
            ),
            ("generator_bound_margin", opt(self.generator_bound_margin)),
            ("strong_bound_margin", opt(self.strong_bound_margin)),
            ("nash_value", format!("{:.6}", self.nash_value)),
        ];
        rows.iter().map(|(k, v)| format!("{k:<24}{v}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64 as C64;
    use std::f64::consts::{FRAC_1_SQRT_2, LN_2};

    fn ket(amps: &[f64]) -> StateVector {
        StateVector::normalized(amps.iter().map(|&a| C64::new(a, 0.0)).collect()).unwrap()
    }

    #[test]
    fn trivial_distances() {
        let zero = DensityMatrix::from_pure(&ket(&[1.0, 0.0]));
        let one = DensityMatrix::from_pure(&ket(&[0.0, 1.0]));
        let plus = DensityMatrix::from_pure(&ket(&[1.0, 1.0]));
        assert!(trace_distance(&zero, &zero).unwrap().abs() < 1e-12);
        assert!((trace_distance(&zero, &one).unwrap() - 1.0).abs() < 1e-12);
        assert!((uhlmann_fidelity(&zero, &zero).unwrap() - 1.0).abs() < 1e-9);
        assert!((uhlmann_fidelity(&zero, &plus).unwrap() - FRAC_1_SQRT_2).abs() < 1e-9);
        assert!((helstrom_success(&zero, &zero, 0.5).unwrap() - 0.5).abs() < 1e-12);
        assert!((helstrom_success(&zero, &one, 0.5).unwrap() - 1.0).abs() < 1e-12);
        assert!(helstrom_success(&zero, &one, 1.5).is_err());
        let (lo, hi) = fvg_check(&zero, &zero).unwrap();
        assert!(lo.abs() < 1e-9 && hi.abs() < 1e-6);
        let (lo, hi) = fvg_check(&zero, &one).unwrap();
        assert!(lo.abs() < 1e-9 && hi.abs() < 1e-9);
    }

    #[test]
    fn nash_examples() {
        let rho = DensityMatrix::from_ensemble(&[ket(&[1.0, 0.0]), ket(&[0.0, 1.0])], &[0.3, 0.7])
            .unwrap();
        assert!((nash_value(&rho, &rho).unwrap() + 2.0 * LN_2).abs() < 1e-12);
        assert!((nash_value_from_t(0.25) - (0.75f64.ln() + 0.25f64.ln())).abs() < 1e-15);
        let zero = DensityMatrix::from_pure(&ket(&[1.0, 0.0]));
        let one = DensityMatrix::from_pure(&ket(&[0.0, 1.0]));
        assert_eq!(nash_value(&zero, &one).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn eigen_and_data_optima() {
        let m = DensityMatrix::from_ensemble(&[ket(&[1.0, 0.0]), ket(&[0.0, 1.0])], &[0.7, 0.3])
            .unwrap();
        let (l, v) = best_pure_generator(&m).unwrap();
        assert!((l - 0.7).abs() < 1e-12);
        assert!((v.probabilities()[0] - 1.0).abs() < 1e-12);
        let mixed =
            DensityMatrix::from_ensemble(&[ket(&[1.0, 0.0]), ket(&[0.0, 1.0])], &[0.5, 0.5])
                .unwrap();
        assert!((best_pure_generator(&mixed).unwrap().0 - 0.5).abs() < 1e-12);

        let xs = [ket(&[1.0, 0.0]), ket(&[0.0, 1.0])];
        let rho = DensityMatrix::from_ensemble(&xs, &[0.9, 0.1]).unwrap();
        let (i, p) = best_data_state(&rho, &xs).unwrap();
        assert_eq!(i, 0);
        assert!((p - 0.9).abs() < 1e-12);
        assert!(best_data_state(&rho, &[]).is_err());
        // Ties go to the lowest index.
        let (i, _) = best_data_state(&mixed, &xs).unwrap();
        assert_eq!(i, 0);
    }

    #[test]
    fn lower_bound_edge_cases() {
        let x = ket(&[1.0, 1.0, 0.0, 0.0]);
        let rank1 = DensityMatrix::from_pure(&x);
        let (b, ok) = discriminator_lower_bound(&rank1, &x).unwrap();
        assert!((b - 0.5).abs() < 1e-12 && ok);
        let orth = ket(&[0.0, 0.0, 1.0, 0.0]);
        let (b, ok) = discriminator_lower_bound(&rank1, &orth).unwrap();
        assert!((b - 1.0).abs() < 1e-12 && ok);
    }

    #[test]
    fn report_serializes_flat() {
        let xs = [ket(&[1.0, 0.0]), ket(&[1.0, 1.0])];
        let rho = DensityMatrix::uniform_ensemble(&xs).unwrap();
        let r = BoundReport::compute(&rho, &xs, Generator::Pure(&xs[0])).unwrap();
        let v: serde_json::Value = serde_json::from_str(&r.to_json().unwrap()).unwrap();
        for key in [
            "trace_distance",
            "helstrom_success",
            "lambda_max",
            "p_data_max",
            "nash_value",
        ] {
            assert!(v[key].is_number(), "{key}");
        }
        assert!(r.table().contains("lambda_max"));
        let mixed = BoundReport::compute(&rho, &xs, Generator::Mixed(&rho)).unwrap();
        assert!(mixed.overlap_fidelity.is_none());
        assert!(mixed.trace_distance.abs() < 1e-12);
    }
}
