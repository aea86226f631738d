use num_complex::Complex64 as C64;

use super::state::{check_wire, qubits_for_len, StateVector};
use crate::error::{Error, Result};
use crate::linalg::{eigh_hermitian, CMatrix, HermitianEigen};

pub const DENSITY_TOL: f64 = 1e-10;

/// Hermitian, positive semidefinite, unit-trace operator on `n_qubits`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: CMatrix,
}

impl DensityMatrix {
    /// |ψ⟩⟨ψ|
    pub fn from_pure(state: &StateVector) -> Self {
        Self {
            n_qubits: state.n_qubits(),
            matrix: CMatrix::outer(state.amplitudes(), state.amplitudes()),
        }
    }

    /// Validates a raw matrix against the density-matrix invariants.
    pub fn from_matrix(matrix: CMatrix) -> Result<Self> {
        let n_qubits = qubits_for_len(matrix.dim())?;
        let defect = matrix.hermitian_defect();
        if defect > DENSITY_TOL {
            return Err(Error::NotHermitian(defect));
        }
        let tr = matrix.trace().re;
        if (tr - 1.0).abs() > DENSITY_TOL {
            return Err(Error::BadTrace(tr));
        }
        let eig = eigh_hermitian(&matrix)?;
        let min = eig.values.last().copied().unwrap_or(0.0);
        if min < -DENSITY_TOL {
            return Err(Error::NotPositive(min));
        }
        Ok(Self { n_qubits, matrix })
    }

    /// Σ p_i |x_i⟩⟨x_i|
    pub fn from_ensemble(states: &[StateVector], probs: &[f64]) -> Result<Self> {
        let first = states.first().ok_or(Error::Empty("ensemble states"))?;
        if probs.len() != states.len() {
            return Err(Error::DimensionMismatch {
                expected: states.len(),
                actual: probs.len(),
            });
        }
        let sum: f64 = probs.iter().sum();
        if probs.iter().any(|&p| p < 0.0 || !p.is_finite()) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::BadProbabilities(sum));
        }
        let dim = first.dim();
        let mut m = CMatrix::zeros(dim);
        for (s, &p) in states.iter().zip(probs) {
            if s.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    actual: s.dim(),
                });
            }
            if p == 0.0 {
                continue;
            }
            let a = s.amplitudes();
            for i in 0..dim {
                let ai = a[i] * p;
                for j in 0..dim {
                    m[(i, j)] += ai * a[j].conj();
                }
            }
        }
        Ok(Self {
            n_qubits: first.n_qubits(),
            matrix: m,
        })
    }

    /// Equal-weight ensemble.
    pub fn uniform_ensemble(states: &[StateVector]) -> Result<Self> {
        let p = vec![1.0 / states.len().max(1) as f64; states.len()];
        Self::from_ensemble(states, &p)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.matrix[(i, i)].re).collect()
    }

    /// ⟨ψ|ρ|ψ⟩
    pub fn expectation(&self, state: &StateVector) -> Result<f64> {
        if state.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: state.dim(),
            });
        }
        let a = state.amplitudes();
        let rho_a = self.matrix.matvec(a);
        Ok(a.iter()
            .zip(&rho_a)
            .map(|(x, y)| x.conj() * y)
            .sum::<C64>()
            .re)
    }

    /// Eigenvalues (descending) with the matching orthonormal eigenvectors.
    pub fn eigh(&self) -> Result<(Vec<f64>, Vec<StateVector>)> {
        let HermitianEigen { values, vectors } = eigh_hermitian(&self.matrix)?;
        let states = (0..self.dim())
            .map(|k| StateVector::from_raw(self.n_qubits, vectors.column(k)))
            .collect();
        Ok((values, states))
    }

    /// Reduced state on `keep` (sorted ascending; repeated indices ignored).
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let layout = Layout::new(keep, self.n_qubits)?;
        let dk = 1 << layout.kept.len();
        let mut out = CMatrix::zeros(dk);
        let dim = self.dim();
        for r in 0..dim {
            let (kr, tr) = layout.split(r);
            for c in 0..dim {
                let (kc, tc) = layout.split(c);
                if tr == tc {
                    out[(kr, kc)] += self.matrix[(r, c)];
                }
            }
        }
        Ok(Self {
            n_qubits: layout.kept.len(),
            matrix: out,
        })
    }
}

impl StateVector {
    /// Reduced density matrix of a pure state on `keep`.
    pub fn partial_trace(&self, keep: &[usize]) -> Result<DensityMatrix> {
        let layout = Layout::new(keep, self.n_qubits())?;
        let dk = 1 << layout.kept.len();
        let dt = self.dim() / dk;
        // ψ reshaped as a (kept × traced) matrix; ρ = M M†.
        let mut m = vec![C64::new(0.0, 0.0); dk * dt];
        for (idx, amp) in self.amplitudes().iter().enumerate() {
            let (k, t) = layout.split(idx);
            m[k * dt + t] = *amp;
        }
        let mut out = CMatrix::zeros(dk);
        for i in 0..dk {
            let row_i = &m[i * dt..(i + 1) * dt];
            for j in i..dk {
                let row_j = &m[j * dt..(j + 1) * dt];
                let v: C64 = row_i.iter().zip(row_j).map(|(a, b)| a * b.conj()).sum();
                out[(i, j)] = v;
                out[(j, i)] = v.conj();
            }
        }
        Ok(DensityMatrix {
            n_qubits: layout.kept.len(),
            matrix: out,
        })
    }

    /// Marginal distribution of the qubits in `keep` (diagonal of the reduced state).
    pub fn marginal_probabilities(&self, keep: &[usize]) -> Result<Vec<f64>> {
        let layout = Layout::new(keep, self.n_qubits())?;
        let mut out = vec![0.0; 1 << layout.kept.len()];
        for (idx, amp) in self.amplitudes().iter().enumerate() {
            out[layout.split(idx).0] += amp.norm_sqr();
        }
        Ok(out)
    }
}

struct Layout {
    n: usize,
    kept: Vec<usize>,
    traced: Vec<usize>,
}

impl Layout {
    fn new(keep: &[usize], n: usize) -> Result<Self> {
        if keep.is_empty() {
            return Err(Error::Empty("partial trace keep set"));
        }
        let mut kept = keep.to_vec();
        kept.sort_unstable();
        kept.dedup();
        for &q in &kept {
            check_wire(q, n)?;
        }
        let traced = (0..n).filter(|q| !kept.contains(q)).collect();
        Ok(Self { n, kept, traced })
    }

    /// Splits a full basis index into (kept index, traced index), each with
    /// the lowest-numbered qubit as most significant bit.
    fn split(&self, idx: usize) -> (usize, usize) {
        let bit = |q: usize| (idx >> (self.n - 1 - q)) & 1;
        let k = self.kept.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
        let t = self.traced.iter().fold(0, |acc, &q| (acc << 1) | bit(q));
        (k, t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_1_SQRT_2;

    fn random_state(n: usize, rng: &mut ChaCha8Rng) -> StateVector {
        let amps = (0..1 << n)
            .map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
            .collect();
        StateVector::normalized(amps).unwrap()
    }

    #[test]
    fn bell_state_reduces_to_maximally_mixed() {
        let bell = StateVector::from_amplitudes(vec![
            C64::new(FRAC_1_SQRT_2, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(FRAC_1_SQRT_2, 0.0),
        ])
        .unwrap();
        let red = bell.partial_trace(&[0]).unwrap();
        let half = CMatrix::from_real_diagonal(&[0.5, 0.5]);
        assert!(red.matrix().max_abs_diff(&half) < 1e-15);
        let red_rho = DensityMatrix::from_pure(&bell).partial_trace(&[1]).unwrap();
        assert!(red_rho.matrix().max_abs_diff(&half) < 1e-15);
    }

    #[test]
    fn product_state_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let psi = random_state(1, &mut rng);
        let phi = random_state(2, &mut rng);
        let red = psi.tensor(&phi).partial_trace(&[0]).unwrap();
        assert!(
            red.matrix()
                .max_abs_diff(DensityMatrix::from_pure(&psi).matrix())
                < 1e-14
        );
    }

    #[test]
    fn partial_trace_matches_elementwise_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let psi = random_state(3, &mut rng);
        let a = psi.amplitudes();
        let red = psi.partial_trace(&[2, 0]).unwrap();
        // Keep qubits {0,2}: index (q0 q2), traced q1.
        for i in 0..4usize {
            for j in 0..4usize {
                let mut want = C64::new(0.0, 0.0);
                for t in 0..2usize {
                    let full = |k: usize| ((k >> 1) << 2) | (t << 1) | (k & 1);
                    want += a[full(i)] * a[full(j)].conj();
                }
                assert!((red.matrix()[(i, j)] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn keep_all_is_outer_product_and_empty_is_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let psi = random_state(3, &mut rng);
        let full = psi.partial_trace(&[0, 1, 2]).unwrap();
        assert!(
            full.matrix()
                .max_abs_diff(DensityMatrix::from_pure(&psi).matrix())
                < 1e-10
        );
        assert!(matches!(psi.partial_trace(&[]), Err(Error::Empty(_))));
        assert!(psi.partial_trace(&[3]).is_err());
    }

    #[test]
    fn ensemble_examples() {
        let rho = DensityMatrix::from_ensemble(&[StateVector::zero(1)], &[1.0]).unwrap();
        assert_eq!(rho.diagonal(), vec![1.0, 0.0]);
        let mixed = DensityMatrix::from_ensemble(
            &[StateVector::basis(1, 0), StateVector::basis(1, 1)],
            &[0.5, 0.5],
        )
        .unwrap();
        assert!(
            mixed
                .matrix()
                .max_abs_diff(&CMatrix::from_real_diagonal(&[0.5, 0.5]))
                < 1e-15
        );
        assert!(matches!(
            DensityMatrix::from_ensemble(&[StateVector::zero(1)], &[0.7]),
            Err(Error::BadProbabilities(_))
        ));
        assert!(matches!(
            DensityMatrix::from_ensemble(
                &[StateVector::zero(1), StateVector::zero(2)],
                &[0.5, 0.5]
            ),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn ensemble_matches_outer_product_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let states: Vec<_> = (0..5).map(|_| random_state(2, &mut rng)).collect();
        let rho = DensityMatrix::uniform_ensemble(&states).unwrap();
        let mut want = CMatrix::zeros(4);
        for s in &states {
            want = want.add(&CMatrix::outer(s.amplitudes(), s.amplitudes()).scaled(0.2));
        }
        assert!(rho.matrix().max_abs_diff(&want) < 1e-15);
        assert!(DensityMatrix::from_matrix(rho.matrix().clone()).is_ok());
    }

    #[test]
    fn eigh_examples() {
        let rho = DensityMatrix::from_matrix(CMatrix::from_real_diagonal(&[0.3, 0.7])).unwrap();
        let (vals, vecs) = rho.eigh().unwrap();
        assert!((vals[0] - 0.7).abs() < 1e-15 && (vals[1] - 0.3).abs() < 1e-15);
        assert!((vecs[0].amplitudes()[1].norm() - 1.0).abs() < 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let states: Vec<_> = (0..8).map(|_| random_state(3, &mut rng)).collect();
        let rho = DensityMatrix::uniform_ensemble(&states).unwrap();
        let (vals, vecs) = rho.eigh().unwrap();
        let mut rebuilt = CMatrix::zeros(8);
        for (l, v) in vals.iter().zip(&vecs) {
            rebuilt = rebuilt.add(&CMatrix::outer(v.amplitudes(), v.amplitudes()).scaled(*l));
        }
        assert!(rebuilt.max_abs_diff(rho.matrix()) < 1e-9);
    }

    #[test]
    fn invariant_violations_rejected() {
        assert!(matches!(
            DensityMatrix::from_matrix(CMatrix::from_real_diagonal(&[0.5, 0.6])),
            Err(Error::BadTrace(_))
        ));
        assert!(matches!(
            DensityMatrix::from_matrix(CMatrix::from_real_diagonal(&[1.5, -0.5])),
            Err(Error::NotPositive(_))
        ));
        let mut m = CMatrix::from_real_diagonal(&[0.5, 0.5]);
        m[(0, 1)] = C64::new(0.1, 0.0);
        assert!(matches!(
            DensityMatrix::from_matrix(m),
            Err(Error::NotHermitian(_))
        ));
    }
}
