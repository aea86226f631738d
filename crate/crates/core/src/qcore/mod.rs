//! Exact statevector and density-matrix simulation.
//!
//! Gate conventions: `RY(θ) = exp(-iθY/2)`, `RYY(θ) = exp(-iθ(Y⊗Y)/2)`, and
//! controlled-RY is stored pre-decomposed (see [`Circuit::cry`]). Qubit 0 is
//! the most significant bit of a basis-state index. All expectation values
//! are exact; there is no shot sampling.

mod circuit;
mod density;
mod product;
mod state;

pub use circuit::{apply_gate, Circuit, Gate, GateKind, ParamRef, Shift, PARAMETER_SHIFT};
pub use density::{DensityMatrix, DENSITY_TOL};
pub use product::{is_entanglement_free, product_apply, ProductState};
pub use state::{inner, StateVector, NORM_TOL};

use crate::error::Result;

/// Runs `circuit` on `initial` with the given parameters.
pub fn run(circuit: &Circuit, params: &[f64], initial: &StateVector) -> Result<StateVector> {
    circuit.run(params, initial)
}

/// Eigendecomposition of a density matrix, eigenvalues descending.
pub fn eigh(rho: &DensityMatrix) -> Result<(Vec<f64>, Vec<StateVector>)> {
    rho.eigh()
}
