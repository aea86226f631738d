//! Statevector simulation of fully quantum GANs and the fidelity bounds that
//! limit pure-state generators.

pub mod bounds;
pub mod datapipe;
pub mod embedding;
pub mod error;
pub mod linalg;
pub mod models;
pub mod qcore;
pub mod toycompare;
pub mod training;

pub use error::{Error, Result};
