//! Finite-volume workbench for discrete Schrödinger operators `H = Δ + V + W` on boxes of ℤ^d.

pub mod error;
pub mod experiment;
pub mod helffer;
pub mod jet;
pub mod lap;
pub mod lattice;
pub mod monotone;
pub mod mourre;
pub mod polylog;
pub mod quad;
pub mod sparse;
pub mod spectral;
pub mod weights;

pub use error::{Error, Result};
