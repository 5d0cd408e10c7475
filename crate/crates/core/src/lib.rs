//! Discretized classical and quantum sides of the spatially cut-off P(φ)₂ model.
//!
//! The spatial interval `[-l/2, l/2]` is discretized by a [`Grid`]; functions of
//! `m² − Δ` act exactly as diagonal multipliers on the eigenmodes held by a
//! [`ModeBasis`]. On top of that sit
//!
//! * [`potential`]: the classical potential `U`, its gradient, Hessians and minimizers,
//! * [`harmonic`]: ground energies and covariances of quadratic Hamiltonians,
//! * [`agmon`]: Agmon length/energy of paths and geodesic distances,
//! * [`instanton`]: the Euclidean action on space-time grids and its minimizers,
//! * [`fock`]: truncated Fock-space Hamiltonians, Lanczos spectra and λ-scans.

pub mod agmon;
pub mod error;
pub mod fock;
pub mod harmonic;
pub mod instanton;
pub mod linalg;
pub mod optim;
pub mod potential;
pub mod quadrature;
pub mod spectral;

pub use error::{Error, Result};
pub use potential::{ClassicalPotential, CutoffFunction, PolynomialPotential};
pub use spectral::{Boundary, Field, Grid, ModeBasis};
