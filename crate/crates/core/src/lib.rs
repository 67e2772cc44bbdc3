//! Perturbative solution of the beta-deformed one-matrix eigenvalue model.
//!
//! The planar limit is encoded in a hyperelliptic spectral curve; higher
//! corrections `W_{k,l}` and free energies `F_{k,l}` are obtained from the
//! loop equations, organized by powers of `hbar` and of `gamma = sqrt(beta) - 1/sqrt(beta)`.

pub mod correlators;
pub mod curve;
pub mod error;
pub mod free_energy;
pub mod jet;
pub mod kernels;
pub mod poly;

pub use error::{Error, Result};
