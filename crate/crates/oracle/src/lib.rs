//! Independent ground truth for the beta-ensemble partition function
//!
//! ```text
//! Z = int prod dx_i |Delta(x)|^{2 beta} exp(-(N beta / t0) sum_i V(x_i)),
//! ```
//!
//! from the Mehta integral (Gaussian, exact), weight-adapted Gauss quadrature
//! (small `N`, integer `beta`) and Monte Carlo thermodynamic integration.
//! Nothing here depends on the spectral-curve engine.

pub mod fit;
pub mod mehta;
pub mod monte_carlo;
pub mod quadrature;

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum OracleError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("ill-conditioned fit: {0}")]
    IllConditioned(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("not converged: {0}")]
    NotConverged(String),
}

pub type Result<T> = std::result::Result<T, OracleError>;

/// Polynomial potential `V(x) = sum_k couplings[k] x^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    pub couplings: Vec<f64>,
}

impl Potential {
    pub fn new(couplings: Vec<f64>) -> Result<Self> {
        let deg = couplings.iter().rposition(|&c| c != 0.0).unwrap_or(0);
        if deg < 2 || deg % 2 == 1 || couplings[deg] <= 0.0 {
            return Err(OracleError::InvalidInput("V must be confining: even degree >= 2, positive leading coupling".into()));
        }
        Ok(Potential { couplings: couplings[..=deg].to_vec() })
    }

    pub fn gaussian(t2: f64) -> Self {
        Potential { couplings: vec![0.0, 0.0, t2] }
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.couplings.iter().rev().fold(0.0, |acc, c| acc * x + c)
    }

    pub fn degree(&self) -> usize {
        self.couplings.len() - 1
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OracleMethod {
    Mehta,
    Quadrature,
    MonteCarlo,
}

/// One partition-function value.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub n: usize,
    pub beta: f64,
    pub potential: Potential,
    pub t0: f64,
    pub log_z: f64,
    /// Zero for exact methods, a standard error for Monte Carlo.
    pub error_bar: f64,
    pub method: OracleMethod,
    /// Set when a convergence diagnostic failed (Monte Carlo R-hat).
    pub flagged: bool,
}

pub use fit::{fit_expansion, FitReport};
pub use mehta::{mehta_expansion, mehta_log_z, MehtaAsymptotics, MehtaExpansion};
pub use monte_carlo::{monte_carlo_log_z, McOptions};
pub use quadrature::{brute_force_log_z, expectation, GaussRule};
