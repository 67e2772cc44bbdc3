//! Weighted least-squares fit of `log Z` across `N` in a basis of powers of `N`.

use crate::{OracleError, OracleResult, Result};
use nalgebra::{DMatrix, DVector};

#[derive(Clone, Debug)]
pub struct FitReport {
    /// Basis exponents `a` of `N^a`.
    pub powers: Vec<i32>,
    pub coefficients: Vec<f64>,
    pub covariance: DMatrix<f64>,
    /// Weighted residual norm.
    pub residual: f64,
    /// Condition number of the column-scaled weighted design matrix.
    pub condition: f64,
    pub beta: f64,
    pub t0: f64,
}

impl FitReport {
    /// Fitted coefficient of `N^a`.
    pub fn coefficient(&self, a: i32) -> Option<f64> {
        self.powers.iter().position(|&p| p == a).map(|i| self.coefficients[i])
    }

    /// The fit read as a free energy `F = -log Z = sum_L hbar^L c_L`, `hbar = t0/(N sqrt beta)`:
    /// `(L, c_L)` with `c_L = sum_l gamma^l F_{k,l}` over `2k + l - 2 = L`.
    pub fn free_energy_levels(&self) -> Vec<(i32, f64)> {
        let kappa = self.t0 / self.beta.sqrt();
        self.powers.iter().zip(&self.coefficients).map(|(&a, &c)| (-a, -c * kappa.powi(a))).collect()
    }
}

/// Fits `log_z = sum_a c_a N^a` over `powers`; exact results get unit weight, stochastic
/// ones `1/error_bar^2`. Needs at least `powers.len() + 2` distinct `N`.
pub fn fit_expansion(results: &[OracleResult], powers: &[i32]) -> Result<FitReport> {
    let mut ns: Vec<usize> = results.iter().map(|r| r.n).collect();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < powers.len() + 2 {
        return Err(OracleError::InvalidInput(format!("{} distinct N for {} basis functions; need {}", ns.len(), powers.len(), powers.len() + 2)));
    }
    let (beta, t0) = (results[0].beta, results[0].t0);
    if results.iter().any(|r| r.beta != beta || r.t0 != t0) {
        return Err(OracleError::InvalidInput("all results must share beta and t0".into()));
    }
    let w: Vec<f64> = results.iter().map(|r| if r.error_bar > 0.0 { r.error_bar.recip() } else { 1.0 }).collect();
    let a = DMatrix::from_fn(results.len(), powers.len(), |i, j| w[i] * (results[i].n as f64).powi(powers[j]));
    let y = DVector::from_fn(results.len(), |i, _| w[i] * results[i].log_z);
    let norms: Vec<f64> = (0..powers.len()).map(|j| a.column(j).norm()).collect();
    let scaled = DMatrix::from_fn(a.nrows(), a.ncols(), |i, j| a[(i, j)] / norms[j]);
    let svd = scaled.clone().svd(true, true);
    let condition = svd.singular_values.max() / svd.singular_values.min();
    let z = svd.solve(&y, 1e-14).map_err(|e| OracleError::IllConditioned(e.to_string()))?;
    let coefficients: Vec<f64> = (0..powers.len()).map(|j| z[j] / norms[j]).collect();
    let residual = (&scaled * &z - &y).norm();
    let dof = (results.len() - powers.len()) as f64;
    let sigma2 = if results.iter().all(|r| r.error_bar > 0.0) { 1.0 } else { residual * residual / dof };
    let gram = (scaled.transpose() * &scaled).try_inverse().ok_or_else(|| OracleError::IllConditioned("singular normal matrix".into()))?;
    let covariance = DMatrix::from_fn(powers.len(), powers.len(), |i, j| sigma2 * gram[(i, j)] / (norms[i] * norms[j]));
    Ok(FitReport { powers: powers.to_vec(), coefficients, covariance, residual, condition, beta, t0 })
}
