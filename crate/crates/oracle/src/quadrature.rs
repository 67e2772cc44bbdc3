//! Small-`N` partition functions by tensor Gauss quadrature.
//!
//! The one-particle weight `w(x) = exp(-(N beta/t0) V(x))` gets its own Gauss rule,
//! built from a fine discretization of `w` on a box outside of which the discarded
//! mass is below `1e-16` of the total. For integer `beta` the remaining integrand
//! `|Delta|^{2 beta}` is a polynomial of degree `2 beta (N - 1)` in each variable,
//! so the tensor rule with `beta (N - 1) + 1` nodes is exact.

use crate::{OracleError, OracleMethod, OracleResult, Potential, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss rule for `exp(-c (V(x) - V_min))`, with `log_mass` the log of its total mass
/// including the `V_min` shift.
#[derive(Clone, Debug)]
pub struct GaussRule {
    pub nodes: Vec<f64>,
    /// Normalized to sum to one.
    pub weights: Vec<f64>,
    pub log_mass: f64,
}

const PANELS: usize = 400;
const PANEL_NODES: usize = 24;

fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let j = DMatrix::from_fn(n, n, |i, k| {
        if i + 1 == k || k + 1 == i {
            let m = i.max(k) as f64;
            m / (4.0 * m * m - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let e = SymmetricEigen::new(j);
    let mut pairs: Vec<(f64, f64)> = (0..n).map(|i| (e.eigenvalues[i], 2.0 * e.eigenvectors[(0, i)].powi(2))).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    pairs.into_iter().unzip()
}

impl GaussRule {
    pub fn new(potential: &Potential, c: f64, n: usize) -> Result<Self> {
        if n == 0 || !(c > 0.0) {
            return Err(OracleError::InvalidInput("need n >= 1 and c > 0".into()));
        }
        let v = |x: f64| potential.eval(x);
        // a box where c (V - V(0)) >= 60 at both ends, trimmed to where c (V - V_min) < 45
        let mut lo = -1.0;
        let mut hi = 1.0;
        while c * (v(lo) - v(0.0)) < 60.0 || c * (v(hi) - v(0.0)) < 60.0 {
            lo *= 1.5;
            hi *= 1.5;
        }
        let grid = 20000;
        let xg: Vec<f64> = (0..=grid).map(|i| lo + (hi - lo) * i as f64 / grid as f64).collect();
        let vmin = xg.iter().map(|&x| v(x)).fold(f64::INFINITY, f64::min);
        let inside: Vec<usize> = (0..=grid).filter(|&i| c * (v(xg[i]) - vmin) < 45.0).collect();
        let a = xg[inside[0].saturating_sub(1)];
        let b = xg[(inside[inside.len() - 1] + 1).min(grid)];
        let (gx, gw) = gauss_legendre(PANEL_NODES);
        let h = (b - a) / PANELS as f64;
        let mut xs = Vec::with_capacity(PANELS * PANEL_NODES);
        let mut ws = Vec::with_capacity(PANELS * PANEL_NODES);
        for p in 0..PANELS {
            let mid = a + (p as f64 + 0.5) * h;
            for (t, w) in gx.iter().zip(&gw) {
                let x = mid + 0.5 * h * t;
                xs.push(x);
                ws.push(0.5 * h * w * (-c * (v(x) - vmin)).exp());
            }
        }
        let mass: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= mass);
        let (alpha, off) = stieltjes(&xs, &ws, n);
        let jac = DMatrix::from_fn(n, n, |i, k| {
            if i == k {
                alpha[i]
            } else if i + 1 == k || k + 1 == i {
                off[i.max(k)]
            } else {
                0.0
            }
        });
        let e = SymmetricEigen::new(jac);
        let mut pairs: Vec<(f64, f64)> = (0..n).map(|i| (e.eigenvalues[i], e.eigenvectors[(0, i)].powi(2))).collect();
        pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
        let (nodes, weights) = pairs.into_iter().unzip();
        Ok(GaussRule { nodes, weights, log_mass: mass.ln() - c * vmin })
    }
}

/// Jacobi matrix of a discrete probability measure: diagonal `alpha` and off-diagonal
/// `b[k]` between rows `k - 1` and `k` (orthonormal Stieltjes procedure).
fn stieltjes(xs: &[f64], ws: &[f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut alpha = vec![0.0; n];
    let mut off = vec![0.0; n];
    let mut q_prev = vec![0.0; xs.len()];
    let mut q = vec![1.0; xs.len()];
    for k in 0..n {
        alpha[k] = q.iter().zip(ws).zip(xs).map(|((q, w), x)| x * q * q * w).sum();
        if k + 1 == n {
            break;
        }
        let r: Vec<f64> = (0..xs.len()).map(|i| (xs[i] - alpha[k]) * q[i] - off[k] * q_prev[i]).collect();
        let b = r.iter().zip(ws).map(|(r, w)| r * r * w).sum::<f64>().sqrt();
        off[k + 1] = b;
        q_prev = std::mem::replace(&mut q, r.iter().map(|r| r / b).collect());
    }
    (alpha, off)
}

fn check_integer_beta(beta: f64) -> Result<u32> {
    if beta.fract() != 0.0 || beta < 1.0 || beta > 8.0 {
        return Err(OracleError::Unsupported(
            "quadrature needs integer beta in 1..=8 (|Delta|^{2 beta} is then a polynomial); use Monte Carlo".into(),
        ));
    }
    Ok(beta as u32)
}

/// `sum over strictly increasing index tuples of prod w |Delta|^{2 beta} g`, times `N!`.
fn ordered_sum(rule: &GaussRule, n: usize, beta: u32, g: &dyn Fn(&[f64]) -> f64) -> (f64, f64) {
    let m = rule.nodes.len();
    let mut idx: Vec<usize> = (0..n).collect();
    let mut x = vec![0.0; n];
    let mut z = 0.0;
    let mut zg = 0.0;
    if n > m {
        return (0.0, 0.0);
    }
    loop {
        let mut w = 1.0;
        for (i, &k) in idx.iter().enumerate() {
            x[i] = rule.nodes[k];
            w *= rule.weights[k];
        }
        let mut d = 1.0;
        for i in 0..n {
            for j in i + 1..n {
                d *= (x[j] - x[i]).powi(2 * beta as i32);
            }
        }
        z += w * d;
        zg += w * d * g(&x);
        // next combination
        let mut i = n;
        loop {
            if i == 0 {
                let fact: f64 = (1..=n).map(|k| k as f64).product();
                return (z * fact, zg * fact);
            }
            i -= 1;
            if idx[i] < m - n + i {
                idx[i] += 1;
                for j in i + 1..n {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// `log Z` by tensor Gauss quadrature; `N <= 6` and integer `beta`.
pub fn brute_force_log_z(potential: &Potential, n: usize, beta: f64, t0: f64) -> Result<OracleResult> {
    if n == 0 || n > 6 {
        return Err(OracleError::InvalidInput("quadrature is limited to 1 <= N <= 6".into()));
    }
    let b = check_integer_beta(beta)?;
    let c = n as f64 * beta / t0;
    let nodes = b as usize * (n - 1) + 1;
    let mut values = Vec::new();
    for extra in [n + 1, n + 3] {
        let rule = GaussRule::new(potential, c, nodes + extra)?;
        let (z, _) = ordered_sum(&rule, n, b, &|_| 1.0);
        values.push(z.ln() + n as f64 * rule.log_mass);
    }
    if (values[0] - values[1]).abs() > 1e-11 * (1.0 + values[1].abs()) {
        return Err(OracleError::NotConverged(format!("tensor rules disagree: {} vs {}", values[0], values[1])));
    }
    Ok(OracleResult {
        n,
        beta,
        potential: potential.clone(),
        t0,
        log_z: values[1],
        error_bar: 0.0,
        method: OracleMethod::Quadrature,
        flagged: false,
    })
}

/// `<g(x_1, .., x_N)>` for a symmetric `g`, with `nodes` Gauss nodes per variable.
pub fn expectation(potential: &Potential, n: usize, beta: f64, t0: f64, nodes: usize, g: &dyn Fn(&[f64]) -> f64) -> Result<f64> {
    let b = check_integer_beta(beta)?;
    let rule = GaussRule::new(potential, n as f64 * beta / t0, nodes)?;
    let (z, zg) = ordered_sum(&rule, n, b, g);
    Ok(zg / z)
}
