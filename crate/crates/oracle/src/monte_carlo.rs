//! Monte Carlo `log Z` by thermodynamic integration from the Gaussian.
//!
//! Along `V_s = V_0 + s (V - V_0)`, `d log Z/ds = -(N beta/t0) <sum_i (V - V_0)(x_i)>_s`;
//! the `s`-integral uses 16 Gauss-Legendre nodes and `log Z(V_0)` is the Mehta value.
//! The 16 node ensembles form one parallel-tempering ladder (swaps between neighbors);
//! independent chains give the Gelman-Rubin diagnostic, batch means the error bar.

use crate::mehta::mehta_log_z;
use crate::{OracleError, OracleMethod, OracleResult, Potential, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct McOptions {
    pub seed: u64,
    pub chains: usize,
    /// Sweeps per chain after burn-in; one sweep proposes a move for every particle.
    pub sweeps: usize,
    pub burn_in: usize,
    pub batches: usize,
    /// Flag the result when the largest R-hat exceeds this.
    pub r_hat_max: f64,
}

impl Default for McOptions {
    fn default() -> Self {
        McOptions { seed: 1, chains: 4, sweeps: 20000, burn_in: 2000, batches: 20, r_hat_max: 1.05 }
    }
}

const NODES: usize = 16;

/// Gauss-Legendre nodes and weights on `[0, 1]`.
fn legendre_01() -> (Vec<f64>, Vec<f64>) {
    let n = NODES;
    let j = nalgebra::DMatrix::from_fn(n, n, |i, k| {
        if i + 1 == k || k + 1 == i {
            let m = i.max(k) as f64;
            m / (4.0 * m * m - 1.0).sqrt()
        } else {
            0.0
        }
    });
    let e = nalgebra::SymmetricEigen::new(j);
    let mut p: Vec<(f64, f64)> = (0..n).map(|i| (0.5 * (1.0 + e.eigenvalues[i]), e.eigenvectors[(0, i)].powi(2))).collect();
    p.sort_by(|a, b| a.0.total_cmp(&b.0));
    p.into_iter().unzip()
}

struct Replica {
    x: Vec<f64>,
    s: f64,
    step: f64,
    accepted: usize,
    tried: usize,
}

struct Model<'a> {
    v0: &'a Potential,
    v1: &'a Potential,
    c: f64,
    beta: f64,
}

impl Model<'_> {
    fn one_body(&self, s: f64, x: f64) -> f64 {
        let a = self.v0.eval(x);
        self.c * (a + s * (self.v1.eval(x) - a))
    }

    fn delta(&self, x: &[f64]) -> f64 {
        x.iter().map(|&u| self.v1.eval(u) - self.v0.eval(u)).sum()
    }

    /// Energy change of moving particle `i` to `new`.
    fn move_cost(&self, r: &Replica, i: usize, new: f64) -> f64 {
        let old = r.x[i];
        let mut d = self.one_body(r.s, new) - self.one_body(r.s, old);
        for (j, &u) in r.x.iter().enumerate() {
            if j != i {
                d -= 2.0 * self.beta * ((new - u).abs().ln() - (old - u).abs().ln());
            }
        }
        d
    }
}

/// Per-node samples of `sum (V - V_0)` from one tempering chain.
fn run_chain(model: &Model, n: usize, nodes: &[f64], opts: &McOptions, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = (model.beta * n as f64).sqrt().recip().max(0.05);
    let mut reps: Vec<Replica> = nodes
        .iter()
        .map(|&s| Replica {
            x: (0..n).map(|k| (k as f64 - 0.5 * (n as f64 - 1.0)) * width).collect(),
            s,
            step: width,
            accepted: 0,
            tried: 0,
        })
        .collect();
    let mut out = vec![Vec::with_capacity(opts.sweeps); nodes.len()];
    for sweep in 0..opts.burn_in + opts.sweeps {
        for r in reps.iter_mut() {
            for i in 0..n {
                let new = r.x[i] + r.step * (2.0 * rng.gen::<f64>() - 1.0);
                let d = model.move_cost(r, i, new);
                r.tried += 1;
                if d <= 0.0 || rng.gen::<f64>() < (-d).exp() {
                    r.x[i] = new;
                    r.accepted += 1;
                }
            }
            if sweep < opts.burn_in && r.tried >= 200 {
                let rate = r.accepted as f64 / r.tried as f64;
                r.step *= if rate > 0.5 { 1.2 } else if rate < 0.3 { 0.8 } else { 1.0 };
                r.accepted = 0;
                r.tried = 0;
            }
        }
        // swap configurations between neighboring nodes
        for k in 0..reps.len() - 1 {
            let (da, db) = (model.delta(&reps[k].x), model.delta(&reps[k + 1].x));
            let arg = model.c * (reps[k + 1].s - reps[k].s) * (db - da);
            if arg >= 0.0 || rng.gen::<f64>() < arg.exp() {
                let (a, b) = reps.split_at_mut(k + 1);
                std::mem::swap(&mut a[k].x, &mut b[0].x);
            }
        }
        if sweep >= opts.burn_in {
            for (k, r) in reps.iter().enumerate() {
                out[k].push(model.delta(&r.x));
            }
        }
    }
    out
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
}

/// Gelman-Rubin potential scale reduction of equally long chains.
pub fn r_hat(chains: &[Vec<f64>]) -> f64 {
    let n = chains[0].len() as f64;
    let means: Vec<f64> = chains.iter().map(|c| mean(c)).collect();
    let w = mean(&chains.iter().map(|c| variance(c)).collect::<Vec<_>>());
    let b = n * variance(&means);
    (((n - 1.0) / n * w + b / n) / w).sqrt()
}

/// Monte Carlo `log Z` for `N <= 64`, any `beta > 0`.
pub fn monte_carlo_log_z(potential: &Potential, n: usize, beta: f64, t0: f64, opts: &McOptions) -> Result<OracleResult> {
    if n == 0 || n > 64 {
        return Err(OracleError::InvalidInput("Monte Carlo is limited to 1 <= N <= 64".into()));
    }
    if opts.chains < 2 || opts.sweeps < opts.batches * 10 {
        return Err(OracleError::InvalidInput("need at least 2 chains and 10 sweeps per batch".into()));
    }
    let t2 = potential.couplings.get(2).copied().filter(|&t| t > 0.0).unwrap_or(0.5);
    let v0 = Potential::gaussian(t2);
    let model = Model { v0: &v0, v1: potential, c: n as f64 * beta / t0, beta };
    let (nodes, weights) = legendre_01();
    let runs: Vec<Vec<Vec<f64>>> = (0..opts.chains)
        .into_par_iter()
        .map(|k| run_chain(&model, n, &nodes, opts, opts.seed.wrapping_mul(0x9E37_79B9).wrapping_add(k as u64)))
        .collect();
    let mut integral = 0.0;
    let mut var = 0.0;
    let mut worst: f64 = 1.0;
    for k in 0..NODES {
        let per_chain: Vec<Vec<f64>> = runs.iter().map(|r| r[k].clone()).collect();
        worst = worst.max(r_hat(&per_chain));
        let size = opts.sweeps / opts.batches;
        let batch_means: Vec<f64> = per_chain.iter().flat_map(|c| c.chunks(size).take(opts.batches).map(mean).collect::<Vec<_>>()).collect();
        integral += weights[k] * mean(&batch_means);
        var += weights[k].powi(2) * variance(&batch_means) / batch_means.len() as f64;
    }
    let base = mehta_log_z(n, beta, t0, t2)?.to_f64();
    Ok(OracleResult {
        n,
        beta,
        potential: potential.clone(),
        t0,
        log_z: base - model.c * integral,
        error_bar: model.c * var.sqrt(),
        method: OracleMethod::MonteCarlo,
        flagged: worst > opts.r_hat_max,
    })
}
