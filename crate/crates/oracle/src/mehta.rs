//! Exact Gaussian partition functions and their large-`N` expansion.
//!
//! For `V = t2 x^2` the Mehta integral gives
//!
//! ```text
//! log Z = (N + beta N (N-1))/2 log(t0 / (2 N beta t2)) + N/2 log(2 pi)
//!         + sum_{j=1}^N [log Gamma(1 + j beta) - log Gamma(1 + beta)].
//! ```
//!
//! The expansion applies Euler-Maclaurin to `f(x) = log Gamma(1 + beta x)` with the
//! Stirling series for `f` at large `x`; the `N`-independent constant, which the
//! asymptotic series does not determine, is measured against the exact sum at large `N`.

use crate::{OracleError, Result};
use rug::float::Constant;
use rug::ops::Pow;
use rug::{Float, Rational};
use std::collections::BTreeMap;

/// Working precision of the oracle in bits (about 77 decimal digits).
pub const PRECISION: u32 = 256;

fn fl(x: f64) -> Float {
    Float::with_val(PRECISION, x)
}

/// Bernoulli numbers `B_0 ..= B_n` as exact rationals.
pub fn bernoulli(n: usize) -> Vec<Rational> {
    let mut b = vec![Rational::new(); n + 1];
    b[0] = Rational::from(1);
    for m in 1..=n {
        let mut s = Rational::new();
        let mut binom = rug::Integer::from(1);
        for k in 0..m {
            s += Rational::from(&binom) * &b[k];
            binom = binom * (m + 1 - k) / (k + 1);
        }
        b[m] = -s / Rational::from(m + 1);
    }
    b
}

/// Exact `log Z` of the Gaussian beta ensemble, weight `|Delta|^{2 beta} exp(-(N beta/t0) t2 sum x^2)`.
pub fn mehta_log_z(n: usize, beta: f64, t0: f64, t2: f64) -> Result<Float> {
    if n == 0 || !(beta > 0.0) || !(t0 > 0.0) || !(t2 > 0.0) {
        return Err(OracleError::InvalidInput("need N >= 1 and beta, t0, t2 > 0".into()));
    }
    let nf = n as f64;
    let b = fl(beta);
    let scale = Float::with_val(PRECISION, fl(t0) / (fl(2.0 * nf * beta) * fl(t2))).ln();
    let power = fl(nf) + fl(beta) * fl(nf * (nf - 1.0));
    let two_pi = Float::with_val(PRECISION, Constant::Pi) * 2u32;
    let mut out = power * scale / 2u32 + fl(nf) * two_pi.ln() / 2u32;
    let g1 = Float::with_val(PRECISION, &b + 1u32).ln_gamma();
    for j in 1..=n {
        out += Float::with_val(PRECISION, Float::with_val(PRECISION, &b * j as u32) + 1u32).ln_gamma() - &g1;
    }
    Ok(out)
}

/// Finite sum `sum_{a,b} c_{a,b} x^a (log x)^b` with `b` in `{0, 1}`.
#[derive(Clone, Debug, Default)]
struct LogPoly {
    terms: BTreeMap<(i32, u8), Float>,
}

impl LogPoly {
    fn add(&mut self, a: i32, b: u8, c: Float) {
        *self.terms.entry((a, b)).or_insert_with(|| fl(0.0)) += c;
    }

    fn scaled(&self, s: &Float) -> LogPoly {
        let mut out = LogPoly::default();
        for (&(a, b), c) in &self.terms {
            out.add(a, b, Float::with_val(PRECISION, c * s));
        }
        out
    }

    fn extend(&mut self, other: &LogPoly) {
        for (&(a, b), c) in &other.terms {
            self.add(a, b, c.clone());
        }
    }

    fn derivative(&self) -> LogPoly {
        let mut out = LogPoly::default();
        for (&(a, b), c) in &self.terms {
            if a != 0 {
                out.add(a - 1, b, Float::with_val(PRECISION, c * a));
            }
            if b == 1 {
                out.add(a - 1, 0, c.clone());
            }
        }
        out
    }

    fn antiderivative(&self) -> LogPoly {
        let mut out = LogPoly::default();
        for (&(a, b), c) in &self.terms {
            match (a, b) {
                (-1, 0) => out.add(0, 1, c.clone()),
                (-1, _) => unreachable!("log x / x does not occur"),
                (_, 0) => out.add(a + 1, 0, Float::with_val(PRECISION, c / (a + 1))),
                _ => {
                    out.add(a + 1, 1, Float::with_val(PRECISION, c / (a + 1)));
                    out.add(a + 1, 0, -Float::with_val(PRECISION, c / ((a + 1) * (a + 1))));
                }
            }
        }
        out
    }

    fn eval(&self, x: &Float) -> Float {
        let lx = Float::with_val(PRECISION, x.ln_ref());
        let mut s = fl(0.0);
        for (&(a, b), c) in &self.terms {
            let mut t = Float::with_val(PRECISION, x.pow(a)) * c;
            if b == 1 {
                t *= &lx;
            }
            s += t;
        }
        s
    }

    fn truncated(mut self, lowest: i32) -> LogPoly {
        self.terms.retain(|&(a, _), _| a >= lowest);
        self
    }
}

/// Stirling series of `log Gamma(1 + beta x)` through `x^{1 - 2m}`.
fn stirling(beta: &Float, m: usize, bern: &[Rational]) -> LogPoly {
    let mut f = LogPoly::default();
    let lb = Float::with_val(PRECISION, beta.ln_ref());
    let two_pi = Float::with_val(PRECISION, Constant::Pi) * 2u32;
    f.add(1, 1, beta.clone());
    f.add(1, 0, Float::with_val(PRECISION, beta * &lb) - beta);
    f.add(0, 1, fl(0.5));
    f.add(0, 0, (lb + two_pi.ln()) / 2u32);
    for k in 1..=m {
        let c = Float::with_val(PRECISION, &bern[2 * k]) / ((2 * k * (2 * k - 1)) as u32) / Float::with_val(PRECISION, beta.pow(2 * k as i32 - 1));
        f.add(1 - 2 * k as i32, 0, c);
    }
    f
}

/// Asymptotic expansion of `sum_{j=1}^N f(j)` without its constant, through `N^{-lowest}`.
fn euler_maclaurin(f: &LogPoly, lowest: i32, bern: &[Rational]) -> LogPoly {
    let mut s = f.antiderivative();
    s.extend(&f.scaled(&fl(0.5)));
    let mut d = f.derivative();
    let mut fact = Rational::from(2);
    let p_max = (lowest as usize) / 2 + 3;
    for p in 1..=p_max {
        let c = Float::with_val(PRECISION, &bern[2 * p]) / Float::with_val(PRECISION, &fact);
        s.extend(&d.scaled(&c));
        d = d.derivative().derivative();
        fact *= Rational::from((2 * p + 1) * (2 * p + 2));
    }
    s.truncated(-lowest)
}

/// Large-`N` form of `log Z`: `sum_{a,b} e_{a,b} N^a (log N)^b`, with the constant in `(0, 0)`.
#[derive(Clone, Debug)]
pub struct MehtaAsymptotics {
    pub beta: f64,
    pub t0: f64,
    pub t2: f64,
    terms: BTreeMap<(i32, u8), Float>,
}

impl MehtaAsymptotics {
    /// Expansion through `N^{-lowest}`.
    pub fn new(beta: f64, t0: f64, t2: f64, lowest: usize) -> Result<Self> {
        mehta_log_z(1, beta, t0, t2)?;
        let mut out = MehtaAsymptotics::without_constant(beta, t0, t2, lowest as i32)?;
        // the constant: exact minus asymptotic at a large N, with a deeper expansion
        let deep = MehtaAsymptotics::without_constant(beta, t0, t2, 40)?;
        let nbig = 400usize;
        let c = mehta_log_z(nbig, beta, t0, t2)? - deep.eval_float(&fl(nbig as f64));
        out.terms.insert((0, 0), out.terms.get(&(0, 0)).cloned().unwrap_or_else(|| fl(0.0)) + c);
        Ok(out)
    }

    fn without_constant(beta: f64, t0: f64, t2: f64, lowest: i32) -> Result<Self> {
        let m = lowest as usize / 2 + 4;
        let bern = bernoulli(2 * m + 8);
        let b = fl(beta);
        let mut z = euler_maclaurin(&stirling(&b, m, &bern), lowest, &bern);
        let l = Float::with_val(PRECISION, fl(t0) / (fl(2.0 * beta) * fl(t2))).ln();
        let two_pi = Float::with_val(PRECISION, Constant::Pi) * 2u32;
        let g1 = Float::with_val(PRECISION, &b + 1u32).ln_gamma();
        let half_b = Float::with_val(PRECISION, &b / 2u32);
        let half_1mb = Float::with_val(PRECISION, (fl(1.0) - &b) / 2u32);
        z.add(2, 0, Float::with_val(PRECISION, &half_b * &l));
        z.add(2, 1, -half_b.clone());
        z.add(1, 0, Float::with_val(PRECISION, &half_1mb * &l) + two_pi.ln() / 2u32 - g1);
        z.add(1, 1, -half_1mb);
        Ok(MehtaAsymptotics { beta, t0, t2, terms: z.truncated(-lowest).terms })
    }

    /// Coefficient of `N^a (log N)^b`.
    pub fn coefficient(&self, a: i32, b: u8) -> Float {
        self.terms.get(&(a, b)).cloned().unwrap_or_else(|| fl(0.0))
    }

    fn eval_float(&self, n: &Float) -> Float {
        LogPoly { terms: self.terms.clone() }.eval(n)
    }

    /// Truncated asymptotic value of `log Z` at `N`.
    pub fn eval(&self, n: f64) -> Float {
        self.eval_float(&fl(n))
    }

    /// The same expansion in `hbar = t0/(N sqrt(beta))` for the free energy `F = -log Z`:
    /// `F ~ sum_L hbar^L (c_L + d_L log hbar)`. Returns `(L, c_L, d_L)` for `L >= -2`.
    pub fn free_energy_levels(&self) -> Vec<(i32, Float, Float)> {
        let kappa = Float::with_val(PRECISION, fl(self.t0) / fl(self.beta).sqrt());
        let lk = Float::with_val(PRECISION, kappa.ln_ref());
        let lowest = self.terms.keys().map(|k| k.0).min().unwrap_or(0);
        (lowest..=2)
            .rev()
            .map(|a| {
                let ka = Float::with_val(PRECISION, kappa.clone().pow(a));
                let e0 = self.coefficient(a, 0);
                let e1 = self.coefficient(a, 1);
                let c = -Float::with_val(PRECISION, &ka * (e0 + Float::with_val(PRECISION, &e1 * &lk)));
                let d = Float::with_val(PRECISION, &ka * &e1);
                (-a, c, d)
            })
            .collect()
    }
}

/// Split of the Gaussian free-energy levels into `F_{k,l}` by fitting polynomials in `gamma`.
#[derive(Clone, Debug)]
pub struct MehtaExpansion {
    pub t0: f64,
    pub t2: f64,
    pub betas: Vec<f64>,
    /// `F_{k,l}` at 40+ digits.
    pub entries: BTreeMap<(usize, usize), Float>,
    /// Coefficients `d_L` of `hbar^L log hbar`, per sampled beta.
    pub log_terms: Vec<BTreeMap<i32, Float>>,
    /// Largest least-squares residual over levels.
    pub residual: f64,
    /// Largest condition number over the per-level fits.
    pub condition: f64,
}

/// `F_{k,l}` of the Gaussian model through `max_level = 2k + l - 2`, from the expansion
/// at each of `betas` (at least `max_level/2 + 2` distinct values, `beta = 1` counts).
///
/// The level-`L` coefficient at fixed `beta` is a polynomial in `gamma` up to an
/// `N`-normalization part that depends on `beta` alone (no `1/N!`, no volume factors in
/// the integral). That part does not depend on `t2`, so differences in `t2` of the
/// fitted entries are exact; `residual` measures its size.
pub fn mehta_expansion(t0: f64, t2: f64, max_level: usize, betas: &[f64]) -> Result<MehtaExpansion> {
    if max_level > 6 {
        return Err(OracleError::InvalidInput("max_level is capped at 6".into()));
    }
    let need = max_level / 2 + 2;
    let mut distinct = betas.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < need {
        return Err(OracleError::IllConditioned(format!("{} distinct beta samples, need at least {need}", distinct.len())));
    }
    let levels: Vec<Vec<(i32, Float, Float)>> = betas
        .iter()
        .map(|&b| MehtaAsymptotics::new(b, t0, t2, max_level).map(|a| a.free_energy_levels()))
        .collect::<Result<_>>()?;
    let gammas: Vec<Float> = betas.iter().map(|&b| Float::with_val(PRECISION, fl(b).sqrt() - fl(b).sqrt().recip())).collect();
    let mut entries = BTreeMap::new();
    let mut residual: f64 = 0.0;
    let mut condition: f64 = 0.0;
    for lev in -2..=max_level as i32 {
        // unknowns F_{k,l} with l = L + 2 - 2k
        let ls: Vec<usize> = (0..=((lev + 2) / 2) as usize).map(|k| (lev + 2) as usize - 2 * k).collect();
        let rows: Vec<Vec<Float>> = gammas.iter().map(|g| ls.iter().map(|&l| Float::with_val(PRECISION, g.clone().pow(l as u32))).collect()).collect();
        let rhs: Vec<Float> = levels.iter().map(|lv| lv.iter().find(|e| e.0 == lev).unwrap().1.clone()).collect();
        let (x, res, cond) = least_squares(&rows, &rhs)?;
        residual = residual.max(res);
        condition = condition.max(cond);
        for (i, &l) in ls.iter().enumerate() {
            entries.insert((((lev + 2) as usize - l) / 2, l), x[i].clone());
        }
    }
    if condition > 1e12 {
        return Err(OracleError::IllConditioned(format!("condition number {condition:e}; use more spread beta samples")));
    }
    let log_terms = levels.iter().map(|lv| lv.iter().map(|(l, _, d)| (*l, d.clone())).collect()).collect();
    Ok(MehtaExpansion { t0, t2, betas: betas.to_vec(), entries, log_terms, residual, condition })
}

/// High-precision least squares through the normal equations, with the condition
/// number of the column-scaled design matrix estimated in f64.
fn least_squares(rows: &[Vec<Float>], rhs: &[Float]) -> Result<(Vec<Float>, f64, f64)> {
    let n = rows[0].len();
    let mut a: Vec<Vec<Float>> = vec![vec![fl(0.0); n + 1]; n];
    for (r, y) in rows.iter().zip(rhs) {
        for i in 0..n {
            for j in 0..n {
                a[i][j] += Float::with_val(PRECISION, &r[i] * &r[j]);
            }
            a[i][n] += Float::with_val(PRECISION, &r[i] * y);
        }
    }
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].clone().abs().total_cmp(&a[j][c].clone().abs())).unwrap();
        a.swap(c, p);
        if a[c][c].is_zero() {
            return Err(OracleError::IllConditioned("singular gamma design".into()));
        }
        for i in 0..n {
            if i != c {
                let f = Float::with_val(PRECISION, &a[i][c] / &a[c][c]);
                for j in c..=n {
                    let t = Float::with_val(PRECISION, &f * &a[c][j]);
                    a[i][j] -= t;
                }
            }
        }
    }
    let x: Vec<Float> = (0..n).map(|i| Float::with_val(PRECISION, &a[i][n] / &a[i][i])).collect();
    let mut res: f64 = 0.0;
    for (r, y) in rows.iter().zip(rhs) {
        let mut s = y.clone();
        for i in 0..n {
            s -= Float::with_val(PRECISION, &r[i] * &x[i]);
        }
        res = res.max(s.to_f64().abs());
    }
    let m = nalgebra::DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j].to_f64());
    let norms: Vec<f64> = (0..n).map(|j| m.column(j).norm()).collect();
    let scaled = nalgebra::DMatrix::from_fn(rows.len(), n, |i, j| m[(i, j)] / norms[j]);
    let sv = scaled.singular_values();
    let cond = sv.max() / sv.min();
    Ok((x, res, cond))
}
