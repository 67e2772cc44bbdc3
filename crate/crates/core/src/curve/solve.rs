use super::potential::{FillingData, Potential};
use super::{filling_integral, series, SpectralCurve};
use crate::error::{Error, Result};
use crate::poly::Poly;
use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_complex::Complex64 as C;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

/// Starting point for the endpoint solver.
#[derive(Clone, Debug, PartialEq)]
pub enum InitialGuess {
    /// Gaussian-scaled interval around the global minimum; one cut only.
    Auto,
    /// Explicit sorted endpoints.
    Explicit(Vec<f64>),
    /// One Gaussian-scaled interval per real local minimum of `V`,
    /// loaded with the requested filling.
    Wells,
}

const MAX_ITER: usize = 200;

fn residual_vector(dv: &Poly<C>, filling: &FillingData, mu: &[f64]) -> DVector<f64> {
    let muc: Vec<C> = mu.iter().map(|&x| C::new(x, 0.0)).collect();
    let n = mu.len() / 2;
    let mut r: Vec<f64> = series::asymptotic_residuals(dv, &muc, &C::new(filling.t0, 0.0)).iter().map(|c| c.re).collect();
    if n > 1 {
        let mm = series::moment_polynomial(dv, &muc);
        for (i, s) in filling.fractions.iter().enumerate() {
            r.push(filling_integral(&mm, mu, i) - s);
        }
    }
    DVector::from_vec(r)
}

fn jacobian(dv: &Poly<C>, filling: &FillingData, mu: &[f64]) -> DMatrix<f64> {
    let n2 = mu.len();
    let n = n2 / 2;
    let muc: Vec<C> = mu.iter().map(|&x| C::new(x, 0.0)).collect();
    let m = dv.degree().unwrap_or(0);
    let len = m + 3;
    let s = series::sqrt_product_series(&muc, -1, len);
    let mut jac = DMatrix::zeros(n2, n2);
    for (a, &mua) in mu.iter().enumerate() {
        // d/dmu_a of prod (1 - mu u)^(-1/2) = (u/2) (1 - mu_a u)^(-1) prod(...)
        let mut d = vec![C::new(0.0, 0.0); len];
        for k in 1..len {
            let mut acc = C::new(0.0, 0.0);
            let mut pw = 1.0;
            for i in 0..k {
                acc += s[k - 1 - i] * pw;
                pw *= mua;
            }
            d[k] = acc * 0.5;
        }
        for k in 0..=n {
            let mut c = C::new(0.0, 0.0);
            for j in 0..=m {
                let idx = j as i64 - n as i64 + 1 + k as i64;
                if idx >= 0 {
                    c += dv.coeff(j) * d[idx as usize];
                }
            }
            jac[(k, a)] = -0.5 * c.re;
        }
    }
    if n > 1 {
        let scale = mu.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        let h = 1e-7 * scale;
        for a in 0..n2 {
            let mut up = mu.to_vec();
            let mut dn = mu.to_vec();
            up[a] += h;
            dn[a] -= h;
            let fu = residual_vector(dv, filling, &up);
            let fd = residual_vector(dv, filling, &dn);
            for i in n + 1..n2 {
                jac[(i, a)] = (fu[i] - fd[i]) / (2.0 * h);
            }
        }
    }
    jac
}

fn check_separation(mu: &[f64]) -> Result<()> {
    let span = mu[mu.len() - 1] - mu[0];
    for i in 0..mu.len() - 1 {
        if !(mu[i + 1] - mu[i] > 1e-8 * span) {
            return Err(Error::DegenerateCut(i, i + 1));
        }
    }
    Ok(())
}

fn newton(dv: &Poly<C>, filling: &FillingData, start: Vec<f64>) -> Result<Vec<f64>> {
    let mut mu = start;
    let mut r = residual_vector(dv, filling, &mu);
    let tol = 1e-14 * filling.t0.max(1.0);
    for it in 0..MAX_ITER {
        let norm = r.amax();
        if norm <= tol {
            check_separation(&mu)?;
            return Ok(mu);
        }
        let jac = jacobian(dv, filling, &mu);
        let step = match jac.clone().lu().solve(&(-&r)) {
            Some(s) => s,
            None => return Err(Error::NewtonFailed { iterations: it, residual: norm }),
        };
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<f64> = mu.iter().zip(step.iter()).map(|(m, d)| m + lambda * d).collect();
            if trial.windows(2).all(|w| w[0] < w[1]) {
                let rt = residual_vector(dv, filling, &trial);
                if rt.iter().all(|v| v.is_finite()) && rt.amax() < norm {
                    mu = trial;
                    r = rt;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if norm <= 1e-12 * filling.t0.max(1.0) {
                check_separation(&mu)?;
                return Ok(mu);
            }
            check_separation(&mu)?;
            return Err(Error::NewtonFailed { iterations: it, residual: norm });
        }
    }
    Err(Error::NewtonFailed { iterations: MAX_ITER, residual: r.amax() })
}

fn gaussian_interval(v: &Potential, x: f64, t0: f64) -> (f64, f64) {
    let k = v.eval_derivative(x, 2);
    let half = if k > 1e-8 {
        2.0 * (t0 / k).sqrt()
    } else {
        let lead = v.couplings().last().unwrap().abs();
        (t0 / lead).powf(1.0 / (v.degree() as f64)) * 2.0
    };
    (x - half, x + half)
}

fn global_minimum(v: &Potential) -> f64 {
    let mins = v.local_minima();
    mins.into_iter().fold(None, |best: Option<f64>, x| match best {
        Some(b) if v.eval(b) <= v.eval(x) => Some(b),
        _ => Some(x),
    })
    .unwrap_or(0.0)
}

/// Solves the asymptotic and filling conditions for the `2 n` endpoints.
pub fn solve_endpoints(potential: &Potential, filling: &FillingData, n_cuts: usize, guess: &InitialGuess) -> Result<SpectralCurve> {
    if n_cuts == 0 {
        return Err(Error::InvalidInput("at least one cut is required".into()));
    }
    if potential.m() < n_cuts {
        return Err(Error::InvalidInput(format!("deg V' = {} is smaller than the number of cuts {}", potential.m(), n_cuts)));
    }
    if filling.fractions.len() + 1 != n_cuts {
        return Err(Error::InvalidInput(format!("{} cuts need {} filling fractions", n_cuts, n_cuts - 1)));
    }
    let dv = potential.derivative();
    let t = potential.couplings();
    if n_cuts == 1 && potential.degree() == 2 {
        let (c, h) = (-t[1] / (2.0 * t[2]), (2.0 * filling.t0 / t[2]).sqrt());
        if t[2] > 0.0 {
            return SpectralCurve::from_endpoints(potential.clone(), filling.clone(), vec![c - h, c + h]);
        }
    }
    let start: Vec<f64> = match guess {
        InitialGuess::Explicit(v) => {
            if v.len() != 2 * n_cuts {
                return Err(Error::InvalidInput(format!("expected {} endpoints in the guess", 2 * n_cuts)));
            }
            v.clone()
        }
        InitialGuess::Auto => {
            if n_cuts > 1 {
                return Err(Error::InvalidInput("multi-cut solutions need an explicit guess or the wells ansatz".into()));
            }
            let (a, b) = gaussian_interval(potential, global_minimum(potential), filling.t0);
            vec![a, b]
        }
        InitialGuess::Wells => {
            let mins = potential.local_minima();
            if mins.len() < n_cuts {
                return Err(Error::InvalidInput(format!("the potential has {} wells, fewer than {} cuts", mins.len(), n_cuts)));
            }
            let mut chosen = mins.clone();
            chosen.sort_by(|a, b| potential.eval(*a).partial_cmp(&potential.eval(*b)).unwrap());
            chosen.truncate(n_cuts);
            chosen.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let loads = filling.per_cut();
            if loads.iter().any(|&s| s <= 0.0) {
                return Err(Error::InvalidInput("every cut needs a positive filling".into()));
            }
            chosen
                .iter()
                .zip(&loads)
                .flat_map(|(&x, &s)| {
                    let (a, b) = gaussian_interval(potential, x, s);
                    [a, b]
                })
                .collect()
        }
    };
    let mu = match newton(&dv, filling, start.clone()) {
        Ok(mu) => mu,
        Err(e) if n_cuts == 1 && !matches!(guess, InitialGuess::Explicit(_)) => continuation(potential, filling, &dv).map_err(|_| e)?,
        Err(e) => return Err(e),
    };
    SpectralCurve::from_endpoints(potential.clone(), filling.clone(), mu)
}

/// One-cut continuation in `t0` from a small, nearly Gaussian filling.
fn continuation(potential: &Potential, filling: &FillingData, dv: &Poly<C>) -> Result<Vec<f64>> {
    let x = global_minimum(potential);
    let steps = 40;
    let mut mu: Option<Vec<f64>> = None;
    for k in (0..=steps).rev() {
        let t = filling.t0 * 0.7f64.powi(k);
        let f = FillingData { t0: t, fractions: vec![] };
        let start = match &mu {
            Some(m) => m.iter().map(|v| x + (v - x) * (1.0 / 0.7f64).sqrt()).collect(),
            None => {
                let (a, b) = gaussian_interval(potential, x, t);
                vec![a, b]
            }
        };
        mu = Some(newton(dv, &f, start)?);
    }
    Ok(mu.unwrap())
}

/// Exact endpoints of a quadratic potential when `2 t0 / t2` is a rational square.
pub fn solve_quadratic_exact(couplings: &[BigRational], t0: &BigRational) -> Option<(BigRational, BigRational)> {
    if couplings.len() != 3 || !couplings[2].is_positive() || !t0.is_positive() {
        return None;
    }
    let two = BigRational::from_integer(BigInt::from(2));
    let c = -&couplings[1] / (&two * &couplings[2]);
    let sq = &two * t0 / &couplings[2];
    let (n, d) = (sq.numer().clone(), sq.denom().clone());
    let (rn, rd) = (n.sqrt(), d.sqrt());
    if &rn * &rn != n || &rd * &rd != d || rd.is_zero() {
        return None;
    }
    let h = BigRational::new(rn, rd);
    Some((&c - &h, &c + &h))
}
