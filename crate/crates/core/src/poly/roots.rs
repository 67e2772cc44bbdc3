use super::poly::Poly;
use super::scalar::Scalar;
use crate::error::{Error, Result};
use num_complex::Complex64;

/// Distinct roots with multiplicities, sorted lexicographically by (re, im).
#[derive(Clone, Debug)]
pub struct Roots<T> {
    pub roots: Vec<(T, usize)>,
    /// Largest scaled residual `|p(r)| / (max |a_i| max(1, |r|)^deg)`.
    pub residual: f64,
}

const MAX_ITER: usize = 1000;

fn scaled_residual<T: Scalar>(p: &Poly<T>, z: &T) -> f64 {
    let norm = p.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    let n = p.degree().unwrap_or(0) as i32;
    p.eval(z).norm() / (norm * z.norm().max(1.0).powi(n)).max(f64::MIN_POSITIVE)
}

/// All complex roots of a polynomial by Aberth-Ehrlich iteration.
///
/// Close clusters of approximate roots are merged into one root with
/// multiplicity and polished by Newton's method on the matching derivative.
/// Fails when the scaled residual exceeds `tolerance`.
pub fn poly_roots<T: Scalar>(p: &Poly<T>, tolerance: f64) -> Result<Roots<T>> {
    let n = match p.degree() {
        None => return Err(Error::InvalidInput("the zero polynomial has no finite root set".into())),
        Some(0) => return Ok(Roots { roots: vec![], residual: 0.0 }),
        Some(n) => n,
    };
    let p = p.monic();
    let dp = p.derivative();
    let eps = T::epsilon();
    let tol = 4.0 * eps;

    let bound = (0..n)
        .map(|k| p.coeff(k).norm().powf(1.0 / (n - k) as f64))
        .fold(0.0, f64::max)
        .max(1e-3);
    let mut z: Vec<T> = (0..n)
        .map(|k| {
            let th = 2.0 * std::f64::consts::PI * k as f64 / n as f64 + 0.4;
            T::from_c64(Complex64::from_polar(bound, th))
        })
        .collect();

    let mut done = vec![false; n];
    for _ in 0..MAX_ITER {
        let mut moved = false;
        for k in 0..n {
            if done[k] {
                continue;
            }
            let pv = p.eval(&z[k]);
            if pv.is_zero() {
                done[k] = true;
                continue;
            }
            let w = pv.div(&dp.eval(&z[k]));
            let mut s = T::zero();
            for j in 0..n {
                if j != k {
                    let d = z[k].sub(&z[j]);
                    if !d.is_zero() {
                        s = s.add(&T::one().div(&d));
                    }
                }
            }
            let corr = w.div(&T::one().sub(&w.mul(&s)));
            let cn = corr.norm();
            if !cn.is_finite() {
                return Err(Error::RootsNotConverged(f64::INFINITY));
            }
            z[k] = z[k].sub(&corr);
            if cn <= tol * (1.0 + z[k].norm()) {
                done[k] = true;
            } else {
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }

    let scale = z.iter().map(|r| r.norm()).fold(1.0, f64::max);
    let radius = eps.powf(0.25) * scale;
    let mut label: Vec<usize> = (0..n).collect();
    for i in 0..n {
        for j in 0..i {
            if z[i].sub(&z[j]).norm() < radius {
                let (a, b) = (label[i], label[j]);
                for l in label.iter_mut() {
                    if *l == a {
                        *l = b;
                    }
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut seen: Vec<usize> = Vec::new();
    for i in 0..n {
        match seen.iter().position(|&l| l == label[i]) {
            Some(g) => groups[g].push(i),
            None => {
                seen.push(label[i]);
                groups.push(vec![i]);
            }
        }
    }

    let mut out = Vec::new();
    for g in groups {
        let m = g.len();
        let mut c = T::zero();
        for &i in &g {
            c = c.add(&z[i]);
        }
        c = c.div(&T::from_i64(m as i64));
        if m > 1 {
            let mut q = p.clone();
            for _ in 0..m - 1 {
                q = q.derivative();
            }
            let dq = q.derivative();
            for _ in 0..50 {
                let d = dq.eval(&c);
                if d.is_zero() {
                    break;
                }
                let step = q.eval(&c).div(&d);
                c = c.sub(&step);
                if step.norm() <= tol * (1.0 + c.norm()) {
                    break;
                }
            }
        }
        out.push((c, m));
    }
    out.sort_by(|a, b| {
        let (x, y) = (a.0.to_c64(), b.0.to_c64());
        x.re.partial_cmp(&y.re).unwrap().then(x.im.partial_cmp(&y.im).unwrap())
    });
    let residual = out.iter().map(|(r, _)| scaled_residual(&p, r)).fold(0.0, f64::max);
    if !residual.is_finite() || residual > tolerance.max(64.0 * eps) {
        return Err(Error::RootsNotConverged(residual));
    }
    Ok(Roots { roots: out, residual })
}
