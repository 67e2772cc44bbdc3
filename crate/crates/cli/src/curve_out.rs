//! Curve section of the output document in the three precision modes.

use crate::config::{JobConfig, Number, Precision};
use crate::format;
use betamm_core::curve::series::{asymptotic_residuals, planar_series};
use betamm_core::curve::{solve_quadratic_exact, SpectralCurve};
use betamm_core::poly::{bits_for_digits, set_mp_precision, Mp, Poly, Scalar};
use num_rational::BigRational;
use serde_json::{json, Value};

fn exact_derivative(potential: &[Number]) -> Poly<BigRational> {
    Poly::new(potential.iter().enumerate().skip(1).map(|(j, t)| &t.value * BigRational::from_integer(j.into())).collect())
}

fn to_mp(q: &BigRational) -> Mp {
    let prec = betamm_core::poly::mp_precision();
    let n = rug::Float::with_val(prec, rug::Float::parse(q.numer().to_string()).unwrap());
    let d = rug::Float::with_val(prec, rug::Float::parse(q.denom().to_string()).unwrap());
    Mp::from_parts(n / d, rug::Float::new(prec))
}

/// Newton refinement of one-cut endpoints in multiprecision, with a difference Jacobian.
fn refine_one_cut(cfg: &JobConfig, start: &[f64], digits: u32) -> (Vec<Mp>, f64) {
    set_mp_precision(bits_for_digits(digits));
    let dv = exact_derivative(&cfg.potential).map(to_mp);
    let t0 = to_mp(&cfg.t0.value);
    let mut mu: Vec<Mp> = start.iter().map(|&x| Mp::new(x, 0.0)).collect();
    let h = Mp::new(10f64.powi(-(digits as i32) / 2 - 4), 0.0);
    let res = |m: &[Mp]| asymptotic_residuals(&dv, m, &t0);
    let norm = |r: &[Mp]| r.iter().map(Scalar::norm).fold(0.0, f64::max);
    for _ in 0..40 {
        let r = res(&mu);
        if norm(&r) < 10f64.powi(-(digits as i32) - 2) {
            break;
        }
        let col = |i: usize| -> Vec<Mp> {
            let mut m = mu.clone();
            m[i] = m[i].add(&h);
            res(&m).iter().zip(&r).map(|(a, b)| a.sub(b).div(&h)).collect()
        };
        let (c0, c1) = (col(0), col(1));
        let det = c0[0].mul(&c1[1]).sub(&c1[0].mul(&c0[1]));
        let d0 = r[0].mul(&c1[1]).sub(&c1[0].mul(&r[1])).div(&det);
        let d1 = c0[0].mul(&r[1]).sub(&r[0].mul(&c0[1])).div(&det);
        mu[0] = mu[0].sub(&d0);
        mu[1] = mu[1].sub(&d1);
    }
    let r = norm(&res(&mu));
    (mu, r)
}

/// Planar data: endpoints and `W_{0,0}` at infinity in the requested arithmetic.
pub fn planar_section(cfg: &JobConfig, curve: &SpectralCurve, precision: Precision, order: usize) -> Value {
    let series_json = |coeffs: Vec<(i64, String)>| -> Value {
        Value::Array(coeffs.into_iter().map(|(e, c)| json!({ "power": e, "value": c })).collect())
    };
    let exponents = || (-(order as i64)..=0).rev();
    match precision {
        Precision::Rational => {
            let couplings: Vec<BigRational> = cfg.potential.iter().map(|n| n.value.clone()).collect();
            let exact = if curve.n_cuts() == 1 { solve_quadratic_exact(&couplings, &cfg.t0.value) } else { None };
            match exact {
                Some((a, b)) => {
                    let s = planar_series(&exact_derivative(&cfg.potential), &[a.clone(), b.clone()], order);
                    let coeffs = exponents().map(|e| (e, format::rational(&s.coeff(e).unwrap()))).collect();
                    json!({
                        "arithmetic": "rational",
                        "endpoints": [format::rational(&a), format::rational(&b)],
                        "w00_at_infinity": series_json(coeffs),
                    })
                }
                None => json!({
                    "arithmetic": "double",
                    "note": "no exact endpoints: the potential is not quadratic or 2 t0 / t2 is not a rational square",
                    "endpoints": format::reals(curve.endpoints()),
                    "w00_at_infinity": float_series(curve, order),
                }),
            }
        }
        Precision::Float50 | Precision::Float100 => {
            let digits = precision.digits().unwrap();
            if curve.n_cuts() != 1 {
                return json!({
                    "arithmetic": "double",
                    "note": "multiprecision refinement covers one-cut curves only",
                    "endpoints": format::reals(curve.endpoints()),
                    "w00_at_infinity": float_series(curve, order),
                });
            }
            let (mu, residual) = refine_one_cut(cfg, curve.endpoints(), digits);
            let s = planar_series(&exact_derivative(&cfg.potential).map(to_mp), &mu, order);
            let coeffs = exponents().map(|e| (e, format::mp(s.coeff(e).unwrap().real()))).collect();
            json!({
                "arithmetic": format!("mpfr, {digits} digits"),
                "endpoints": mu.iter().map(|m| format::mp(m.real())).collect::<Vec<_>>(),
                "asymptotic_residual": format::real(residual),
                "w00_at_infinity": series_json(coeffs),
            })
        }
    }
}

fn float_series(curve: &SpectralCurve, order: usize) -> Value {
    let mu: Vec<num_complex::Complex64> = curve.endpoints().iter().map(|&x| num_complex::Complex64::new(x, 0.0)).collect();
    let s = planar_series(&curve.potential.derivative(), &mu, order);
    Value::Array((-(order as i64)..=0).rev().map(|e| json!({ "power": e, "value": format::real(s.coeff(e).unwrap().re) })).collect())
}

/// Precision-independent description of the solved curve.
pub fn curve_section(curve: &SpectralCurve) -> Value {
    let dps: Vec<Value> = curve
        .double_points()
        .iter()
        .map(|(z, m)| json!({ "point": format::complex(*z), "multiplicity": m }))
        .collect();
    json!({
        "n_cuts": curve.n_cuts(),
        "genus": curve.genus(),
        "endpoints": format::reals(curve.endpoints()),
        "cut_fillings": format::reals(&(0..curve.n_cuts()).map(|i| curve.cut_filling(i)).collect::<Vec<_>>()),
        "moment_polynomial": curve.moment_poly().coeffs().iter().map(|&c| format::complex(c)).collect::<Vec<_>>(),
        "double_points": dps,
    })
}
