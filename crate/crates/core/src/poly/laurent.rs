use super::poly::Poly;
use super::rational::RationalFn;
use super::scalar::Scalar;
use crate::error::{Error, Result};
use std::collections::BTreeMap;

/// Largest expansion order accepted by [`series_at`].
pub const ORDER_CAP: i64 = 10_000;

#[derive(Clone, Debug, PartialEq)]
pub enum Center<T> {
    Infinity,
    At(T),
}

/// Truncated Laurent expansion.
///
/// At a finite center `c` the terms are `(p - c)^e` and every coefficient with
/// `e <= trunc` is known. At infinity the terms are `p^e` and every coefficient
/// with `e >= trunc` is known.
#[derive(Clone, Debug, PartialEq)]
pub struct LaurentSeries<T> {
    pub center: Center<T>,
    pub coeffs: BTreeMap<i64, T>,
    pub trunc: i64,
}

impl<T: Scalar> LaurentSeries<T> {
    pub fn new(center: Center<T>, coeffs: BTreeMap<i64, T>, trunc: i64) -> Self {
        let mut s = LaurentSeries { center, coeffs, trunc };
        s.clean();
        s
    }

    fn at_infinity(&self) -> bool {
        matches!(self.center, Center::Infinity)
    }

    fn known(&self, e: i64) -> bool {
        if self.at_infinity() {
            e >= self.trunc
        } else {
            e <= self.trunc
        }
    }

    fn clean(&mut self) {
        let t = self.trunc;
        let inf = self.at_infinity();
        self.coeffs.retain(|&e, c| !c.is_zero() && if inf { e >= t } else { e <= t });
    }

    /// Coefficient of the given exponent, or an error if it lies beyond the truncation.
    pub fn coeff(&self, e: i64) -> Result<T> {
        if !self.known(e) {
            return Err(Error::Unresolvable(e));
        }
        Ok(self.coeffs.get(&e).cloned().unwrap_or_else(T::zero))
    }

    /// Exponent of the most singular term (highest at infinity, lowest at a finite center).
    pub fn leading_exponent(&self) -> Option<i64> {
        if self.at_infinity() {
            self.coeffs.keys().next_back().copied()
        } else {
            self.coeffs.keys().next().copied()
        }
    }

    fn check_center(&self, o: &Self) -> Result<()> {
        if self.center != o.center {
            return Err(Error::InvalidInput("series have different centers".into()));
        }
        Ok(())
    }

    pub fn add(&self, o: &Self) -> Result<Self> {
        self.check_center(o)?;
        let trunc = if self.at_infinity() { self.trunc.max(o.trunc) } else { self.trunc.min(o.trunc) };
        let mut m = self.coeffs.clone();
        for (e, c) in &o.coeffs {
            let v = m.get(e).cloned().unwrap_or_else(T::zero).add(c);
            m.insert(*e, v);
        }
        Ok(LaurentSeries::new(self.center.clone(), m, trunc))
    }

    pub fn scale(&self, s: &T) -> Self {
        let m = self.coeffs.iter().map(|(e, c)| (*e, c.mul(s))).collect();
        LaurentSeries::new(self.center.clone(), m, self.trunc)
    }

    pub fn mul(&self, o: &Self) -> Result<Self> {
        self.check_center(o)?;
        let (la, lb) = (self.leading_exponent(), o.leading_exponent());
        let trunc = match (la, lb) {
            (Some(a), Some(b)) => {
                if self.at_infinity() {
                    (self.trunc + b).max(o.trunc + a)
                } else {
                    (self.trunc + b).min(o.trunc + a)
                }
            }
            (None, Some(b)) => self.trunc + b,
            (Some(a), None) => o.trunc + a,
            (None, None) => self.trunc + o.trunc,
        };
        let mut m: BTreeMap<i64, T> = BTreeMap::new();
        for (ea, ca) in &self.coeffs {
            for (eb, cb) in &o.coeffs {
                let e = ea + eb;
                let v = m.get(&e).cloned().unwrap_or_else(T::zero).add(&ca.mul(cb));
                m.insert(e, v);
            }
        }
        Ok(LaurentSeries::new(self.center.clone(), m, trunc))
    }

    /// Sums the known terms at a point `p` in the base coordinate.
    pub fn eval(&self, p: &T) -> T {
        let t = match &self.center {
            Center::Infinity => p.clone(),
            Center::At(c) => p.sub(c),
        };
        let mut acc = T::zero();
        for (e, c) in &self.coeffs {
            let mut term = c.clone();
            let base = if *e >= 0 { t.clone() } else { T::one().div(&t) };
            for _ in 0..e.unsigned_abs() {
                term = term.mul(&base);
            }
            acc = acc.add(&term);
        }
        acc
    }

    /// Residue of `f(p) dp` at the center; `res_inf dp/p = -1`.
    pub fn residue(&self) -> Result<T> {
        let c = self.coeff(-1)?;
        Ok(if self.at_infinity() { c.neg() } else { c })
    }
}

/// Power series quotient `a / b` to `n` terms, `b[0] != 0`.
pub fn series_div<T: Scalar>(a: &[T], b: &[T], n: usize) -> Vec<T> {
    let b0 = b[0].clone();
    let mut out: Vec<T> = Vec::with_capacity(n);
    for k in 0..n {
        let mut s = a.get(k).cloned().unwrap_or_else(T::zero);
        for j in 1..=k.min(b.len().saturating_sub(1)) {
            s = s.sub(&b[j].mul(&out[k - j]));
        }
        out.push(s.div(&b0));
    }
    out
}

fn valuation<T: Scalar>(c: &[T]) -> Option<usize> {
    if T::is_exact() {
        return c.iter().position(|x| !x.is_zero());
    }
    let scale = c.iter().map(|x| x.norm()).fold(0.0, f64::max);
    c.iter().position(|x| x.norm() > 1e-14 * scale)
}

/// Laurent expansion of a rational function.
///
/// At a finite center, terms up to `(p-c)^order` are produced. At infinity,
/// terms down to `p^(-order)` are produced.
pub fn series_at<T: Scalar>(f: &RationalFn<T>, center: &Center<T>, order: i64) -> Result<LaurentSeries<T>> {
    if order.abs() > ORDER_CAP {
        return Err(Error::OrderTooLarge { order, cap: ORDER_CAP });
    }
    if f.den.is_zero() {
        return Err(Error::DivisionByZero);
    }
    let mut m = BTreeMap::new();
    match center {
        Center::Infinity => {
            let (q, r) = f.num.div_rem(&f.den)?;
            for (k, c) in q.coeffs().iter().enumerate() {
                m.insert(k as i64, c.clone());
            }
            let dd = f.den.degree().unwrap();
            if order > 0 && !r.is_zero() {
                let rr = r.reversed(dd);
                let dr = f.den.reversed(dd + 1);
                let s = series_div(&rr, &dr, order as usize);
                for (j, c) in s.into_iter().enumerate() {
                    m.insert(-(j as i64) - 1, c);
                }
            }
            Ok(LaurentSeries::new(Center::Infinity, m, -order))
        }
        Center::At(c) => {
            let ns = f.num.shift(c);
            let ds = f.den.shift(c);
            let vd = valuation(ds.coeffs()).ok_or(Error::DivisionByZero)?;
            let vn = match valuation(ns.coeffs()) {
                Some(v) => v,
                None => return Ok(LaurentSeries::new(center.clone(), m, order)),
            };
            let lead = vn as i64 - vd as i64;
            if order >= lead {
                let n = (order - lead + 1) as usize;
                let s = series_div(&ns.coeffs()[vn..], &ds.coeffs()[vd..], n);
                for (j, v) in s.into_iter().enumerate() {
                    m.insert(lead + j as i64, v);
                }
            }
            Ok(LaurentSeries::new(center.clone(), m, order))
        }
    }
}

/// Residue of `f(p) dp` at a finite point or at infinity.
pub fn residue_at<T: Scalar>(f: &RationalFn<T>, point: &Center<T>) -> Result<T> {
    series_at(f, point, 1)?.residue()
}

/// Residue read off an already computed series. Fails when the series is
/// truncated before the `-1` exponent.
pub fn residue_of_series<T: Scalar>(s: &LaurentSeries<T>) -> Result<T> {
    s.residue()
}

/// Polynomial part (nonnegative powers) of an expansion at infinity.
pub fn polynomial_part<T: Scalar>(s: &LaurentSeries<T>) -> Result<Poly<T>> {
    if s.center != Center::Infinity {
        return Err(Error::InvalidInput("polynomial part needs an expansion at infinity".into()));
    }
    let top = s.leading_exponent().unwrap_or(-1).max(-1);
    Ok(Poly::new((0..=top).map(|k| s.coeff(k).unwrap_or_else(|_| T::zero())).collect()))
}
