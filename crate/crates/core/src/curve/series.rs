//! Expansions at infinity of `ytilde(p) = prod (p - mu_a)^(1/2)` and of the
//! quantities built from it, generic over the scalar field.

use crate::poly::{Center, LaurentSeries, Poly, Scalar};
use std::collections::BTreeMap;

/// Coefficients `s_k` of `prod_a (1 - mu_a u)^e` for `e = +1/2` or `-1/2`.
pub fn sqrt_product_series<T: Scalar>(endpoints: &[T], half_power_sign: i64, len: usize) -> Vec<T> {
    let mut bin = vec![T::one()];
    for k in 1..len as i64 {
        // (1 - x)^(s/2): c_k = c_{k-1} (k - 1 - s/2) / k
        let num = T::from_ratio(2 * (k - 1) - half_power_sign, 2);
        let prev = bin[k as usize - 1].clone();
        bin.push(prev.mul(&num).div(&T::from_i64(k)));
    }
    let mut acc = vec![T::zero(); len];
    acc[0] = T::one();
    for mu in endpoints {
        let mut f = Vec::with_capacity(len);
        let mut pw = T::one();
        for b in bin.iter().take(len) {
            f.push(b.mul(&pw));
            pw = pw.mul(mu);
        }
        let mut next = vec![T::zero(); len];
        for i in 0..len {
            if acc[i].is_zero() {
                continue;
            }
            for j in 0..len - i {
                next[i + j] = next[i + j].add(&acc[i].mul(&f[j]));
            }
        }
        acc = next;
    }
    acc
}

/// `M(p) = (1/2) [V'(p) / ytilde(p)]_+`.
pub fn moment_polynomial<T: Scalar>(dv: &Poly<T>, endpoints: &[T]) -> Poly<T> {
    let n = endpoints.len() / 2;
    let m = dv.degree().unwrap_or(0);
    if m < n {
        return Poly::zero();
    }
    let s = sqrt_product_series(endpoints, -1, m + 1);
    let half = T::from_ratio(1, 2);
    let coeffs = (0..=m - n)
        .map(|i| {
            let mut c = T::zero();
            for j in (n + i)..=m {
                c = c.add(&dv.coeff(j).mul(&s[j - n - i]));
            }
            c.mul(&half)
        })
        .collect();
    Poly::new(coeffs)
}

/// Residuals `-(1/2) [p^{-1-k}] V'/ytilde + t0 delta_{kn}` for `k = 0..n`.
pub fn asymptotic_residuals<T: Scalar>(dv: &Poly<T>, endpoints: &[T], t0: &T) -> Vec<T> {
    let n = endpoints.len() / 2;
    let m = dv.degree().unwrap_or(0);
    let s = sqrt_product_series(endpoints, -1, m + 3);
    let half = T::from_ratio(1, 2);
    (0..=n)
        .map(|k| {
            let mut c = T::zero();
            for j in 0..=m {
                let idx = j as i64 - n as i64 + 1 + k as i64;
                if idx >= 0 {
                    c = c.add(&dv.coeff(j).mul(&s[idx as usize]));
                }
            }
            let mut r = c.mul(&half).neg();
            if k == n {
                r = r.add(t0);
            }
            r
        })
        .collect()
}

/// Expansion of `W_{0,0}(p) = V'(p)/2 - M(p) ytilde(p)` at infinity down to `p^{-order}`.
pub fn planar_series<T: Scalar>(dv: &Poly<T>, endpoints: &[T], order: usize) -> LaurentSeries<T> {
    let n = endpoints.len() / 2;
    let mm = moment_polynomial(dv, endpoints);
    let dm = mm.degree().unwrap_or(0);
    let len = dm + n + order + 1;
    let s = sqrt_product_series(endpoints, 1, len);
    let mut map = BTreeMap::new();
    // M(p) p^n sum_k s_k p^{-k}
    for (i, mc) in mm.coeffs().iter().enumerate() {
        for (k, sk) in s.iter().enumerate() {
            let e = i as i64 + n as i64 - k as i64;
            if e < -(order as i64) {
                continue;
            }
            let v: T = map.get(&e).cloned().unwrap_or_else(T::zero);
            map.insert(e, v.sub(&mc.mul(sk)));
        }
    }
    let half = T::from_ratio(1, 2);
    for (j, c) in dv.coeffs().iter().enumerate() {
        let e = j as i64;
        let v: T = map.get(&e).cloned().unwrap_or_else(T::zero);
        map.insert(e, v.add(&c.mul(&half)));
    }
    LaurentSeries::new(Center::Infinity, map, -(order as i64))
}
