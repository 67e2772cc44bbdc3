//! Truncated Taylor expansions `sum_k c_k eps^k` used to carry derivatives
//! through the loop-equation recursion.

use crate::poly::Poly;
use num_complex::Complex64 as C;
use std::ops::{Add, Mul, Neg, Sub};

pub const JET_MAX: usize = 24;

#[derive(Clone, Copy, Debug)]
pub struct Jet {
    n: usize,
    c: [C; JET_MAX],
}

const Z: C = C::new(0.0, 0.0);

impl Jet {
    /// Constant `v` with `n` coefficients.
    pub fn constant(v: C, n: usize) -> Jet {
        assert!(n >= 1 && n <= JET_MAX, "jet length {n} out of range");
        let mut c = [Z; JET_MAX];
        c[0] = v;
        Jet { n, c }
    }

    pub fn zero(n: usize) -> Jet {
        Jet::constant(Z, n)
    }

    /// The expansion variable shifted to `x0`: `x0 + eps`.
    pub fn var(x0: C, n: usize) -> Jet {
        let mut j = Jet::constant(x0, n);
        if n > 1 {
            j.c[1] = C::new(1.0, 0.0);
        }
        j
    }

    pub fn from_coeffs(v: &[C]) -> Jet {
        let mut j = Jet::zero(v.len().max(1));
        j.c[..v.len()].copy_from_slice(v);
        j
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[C] {
        &self.c[..self.n]
    }

    pub fn value(&self) -> C {
        self.c[0]
    }

    pub fn get(&self, k: usize) -> C {
        if k < self.n {
            self.c[k]
        } else {
            Z
        }
    }

    pub fn truncate(mut self, n: usize) -> Jet {
        assert!(n >= 1);
        for k in n.min(self.n)..self.n {
            self.c[k] = Z;
        }
        self.n = n.min(self.n);
        self
    }

    pub fn scale(mut self, s: C) -> Jet {
        for k in 0..self.n {
            self.c[k] *= s;
        }
        self
    }

    pub fn recip(&self) -> Jet {
        let mut r = Jet::zero(self.n);
        let a0 = self.c[0];
        r.c[0] = 1.0 / a0;
        for k in 1..self.n {
            let mut s = Z;
            for j in 1..=k {
                s += self.c[j] * r.c[k - j];
            }
            r.c[k] = -s / a0;
        }
        r
    }

    pub fn div(&self, o: &Jet) -> Jet {
        let n = self.n.min(o.n);
        let mut r = Jet::zero(n);
        let b0 = o.c[0];
        for k in 0..n {
            let mut s = self.c[k];
            for j in 1..=k {
                s -= o.c[j] * r.c[k - j];
            }
            r.c[k] = s / b0;
        }
        r
    }

    /// Square root continuing the principal value at `eps = 0`.
    pub fn sqrt(&self) -> Jet {
        let mut r = Jet::zero(self.n);
        let s0 = self.c[0].sqrt();
        r.c[0] = s0;
        for k in 1..self.n {
            let mut s = self.c[k];
            for j in 1..k {
                s -= r.c[j] * r.c[k - j];
            }
            r.c[k] = s / (2.0 * s0);
        }
        r
    }

    /// d/d eps; one coefficient shorter.
    pub fn derivative(&self) -> Jet {
        if self.n == 1 {
            return Jet::zero(1);
        }
        let mut r = Jet::zero(self.n - 1);
        for k in 1..self.n {
            r.c[k - 1] = self.c[k] * k as f64;
        }
        r
    }

    /// Division by `eps^d` of a jet whose first `d` coefficients vanish.
    pub fn shift_down(&self, d: usize) -> Jet {
        assert!(self.n > d, "jet too short to divide by eps^{d}");
        Jet::from_coeffs(&self.c[d..self.n])
    }

    /// `p(self)` by Horner's rule.
    pub fn poly(p: &Poly<C>, x: &Jet) -> Jet {
        let mut acc = Jet::zero(x.n);
        for c in p.coeffs().iter().rev() {
            acc = acc * *x;
            acc.c[0] += c;
        }
        acc
    }

    /// `sum_m g[m] self^m`.
    pub fn compose(g: &[C], x: &Jet) -> Jet {
        let mut acc = Jet::zero(x.n);
        for c in g.iter().rev() {
            acc = acc * *x;
            acc.c[0] += c;
        }
        acc
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs().iter().all(|c| c.is_finite())
    }

    pub fn max_norm(&self) -> f64 {
        self.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, o: Jet) -> Jet {
        let n = self.n.min(o.n);
        let mut r = self.truncate(n);
        for k in 0..n {
            r.c[k] += o.c[k];
        }
        r
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(C::new(-1.0, 0.0))
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let n = self.n.min(o.n);
        let mut r = Jet::zero(n);
        for i in 0..n {
            if self.c[i] == Z {
                continue;
            }
            for j in 0..n - i {
                r.c[i + j] += self.c[i] * o.c[j];
            }
        }
        r
    }
}

impl Add<C> for Jet {
    type Output = Jet;
    fn add(mut self, v: C) -> Jet {
        self.c[0] += v;
        self
    }
}

impl Mul<C> for Jet {
    type Output = Jet;
    fn mul(self, v: C) -> Jet {
        self.scale(v)
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, v: f64) -> Jet {
        self.scale(C::new(v, 0.0))
    }
}
