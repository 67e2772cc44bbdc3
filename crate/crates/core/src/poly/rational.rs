use super::poly::Poly;
use super::scalar::Scalar;
use crate::error::{Error, Result};

/// Quotient of two polynomials with nonzero denominator.
#[derive(Clone, Debug, PartialEq)]
pub struct RationalFn<T> {
    pub num: Poly<T>,
    pub den: Poly<T>,
}

impl<T: Scalar> RationalFn<T> {
    pub fn new(num: Poly<T>, den: Poly<T>) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(RationalFn { num, den })
    }

    pub fn from_poly(p: Poly<T>) -> Self {
        RationalFn { num: p, den: Poly::constant(T::one()) }
    }

    /// Cancels common factors and normalizes the denominator to be monic.
    /// Meaningful over exact fields.
    pub fn reduced(&self) -> Self {
        let g = self.num.gcd(&self.den);
        let (n, _) = self.num.div_rem(&g).expect("gcd divides");
        let (d, _) = self.den.div_rem(&g).expect("gcd divides");
        let l = d.leading();
        RationalFn { num: n.scale(&T::one().div(&l)), den: d.monic() }
    }

    pub fn eval(&self, x: &T) -> Result<T> {
        let d = self.den.eval(x);
        if d.is_zero() {
            return Err(Error::Pole(format!("denominator vanishes at {:?}", x)));
        }
        Ok(self.num.eval(x).div(&d))
    }

    pub fn add(&self, o: &Self) -> Self {
        RationalFn {
            num: self.num.mul(&o.den).add(&o.num.mul(&self.den)),
            den: self.den.mul(&o.den),
        }
    }

    pub fn sub(&self, o: &Self) -> Self {
        self.add(&o.neg())
    }

    pub fn neg(&self) -> Self {
        RationalFn { num: self.num.neg(), den: self.den.clone() }
    }

    pub fn mul(&self, o: &Self) -> Self {
        RationalFn { num: self.num.mul(&o.num), den: self.den.mul(&o.den) }
    }

    pub fn div(&self, o: &Self) -> Result<Self> {
        RationalFn::new(self.num.mul(&o.den), self.den.mul(&o.num))
    }

    pub fn derivative(&self) -> Self {
        RationalFn {
            num: self.num.derivative().mul(&self.den).sub(&self.num.mul(&self.den.derivative())),
            den: self.den.mul(&self.den),
        }
    }
}
