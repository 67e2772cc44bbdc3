use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rug::Complex as MpC;
use std::fmt::Debug;
use std::sync::atomic::{AtomicU32, Ordering};

/// Field element usable as a polynomial coefficient.
pub trait Scalar: Clone + Debug + PartialEq + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, o: &Self) -> Self;
    fn sub(&self, o: &Self) -> Self;
    fn mul(&self, o: &Self) -> Self;
    /// Panics on division by an exact zero.
    fn div(&self, o: &Self) -> Self;
    fn neg(&self) -> Self;
    fn from_i64(v: i64) -> Self;
    fn from_c64(v: Complex64) -> Self;
    fn to_c64(&self) -> Complex64;
    /// Magnitude as a float, used for convergence tests.
    fn norm(&self) -> f64 {
        self.to_c64().norm()
    }
    /// Whether arithmetic is exact, so that zero tests need no tolerance.
    fn is_exact() -> bool {
        false
    }
    /// Unit roundoff of the arithmetic.
    fn epsilon() -> f64 {
        f64::EPSILON
    }
    fn from_ratio(p: i64, q: i64) -> Self {
        Self::from_i64(p).div(&Self::from_i64(q))
    }
}

impl Scalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        assert!(!Zero::is_zero(o), "rational division by zero");
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(BigInt::from(v))
    }
    fn from_c64(v: Complex64) -> Self {
        assert!(v.im == 0.0, "complex value has no rational image");
        BigRational::from_float(v.re).expect("finite float")
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.to_f64().unwrap_or(f64::NAN), 0.0)
    }
    fn norm(&self) -> f64 {
        self.abs().to_f64().unwrap_or(f64::INFINITY)
    }
    fn is_exact() -> bool {
        true
    }
}

impl Scalar for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        self + o
    }
    fn sub(&self, o: &Self) -> Self {
        self - o
    }
    fn mul(&self, o: &Self) -> Self {
        self * o
    }
    fn div(&self, o: &Self) -> Self {
        self / o
    }
    fn neg(&self) -> Self {
        -self
    }
    fn from_i64(v: i64) -> Self {
        Complex64::new(v as f64, 0.0)
    }
    fn from_c64(v: Complex64) -> Self {
        v
    }
    fn to_c64(&self) -> Complex64 {
        *self
    }
}

static MP_PREC: AtomicU32 = AtomicU32::new(200);

/// Working precision, in bits, of newly created [`Mp`] values.
pub fn mp_precision() -> u32 {
    MP_PREC.load(Ordering::Relaxed)
}

pub fn set_mp_precision(bits: u32) {
    MP_PREC.store(bits.max(64), Ordering::Relaxed);
}

/// Bits needed for a given number of decimal digits plus guard bits.
pub fn bits_for_digits(digits: u32) -> u32 {
    (digits as f64 * std::f64::consts::LOG2_10).ceil() as u32 + 32
}

/// Arbitrary-precision complex number backed by MPFR.
#[derive(Clone, Debug, PartialEq)]
pub struct Mp(pub MpC);

impl Mp {
    pub fn new(re: f64, im: f64) -> Self {
        Mp(MpC::with_val(mp_precision(), (re, im)))
    }
    pub fn from_parts(re: rug::Float, im: rug::Float) -> Self {
        Mp(MpC::with_val(mp_precision(), (re, im)))
    }
    pub fn sqrt(&self) -> Self {
        Mp(self.0.clone().sqrt())
    }
    pub fn real(&self) -> &rug::Float {
        self.0.real()
    }
}

impl Scalar for Mp {
    fn zero() -> Self {
        Mp::new(0.0, 0.0)
    }
    fn one() -> Self {
        Mp::new(1.0, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.0.real().is_zero() && self.0.imag().is_zero()
    }
    fn add(&self, o: &Self) -> Self {
        Mp(MpC::with_val(mp_precision(), &self.0 + &o.0))
    }
    fn sub(&self, o: &Self) -> Self {
        Mp(MpC::with_val(mp_precision(), &self.0 - &o.0))
    }
    fn mul(&self, o: &Self) -> Self {
        Mp(MpC::with_val(mp_precision(), &self.0 * &o.0))
    }
    fn div(&self, o: &Self) -> Self {
        assert!(!o.is_zero(), "division by zero");
        Mp(MpC::with_val(mp_precision(), &self.0 / &o.0))
    }
    fn neg(&self) -> Self {
        Mp(MpC::with_val(mp_precision(), -&self.0))
    }
    fn from_i64(v: i64) -> Self {
        Mp(MpC::with_val(mp_precision(), (v, 0)))
    }
    fn from_c64(v: Complex64) -> Self {
        Mp::new(v.re, v.im)
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.0.real().to_f64(), self.0.imag().to_f64())
    }
    fn epsilon() -> f64 {
        2f64.powi(-(mp_precision() as i32))
    }
    fn norm(&self) -> f64 {
        let a = MpC::with_val(mp_precision(), self.0.abs_ref());
        a.real().to_f64()
    }
}
