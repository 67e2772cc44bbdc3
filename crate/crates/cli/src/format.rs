use num_complex::Complex64 as C;
use num_rational::BigRational;
use serde_json::{json, Value};

/// Thirty significant digits of the exact binary value; zero of either sign is `"0"`.
pub fn real(x: f64) -> String {
    if x == 0.0 {
        "0".into()
    } else if !x.is_finite() {
        format!("{x}")
    } else {
        format!("{:.29e}", rug::Float::with_val(53, x))
    }
}

pub fn mp(x: &rug::Float) -> String {
    if x.is_zero() {
        "0".into()
    } else {
        format!("{x:.29e}")
    }
}

pub fn complex(z: C) -> Value {
    json!({ "re": real(z.re), "im": real(z.im) })
}

pub fn rational(q: &BigRational) -> String {
    if q.denom() == &1.into() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn reals(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::String(real(x))).collect())
}
