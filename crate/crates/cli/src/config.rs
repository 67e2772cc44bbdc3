//! Job configuration: a JSON document, validated before anything runs.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::fmt;

/// An exact rational read from a JSON number, a decimal string or `"p/q"`.
#[derive(Clone, Debug)]
pub struct Number {
    pub value: BigRational,
    text: String,
}

impl PartialEq for Number {
    fn eq(&self, o: &Self) -> bool {
        self.value == o.value
    }
}

impl Number {
    pub fn parse(s: &str) -> Result<Self, String> {
        let t = s.trim();
        let value = if let Some((n, d)) = t.split_once('/') {
            let n: BigInt = n.trim().parse().map_err(|_| format!("bad numerator in {t:?}"))?;
            let d: BigInt = d.trim().parse().map_err(|_| format!("bad denominator in {t:?}"))?;
            if d.is_zero() {
                return Err(format!("zero denominator in {t:?}"));
            }
            BigRational::new(n, d)
        } else {
            parse_decimal(t)?
        };
        Ok(Number { value, text: t.to_string() })
    }

    pub fn from_i64(v: i64) -> Self {
        Number { value: BigRational::from_integer(v.into()), text: v.to_string() }
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64().unwrap_or(f64::NAN)
    }
}

fn parse_decimal(t: &str) -> Result<BigRational, String> {
    let bad = || format!("not a number: {t:?}");
    let (mantissa, exp) = match t.find(['e', 'E']) {
        Some(i) => (&t[..i], t[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (t, 0),
    };
    let (neg, digits) = match mantissa.strip_prefix('-') {
        Some(r) => (true, r),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let n: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = BigInt::from(10);
    let mut v = BigRational::from_integer(n);
    if scale >= 0 {
        v *= BigRational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        v /= BigRational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if neg { -v } else { v })
}

impl Serialize for Number {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

struct NumberVisitor;

impl Visitor<'_> for NumberVisitor {
    type Value = Number;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number, a decimal string or a \"p/q\" rational")
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<Number, E> {
        Number::parse(v).map_err(E::custom)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<Number, E> {
        Ok(Number::from_i64(v))
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<Number, E> {
        Number::parse(&v.to_string()).map_err(E::custom)
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<Number, E> {
        if !v.is_finite() {
            return Err(E::custom("non-finite number"));
        }
        Number::parse(&v.to_string()).map_err(E::custom)
    }
}

impl<'de> Deserialize<'de> for Number {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        d.deserialize_any(NumberVisitor)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Curve,
    Correlators,
    FreeEnergy,
    Verify,
    Oracle,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Precision {
    Rational,
    Float50,
    Float100,
}

impl Precision {
    pub fn digits(self) -> Option<u32> {
        match self {
            Precision::Rational => None,
            Precision::Float50 => Some(50),
            Precision::Float100 => Some(100),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GuessName {
    Auto,
    Wells,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Guess {
    Named(GuessName),
    Explicit(Vec<Number>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleKind {
    Mehta,
    Quadrature,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleConfig {
    pub method: OracleKind,
    pub n: Vec<usize>,
    /// Exponents `a` of the `N^a` basis; no fit when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fit: Option<Vec<i32>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweeps: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chains: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPaths {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub document: Option<String>,
    /// CSV of the equilibrium density on the support.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_csv: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density_samples: Option<usize>,
}

fn one() -> Number {
    Number::from_i64(1)
}

fn one_cut() -> usize {
    1
}

fn default_max_level() -> usize {
    4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub command: Command,
    /// Couplings `t_0, t_1, ...` of `V(x) = sum_j t_j x^j`.
    pub potential: Vec<Number>,
    #[serde(default = "one")]
    pub beta: Number,
    #[serde(default = "one")]
    pub t0: Number,
    #[serde(default = "one_cut")]
    pub n_cuts: usize,
    /// Fillings of all cuts but the last.
    #[serde(default)]
    pub fractions: Vec<Number>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_guess: Option<Guess>,
    /// Largest `2k + l` of the requested `W_{k,l}` or `F_{k,l}`.
    #[serde(default = "default_max_level")]
    pub max_level: usize,
    /// Sample points `[re, im]` on the physical sheet.
    #[serde(default)]
    pub points: Vec<[Number; 2]>,
    /// Length of the planar series at infinity.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series_order: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub precision: Option<Precision>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<OutputPaths>,
}

/// A configuration problem located by its path in the document.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

fn err(path: &str, message: impl Into<String>) -> ConfigError {
    ConfigError { path: path.into(), message: message.into() }
}

impl JobConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: JobConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            err(if path.is_empty() { "." } else { &path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.potential.len() < 3 {
            return Err(err("potential", "need at least the couplings t_0, t_1, t_2"));
        }
        let positive = |n: &Number| n.value > BigRational::zero();
        if !positive(&self.beta) {
            return Err(err("beta", "must be positive"));
        }
        if !positive(&self.t0) {
            return Err(err("t0", "must be positive"));
        }
        if self.n_cuts == 0 {
            return Err(err("n_cuts", "must be at least 1"));
        }
        if self.fractions.len() + 1 != self.n_cuts {
            return Err(err("fractions", format!("{} cuts need {} fractions", self.n_cuts, self.n_cuts - 1)));
        }
        if let Some(Guess::Explicit(v)) = &self.initial_guess {
            if v.len() != 2 * self.n_cuts {
                return Err(err("initial_guess", format!("{} cuts need {} endpoints", self.n_cuts, 2 * self.n_cuts)));
            }
        }
        if self.command == Command::Oracle {
            let o = self.oracle.as_ref().ok_or_else(|| err("oracle", "required by the oracle command"))?;
            if o.n.is_empty() || o.n.contains(&0) {
                return Err(err("oracle.n", "need a nonempty list of positive sizes"));
            }
        }
        Ok(())
    }

    pub fn couplings(&self) -> Vec<f64> {
        self.potential.iter().map(Number::to_f64).collect()
    }
}
