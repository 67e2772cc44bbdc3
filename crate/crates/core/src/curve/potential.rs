use crate::error::{Error, Result};
use crate::poly::Poly;
use num_complex::Complex64 as C;

/// Polynomial potential `V(x) = sum_j t_j x^j` of degree `m + 1 >= 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    couplings: Vec<f64>,
}

impl Potential {
    pub fn new(mut couplings: Vec<f64>) -> Result<Self> {
        while couplings.last() == Some(&0.0) {
            couplings.pop();
        }
        if couplings.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("non-finite coupling".into()));
        }
        if couplings.len() < 3 {
            return Err(Error::InvalidInput("potential must have degree at least 2".into()));
        }
        Ok(Potential { couplings })
    }

    /// Couplings `t_0 .. t_{m+1}`; `t_0` is the additive constant of `V`.
    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn degree(&self) -> usize {
        self.couplings.len() - 1
    }

    /// Degree of `V'`.
    pub fn m(&self) -> usize {
        self.degree() - 1
    }

    pub fn poly(&self) -> Poly<C> {
        Poly::new(self.couplings.iter().map(|&c| C::new(c, 0.0)).collect())
    }

    pub fn derivative(&self) -> Poly<C> {
        self.poly().derivative()
    }

    pub fn eval(&self, x: f64) -> f64 {
        self.couplings.iter().rev().fold(0.0, |a, c| a * x + c)
    }

    pub fn eval_derivative(&self, x: f64, order: usize) -> f64 {
        let mut s = 0.0;
        for (j, c) in self.couplings.iter().enumerate().skip(order) {
            let f: f64 = (j + 1 - order..=j).map(|v| v as f64).product();
            s += c * f * x.powi((j - order) as i32);
        }
        s
    }

    /// `V(s x)`.
    pub fn rescaled(&self, s: f64) -> Potential {
        Potential { couplings: self.couplings.iter().enumerate().map(|(j, c)| c * s.powi(j as i32)).collect() }
    }

    /// Copy with coupling `t_j` replaced.
    pub fn with_coupling(&self, j: usize, v: f64) -> Result<Potential> {
        let mut c = self.couplings.clone();
        if c.len() <= j {
            c.resize(j + 1, 0.0);
        }
        c[j] = v;
        Potential::new(c)
    }

    /// Real local minima of `V`, sorted by position.
    pub fn local_minima(&self) -> Vec<f64> {
        let dv = self.derivative();
        let roots = match crate::poly::poly_roots(&dv, 1e-8) {
            Ok(r) => r.roots,
            Err(_) => return Vec::new(),
        };
        let mut out: Vec<f64> = roots
            .iter()
            .filter(|(z, m)| z.im.abs() < 1e-9 * (1.0 + z.re.abs()) && m % 2 == 1)
            .map(|(z, _)| z.re)
            .filter(|&x| {
                let h = 1e-4 * (1.0 + x.abs());
                self.eval(x - h) > self.eval(x) && self.eval(x + h) > self.eval(x)
            })
            .collect();
        out.sort_by(|a, b| a.partial_cmp(b).unwrap());
        out
    }
}

/// Expansion parameters: `gamma = sqrt(beta) - 1/sqrt(beta)`, `hbar = t0 / (N sqrt(beta))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExpansionParams {
    pub beta: f64,
    pub gamma: f64,
    pub t0: f64,
    pub hbar: Option<f64>,
}

impl ExpansionParams {
    pub fn new(beta: f64, t0: f64) -> Result<Self> {
        if !(beta > 0.0) || !(t0 > 0.0) {
            return Err(Error::InvalidInput("beta and t0 must be positive".into()));
        }
        let gamma = if beta == 1.0 { 0.0 } else { beta.sqrt() - 1.0 / beta.sqrt() };
        Ok(ExpansionParams { beta, gamma, t0, hbar: None })
    }

    pub fn with_n(mut self, n: f64) -> Self {
        self.hbar = Some(self.t0 / (n * self.beta.sqrt()));
        self
    }
}

/// Total eigenvalue count `t0` and the filling fractions `S_1 .. S_{n-1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct FillingData {
    pub t0: f64,
    pub fractions: Vec<f64>,
}

impl FillingData {
    pub fn new(t0: f64, fractions: Vec<f64>) -> Result<Self> {
        if !(t0 > 0.0) {
            return Err(Error::InvalidInput("t0 must be positive".into()));
        }
        Ok(FillingData { t0, fractions })
    }

    /// Eigenvalue content of every cut; the last cut takes the remainder.
    pub fn per_cut(&self) -> Vec<f64> {
        let mut v = self.fractions.clone();
        v.push(self.t0 - self.fractions.iter().sum::<f64>());
        v
    }
}
