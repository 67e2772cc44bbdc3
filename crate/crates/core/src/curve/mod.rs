//! The hyperelliptic spectral curve `y = M(p) ytilde(p)`, `ytilde^2 = prod (p - mu_a)`.

mod potential;
pub mod series;
mod solve;

pub use potential::{ExpansionParams, FillingData, Potential};
pub use solve::{solve_endpoints, solve_quadratic_exact, InitialGuess};

use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::poly::{poly_roots, Poly};
use num_complex::Complex64 as C;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Sheet {
    Physical,
    Unphysical,
}

impl Sheet {
    pub fn sign(self) -> f64 {
        match self {
            Sheet::Physical => 1.0,
            Sheet::Unphysical => -1.0,
        }
    }

    pub fn other(self) -> Sheet {
        match self {
            Sheet::Physical => Sheet::Unphysical,
            Sheet::Unphysical => Sheet::Physical,
        }
    }
}

/// A point of the curve: base coordinate and sheet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointOnCurve {
    pub p: C,
    pub sheet: Sheet,
}

impl PointOnCurve {
    pub fn physical(p: C) -> Self {
        PointOnCurve { p, sheet: Sheet::Physical }
    }

    pub fn unphysical(p: C) -> Self {
        PointOnCurve { p, sheet: Sheet::Unphysical }
    }

    /// Same base coordinate on the other sheet.
    pub fn conj(self) -> Self {
        PointOnCurve { p: self.p, sheet: self.sheet.other() }
    }
}

/// Principal square root with the `+i0` side taken on the negative axis.
pub fn sqrt_upper_pub(z: C) -> C {
    sqrt_upper(z)
}

pub(crate) fn sqrt_upper(z: C) -> C {
    if z.im == 0.0 && z.re < 0.0 {
        C::new(0.0, (-z.re).sqrt())
    } else {
        z.sqrt()
    }
}

#[derive(Clone, Debug)]
pub struct SpectralCurve {
    pub potential: Potential,
    pub filling: FillingData,
    endpoints: Vec<f64>,
    moment: Poly<C>,
    double_points: Vec<(C, usize)>,
    /// Residuals of the asymptotic conditions followed by the filling conditions.
    pub residuals: Vec<f64>,
}

impl SpectralCurve {
    /// Builds the curve from already solved endpoints.
    pub fn from_endpoints(potential: Potential, filling: FillingData, endpoints: Vec<f64>) -> Result<Self> {
        if endpoints.len() < 2 || endpoints.len() % 2 != 0 {
            return Err(Error::InvalidInput("an even, nonzero number of endpoints is required".into()));
        }
        if endpoints.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("endpoints must be strictly increasing".into()));
        }
        let n = endpoints.len() / 2;
        if potential.m() < n {
            return Err(Error::InvalidInput(format!("a potential with deg V' = {} supports at most that many cuts", potential.m())));
        }
        if filling.fractions.len() + 1 != n {
            return Err(Error::InvalidInput(format!("{} cuts need {} filling fractions", n, n - 1)));
        }
        let mu: Vec<C> = endpoints.iter().map(|&x| C::new(x, 0.0)).collect();
        let dv = potential.derivative();
        let moment = series::moment_polynomial(&dv, &mu);
        let double_points = if moment.degree().unwrap_or(0) == 0 {
            Vec::new()
        } else {
            poly_roots(&moment, 1e-10)?.roots
        };
        let mut curve = SpectralCurve { potential, filling, endpoints, moment, double_points, residuals: Vec::new() };
        curve.residuals = curve.condition_residuals();
        Ok(curve)
    }

    pub fn endpoints(&self) -> &[f64] {
        &self.endpoints
    }

    pub fn n_cuts(&self) -> usize {
        self.endpoints.len() / 2
    }

    pub fn genus(&self) -> usize {
        self.n_cuts() - 1
    }

    pub fn t0(&self) -> f64 {
        self.filling.t0
    }

    pub fn moment_poly(&self) -> &Poly<C> {
        &self.moment
    }

    pub fn double_points(&self) -> &[(C, usize)] {
        &self.double_points
    }

    pub fn cut(&self, i: usize) -> (f64, f64) {
        (self.endpoints[2 * i], self.endpoints[2 * i + 1])
    }

    /// Largest absolute coordinate among endpoints and double points, at least 1.
    pub fn scale(&self) -> f64 {
        let a = self.endpoints.iter().fold(1.0f64, |a, x| a.max(x.abs()));
        self.double_points.iter().fold(a, |a, (b, _)| a.max(b.norm()))
    }

    /// `ytilde^2 = prod (p - mu_a)` as a polynomial.
    pub fn sigma(&self) -> Poly<C> {
        let mu: Vec<C> = self.endpoints.iter().map(|&x| C::new(x, 0.0)).collect();
        Poly::from_roots(&mu)
    }

    /// Physical-sheet `ytilde(p)`, normalized as `p^n` at large positive `p`.
    pub fn ytilde(&self, p: C) -> C {
        self.endpoints.iter().map(|&m| sqrt_upper(p - m)).product()
    }

    pub fn ytilde_jet(&self, x: &Jet) -> Jet {
        let mut acc = Jet::constant(C::new(1.0, 0.0), x.len());
        for &m in &self.endpoints {
            let v = sqrt_upper(x.value() - m);
            let f = *x + C::new(-m, 0.0);
            let mut s = f.sqrt();
            if (s.value() - v).norm() > 1e-300 && (s.value() + v).norm() < (s.value() - v).norm() {
                s = -s;
            }
            acc = acc * s;
        }
        acc
    }

    pub fn y(&self, pt: PointOnCurve) -> C {
        self.moment.eval(&pt.p) * self.ytilde(pt.p) * pt.sheet.sign()
    }

    pub fn y_jet(&self, x: &Jet, sheet: Sheet) -> Jet {
        Jet::poly(&self.moment, x) * self.ytilde_jet(x) * sheet.sign()
    }

    /// `W_{0,0}(p) = V'(p)/2 - y(p)` on the given sheet.
    pub fn planar_resolvent(&self, pt: PointOnCurve) -> C {
        self.potential.derivative().eval(&pt.p) * 0.5 - self.y(pt)
    }

    pub fn planar_jet(&self, x: &Jet, sheet: Sheet) -> Jet {
        Jet::poly(&self.potential.derivative(), x) * 0.5 - self.y_jet(x, sheet)
    }

    /// Distance from `p` to the union of the cuts.
    pub fn distance_to_cuts(&self, p: C) -> f64 {
        (0..self.n_cuts())
            .map(|i| {
                let (a, b) = self.cut(i);
                let x = p.re.clamp(a, b);
                (p - C::new(x, 0.0)).norm()
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Distance from `p` to the nearest branch point.
    pub fn distance_to_branch_points(&self, p: C) -> f64 {
        self.endpoints.iter().map(|&m| (p - m).norm()).fold(f64::INFINITY, f64::min)
    }

    /// `S_i = oint_{A_i} y dp / (2 pi i)`, cycle oriented like the contour at infinity.
    pub fn cut_filling(&self, i: usize) -> f64 {
        filling_integral(&self.moment, &self.endpoints, i)
    }

    fn condition_residuals(&self) -> Vec<f64> {
        let mu: Vec<C> = self.endpoints.iter().map(|&x| C::new(x, 0.0)).collect();
        let mut r: Vec<f64> = series::asymptotic_residuals(&self.potential.derivative(), &mu, &C::new(self.t0(), 0.0))
            .iter()
            .map(|c| c.norm())
            .collect();
        for (i, s) in self.filling.fractions.iter().enumerate() {
            r.push((self.cut_filling(i) - s).abs());
        }
        r
    }

    /// Zhukovsky map `p = c + r (z + 1/z)` of a one-cut curve.
    pub fn zhukovsky_to_p(&self, z: C) -> Result<C> {
        let (c, r) = self.zhukovsky_params()?;
        Ok(c + r * (z + 1.0 / z))
    }

    /// Preimage of `p` with `|z| > 1` on the physical sheet and `|z| < 1` on the other.
    pub fn zhukovsky_from_p(&self, pt: PointOnCurve) -> Result<C> {
        let (c, r) = self.zhukovsky_params()?;
        let w = (pt.p - c) / r;
        let s = (w * w - 4.0).sqrt();
        let (z1, z2) = ((w + s) * 0.5, (w - s) * 0.5);
        let z = if z1.norm() >= z2.norm() { z1 } else { z2 };
        if (z.norm() - 1.0).abs() < 1e-12 {
            return Err(Error::InvalidInput("point lies on the cut; its preimages are both on |z| = 1".into()));
        }
        Ok(match pt.sheet {
            Sheet::Physical => z,
            Sheet::Unphysical => 1.0 / z,
        })
    }

    pub fn zhukovsky_params(&self) -> Result<(f64, f64)> {
        if self.n_cuts() != 1 {
            return Err(Error::Unsupported("the Zhukovsky map needs a one-cut curve".into()));
        }
        let (a, b) = self.cut(0);
        Ok(((a + b) / 2.0, (b - a) / 4.0))
    }
}

/// `(1/(pi i)) int_a^b M(x) ytilde(x + i0) dx` over cut `i`, via `x = c + h cos(theta)`.
pub(crate) fn filling_integral(moment: &Poly<C>, endpoints: &[f64], i: usize) -> f64 {
    let (a, b) = (endpoints[2 * i], endpoints[2 * i + 1]);
    let (c, h) = ((a + b) / 2.0, (b - a) / 2.0);
    let n = 256;
    let dt = std::f64::consts::PI / n as f64;
    let mut s = C::new(0.0, 0.0);
    for k in 1..n {
        let th = dt * k as f64;
        let x = c + h * th.cos();
        let mut yt = C::new(h * th.sin(), 0.0) * C::i();
        for (j, &m) in endpoints.iter().enumerate() {
            if j != 2 * i && j != 2 * i + 1 {
                yt *= sqrt_upper(C::new(x - m, 0.0));
            }
        }
        s += moment.eval(&C::new(x, 0.0)) * yt * (h * th.sin());
    }
    (s * dt / (std::f64::consts::PI * C::i())).re
}
