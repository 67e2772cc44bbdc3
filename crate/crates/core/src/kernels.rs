//! Bergmann kernel, its primitive `dE`, holomorphic differentials and periods
//! on the hyperelliptic curve `ytilde^2 = sigma(p)`.
//!
//! The algebraic part of `B` is Klein's representative
//! `(2 Y_p Y_q + F(p, q)) / (4 (p - q)^2 Y_p Y_q)` with
//! `F(p, q) = sum_k p^k q^k (2 a_{2k} + a_{2k+1} (p + q))`, corrected by a
//! symmetric combination of holomorphic differentials so that all A-periods vanish.

use crate::curve::{PointOnCurve, Sheet, SpectralCurve};
use crate::error::{Error, Result};
use crate::jet::Jet;
use crate::poly::{contour_integral, Contour, Poly, QuadOptions, Rule};
use nalgebra::DMatrix;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

const TWO_PI_I: C = C::new(0.0, 2.0 * PI);
/// Trapezoid nodes on each A-cycle ellipse.
pub const A_NODES: usize = 128;

/// `log |xi + sqrt(xi^2 - 1)|` of `w` relative to the segment `[a, b]`:
/// the parameter of the confocal ellipse through `w`.
pub fn elliptic_radius(a: f64, b: f64, w: C) -> f64 {
    let xi = (w - (a + b) / 2.0) / ((b - a) / 2.0);
    let s = (xi * xi - 1.0).sqrt();
    (xi + s).norm().max((xi - s).norm()).ln()
}

/// Geometry of the B-cycle paths.
#[derive(Clone, Debug)]
pub struct BPath {
    pub height: f64,
    /// Real point where the path meets each cut.
    pub crossings: Vec<f64>,
}

#[derive(Clone, Debug)]
pub struct Kernel {
    pub curve: SpectralCurve,
    sigma: Vec<C>,
    /// Ellipse parameter of every A-contour.
    pub a_rho: Vec<f64>,
    a_rules: Vec<Rule>,
    /// `period_matrix[(i, k)] = oint_{A_i} p^k dp / ytilde`.
    pub period_matrix: DMatrix<C>,
    /// `dw_i = sum_k holo[(i, k)] p^k dp / ytilde`.
    pub holo: DMatrix<C>,
    /// Holomorphic correction `sum c_jk u_j(p) u_k(q)` of the algebraic kernel.
    pub correction: DMatrix<C>,
    pub condition_number: f64,
    /// Largest asymmetry `|c - c^T|` before symmetrization.
    pub correction_asymmetry: f64,
}

impl Kernel {
    pub fn new(curve: &SpectralCurve) -> Result<Self> {
        let g = curve.genus();
        let sigma = curve.sigma().coeffs().to_vec();
        let mut k = Kernel {
            curve: curve.clone(),
            sigma,
            a_rho: Vec::new(),
            a_rules: Vec::new(),
            period_matrix: DMatrix::zeros(g, g),
            holo: DMatrix::zeros(g, g),
            correction: DMatrix::zeros(g, g),
            condition_number: 1.0,
            correction_asymmetry: 0.0,
        };
        if g == 0 {
            return Ok(k);
        }
        for i in 0..g {
            let rho = k.default_rho(i, &[]);
            k.a_rho.push(rho);
            k.a_rules.push(k.a_rule(i, rho, A_NODES));
        }
        let mut per = DMatrix::zeros(g, g);
        for i in 0..g {
            for j in 0..g {
                per[(i, j)] = k.a_rules[i].integrate(|x| x.powi(j as i32) / curve.ytilde(x));
            }
        }
        let svd = per.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        k.condition_number = smax / smin;
        if !(smin > 1e-14 * smax) {
            return Err(Error::Singular(format!("A-period matrix, condition number {:e}", k.condition_number)));
        }
        let inv = per.clone().try_inverse().ok_or_else(|| Error::Singular("A-period matrix".into()))?;
        k.holo = inv.transpose();
        k.period_matrix = per;

        // oint_{A_i} B_alg(x, q) dx = sum_k L_ik q^k / ytilde(q), sampled at g points off the contours
        let s = curve.scale();
        let samples: Vec<C> = (0..g).map(|j| C::new(0.37 * s * (j as f64 - 0.5 * g as f64), 2.5 * s + 0.9 * s * j as f64)).collect();
        let mut vand = DMatrix::zeros(g, g);
        let mut rhs = DMatrix::zeros(g, g);
        for (r, &q) in samples.iter().enumerate() {
            let yq = curve.ytilde(q);
            for kk in 0..g {
                vand[(r, kk)] = q.powi(kk as i32) / yq;
            }
            for i in 0..g {
                let qp = PointOnCurve::physical(q);
                rhs[(r, i)] = k.a_rules[i].integrate(|x| k.algebraic(PointOnCurve::physical(x), qp));
            }
        }
        let l = vand.lu().solve(&rhs).ok_or_else(|| Error::Singular("sampling system".into()))?.transpose();
        let c = -(inv * l);
        k.correction_asymmetry = (&c - c.transpose()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        k.correction = (&c + c.transpose()) * C::new(0.5, 0.0);
        Ok(k)
    }

    pub fn genus(&self) -> usize {
        self.curve.genus()
    }

    /// Ellipse parameter for the A-contour of cut `i`: halfway to the nearest
    /// other cut or double point, nudged away from `avoid`.
    pub fn default_rho(&self, i: usize, avoid: &[C]) -> f64 {
        let (a, b) = self.curve.cut(i);
        let mut obst: Vec<C> = Vec::new();
        for j in 0..self.curve.n_cuts() {
            if j != i {
                let (c, d) = self.curve.cut(j);
                obst.push(C::new(c, 0.0));
                obst.push(C::new(d, 0.0));
            }
        }
        obst.extend(self.curve.double_points().iter().map(|(z, _)| *z));
        let limit = obst.iter().map(|&w| elliptic_radius(a, b, w)).fold(3.0f64, f64::min);
        let mut best = (0.5 * limit, -1.0);
        for f in [0.5, 0.42, 0.58, 0.35, 0.65] {
            let rho = f * limit;
            let d = avoid.iter().map(|&w| (elliptic_radius(a, b, w) - rho).abs()).fold(f64::INFINITY, f64::min);
            if d > best.1 {
                best = (rho, d);
            }
            if d > 0.15 * limit {
                break;
            }
        }
        best.0
    }

    /// Clockwise trapezoid rule on the ellipse of parameter `rho` around cut `i`.
    pub fn a_rule(&self, i: usize, rho: f64, n: usize) -> Rule {
        let (a, b) = self.curve.cut(i);
        Contour::Ellipse { a: C::new(a, 0.0), b: C::new(b, 0.0), rho }.trapezoid_rule(n).reversed()
    }

    /// Cached A-contour of cut `i`.
    pub fn a_contour(&self, i: usize) -> &Rule {
        &self.a_rules[i]
    }

    /// `oint_{A_i} f` over physical-sheet points.
    pub fn a_period(&self, i: usize, mut f: impl FnMut(PointOnCurve) -> C) -> C {
        self.a_rules[i].integrate(|x| f(PointOnCurve::physical(x)))
    }

    /// `oint_{A_i} f` on an ellipse placed away from `avoid`, refined until converged.
    /// Only meaningful when `f` has no residues at the avoided points.
    pub fn a_period_avoiding(&self, i: usize, avoid: &[C], f: impl Fn(PointOnCurve) -> C) -> Result<C> {
        let rho = self.default_rho(i, avoid);
        let mut n = 64;
        let mut prev = self.a_rule(i, rho, n).integrate(|x| f(PointOnCurve::physical(x)));
        loop {
            n *= 2;
            let cur = self.a_rule(i, rho, n).integrate(|x| f(PointOnCurve::physical(x)));
            let err = (cur - prev).norm();
            if err <= 1e-14 + 1e-13 * cur.norm() {
                return Ok(cur);
            }
            if n >= 1 << 13 || !cur.is_finite() {
                return Err(Error::QuadratureNotConverged { value: format!("{cur}"), error: err });
            }
            prev = cur;
        }
    }

    fn y_of(&self, pt: PointOnCurve) -> C {
        self.curve.ytilde(pt.p) * pt.sheet.sign()
    }

    fn klein_f(&self, x: C, q: C) -> C {
        let n = self.curve.n_cuts();
        let a = |i: usize| self.sigma.get(i).copied().unwrap_or(C::new(0.0, 0.0));
        let mut s = C::new(0.0, 0.0);
        for k in 0..=n {
            s += (x * q).powi(k as i32) * (2.0 * a(2 * k) + a(2 * k + 1) * (x + q));
        }
        s
    }

    /// `F(x, q)` as a polynomial in `x`.
    fn klein_f_poly(&self, q: C) -> Poly<C> {
        let n = self.curve.n_cuts();
        let a = |i: usize| self.sigma.get(i).copied().unwrap_or(C::new(0.0, 0.0));
        let mut c = vec![C::new(0.0, 0.0); n + 2];
        for k in 0..=n {
            let qk = q.powi(k as i32);
            c[k] += qk * (2.0 * a(2 * k) + a(2 * k + 1) * q);
            c[k + 1] += qk * a(2 * k + 1);
        }
        Poly::new(c)
    }

    fn algebraic(&self, p: PointOnCurve, q: PointOnCurve) -> C {
        let d = p.p - q.p;
        let (yp, yq) = (self.y_of(p), self.y_of(q));
        (2.0 * yp * yq + self.klein_f(p.p, q.p)) / (4.0 * d * d * yp * yq)
    }

    fn holomorphic_part(&self, p: PointOnCurve, q: PointOnCurve) -> C {
        let g = self.genus();
        if g == 0 {
            return C::new(0.0, 0.0);
        }
        let mut s = C::new(0.0, 0.0);
        for j in 0..g {
            for k in 0..g {
                s += self.correction[(j, k)] * p.p.powi(j as i32) * q.p.powi(k as i32);
            }
        }
        s / (self.y_of(p) * self.y_of(q))
    }

    /// `B(P, Q) / (dp dq)`.
    pub fn bergmann(&self, p: PointOnCurve, q: PointOnCurve) -> Result<C> {
        if p.p == q.p {
            if p.sheet == q.sheet {
                return Err(Error::Pole("B(P, Q) at coinciding points".into()));
            }
            return Ok(-self.w00_diagonal(&Jet::constant(p.p, 1)).value());
        }
        Ok(self.algebraic(p, q) + self.holomorphic_part(p, q))
    }

    /// `W_{0,0}(p, q) = -B(p, qbar) / (dp dq)`.
    pub fn w00_two_point(&self, p: PointOnCurve, q: PointOnCurve) -> Result<C> {
        Ok(self.w00_jet(&Jet::constant(p.p, 1), p.sheet, q)?.value())
    }

    /// `W_{0,0}(x, x)` as a rational function of `x`; the same on both sheets.
    pub fn w00_diagonal(&self, x: &Jet) -> Jet {
        let sig = Poly::new(self.sigma.clone());
        let d1 = sig.derivative();
        let d2 = d1.derivative();
        let n = self.curve.n_cuts();
        let a = |i: usize| self.sigma.get(i).copied().unwrap_or(C::new(0.0, 0.0));
        // F_qq(x, x) = sum_k 2k(k-1) a_{2k} x^{2k-2} + 2k^2 a_{2k+1} x^{2k-1}
        let mut fqq = vec![C::new(0.0, 0.0); 2 * n + 1];
        for k in 1..=n {
            fqq[2 * k - 2] += a(2 * k) * (2 * k * (k - 1)) as f64;
            fqq[2 * k - 1] += a(2 * k + 1) * (2 * k * k) as f64;
        }
        let fqq = Poly::new(fqq);
        let s = Jet::poly(&sig, x);
        let s1 = Jet::poly(&d1, x);
        let s2 = Jet::poly(&d2, x);
        let f2 = Jet::poly(&fqq, x);
        let inner = s2 * 0.5 - (s1 * s1).div(&(s * 4.0)) - f2 * 0.5;
        let mut w = -inner.div(&(s * 4.0));
        let g = self.genus();
        if g > 0 {
            let mut h = vec![C::new(0.0, 0.0); 2 * g - 1];
            for j in 0..g {
                for k in 0..g {
                    h[j + k] += self.correction[(j, k)];
                }
            }
            w = w + Jet::poly(&Poly::new(h), x).div(&s);
        }
        w
    }

    /// Taylor coefficients of `W_{0,0}(x, q)` in the first variable.
    pub fn w00_jet(&self, x: &Jet, sheet: Sheet, q: PointOnCurve) -> Result<Jet> {
        let delta = x.value() - q.p;
        let rho = self.curve.distance_to_branch_points(q.p);
        if sheet == q.sheet && delta.norm() < 0.1 * rho {
            let order = if delta == C::new(0.0, 0.0) { x.len() - 1 } else { 16 + x.len() };
            let g = self.w00_local(q, order.min(crate::jet::JET_MAX - 3))?;
            return Ok(Jet::compose(g.coeffs(), &(*x + (-q.p))));
        }
        if delta == C::new(0.0, 0.0) {
            return Err(Error::Pole("W00(x, q) at x = qbar".into()));
        }
        let yx = self.curve.ytilde_jet(x) * sheet.sign();
        let yq = self.y_of(q);
        let d = *x + (-q.p);
        let d2 = d * d;
        let f = Jet::poly(&self.klein_f_poly(q.p), x);
        let mut w = (f.div(&(yx * yq)) * 0.25 - Jet::constant(C::new(0.5, 0.0), x.len())).div(&d2);
        w = w + self.holo_jet(x, &yx, q.p).scale(1.0 / yq);
        Ok(w)
    }

    /// `sum_jk c_jk x^j q^k / Y_x` as a jet in `x`.
    fn holo_jet(&self, x: &Jet, yx: &Jet, q: C) -> Jet {
        let g = self.genus();
        if g == 0 {
            return Jet::zero(x.len());
        }
        let coeffs: Vec<C> = (0..g).map(|j| (0..g).map(|k| self.correction[(j, k)] * q.powi(k as i32)).sum()).collect();
        Jet::poly(&Poly::new(coeffs), x).div(yx)
    }

    /// Taylor series of `delta -> W_{0,0}(q + delta, q)` with `order + 1` terms.
    fn w00_local(&self, q: PointOnCurve, order: usize) -> Result<Jet> {
        let len = order + 3;
        let xd = Jet::var(q.p, len);
        let yx = self.curve.ytilde_jet(&xd) * q.sheet.sign();
        let yq = self.y_of(q);
        let f = Jet::poly(&self.klein_f_poly(q.p), &xd);
        let num = f - yx * (2.0 * yq);
        let lead = num.get(0).norm().max(num.get(1).norm());
        if lead > 1e-8 * (num.max_norm() + 1.0) {
            return Err(Error::Pole("near-diagonal expansion lost its double zero".into()));
        }
        let body = num.shift_down(2).div(&(yx.truncate(order + 1) * (4.0 * yq)));
        let yx1 = yx.truncate(order + 1);
        let hol = self.holo_jet(&Jet::var(q.p, order + 1), &yx1, q.p).scale(1.0 / yq);
        Ok(body + hol)
    }

    /// `dw_i / dp` at a point.
    pub fn holomorphic(&self, i: usize, p: PointOnCurve) -> C {
        let y = self.y_of(p);
        (0..self.genus()).map(|k| self.holo[(i, k)] * p.p.powi(k as i32)).sum::<C>() / y
    }

    pub fn holomorphic_jet(&self, i: usize, x: &Jet, sheet: Sheet) -> Jet {
        let yx = self.curve.ytilde_jet(x) * sheet.sign();
        let c: Vec<C> = (0..self.genus()).map(|k| self.holo[(i, k)]).collect();
        Jet::poly(&Poly::new(c), x).div(&yx)
    }

    /// `lambda_i(q) = oint_{A_i} dp' / (ytilde(p') (p' - q))` on a contour not enclosing `q`.
    pub fn de_lambda(&self, q: C) -> Vec<C> {
        (0..self.genus())
            .map(|i| {
                let (a, b) = self.curve.cut(i);
                let rq = elliptic_radius(a, b, q);
                let f = |x: C| 1.0 / (self.curve.ytilde(x) * (x - q));
                let (mut v, rho) = if (rq - self.a_rho[i]).abs() > 0.25 * self.a_rho[i] {
                    (self.a_rules[i].integrate(f), self.a_rho[i])
                } else {
                    let rho = self.default_rho(i, &[q]);
                    let mut n = 2 * A_NODES;
                    let mut v = self.a_rule(i, rho, n).integrate(f);
                    loop {
                        n *= 2;
                        let w = self.a_rule(i, rho, n).integrate(f);
                        let done = (w - v).norm() <= 1e-13 * w.norm() || n >= 1 << 13;
                        v = w;
                        if done {
                            break;
                        }
                    }
                    (v, rho)
                };
                if rq < rho {
                    v += TWO_PI_I / self.curve.ytilde(q);
                }
                v
            })
            .collect()
    }

    /// `dE_{Q,Qbar}(P) / dp`: simple poles of residue `+1` at `Q`, `-1` at `Qbar`, zero A-periods.
    pub fn de_kernel(&self, q: PointOnCurve, p: PointOnCurve) -> Result<C> {
        Ok(self.de_jet(q, &Jet::constant(p.p, 1), p.sheet)?.value())
    }

    pub fn de_jet(&self, q: PointOnCurve, x: &Jet, sheet: Sheet) -> Result<Jet> {
        if x.value() == q.p {
            return Err(Error::Pole("dE at P = Q or P = Qbar".into()));
        }
        let yq = self.y_of(q);
        let yx = self.curve.ytilde_jet(x) * sheet.sign();
        let mut r = Jet::constant(yq, x.len()).div(&(yx * (*x + (-q.p))));
        if self.genus() > 0 {
            let lam = self.de_lambda(q.p);
            for (i, l) in lam.iter().enumerate() {
                r = r - self.holomorphic_jet(i, x, sheet).scale(l * yq);
            }
        }
        Ok(r)
    }

    /// `B(P, [mu_a])`: coefficient of `dq / sqrt(q - mu_a)` in `B(P, q)` as `q -> mu_a`.
    pub fn bergmann_at_branch(&self, alpha: usize, p: PointOnCurve) -> C {
        let mu = self.curve.endpoints()[alpha];
        let r: C = self
            .curve
            .endpoints()
            .iter()
            .enumerate()
            .filter(|(b, _)| *b != alpha)
            .map(|(_, &m)| crate::curve::sqrt_upper_pub(C::new(mu - m, 0.0)))
            .product();
        let yp = self.y_of(p);
        let d = p.p - mu;
        let mut v = self.klein_f(p.p, C::new(mu, 0.0)) / (4.0 * d * d * yp);
        let g = self.genus();
        for j in 0..g {
            for k in 0..g {
                v += self.correction[(j, k)] * p.p.powi(j as i32) * mu.powi(k as i32) / yp;
            }
        }
        v / r
    }

    /// Variation of `B(P, Q)` under a shift of the branch point `mu_a`.
    pub fn rauch_derivative(&self, alpha: usize, p: PointOnCurve, q: PointOnCurve) -> C {
        2.0 * self.bergmann_at_branch(alpha, p) * self.bergmann_at_branch(alpha, q)
    }

    /// Height of the B-cycle paths and the crossing point on every cut, chosen away from `avoid`.
    pub fn b_path(&self, avoid: &[C]) -> BPath {
        let s = self.curve.scale();
        let spread = |h: f64| avoid.iter().map(|z| (z.im.abs() - h).abs()).fold(f64::INFINITY, f64::min);
        let mut h = 0.5 * s;
        for f in [0.5, 0.37, 0.71, 0.27, 0.9, 0.2, 1.2] {
            if spread(f * s) > spread(h) + 1e-3 * s {
                h = f * s;
            }
        }
        let crossings = (0..self.curve.n_cuts())
            .map(|j| {
                let (a, b) = self.curve.cut(j);
                let reach = |x: f64| {
                    avoid
                        .iter()
                        .filter(|z| z.im.abs() <= h + 0.05 * s)
                        .map(|z| (z.re - x).abs())
                        .fold(f64::INFINITY, f64::min)
                };
                let mut best = 0.5 * (a + b);
                for f in [0.5, 0.35, 0.65, 0.2, 0.8] {
                    let x = a + f * (b - a);
                    if reach(x) > reach(best) + 1e-3 * (b - a) {
                        best = x;
                    }
                }
                best
            })
            .collect();
        BPath { height: h, crossings }
    }

    /// `oint_{B_i} f`, as a chain of loops between consecutive cuts from cut `i` to the
    /// last cut: out above the real axis on the physical sheet, back below it on the
    /// unphysical sheet.
    pub fn b_period(&self, i: usize, path: &BPath, f: impl Fn(PointOnCurve) -> C) -> Result<C> {
        let ih = C::new(0.0, path.height);
        let opts = QuadOptions { nodes_per_panel: 32, ..QuadOptions::default() };
        let mut s = C::new(0.0, 0.0);
        for j in i..self.curve.n_cuts() - 1 {
            let (m0, m1) = (C::new(path.crossings[j], 0.0), C::new(path.crossings[j + 1], 0.0));
            let up = Contour::Polyline(vec![m0, m0 + ih, m1 + ih, m1]);
            let down = Contour::Polyline(vec![m1, m1 - ih, m0 - ih, m0]);
            s += contour_integral(|x| f(PointOnCurve::physical(x)), &up, &opts)?.value;
            s += contour_integral(|x| f(PointOnCurve::unphysical(x)), &down, &opts)?.value;
        }
        Ok(s)
    }
}
