//! Order-by-order solution of the loop equations.
//!
//! Every correlator `W_{k,l}(p, J)` with spectators `J` solves
//!
//! ```text
//! 2 [y W_{k,l}(., J)]_-(p) = R_{k,l}(p, J)
//! ```
//!
//! where `R` collects lower orders: products `W_{k1,l1}(p, I) W_{k-k1,l-l1}(p, J\I)`
//! (without the two planar ones), the coinciding-point term `W_{k-1,l}(p, p, J)`,
//! the derivative `d/dp W_{k,l-1}(p, J)` and, for every spectator `q`, the term
//! `d/dq [(f(p) - f(q)) / (p - q)]` with `f = W_{k,l}(., J\q)`.
//!
//! The solution is `W = (R + P) / (2y)` with `deg P <= deg V' - 2`. `P` is fixed by
//! regularity at the zeros of `M` and by vanishing A-periods, and cached per
//! `(k, l, J)`. Values are carried as Taylor jets so derivatives and removable
//! singularities stay exact to rounding.

use crate::curve::{PointOnCurve, Sheet, SpectralCurve};
use crate::error::{Error, Result};
use crate::jet::{Jet, JET_MAX};
use crate::kernels::{elliptic_radius, Kernel};
use crate::poly::{Contour, Poly};
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, Mutex};

const Z: C = C::new(0.0, 0.0);
const MEMO_CAP: usize = 1 << 21;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct PtKey(u64, u64, bool);

impl PtKey {
    fn of(p: PointOnCurve) -> Self {
        PtKey(canon(p.p.re), canon(p.p.im), p.sheet == Sheet::Physical)
    }
}

fn canon(x: f64) -> u64 {
    if x == 0.0 { 0 } else { x.to_bits() }
}

type EntryKey = (usize, usize, Vec<PtKey>);
type MemoKey = (usize, usize, Vec<PtKey>, PtKey);

/// `(k, l, number of points)` of a correlator.
pub type Signature = (usize, usize, usize);

#[derive(Clone, Copy, Debug)]
pub struct EngineOptions {
    /// Largest admissible `2k + l + s`.
    pub max_level: usize,
    /// Largest number of trapezoid nodes per A-cycle when fixing `P`.
    pub a_nodes: usize,
}

impl Default for EngineOptions {
    fn default() -> Self {
        EngineOptions { max_level: 8, a_nodes: 1024 }
    }
}

/// Diagnostics of one solved entry.
#[derive(Clone, Debug)]
pub struct EntryInfo {
    pub poly: Arc<Poly<C>>,
    /// Estimated error of the A-period conditions.
    pub period_error: f64,
}

pub struct Engine {
    pub kernel: Kernel,
    pub options: EngineOptions,
    entries: Mutex<HashMap<EntryKey, EntryInfo>>,
    ledger: Mutex<BTreeMap<Signature, BTreeSet<Signature>>>,
    memo: Mutex<HashMap<MemoKey, Jet>>,
    dv: Poly<C>,
}

fn sorted(points: &[PointOnCurve]) -> Vec<PointOnCurve> {
    let mut v = points.to_vec();
    v.sort_by_key(|p| PtKey::of(*p));
    v
}

fn keys(points: &[PointOnCurve]) -> Vec<PtKey> {
    points.iter().map(|p| PtKey::of(*p)).collect()
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |a, i| a * (n - i) as f64 / (i + 1) as f64)
}

impl Engine {
    pub fn new(curve: &SpectralCurve, options: EngineOptions) -> Result<Self> {
        Ok(Engine {
            kernel: Kernel::new(curve)?,
            options,
            entries: Mutex::new(HashMap::new()),
            ledger: Mutex::new(BTreeMap::new()),
            memo: Mutex::new(HashMap::new()),
            dv: curve.potential.derivative(),
        })
    }

    pub fn from_kernel(kernel: Kernel, options: EngineOptions) -> Self {
        let dv = kernel.curve.potential.derivative();
        Engine {
            kernel,
            options,
            entries: Mutex::new(HashMap::new()),
            ledger: Mutex::new(BTreeMap::new()),
            memo: Mutex::new(HashMap::new()),
            dv,
        }
    }

    pub fn curve(&self) -> &SpectralCurve {
        &self.kernel.curve
    }

    /// `W_{k,l}(p, J)`.
    pub fn correlator(&self, k: usize, l: usize, p: PointOnCurve, spectators: &[PointOnCurve]) -> Result<C> {
        Ok(self.taylor(k, l, p.p, p.sheet, spectators, 1)?.value())
    }

    /// `W_{k,l}(x, J)` for a jet argument `x`.
    pub fn correlator_jet(&self, k: usize, l: usize, x: &Jet, sheet: Sheet, spectators: &[PointOnCurve]) -> Result<Jet> {
        let t = self.taylor(k, l, x.value(), sheet, spectators, x.len())?;
        Ok(Jet::compose(t.coeffs(), &(*x + (-x.value()))))
    }

    /// Which lower signatures each computed signature consumed.
    pub fn dependencies(&self) -> BTreeMap<Signature, BTreeSet<Signature>> {
        self.ledger.lock().unwrap().clone()
    }

    /// Solved polynomial `P` and diagnostics of an entry, if computed.
    pub fn entry(&self, k: usize, l: usize, spectators: &[PointOnCurve]) -> Option<EntryInfo> {
        let key = (k, l, keys(&sorted(spectators)));
        self.entries.lock().unwrap().get(&key).cloned()
    }

    pub fn clear_memo(&self) {
        self.memo.lock().unwrap().clear();
    }

    fn check_budget(&self, k: usize, l: usize, s: usize) -> Result<()> {
        let level = 2 * k + l + s;
        if level > self.options.max_level {
            return Err(Error::BudgetExceeded { requested: level, max: self.options.max_level });
        }
        Ok(())
    }

    fn depend(&self, parent: Signature, child: Signature) {
        self.ledger.lock().unwrap().entry(parent).or_default().insert(child);
    }

    /// First `n` Taylor coefficients of `W_{k,l}(x0 + eps, J)`.
    pub fn taylor(&self, k: usize, l: usize, x0: C, sheet: Sheet, spectators: &[PointOnCurve], n: usize) -> Result<Jet> {
        if n == 0 || n > JET_MAX {
            return Err(Error::OrderTooLarge { order: n as i64, cap: JET_MAX as i64 });
        }
        self.check_budget(k, l, spectators.len() + 1)?;
        if !x0.is_finite() {
            return Err(Error::InvalidInput("non-finite evaluation point".into()));
        }
        let curve = &self.kernel.curve;
        if curve.distance_to_branch_points(x0) == 0.0 {
            return Err(Error::Pole("correlators are singular at branch points".into()));
        }
        let j = sorted(spectators);
        if k == 0 && l == 0 && j.is_empty() {
            return Ok(curve.planar_jet(&Jet::var(x0, n), sheet));
        }
        if k == 0 && l == 0 && j.len() == 1 {
            return self.kernel.w00_jet(&Jet::var(x0, n), sheet, j[0]);
        }
        let mkey = (k, l, keys(&j), PtKey::of(PointOnCurve { p: x0, sheet }));
        if let Some(v) = self.memo.lock().unwrap().get(&mkey) {
            if v.len() >= n {
                return Ok(v.truncate(n));
            }
        }
        let v = self.solve_at(k, l, x0, sheet, &j, n)?;
        let mut memo = self.memo.lock().unwrap();
        if memo.len() >= MEMO_CAP {
            memo.clear();
        }
        memo.insert(mkey, v);
        Ok(v)
    }

    fn solve_at(&self, k: usize, l: usize, x0: C, sheet: Sheet, j: &[PointOnCurve], n: usize) -> Result<Jet> {
        let p = self.poly_for(k, l, j)?;
        let curve = &self.kernel.curve;
        for &(b, d) in curve.double_points() {
            let dist = (x0 - b).norm();
            let reach = curve.distance_to_branch_points(b);
            if dist <= 1e-13 * curve.scale() {
                let len = n + d;
                if len > JET_MAX {
                    return Err(Error::OrderTooLarge { order: len as i64, cap: JET_MAX as i64 });
                }
                let x = Jet::var(b, len);
                let num = self.rhs(k, l, b, sheet, j, len)? + Jet::poly(&p, &x);
                let den = curve.y_jet(&x, sheet) * 2.0;
                return Ok(num.shift_down(d).div(&den.shift_down(d)));
            }
            if dist < 1e-2 * reach && n + d + 14 <= JET_MAX {
                let t = self.taylor(k, l, b, sheet, j, n + 14)?;
                return Ok(Jet::compose(t.coeffs(), &Jet::var(x0 - b, n)));
            }
        }
        let x = Jet::var(x0, n);
        let num = self.rhs(k, l, x0, sheet, j, n)? + Jet::poly(&p, &x);
        Ok(num.div(&(curve.y_jet(&x, sheet) * 2.0)))
    }

    /// Right-hand side `R_{k,l}(x0 + eps, J)`.
    pub fn rhs(&self, k: usize, l: usize, x0: C, sheet: Sheet, j: &[PointOnCurve], n: usize) -> Result<Jet> {
        let s = j.len();
        let me = (k, l, s + 1);
        let full = (1usize << s) - 1;
        let mut acc = Jet::zero(n);
        let subset = |mask: usize, inside: bool| -> Vec<PointOnCurve> {
            (0..s).filter(|b| ((mask >> b) & 1 == 1) == inside).map(|b| j[b]).collect()
        };
        for k1 in 0..=k {
            for l1 in 0..=l {
                for mask in 0..=full {
                    if (k1, l1, mask) == (0, 0, 0) || (k1, l1, mask) == (k, l, full) {
                        continue;
                    }
                    let (i1, i2) = (subset(mask, true), subset(mask, false));
                    let a = self.taylor(k1, l1, x0, sheet, &i1, n)?;
                    let b = self.taylor(k - k1, l - l1, x0, sheet, &i2, n)?;
                    self.depend(me, (k1, l1, i1.len() + 1));
                    acc = acc + a * b;
                }
            }
        }
        if k >= 1 {
            acc = acc + self.diagonal(k - 1, l, x0, sheet, j, n)?;
            self.depend(me, (k - 1, l, s + 2));
        }
        if l >= 1 {
            acc = acc + self.taylor(k, l - 1, x0, sheet, j, n + 1)?.derivative();
            self.depend(me, (k, l - 1, s + 1));
        }
        for qi in 0..s {
            let rest: Vec<PointOnCurve> = (0..s).filter(|&b| b != qi).map(|b| j[b]).collect();
            acc = acc + self.spectator_term(k, l, x0, sheet, j[qi], &rest, n)?;
            self.depend(me, (k, l, s));
        }
        Ok(acc)
    }

    /// Distance from `x` to the nearest singularity of correlators in their first argument
    /// when the spectators are `j`.
    fn analytic_radius(&self, x: C, sheet: Sheet, j: &[PointOnCurve]) -> f64 {
        let mut r = self.kernel.curve.distance_to_branch_points(x);
        for q in j {
            if q.sheet != sheet {
                r = r.min((q.p - x).norm());
            }
        }
        r
    }

    /// Taylor coefficients of `eps -> W_{k,l}(x0 + eps, x0 + eps, J)`.
    fn diagonal(&self, k: usize, l: usize, x0: C, sheet: Sheet, j: &[PointOnCurve], n: usize) -> Result<Jet> {
        let here = PointOnCurve { p: x0, sheet };
        let with = |p: PointOnCurve| {
            let mut v = j.to_vec();
            v.push(p);
            v
        };
        if k == 0 && l == 0 && j.is_empty() {
            return Ok(self.kernel.w00_diagonal(&Jet::var(x0, n)));
        }
        if n <= 2 {
            let t = self.taylor(k, l, x0, sheet, &with(here), n)?;
            return Ok(if n == 1 { t } else { Jet::from_coeffs(&[t.get(0), t.get(1) * 2.0]) });
        }
        let r = 0.25 * self.analytic_radius(x0, sheet, j);
        let m = 24;
        let mut g = vec![Z; n];
        for t in 0..m {
            let e = C::from_polar(r, 2.0 * std::f64::consts::PI * t as f64 / m as f64);
            let pt = PointOnCurve { p: x0 + e, sheet };
            let v = self.taylor(k, l, pt.p, sheet, &with(pt), 1)?.value();
            for (i, gi) in g.iter_mut().enumerate() {
                *gi += v * e.powi(-(i as i32)) / m as f64;
            }
        }
        Ok(Jet::from_coeffs(&g))
    }

    /// `d/dq [(f(x) - f(q)) / (x - q)]` with `f = W_{k,l}(., rest)`.
    #[allow(clippy::too_many_arguments)]
    fn spectator_term(&self, k: usize, l: usize, x0: C, sheet: Sheet, q: PointOnCurve, rest: &[PointOnCurve], n: usize) -> Result<Jet> {
        let delta = x0 - q.p;
        let radius = self.analytic_radius(q.p, q.sheet, rest);
        if sheet == q.sheet && delta.norm() < 0.05 * radius {
            let len = if delta == Z { n + 2 } else { (n + 12).min(JET_MAX) };
            let a = self.taylor(k, l, q.p, q.sheet, rest, len)?;
            let s = Jet::from_coeffs(&a.coeffs()[2..]);
            return Ok(Jet::compose(s.coeffs(), &Jet::var(delta, n)));
        }
        if delta == Z {
            return Err(Error::Pole("spectator on the conjugate sheet at the evaluation point".into()));
        }
        let fp = self.taylor(k, l, x0, sheet, rest, n)?;
        let fq = self.taylor(k, l, q.p, q.sheet, rest, 2)?;
        let d = Jet::var(delta, n);
        Ok((fp + (-fq.get(0))).div(&(d * d)) - Jet::constant(fq.get(1), n).div(&d))
    }

    /// The polynomial `P` of entry `(k, l, J)`, computing it on first use.
    pub fn poly_for(&self, k: usize, l: usize, j: &[PointOnCurve]) -> Result<Arc<Poly<C>>> {
        let key = (k, l, keys(j));
        if let Some(e) = self.entries.lock().unwrap().get(&key) {
            return Ok(e.poly.clone());
        }
        let info = self.solve_poly(k, l, j)?;
        let poly = info.poly.clone();
        self.entries.lock().unwrap().insert(key, info);
        Ok(poly)
    }

    fn solve_poly(&self, k: usize, l: usize, j: &[PointOnCurve]) -> Result<EntryInfo> {
        let curve = &self.kernel.curve;
        let m = self.dv.degree().unwrap_or(0);
        if m < 2 {
            return Ok(EntryInfo { poly: Arc::new(Poly::zero()), period_error: 0.0 });
        }
        // Hermite conditions at the zeros of M
        let dps = curve.double_points();
        let dm: usize = dps.iter().map(|(_, d)| d).sum();
        let mut p0 = Poly::zero();
        let mut pi = Poly::constant(C::new(1.0, 0.0));
        if dm > 0 {
            let mut a = DMatrix::zeros(dm, dm);
            let mut rhs = DVector::zeros(dm);
            let mut row = 0;
            for &(b, d) in dps {
                let r = self.rhs(k, l, b, Sheet::Physical, j, d)?;
                for o in 0..d {
                    for c in o..dm {
                        a[(row, c)] = b.powi((c - o) as i32) * binom(c, o);
                    }
                    rhs[row] = -r.get(o);
                    row += 1;
                }
                pi = pi.mul(&Poly::from_roots(&vec![b; d]));
            }
            let sol = a.lu().solve(&rhs).ok_or_else(|| Error::Singular("confluent Vandermonde system".into()))?;
            p0 = Poly::new(sol.iter().copied().collect());
        }
        let g = curve.genus();
        if g == 0 {
            return Ok(EntryInfo { poly: Arc::new(p0), period_error: 0.0 });
        }
        let avoid: Vec<C> = j.iter().map(|q| q.p).collect();
        let mut mat = DMatrix::zeros(g, g);
        let mut vec = DVector::zeros(g);
        let mut err: f64 = 0.0;
        for i in 0..g {
            let rho = self.kernel.default_rho(i, &avoid);
            let (a, b) = curve.cut(i);
            let (mid, half) = (C::new(0.5 * (a + b), 0.0), C::new(0.5 * (b - a), 0.0));
            // nested periodic trapezoid rule in the ellipse angle, clockwise
            let sample = |theta: f64| -> Result<(C, Vec<C>)> {
                let w = C::new(rho, theta);
                let x = mid + half * w.cosh();
                let dx = -(half * w.sinh() * C::i());
                let two_y = curve.y(PointOnCurve::physical(x)) * 2.0;
                let r = self.rhs(k, l, x, Sheet::Physical, j, 1)?.value() + p0.eval(&x);
                let base = pi.eval(&x) / two_y * dx;
                Ok((r / two_y * dx, (0..g).map(|c| base * x.powi(c as i32)).collect()))
            };
            let mut nodes = 16;
            let mut acc: Vec<(C, Vec<C>)> =
                (0..nodes).map(|t| sample(2.0 * std::f64::consts::PI * t as f64 / nodes as f64)).collect::<Result<_>>()?;
            let total = |acc: &[(C, Vec<C>)], n: usize| -> (C, Vec<C>) {
                let h = 2.0 * std::f64::consts::PI / n as f64;
                let s: C = acc.iter().map(|v| v.0).sum::<C>() * h;
                let row = (0..g).map(|c| acc.iter().map(|v| v.1[c]).sum::<C>() * h).collect();
                (s, row)
            };
            let (mut s, mut row) = total(&acc, nodes);
            loop {
                let fresh: Vec<(C, Vec<C>)> = (0..nodes)
                    .map(|t| sample(2.0 * std::f64::consts::PI * (t as f64 + 0.5) / nodes as f64))
                    .collect::<Result<_>>()?;
                acc.extend(fresh);
                nodes *= 2;
                let (s2, row2) = total(&acc, nodes);
                let h = 2.0 * std::f64::consts::PI / nodes as f64;
                let scale = acc.iter().map(|v| v.0.norm()).sum::<f64>() * h;
                let diff = (s2 - s).norm();
                let row_ok = (0..g).all(|c| {
                    let sc = acc.iter().map(|v| v.1[c].norm()).sum::<f64>() * h;
                    (row2[c] - row[c]).norm() <= 1e-13 * sc
                });
                s = s2;
                row = row2;
                if (diff <= 1e-13 * scale && row_ok) || nodes >= self.options.a_nodes {
                    err = err.max(diff);
                    break;
                }
            }
            for c in 0..g {
                mat[(i, c)] = row[c];
            }
            vec[i] = -s;
        }
        let q = mat.lu().solve(&vec).ok_or_else(|| Error::Singular("A-period conditions".into()))?;
        let poly = p0.add(&pi.mul(&Poly::new(q.iter().copied().collect())));
        Ok(EntryInfo { poly: Arc::new(poly), period_error: err })
    }

    /// `[V' f]_-(p)` for `f` analytic outside the cuts on the physical sheet.
    pub fn apply_k(&self, f: impl Fn(C) -> C, p: C) -> C {
        let r = (2.0 * self.kernel.curve.scale() + 1.0).max(1.5 * p.norm() + 1.0);
        let rule = Contour::Circle { center: Z, radius: r }.trapezoid_rule(128);
        let i = rule.integrate(|xi| self.dv.eval(&xi) * f(xi) / (p - xi)) / C::new(0.0, 2.0 * std::f64::consts::PI);
        i + self.dv.eval(&p) * f(p)
    }

    /// Coefficients `c_j` of `p^{-j-1}`, `j = 0..order`, of `W_{k,l}(p, J)` at `infinity` on the physical sheet.
    pub fn series_at_infinity(&self, k: usize, l: usize, spectators: &[PointOnCurve], order: usize) -> Result<Vec<C>> {
        let far = spectators.iter().fold(self.kernel.curve.scale(), |a, q| a.max(q.p.norm()));
        let r = 1.5 * far + 1.0;
        let nodes = 128.max(4 * order);
        let rule = Contour::Circle { center: Z, radius: r }.trapezoid_rule(nodes);
        let vals: Vec<C> = rule.points.iter().map(|&x| self.correlator(k, l, PointOnCurve::physical(x), spectators)).collect::<Result<_>>()?;
        Ok((0..=order)
            .map(|jj| {
                vals.iter().zip(rule.points.iter().zip(&rule.weights)).map(|(v, (x, w))| v * x.powi(jj as i32) * w).sum::<C>()
                    / C::new(0.0, 2.0 * std::f64::consts::PI)
            })
            .collect())
    }

    /// `(K - 2 W_{0,0}) W_{k,l}(p, J) - R_{k,l}(p, J)` with `K` evaluated by contour integration;
    /// `K W_{0,0} - W_{0,0}^2` for the planar one-point function.
    pub fn loop_equation_residual(&self, k: usize, l: usize, p: C, spectators: &[PointOnCurve]) -> Result<C> {
        let j = sorted(spectators);
        let w = |x: C| self.correlator(k, l, PointOnCurve::physical(x), &j).unwrap_or(C::new(f64::NAN, 0.0));
        let kw = self.apply_k(w, p);
        let here = PointOnCurve::physical(p);
        let w0 = self.kernel.curve.planar_resolvent(here);
        let res = if (k, l) == (0, 0) && j.is_empty() {
            // the planar equation is the quadratic one, K W_{0,0} = W_{0,0}^2
            kw - w0 * w0
        } else {
            kw - 2.0 * w0 * w(p) - self.rhs(k, l, p, Sheet::Physical, &j, 1)?.value()
        };
        if !res.is_finite() {
            return Err(Error::Hypothesis("correlator evaluation failed on the contour".into()));
        }
        Ok(res)
    }

    /// Solution `f` of `(K - 2 W_{0,0}) f = rhs` with vanishing A-periods at a physical point,
    /// through the kernel `dE`: `f(p) = sum_i oint_i dE_{q,qbar}(p) rhs(q) / (2 y(q)) dq / (2 pi i)`
    /// over contours hugging each cut. The jump of `dE` across the cuts leaves a holomorphic
    /// remainder `sum_i c_i dw_i(p)`, removed through `c_i = -oint_{A_i} rhs / (2y)`.
    pub fn invert_k(&self, rhs: impl Fn(C) -> C, p: C) -> Result<C> {
        let curve = &self.kernel.curve;
        let target = PointOnCurve::physical(p);
        let mut total = Z;
        for i in 0..curve.n_cuts() {
            let (a, b) = curve.cut(i);
            let rho = self.cut_rho(i).min(0.5 * elliptic_radius(a, b, p));
            let mut prev: Option<(C, C)> = None;
            let mut nodes = 128;
            let (v, period) = loop {
                let rule = Contour::Ellipse { a: C::new(a, 0.0), b: C::new(b, 0.0), rho }.trapezoid_rule(nodes);
                let (mut s, mut per) = (Z, Z);
                for (x, w) in rule.points.iter().zip(&rule.weights) {
                    let q = PointOnCurve::physical(*x);
                    let g = rhs(*x) / (2.0 * curve.y(q)) * w;
                    s += self.kernel.de_kernel(q, target)? * g;
                    per += g;
                }
                if let Some((pv, pp)) = prev {
                    if ((s - pv).norm() <= 1e-13 * (1.0 + s.norm()) && (per - pp).norm() <= 1e-13 * (1.0 + per.norm())) || nodes >= 4096 {
                        break (s, per);
                    }
                }
                prev = Some((s, per));
                nodes *= 2;
            };
            total += v / C::new(0.0, 2.0 * std::f64::consts::PI);
            if i < curve.genus() {
                total += period * self.kernel.holomorphic(i, target);
            }
        }
        Ok(total)
    }

    /// Ellipse parameter around cut `i` excluding other cuts and double points.
    fn cut_rho(&self, i: usize) -> f64 {
        let curve = &self.kernel.curve;
        let (a, b) = curve.cut(i);
        let mut limit: f64 = 3.0;
        for jj in 0..curve.n_cuts() {
            if jj != i {
                let (c, d) = curve.cut(jj);
                limit = limit.min(elliptic_radius(a, b, C::new(c, 0.0))).min(elliptic_radius(a, b, C::new(d, 0.0)));
            }
        }
        for (z, _) in curve.double_points() {
            limit = limit.min(elliptic_radius(a, b, *z));
        }
        0.5 * limit
    }
}
