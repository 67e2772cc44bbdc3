//! Free-energy corrections `F_{k,l}` from the correlators.
//!
//! Generic orders invert the loop insertion with the `H` operator,
//! `F_{k,l} = H W_{k,l} / (2k + l - 2)`. The orders where this fails have
//! dedicated formulas: the regularized planar term, the Dyson term `F_{0,1}`,
//! the anomaly term `F_{0,2}` and the one-cut torus term `F_{1,0}`.

use crate::correlators::Engine;
use crate::curve::{sqrt_upper_pub, ExpansionParams, PointOnCurve, SpectralCurve};
use crate::error::{Error, Result};
use crate::kernels::{BPath, Kernel};
use crate::poly::{contour_integral, Contour, QuadOptions};
use num_complex::Complex64 as C;
use std::cell::RefCell;
use std::collections::BTreeMap;
use std::f64::consts::PI;

const Z: C = C::new(0.0, 0.0);
const TAIL_TERMS: i64 = 64;
const TWO_PI_I: C = C::new(0.0, 2.0 * PI);

/// Runs `f` over a closure that may fail; the first error is kept and NaN returned in its place.
fn guarded<T>(g: impl Fn(C) -> Result<C>, run: impl FnOnce(&dyn Fn(C) -> C) -> Result<T>) -> Result<T> {
    let err: RefCell<Option<Error>> = RefCell::new(None);
    let f = |x: C| match g(x) {
        Ok(v) => v,
        Err(e) => {
            err.borrow_mut().get_or_insert(e);
            C::new(f64::NAN, 0.0)
        }
    };
    let out = run(&f);
    if let Some(e) = err.into_inner() {
        return Err(e);
    }
    out
}

/// Tanh-sinh rule on `[a, b]`; `f` receives the node and its distances to both ends.
pub(crate) fn tanh_sinh(a: f64, b: f64, tol: f64, f: impl Fn(f64, f64, f64) -> C) -> Result<C> {
    let h = 0.5 * (b - a);
    let tmax = 6.0;
    let node = |t: f64| {
        let u = 0.5 * PI * t.sinh();
        let e = (-2.0 * u.abs()).exp();
        // 1 - |tanh u| without cancellation
        let comp = 2.0 * e / (1.0 + e);
        let w = 0.5 * PI * t.cosh() * comp * (2.0 - comp);
        let (dl, dr) = if u >= 0.0 { (h * (2.0 - comp), h * comp) } else { (h * comp, h * (2.0 - comp)) };
        (a + dl, dl, dr, w * h)
    };
    let eval = |t: f64| {
        let (x, dl, dr, w) = node(t);
        if dl <= 0.0 || dr <= 0.0 || w == 0.0 {
            return Z;
        }
        f(x.clamp(a, b), dl, dr) * w
    };
    let mut step = 0.5;
    let (mut sum, mut mag) = (Z, 0.0);
    let mut k = 0;
    while k as f64 * step <= tmax {
        let t = k as f64 * step;
        let v = if k == 0 { eval(0.0) } else { eval(t) + eval(-t) };
        sum += v;
        mag += v.norm();
        k += 1;
    }
    let mut prev = sum * step;
    for _ in 0..10 {
        step *= 0.5;
        let mut t = step;
        while t <= tmax {
            let v = eval(t) + eval(-t);
            sum += v;
            mag += v.norm();
            t += 2.0 * step;
        }
        let cur = sum * step;
        if !cur.is_finite() {
            return Err(Error::QuadratureNotConverged { value: format!("{cur}"), error: f64::INFINITY });
        }
        if (cur - prev).norm() <= tol * cur.norm().max(mag * step) {
            return Ok(cur);
        }
        prev = cur;
    }
    Err(Error::QuadratureNotConverged { value: format!("{prev}"), error: tol })
}

/// The operator `H` inverting the loop insertion on one-point objects:
///
/// ```text
/// H w = 1/2 res_{inf+} V w - 1/2 res_{inf-} V w - t0 int_{inf-}^{inf+} w - sum_i S_i oint_{B_i} w
/// ```
pub struct HOperator<'a> {
    kernel: &'a Kernel,
    /// Hadamard finite part for the path integral instead of rejecting growing tails.
    pub regularized: bool,
    circle: f64,
    right: f64,
    path: BPath,
}

impl<'a> HOperator<'a> {
    /// `avoid` lists finite singular points of the one-forms this operator will act on.
    pub fn new(kernel: &'a Kernel, regularized: bool, avoid: &[C]) -> Self {
        let curve = &kernel.curve;
        let s = curve.scale();
        let far = avoid.iter().fold(s, |m, z| m.max(z.norm()));
        let mut obst: Vec<C> = avoid.to_vec();
        obst.extend(curve.double_points().iter().map(|(z, _)| *z));
        let path = kernel.b_path(&obst);
        let last = *curve.endpoints().last().unwrap();
        let real_right = curve.double_points().iter().filter(|(z, _)| z.im.abs() < 1e-9).fold(last, |m, (z, _)| m.max(z.re));
        let reach = |x: f64| obst.iter().filter(|z| z.im.abs() <= path.height + 0.05 * s).map(|z| (z.re - x).abs()).fold(f64::INFINITY, f64::min);
        let mut right = real_right + 0.5 * s;
        for f in [0.35, 0.7, 0.25, 0.9] {
            let x = real_right + f * s;
            if reach(x) > reach(right) + 1e-3 * s {
                right = x;
            }
        }
        HOperator { kernel, regularized, circle: 1.25 * far + 1.0, right, path }
    }

    pub fn apply(&self, w: impl Fn(PointOnCurve) -> Result<C>) -> Result<C> {
        let t0 = self.kernel.curve.t0();
        let r = self.residue_terms(&w)?;
        let j = self.path_integral(&w)?;
        let b = self.b_terms(&w)?;
        Ok(r - t0 * j - b)
    }

    /// `1/2 res_{inf+} V w - 1/2 res_{inf-} V w`.
    pub fn residue_terms(&self, w: &impl Fn(PointOnCurve) -> Result<C>) -> Result<C> {
        let v = self.kernel.curve.potential.poly();
        let plus = self.laurent(w, true, |x| v.eval(&x), &[0])?.0[0];
        let minus = self.laurent(w, false, |x| v.eval(&x), &[0])?.0[0];
        // res_inf g = -(coefficient of 1/x)
        Ok(-0.5 * plus + 0.5 * minus)
    }

    /// Coefficients of `x^{-k-1}` (for every `k` in `ks`) of `g(x) w(x)` at infinity on one sheet,
    /// through the trapezoid rule on a circle enclosing all finite singularities; also
    /// returns `max |g w x|` on the circle.
    fn laurent(&self, w: &impl Fn(PointOnCurve) -> Result<C>, physical: bool, g: impl Fn(C) -> C, ks: &[i64]) -> Result<(Vec<C>, f64)> {
        let at = |x: C| if physical { PointOnCurve::physical(x) } else { PointOnCurve::unphysical(x) };
        let mut n = 256;
        let mut prev: Option<Vec<C>> = None;
        loop {
            let rule = Contour::Circle { center: Z, radius: self.circle }.trapezoid_rule(n);
            let vals: Vec<C> = rule.points.iter().map(|&x| Ok(w(at(x))? * g(x))).collect::<Result<_>>()?;
            let scale = vals.iter().zip(&rule.points).map(|(v, x)| (v * x).norm()).fold(0.0, f64::max);
            let cur: Vec<C> = ks
                .iter()
                .map(|&k| vals.iter().zip(&rule.points).map(|(v, x)| v * x.powi(k as i32 + 1)).sum::<C>() / n as f64)
                .collect();
            if let Some(p) = &prev {
                let err = p.iter().zip(&cur).zip(ks).map(|((a, b), &k)| (a - b).norm() * self.circle.powi(-k as i32)).fold(0.0, f64::max);
                if err <= 1e-13 * scale.max(1.0) {
                    return Ok((cur, scale));
                }
            }
            if n >= 1 << 13 {
                return Err(Error::QuadratureNotConverged { value: format!("{:?}", cur.first()), error: scale });
            }
            prev = Some(cur);
            n *= 2;
        }
    }

    /// `int_{inf-}^{inf+} w`: in along the real axis on the unphysical sheet, through the
    /// last cut by a box around its right end, out along the real axis on the physical sheet.
    pub fn path_integral(&self, w: &impl Fn(PointOnCurve) -> Result<C>) -> Result<C> {
        let r = C::new(self.right, 0.0);
        let m = C::new(*self.path.crossings.last().unwrap(), 0.0);
        let ih = C::new(0.0, self.path.height);
        let opts = QuadOptions { nodes_per_panel: 32, ..QuadOptions::default() };
        let up = Contour::Polyline(vec![r, r + ih, m + ih, m]);
        let down = Contour::Polyline(vec![m, m - ih, r - ih, r]);
        let pu = guarded(|x| w(PointOnCurve::unphysical(x)), |f| Ok(contour_integral(f, &up, &opts)?.value))?;
        let pp = guarded(|x| w(PointOnCurve::physical(x)), |f| Ok(contour_integral(f, &down, &opts)?.value))?;
        let tu = self.tail(w, false)?;
        let tp = self.tail(w, true)?;
        Ok(tp - tu + pu + pp)
    }

    /// `int_R^inf w` on one sheet: quadrature up to twice the Laurent circle, the Laurent
    /// series beyond. Non-decaying terms `d_k x^k`, `k >= -1`, enter through their
    /// finite part when regularized.
    fn tail(&self, w: &impl Fn(PointOnCurve) -> Result<C>, physical: bool) -> Result<C> {
        let deg = self.kernel.curve.potential.m() as i64 + 1;
        // coefficients of x^e for e = deg ..= -TAIL_TERMS
        let ks: Vec<i64> = (-deg - 1..TAIL_TERMS).collect();
        let (coef, scale) = self.laurent(w, physical, |_| C::new(1.0, 0.0), &ks)?;
        let pow: Vec<(i64, C)> = ks.iter().zip(&coef).map(|(&k, &d)| (-k - 1, d)).collect();
        let size = pow.iter().filter(|(e, _)| *e >= -1).map(|(e, d)| d.norm() * self.circle.powi(*e as i32 + 1)).fold(0.0, f64::max);
        let significant = size > 1e-9 * scale.max(1e-300);
        if significant && !self.regularized {
            return Err(Error::Hypothesis("one-form not regular at infinity; the regularized H operator is required".into()));
        }
        let far = 2.0 * self.circle;
        let at = |x: C| if physical { PointOnCurve::physical(x) } else { PointOnCurve::unphysical(x) };
        let opts = QuadOptions { nodes_per_panel: 32, ..QuadOptions::default() };
        let seg = Contour::Polyline(vec![C::new(self.right, 0.0), C::new(far, 0.0)]);
        let near = guarded(|x| w(at(x)), |f| Ok(contour_integral(f, &seg, &opts)?.value))?;
        let mut rest = Z;
        for (e, d) in &pow {
            if *e >= -1 && !significant {
                continue;
            }
            if *e == -1 {
                rest -= d * far.ln();
            } else {
                rest -= d * far.powi(*e as i32 + 1) / (*e as f64 + 1.0);
            }
        }
        Ok(near + rest)
    }

    /// `sum_i S_i oint_{B_i} w`.
    pub fn b_terms(&self, w: &impl Fn(PointOnCurve) -> Result<C>) -> Result<C> {
        let curve = &self.kernel.curve;
        let mut s = Z;
        for (i, frac) in curve.filling.fractions.iter().enumerate() {
            let err: RefCell<Option<Error>> = RefCell::new(None);
            let v = self.kernel.b_period(i, &self.path, |pt| match w(pt) {
                Ok(v) => v,
                Err(e) => {
                    err.borrow_mut().get_or_insert(e);
                    C::new(f64::NAN, 0.0)
                }
            })?;
            if let Some(e) = err.into_inner() {
                return Err(e);
            }
            s += frac * v;
        }
        Ok(s)
    }
}

/// `F_{k,l} = H W_{k,l} / (2k + l - 2)` for the orders where the `H` inversion applies.
pub fn free_energy_generic(engine: &Engine, k: usize, l: usize) -> Result<C> {
    match (k, l) {
        (0, 0) => return Err(Error::InvalidInput("F_{0,0} needs the regularized operator: use planar_free_energy".into())),
        (1, 0) => return Err(Error::InvalidInput("F_{1,0} is not an H image: use f10_one_cut".into())),
        (0, 2) => return Err(Error::InvalidInput("F_{0,2} is not an H image: use f02".into())),
        _ => {}
    }
    let h = HOperator::new(&engine.kernel, true, &[]);
    let v = h.apply(|p| engine.correlator(k, l, p, &[]))?;
    Ok(v / (2.0 * k as f64 + l as f64 - 2.0))
}

/// `F_{0,0} = -1/2 H_reg W_{0,0}`.
pub fn planar_free_energy(curve: &SpectralCurve) -> Result<C> {
    let kernel = Kernel::new(curve)?;
    planar_free_energy_with(&kernel)
}

pub fn planar_free_energy_with(kernel: &Kernel) -> Result<C> {
    let h = HOperator::new(kernel, true, &[]);
    let v = h.apply(|p| Ok(kernel.curve.planar_resolvent(p)))?;
    Ok(-0.5 * v)
}

/// `y'/y` on the physical sheet.
fn log_derivative(curve: &SpectralCurve, q: C) -> C {
    let m = curve.moment_poly();
    let dm = m.derivative();
    dm.eval(&q) / m.eval(&q) + curve.endpoints().iter().map(|&mu| 0.5 / (q - mu)).sum::<C>()
}

/// Physical value of `y` on the upper lip of the cut at `x`.
fn y_upper(curve: &SpectralCurve, x: f64) -> C {
    curve.y(PointOnCurve::physical(C::new(x, 0.0)))
}

/// `ytilde(x + i0)` on cut `i`, with the distances `dl`, `dr` to its ends given exactly.
fn ytilde_on_cut(curve: &SpectralCurve, i: usize, x: f64, dl: f64, dr: f64) -> C {
    curve
        .endpoints()
        .iter()
        .enumerate()
        .map(|(k, &mu)| {
            if k == 2 * i {
                C::new(dl.sqrt(), 0.0)
            } else if k == 2 * i + 1 {
                C::new(0.0, dr.sqrt())
            } else {
                sqrt_upper_pub(C::new(x - mu, 0.0))
            }
        })
        .product()
}

/// Dyson term `F_{0,1} = oint_{C_D} y log y dq / (2 pi i)`, counterclockwise contours
/// hugging the cuts, `log y` continued from the real axis right of every cut.
pub fn f01_dyson(curve: &SpectralCurve) -> Result<C> {
    let mut total = Z;
    for i in 0..curve.n_cuts() {
        let (a, b) = curve.cut(i);
        let right = y_upper(curve, b + 1e-9 * (b - a));
        if right.im.abs() > 1e-12 * right.norm() {
            return Err(Error::Hypothesis("y is not real right of the cut".into()));
        }
        let start = right.arg();
        // clockwise half turns: around b onto the lower lip, around a onto the upper lip
        let lower = start - 0.5 * PI;
        let upper = lower - PI;
        let probe = y_upper(curve, 0.5 * (a + b));
        if (probe.arg() - upper).rem_euclid(2.0 * PI).min((upper - probe.arg()).rem_euclid(2.0 * PI)) > 1e-6 {
            return Err(Error::Hypothesis("winding of y along the cut".into()));
        }
        let phase = C::new(0.0, lower + upper);
        let v = tanh_sinh(a, b, 1e-13, |x, dl, dr| {
            let y = curve.moment_poly().eval(&C::new(x, 0.0)) * ytilde_on_cut(curve, i, x, dl, dr);
            y * (2.0 * y.norm().ln() + phase)
        })?;
        // the phases are those of the clockwise traversal; reversing it flips the sign
        total -= v / TWO_PI_I;
    }
    Ok(total)
}

/// `M(mu_a)` for every branch point.
fn first_moments(curve: &SpectralCurve) -> Vec<C> {
    curve.endpoints().iter().map(|&mu| curve.moment_poly().eval(&C::new(mu, 0.0))).collect()
}

fn vandermonde(mu: &[f64]) -> f64 {
    let mut d = 1.0;
    for i in 0..mu.len() {
        for j in i + 1..mu.len() {
            d *= mu[j] - mu[i];
        }
    }
    d
}

/// `log(prod_a M(mu_a) Delta(mu))`.
pub fn moment_log(curve: &SpectralCurve) -> C {
    let p: C = first_moments(curve).iter().product();
    (p * vandermonde(curve.endpoints())).ln()
}

/// One-cut `F_{1,0} = 1/24 log(M(mu_1) M(mu_2) (mu_2 - mu_1)^4)`, up to an additive constant.
pub fn f10_one_cut(curve: &SpectralCurve) -> Result<C> {
    if curve.n_cuts() != 1 {
        return Err(Error::Unsupported("F_{1,0} is only available for one-cut curves".into()));
    }
    let m = first_moments(curve);
    let (a, b) = curve.cut(0);
    Ok((m[0] * m[1] * (b - a).powi(4)).ln() / 24.0)
}

/// `int_D dE_{q, qbar}(p) log y(p) dp` along the upper lips of the cuts. `q` lies inside
/// the A-contour of cut `own`, and `dE` is normalized on A-cycles enclosing `q`.
fn support_integral(kernel: &Kernel, q: C, own: usize) -> Result<C> {
    let curve = &kernel.curve;
    let mut lam = kernel.de_lambda(q);
    if own < lam.len() {
        lam[own] -= TWO_PI_I / curve.ytilde(q);
    }
    let yq = curve.ytilde(q);
    let g = kernel.genus();
    let mut s = Z;
    for i in 0..curve.n_cuts() {
        let (a, b) = curve.cut(i);
        s += tanh_sinh(a, b, 1e-13, |x, dl, dr| {
            let p = C::new(x, 0.0);
            let yt = ytilde_on_cut(curve, i, x, dl, dr);
            let mut de = yq / (yt * (p - q));
            for (j, l) in lam.iter().enumerate().take(g) {
                let u: C = (0..g).map(|m| kernel.holo[(j, m)] * p.powi(m as i32)).sum();
                de -= u / yt * l * yq;
            }
            de * (curve.moment_poly().eval(&p) * yt).ln()
        })? / C::new(0.0, PI);
    }
    Ok(s)
}

/// Anomaly term `F_{0,2} = -(T - L/3) / 4` with
///
/// ```text
/// T = -oint_{C_D} (y'/y)(q) int_D dE_{q,qbar}(p) log y(p) dp dq / (2 pi i),
/// L = log(prod_a M(mu_a) Delta(mu)),
/// ```
///
/// `int_D g log y := (1/(pi i)) int_D g(p + i0) log y(p + i0) dp` and `dE` normalized on
/// A-cycles enclosing the `q` contour. The factor `-1/4` matches the normalization of
/// `W_{0,2}`: with it `dF_{0,2}/dt_j` is the coefficient of `p^{-j-1}` in `W_{0,2}`.
pub fn f02(kernel: &Kernel) -> Result<C> {
    let (t, l) = f02_parts(kernel)?;
    Ok(-(t - l / 3.0) / 4.0)
}

/// The contour term `T` and the moment term `L` of [`f02`].
pub fn f02_parts(kernel: &Kernel) -> Result<(C, C)> {
    let curve = &kernel.curve;
    let mut total = Z;
    for i in 0..curve.n_cuts() {
        let rho = if i < kernel.genus() { 0.5 * kernel.a_rho[i] } else { kernel.default_rho(i, &[]) };
        let mut n = 32;
        let mut prev: Option<C> = None;
        loop {
            let rule = kernel.a_rule(i, rho, n);
            let mut v = Z;
            for (q, w) in rule.points.iter().zip(&rule.weights) {
                v += log_derivative(curve, *q) * support_integral(kernel, *q, i)? * w;
            }
            if let Some(p) = prev {
                if (v - p).norm() <= 1e-10 * v.norm().max(1.0) {
                    total += v;
                    break;
                }
            }
            if n >= 1 << 11 {
                return Err(Error::QuadratureNotConverged { value: format!("{v}"), error: (v - prev.unwrap_or(Z)).norm() });
            }
            prev = Some(v);
            n *= 2;
        }
    }
    Ok((-total / TWO_PI_I, moment_log(curve)))
}

/// `2 oint (y'/y) dq / (2 pi i)` over counterclockwise contours around every cut: the
/// potential-independent constant `2n` left by the vanishing combination of diagrams.
pub fn diagrammatic_constant(kernel: &Kernel) -> C {
    let curve = &kernel.curve;
    (0..curve.n_cuts())
        .map(|i| {
            let rho = kernel.default_rho(i, &[]);
            let rule = kernel.a_rule(i, rho, 256).reversed();
            rule.integrate(|q| log_derivative(curve, q))
        })
        .sum::<C>()
        * 2.0
        / TWO_PI_I
}

/// How a table entry was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    HOperator,
    Dyson,
    F02Formula,
    F10OneCut,
    PlanarRegularized,
}

impl Method {
    pub fn for_index(k: usize, l: usize) -> Method {
        match (k, l) {
            (0, 0) => Method::PlanarRegularized,
            (0, 1) => Method::Dyson,
            (1, 0) => Method::F10OneCut,
            (0, 2) => Method::F02Formula,
            _ => Method::HOperator,
        }
    }

    pub fn tag(self) -> &'static str {
        match self {
            Method::HOperator => "h_operator",
            Method::Dyson => "dyson",
            Method::F02Formula => "f02_formula",
            Method::F10OneCut => "f10_one_cut",
            Method::PlanarRegularized => "planar_regularized",
        }
    }
}

/// Level `2k + l - 2` of an index pair.
pub fn level(k: usize, l: usize) -> i64 {
    2 * k as i64 + l as i64 - 2
}

/// All `(k, l)` with level at most `max_level`, ordered by level then `k`.
pub fn indices_up_to(max_level: i64) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for lev in -2..=max_level {
        for k in 0..=((lev + 2) / 2) as usize {
            out.push((k, (lev + 2) as usize - 2 * k));
        }
    }
    out
}

/// `F_{k,l}` with the method of [`Method::for_index`].
pub fn compute_entry(engine: &Engine, k: usize, l: usize) -> Result<C> {
    match Method::for_index(k, l) {
        Method::PlanarRegularized => planar_free_energy_with(&engine.kernel),
        Method::Dyson => f01_dyson(engine.curve()),
        Method::F10OneCut => f10_one_cut(engine.curve()),
        Method::F02Formula => f02(&engine.kernel),
        Method::HOperator => free_energy_generic(engine, k, l),
    }
}

/// Computed free-energy corrections of one curve.
#[derive(Clone, Debug)]
pub struct FreeEnergyTable {
    pub entries: BTreeMap<(usize, usize), (C, Method)>,
    /// Entries that could not be computed, with the reason.
    pub failures: BTreeMap<(usize, usize), Error>,
    pub curve: SpectralCurve,
    pub params: ExpansionParams,
}

impl FreeEnergyTable {
    pub fn empty(curve: &SpectralCurve, params: ExpansionParams) -> Self {
        FreeEnergyTable { entries: BTreeMap::new(), failures: BTreeMap::new(), curve: curve.clone(), params }
    }

    /// Every entry up to `max_level`; failures are recorded rather than returned.
    pub fn compute(engine: &Engine, params: ExpansionParams, max_level: i64) -> Self {
        let mut t = FreeEnergyTable::empty(engine.curve(), params);
        for (k, l) in indices_up_to(max_level) {
            match compute_entry(engine, k, l) {
                Ok(v) => {
                    t.entries.insert((k, l), (v, Method::for_index(k, l)));
                }
                Err(e) => {
                    t.failures.insert((k, l), e);
                }
            }
        }
        t
    }

    pub fn get(&self, k: usize, l: usize) -> Option<C> {
        self.entries.get(&(k, l)).map(|e| e.0)
    }

    /// Adds the calibration offsets to the matching entries.
    pub fn calibrated(mut self, cal: &Calibration) -> Self {
        for (key, (v, _)) in self.entries.iter_mut() {
            if let Some(c) = cal.offsets.get(key) {
                *v += c;
            }
        }
        self
    }
}

/// Additive constants per `(k, l)`, fixed once against a reference and then frozen.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Calibration {
    pub offsets: BTreeMap<(usize, usize), C>,
}

impl Calibration {
    /// Offsets making `table` equal to `reference` wherever both are known.
    pub fn fit(table: &FreeEnergyTable, reference: &BTreeMap<(usize, usize), f64>) -> Self {
        let offsets = table
            .entries
            .iter()
            .filter_map(|(key, (v, _))| reference.get(key).map(|r| (*key, C::new(*r, 0.0) - v)))
            .collect();
        Calibration { offsets }
    }
}

/// Truncated `sum_level hbar^level c_level` with `c_level = sum_l gamma^l F_{k,l}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HbarSeries {
    /// `coeffs[i]` multiplies `hbar^(i - 2)`.
    pub coeffs: Vec<C>,
    pub gamma: f64,
}

impl HbarSeries {
    pub fn coefficient(&self, level: i64) -> C {
        self.coeffs.get((level + 2) as usize).copied().unwrap_or(Z)
    }

    pub fn eval(&self, hbar: f64) -> C {
        self.coeffs.iter().enumerate().map(|(i, c)| c * hbar.powi(i as i32 - 2)).sum()
    }
}

/// Assembles the series through `max_level`; every entry up to that level must be present.
pub fn assemble_series(table: &FreeEnergyTable, params: &ExpansionParams, max_level: i64) -> Result<HbarSeries> {
    let missing: Vec<String> = indices_up_to(max_level)
        .into_iter()
        .filter(|key| !table.entries.contains_key(key))
        .map(|(k, l)| format!("F_{{{k},{l}}}"))
        .collect();
    if !missing.is_empty() {
        return Err(Error::InvalidInput(format!("missing entries: {}", missing.join(", "))));
    }
    let mut coeffs = vec![Z; (max_level + 3) as usize];
    for (k, l) in indices_up_to(max_level) {
        let v = table.entries[&(k, l)].0;
        coeffs[(level(k, l) + 2) as usize] += v * params.gamma.powi(l as i32);
    }
    Ok(HbarSeries { coeffs, gamma: params.gamma })
}


/// Level-wise calibration at one `beta`: offsets to `c_L` and the coefficients `d_L` of
/// `hbar^L log hbar`, both potential independent.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct LevelCalibration {
    pub offsets: BTreeMap<i64, C>,
    pub log_terms: BTreeMap<i64, f64>,
}

impl LevelCalibration {
    /// Offsets making `series` reproduce the reference levels `c_L`.
    pub fn fit(series: &HbarSeries, reference: &BTreeMap<i64, f64>, log_terms: BTreeMap<i64, f64>) -> Self {
        let offsets = reference.iter().map(|(&lev, &c)| (lev, C::new(c, 0.0) - series.coefficient(lev))).collect();
        LevelCalibration { offsets, log_terms }
    }
}

impl HbarSeries {
    /// `sum_L hbar^L (c_L + offset_L + d_L log hbar)` over the levels of the series.
    pub fn eval_calibrated(&self, hbar: f64, cal: &LevelCalibration) -> C {
        let mut s = self.eval(hbar);
        for lev in -2..self.coeffs.len() as i64 - 2 {
            let off = cal.offsets.get(&lev).copied().unwrap_or(Z);
            let d = cal.log_terms.get(&lev).copied().unwrap_or(0.0);
            s += (off + d * hbar.ln()) * hbar.powi(lev as i32);
        }
        s
    }
}
