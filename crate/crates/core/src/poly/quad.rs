use crate::error::{Error, Result};
use num_complex::Complex64 as C;
use once_cell::sync::Lazy;
use std::collections::HashMap;
use std::f64::consts::PI;
use std::sync::{Arc, Mutex};

static GL_CACHE: Lazy<Mutex<HashMap<usize, Arc<(Vec<f64>, Vec<f64>)>>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// Gauss-Legendre nodes and weights on [-1, 1].
pub fn gauss_legendre(n: usize) -> Arc<(Vec<f64>, Vec<f64>)> {
    if let Some(r) = GL_CACHE.lock().unwrap().get(&n) {
        return r.clone();
    }
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let pn = if n == 0 { 1.0 } else { p1 };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (z * pn - pm) / (z * z - 1.0);
            let dz = pn / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        w[i] = 2.0 / ((1.0 - z * z) * dp * dp);
        w[n - 1 - i] = w[i];
    }
    let r = Arc::new((x, w));
    GL_CACHE.lock().unwrap().insert(n, r.clone());
    r
}

/// Closed or open integration path in the complex plane. Closed contours are
/// counterclockwise unless reversed through [`Rule::reversed`].
#[derive(Clone, Debug, PartialEq)]
pub enum Contour {
    Circle { center: C, radius: f64 },
    /// Segment `[a, b]` surrounded at distance `clearance`.
    Stadium { a: C, b: C, clearance: f64 },
    /// Confocal ellipse `mid + h cosh(rho + i theta)` around the segment `[a, b]`.
    Ellipse { a: C, b: C, rho: f64 },
    Polyline(Vec<C>),
}

/// Discrete rule: `sum_k weights[k] f(points[k])` approximates `int f(z) dz`.
#[derive(Clone, Debug, Default)]
pub struct Rule {
    pub points: Vec<C>,
    pub weights: Vec<C>,
}

impl Rule {
    pub fn integrate(&self, mut f: impl FnMut(C) -> C) -> C {
        self.points.iter().zip(&self.weights).map(|(z, w)| f(*z) * w).sum()
    }

    pub fn try_integrate<E>(&self, mut f: impl FnMut(C) -> std::result::Result<C, E>) -> std::result::Result<C, E> {
        let mut s = C::new(0.0, 0.0);
        for (z, w) in self.points.iter().zip(&self.weights) {
            s += f(*z)? * w;
        }
        Ok(s)
    }

    pub fn reversed(mut self) -> Self {
        for w in &mut self.weights {
            *w = -*w;
        }
        self
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn push_segment(&mut self, z0: C, z1: C, panels: usize, n: usize) {
        let gl = gauss_legendre(n);
        let d = (z1 - z0) / panels as f64;
        for p in 0..panels {
            let a = z0 + d * p as f64;
            for (x, w) in gl.0.iter().zip(&gl.1) {
                self.points.push(a + d * (0.5 * (x + 1.0)));
                self.weights.push(d * (0.5 * w));
            }
        }
    }

    fn push_arc(&mut self, c: C, r: f64, t0: f64, t1: f64, panels: usize, n: usize) {
        let gl = gauss_legendre(n);
        let dt = (t1 - t0) / panels as f64;
        for p in 0..panels {
            let a = t0 + dt * p as f64;
            for (x, w) in gl.0.iter().zip(&gl.1) {
                let t = a + dt * 0.5 * (x + 1.0);
                let e = C::from_polar(r, t);
                self.points.push(c + e);
                self.weights.push(C::i() * e * (dt * 0.5 * w));
            }
        }
    }
}

impl Contour {
    /// Composite Gauss-Legendre rule with `panels` panels on every piece.
    pub fn gauss_rule(&self, panels: usize, n: usize) -> Rule {
        let mut r = Rule::default();
        match self {
            Contour::Circle { center, radius } => r.push_arc(*center, *radius, 0.0, 2.0 * PI, 2 * panels, n),
            Contour::Stadium { a, b, clearance } => {
                let len = (b - a).norm();
                let u = if len > 0.0 { (b - a) / len } else { C::new(1.0, 0.0) };
                let c = *clearance;
                let off = u * C::new(0.0, -c);
                let th = u.arg();
                if len > 0.0 {
                    r.push_segment(a + off, b + off, panels, n);
                }
                r.push_arc(*b, c, th - PI / 2.0, th + PI / 2.0, panels, n);
                if len > 0.0 {
                    r.push_segment(b - off, a - off, panels, n);
                }
                r.push_arc(*a, c, th + PI / 2.0, th + 1.5 * PI, panels, n);
            }
            Contour::Ellipse { .. } => {
                let t = self.trapezoid_rule(panels * n);
                return t;
            }
            Contour::Polyline(pts) => {
                for w in pts.windows(2) {
                    r.push_segment(w[0], w[1], panels, n);
                }
            }
        }
        r
    }

    /// Equispaced trapezoid rule for the closed smooth contours, spectrally
    /// accurate for integrands analytic in a neighborhood.
    pub fn trapezoid_rule(&self, n: usize) -> Rule {
        let mut r = Rule::default();
        let h = 2.0 * PI / n as f64;
        match self {
            Contour::Circle { center, radius } => {
                for k in 0..n {
                    let e = C::from_polar(*radius, h * k as f64);
                    r.points.push(center + e);
                    r.weights.push(C::i() * e * h);
                }
            }
            Contour::Ellipse { a, b, rho } => {
                let mid = (a + b) * 0.5;
                let half = (b - a) * 0.5;
                for k in 0..n {
                    let w = C::new(*rho, h * (k as f64 + 0.5));
                    r.points.push(mid + half * w.cosh());
                    r.weights.push(half * w.sinh() * C::i() * h);
                }
            }
            _ => return self.gauss_rule(1, n),
        }
        r
    }
}

#[derive(Clone, Copy, Debug)]
pub struct QuadOptions {
    pub nodes_per_panel: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
    pub max_nodes: usize,
}

impl Default for QuadOptions {
    fn default() -> Self {
        QuadOptions { nodes_per_panel: 64, abs_tol: 1e-13, rel_tol: 1e-12, max_nodes: 1 << 14 }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Integral {
    pub value: C,
    pub error: f64,
    pub nodes: usize,
}

/// `int_contour f(z) dz` with panel doubling until two successive
/// refinements agree.
pub fn contour_integral(f: impl Fn(C) -> C, contour: &Contour, opts: &QuadOptions) -> Result<Integral> {
    let mut panels = 1;
    let mut prev = contour.gauss_rule(panels, opts.nodes_per_panel).integrate(&f);
    loop {
        panels *= 2;
        let rule = contour.gauss_rule(panels, opts.nodes_per_panel);
        let cur = rule.integrate(&f);
        let err = (cur - prev).norm();
        if err <= opts.abs_tol + opts.rel_tol * cur.norm() {
            return Ok(Integral { value: cur, error: err, nodes: rule.len() });
        }
        if rule.len() * 2 > opts.max_nodes || !cur.is_finite() {
            return Err(Error::QuadratureNotConverged { value: format!("{cur}"), error: err });
        }
        prev = cur;
    }
}
