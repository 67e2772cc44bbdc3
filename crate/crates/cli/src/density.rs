use betamm_core::curve::{PointOnCurve, SpectralCurve};
use betamm_core::poly::gauss_legendre;
use num_complex::Complex64 as C;
use std::f64::consts::PI;

/// Equilibrium density `|y(x)| / (pi t0)` on the support.
fn density(c: &SpectralCurve, x: f64) -> f64 {
    c.y(PointOnCurve::physical(C::new(x, 0.0))).norm() / (PI * c.t0())
}

/// `(x, density)` at `samples` Chebyshev points per cut, endpoints included.
pub fn density_table(c: &SpectralCurve, samples: usize) -> Vec<(f64, f64)> {
    let samples = samples.max(2);
    let mut out = Vec::with_capacity(samples * c.n_cuts());
    for i in 0..c.n_cuts() {
        let (a, b) = c.cut(i);
        for j in 0..samples {
            if j == 0 || j + 1 == samples {
                out.push((if j == 0 { a } else { b }, 0.0));
            } else {
                let x = 0.5 * (a + b) + 0.5 * (b - a) * (PI * (j as f64 / (samples - 1) as f64 - 0.5)).sin();
                out.push((x, density(c, x)));
            }
        }
    }
    out
}

/// `int_D density`, through `x = m + h cos(theta)` per cut.
pub fn density_integral(c: &SpectralCurve) -> f64 {
    let gl = gauss_legendre(200);
    let (nodes, weights) = (&gl.0, &gl.1);
    (0..c.n_cuts())
        .map(|i| {
            let (a, b) = c.cut(i);
            let (m, h) = (0.5 * (a + b), 0.5 * (b - a));
            nodes
                .iter()
                .zip(weights)
                .map(|(t, w)| {
                    let th = 0.5 * PI * (t + 1.0);
                    0.5 * PI * w * h * th.sin() * density(c, m + h * th.cos())
                })
                .sum::<f64>()
        })
        .sum()
}
