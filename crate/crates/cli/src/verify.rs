//! Invariant suite run by the `verify` command.

use crate::density::density_integral;
use crate::format;
use betamm_core::correlators::Engine;
use betamm_core::curve::PointOnCurve;
use betamm_core::free_energy::{diagrammatic_constant, HOperator};
use betamm_core::Result;
use num_complex::Complex64 as C;
use serde_json::{json, Value};

struct Check {
    name: &'static str,
    value: f64,
    tolerance: f64,
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

fn max_of(it: impl IntoIterator<Item = Result<f64>>) -> Result<f64> {
    it.into_iter().try_fold(0.0f64, |m, v| Ok(m.max(v?)))
}

fn checks(e: &Engine, points: &[PointOnCurve], max_level: usize) -> Result<Vec<Check>> {
    let c = e.curve();
    let k = &e.kernel;
    let orders: Vec<(usize, usize)> = (0..=max_level.min(3)).flat_map(|s| (0..=s / 2).map(move |k| (k, s - 2 * k))).collect();
    let mut out = vec![
        Check { name: "asymptotic and filling conditions", value: c.residuals.iter().fold(0.0, |m, r| m.max(r.abs())), tolerance: 1e-10 },
        Check { name: "density normalization", value: (density_integral(c) - 1.0).abs(), tolerance: 1e-8 },
    ];
    let loop_eq = max_of(points.iter().flat_map(|pt| {
        orders.iter().map(move |&(kk, l)| Ok(e.loop_equation_residual(kk, l, pt.p, &[])?.norm() / e.correlator(kk, l, *pt, &[])?.norm().max(1.0)))
    }))?;
    out.push(Check { name: "loop equations", value: loop_eq, tolerance: 1e-9 });
    let pairs: Vec<(PointOnCurve, PointOnCurve)> = points.iter().zip(points.iter().cycle().skip(1)).map(|(a, b)| (*a, *b)).collect();
    let sym = max_of(pairs.iter().flat_map(|&(p, q)| {
        [(0, 0), (0, 1), (1, 0)].into_iter().map(move |(kk, l)| Ok(rel(e.correlator(kk, l, p, &[q])?, e.correlator(kk, l, q, &[p])?)))
    }))?;
    out.push(Check { name: "correlator symmetry", value: sym, tolerance: 1e-9 });
    let bsym = max_of(pairs.iter().map(|&(p, q)| Ok(rel(k.bergmann(p, q)?, k.bergmann(q, p)?))))?;
    out.push(Check { name: "Bergmann symmetry", value: bsym, tolerance: 1e-12 });
    let hb = max_of(points.iter().map(|&q| Ok(rel(HOperator::new(k, false, &[q.p]).apply(|x| k.bergmann(x, q))?, -c.y(q)))))?;
    out.push(Check { name: "H applied to B", value: hb, tolerance: 1e-10 });
    if k.genus() > 0 {
        let mut worst: f64 = 0.0;
        for i in 0..k.genus() {
            for (kk, l) in [(0, 1), (1, 0), (0, 2)] {
                worst = worst.max(k.a_period_avoiding(i, &[], |x| e.correlator(kk, l, x, &[]).unwrap_or(C::new(f64::NAN, 0.0)))?.norm());
            }
        }
        out.push(Check { name: "A-periods", value: worst, tolerance: 1e-9 });
    }
    let d = diagrammatic_constant(k) - 2.0 * c.n_cuts() as f64;
    out.push(Check { name: "diagrammatic constant", value: d.norm(), tolerance: 1e-8 });
    Ok(out)
}

/// The check list and whether every check passed.
pub fn run_checks(e: &Engine, points: &[PointOnCurve], max_level: usize) -> Result<(Value, bool)> {
    let list = checks(e, points, max_level)?;
    let ok = list.iter().all(|c| c.value < c.tolerance);
    let rows = list
        .iter()
        .map(|c| {
            json!({
                "check": c.name,
                "status": if c.value < c.tolerance { "pass" } else { "fail" },
                "value": format::real(c.value),
                "tolerance": format!("{:e}", c.tolerance),
            })
        })
        .collect();
    Ok((Value::Array(rows), ok))
}
