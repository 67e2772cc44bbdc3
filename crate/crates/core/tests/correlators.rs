use betamm_core::correlators::{Engine, EngineOptions};
use betamm_core::curve::{solve_endpoints, FillingData, InitialGuess, PointOnCurve, Potential, Sheet, SpectralCurve};
use betamm_core::Error;
use num_complex::Complex64 as C;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn gaussian(t2: f64) -> SpectralCurve {
    let v = Potential::new(vec![0.0, 0.0, t2]).unwrap();
    solve_endpoints(&v, &FillingData::new(1.0, vec![]).unwrap(), 1, &InitialGuess::Auto).unwrap()
}

fn quartic(couplings: Vec<f64>) -> SpectralCurve {
    let v = Potential::new(couplings).unwrap();
    solve_endpoints(&v, &FillingData::new(1.0, vec![]).unwrap(), 1, &InitialGuess::Auto).unwrap()
}

fn two_cut(couplings: Vec<f64>, s1: f64) -> SpectralCurve {
    let v = Potential::new(couplings).unwrap();
    solve_endpoints(&v, &FillingData::new(0.1, vec![s1]).unwrap(), 2, &InitialGuess::Wells).unwrap()
}

fn engine(c: &SpectralCurve) -> Engine {
    Engine::new(c, EngineOptions::default()).unwrap()
}

fn phys(re: f64, im: f64) -> PointOnCurve {
    PointOnCurve::physical(C::new(re, im))
}

fn random_points(seed: u64, n: usize) -> Vec<PointOnCurve> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| {
            let im = rng.gen_range(0.3..1.5) * if rng.gen() { 1.0 } else { -1.0 };
            phys(rng.gen_range(-2.5..2.5), im)
        })
        .collect()
}

#[test]
fn planar_gaussian_value() {
    let e = engine(&gaussian(0.5));
    let w = e.correlator(0, 0, phys(3.0, 0.0), &[]).unwrap();
    assert!((w.re - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15 && w.im.abs() < 1e-15);
}

#[test]
fn gue_first_correction() {
    // genus-one resolvent of the Gaussian Hermitian model
    let e = engine(&gaussian(0.5));
    for p in [C::new(3.0, 0.5), C::new(-0.4, 1.1), C::new(2.2, -0.3)] {
        let w = e.correlator(1, 0, PointOnCurve::physical(p), &[]).unwrap();
        let yt = (p - 2.0).sqrt() * (p + 2.0).sqrt();
        let want = 1.0 / yt.powi(5);
        assert!((w - want).norm() < 1e-14 * (1.0 + want.norm()), "{w} {want}");
    }
}

#[test]
fn two_point_planar_is_symmetric_and_decays() {
    let e = engine(&two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03));
    let pts = random_points(1, 40);
    for pair in pts.chunks(2) {
        let a = e.correlator(0, 0, pair[0], &[pair[1]]).unwrap();
        let b = e.correlator(0, 0, pair[1], &[pair[0]]).unwrap();
        assert!((a - b).norm() < 1e-12 * (1.0 + a.norm()));
    }
    let q = phys(0.3, 0.9);
    let f = |r: f64| e.correlator(0, 0, phys(r, 0.7 * r), &[q]).unwrap().norm() * r * r;
    assert!((f(2e3) / f(1e3) - 1.0).abs() < 1e-2);
}

#[test]
fn apply_k_planar_and_projection() {
    for c in [gaussian(0.5), quartic(vec![0.0, 0.0, 0.5, 0.0, 0.1]), two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03)] {
        let e = engine(&c);
        let w0 = |x: C| c.planar_resolvent(PointOnCurve::physical(x));
        for pt in random_points(2, 10) {
            let r = e.apply_k(w0, pt.p) - w0(pt.p) * w0(pt.p);
            assert!(r.norm() < 1e-12, "{r}");
            // polynomials are projected out
            assert!(e.apply_k(|x| x * x - 3.0 * x + 1.0, pt.p).norm() < 1e-10);
            let f = |x: C| 1.0 / (x - C::new(0.1, 0.05));
            let g = |x: C| 1.0 / ((x + 0.2) * (x + 0.2));
            let lin = e.apply_k(|x| 2.0 * f(x) - 3.0 * g(x), pt.p) - 2.0 * e.apply_k(f, pt.p) + 3.0 * e.apply_k(g, pt.p);
            assert!(lin.norm() < 1e-12);
        }
    }
}

#[test]
fn invert_k_round_trip() {
    for c in [gaussian(0.5), quartic(vec![0.0, 0.0, 0.5, 0.0, 0.1]), two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03)] {
        let e = engine(&c);
        let r = phys(0.4, 1.7);
        let f = |x: C| e.kernel.w00_two_point(PointOnCurve::physical(x), r).unwrap();
        let w0 = |x: C| c.planar_resolvent(PointOnCurve::physical(x));
        let rhs = |x: C| e.apply_k(f, x) - 2.0 * w0(x) * f(x);
        for pt in random_points(3, 4) {
            let got = e.invert_k(rhs, pt.p).unwrap();
            assert!((got - f(pt.p)).norm() < 1e-10, "{got} {}", f(pt.p));
        }
        assert_eq!(e.invert_k(|_| C::new(0.0, 0.0), C::new(0.5, 0.5)).unwrap(), C::new(0.0, 0.0));
    }
}

#[test]
fn invert_k_reproduces_recursion() {
    let c = two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03);
    let e = engine(&c);
    let p = C::new(0.7, 0.6);
    for (k, l) in [(0, 1), (1, 0)] {
        let rhs = |x: C| e.rhs(k, l, x, Sheet::Physical, &[], 1).unwrap().value();
        let got = e.invert_k(rhs, p).unwrap();
        let want = e.correlator(k, l, PointOnCurve::physical(p), &[]).unwrap();
        assert!((got - want).norm() < 1e-10, "{got} {want}");
    }
}

fn residual_check(c: &SpectralCurve, levels: &[(usize, usize)], tol: f64) {
    let e = engine(c);
    for pt in random_points(4, 5) {
        for &(k, l) in levels {
            let r = e.loop_equation_residual(k, l, pt.p, &[]).unwrap();
            let w = e.correlator(k, l, pt, &[]).unwrap();
            assert!(r.norm() < tol * (1.0 + w.norm()), "({k},{l}) {r}");
        }
    }
}

#[test]
fn loop_equation_residuals_one_cut() {
    residual_check(&gaussian(0.5), &[(0, 1), (1, 0), (0, 2), (1, 1), (0, 3), (2, 0)], 1e-12);
    residual_check(&quartic(vec![0.0, 0.0, 0.5, 0.0, 0.1]), &[(0, 1), (1, 0), (0, 2), (1, 1), (0, 3)], 1e-10);
}

#[test]
fn loop_equation_residuals_two_cut() {
    residual_check(&two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03), &[(0, 1), (1, 0), (0, 2), (1, 1), (0, 3)], 1e-9);
}

#[test]
fn spectator_residuals() {
    let c = two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03);
    let e = engine(&c);
    let q = phys(-0.6, 0.8);
    for (k, l) in [(0, 0), (0, 1), (1, 0)] {
        let r = e.loop_equation_residual(k, l, C::new(1.1, -0.4), &[q]).unwrap();
        assert!(r.norm() < 1e-10, "({k},{l}) {r}");
    }
}

fn symmetry_check(c: &SpectralCurve) {
    let e = engine(c);
    let pts = random_points(5, 40);
    for pair in pts.chunks(2) {
        for (k, l) in [(0, 0), (0, 1), (1, 0), (0, 2)] {
            let a = e.correlator(k, l, pair[0], &[pair[1]]).unwrap();
            let b = e.correlator(k, l, pair[1], &[pair[0]]).unwrap();
            assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()), "({k},{l}) {a} {b}");
        }
    }
    let (p, q, r) = (pts[0], pts[1], pts[2]);
    for (k, l) in [(0, 0), (0, 1), (1, 0)] {
        let a = e.correlator(k, l, p, &[q, r]).unwrap();
        let b = e.correlator(k, l, q, &[r, p]).unwrap();
        let d = e.correlator(k, l, r, &[p, q]).unwrap();
        assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()) && (a - d).norm() < 1e-9 * (1.0 + a.norm()));
    }
}

#[test]
fn symmetry_one_cut() {
    symmetry_check(&quartic(vec![0.0, 0.0, 0.5, 0.0, 0.1]));
}

#[test]
fn symmetry_two_cut() {
    symmetry_check(&two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03));
}

#[test]
fn a_periods_and_double_points_vanish() {
    let c = two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03);
    assert_eq!(c.double_points().len(), 1);
    let e = engine(&c);
    let b = c.double_points()[0].0;
    let reach = c.distance_to_branch_points(b);
    for (k, l) in [(0, 1), (1, 0), (0, 2)] {
        let a = e.kernel.a_period_avoiding(0, &[], |x| e.correlator(k, l, x, &[]).unwrap()).unwrap();
        assert!(a.norm() < 1e-9, "({k},{l}) {a}");
        let n = 64;
        let mut s = C::new(0.0, 0.0);
        for t in 0..n {
            let z = C::from_polar(0.5 * reach, 2.0 * std::f64::consts::PI * t as f64 / n as f64);
            s += e.correlator(k, l, PointOnCurve::physical(b + z), &[]).unwrap() * z * C::i() * (2.0 * std::f64::consts::PI / n as f64);
        }
        assert!(s.norm() < 1e-9, "({k},{l}) {s}");
    }
}

#[test]
fn double_point_evaluation_is_regular() {
    let c = two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03);
    let e = engine(&c);
    let b = c.double_points()[0].0;
    for (k, l) in [(0, 1), (1, 0)] {
        let at = e.correlator(k, l, PointOnCurve::physical(b), &[]).unwrap();
        for h in [1e-3, 1e-5] {
            let near = e.correlator(k, l, PointOnCurve::physical(b + C::new(0.0, h)), &[]).unwrap();
            assert!((near - at).norm() < 100.0 * h * (1.0 + at.norm()), "{at} {near}");
        }
    }
}

#[test]
fn one_point_decay() {
    for c in [quartic(vec![0.0, 0.0, 0.5, 0.0, 0.1]), two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03)] {
        let e = engine(&c);
        for (k, l) in [(0, 1), (1, 0), (0, 2)] {
            let s = e.series_at_infinity(k, l, &[], 3).unwrap();
            assert!(s[0].norm() < 1e-12, "({k},{l}) {:?}", s);
        }
        let s = e.series_at_infinity(0, 0, &[], 2).unwrap();
        assert!((s[0] - c.t0()).norm() < 1e-12);
    }
}

/// `d/dt_j W_{k,l}(p)` by central differences on re-solved curves; the insertion
/// `W(., q)` carries `-d/dt_j` at order `q^{-j-1}`.
fn coupling_derivative(c: &SpectralCurve, j: usize, k: usize, l: usize, p: PointOnCurve, h: f64) -> C {
    let w = |d: f64| {
        let v = c.potential.with_coupling(j, c.potential.couplings().get(j).copied().unwrap_or(0.0) + d).unwrap();
        let guess = InitialGuess::Explicit(c.endpoints().to_vec());
        let cc = solve_endpoints(&v, &c.filling, c.n_cuts(), &guess).unwrap();
        engine(&cc).correlator(k, l, p, &[]).unwrap()
    };
    (w(h) - w(-h)) / (2.0 * h)
}

#[test]
fn loop_insertion_matches_coupling_derivatives() {
    let cases = [
        (gaussian(0.5), vec![(0, 0, 2), (0, 0, 1)]),
        (quartic(vec![0.0, 0.0, 0.5, 0.0, 0.1]), vec![(0, 0, 2), (0, 1, 2), (1, 0, 4), (0, 2, 3)]),
        (two_cut(vec![0.0, 0.1, -1.0, 0.0, 0.25], 0.03), vec![(0, 0, 2), (0, 1, 1), (1, 0, 2)]),
    ];
    let p = phys(0.35, 0.9);
    for (c, list) in cases {
        let e = engine(&c);
        for (k, l, j) in list {
            let series = e.series_at_infinity(k, l, &[p], j).unwrap();
            let fd = coupling_derivative(&c, j, k, l, p, 1e-5);
            assert!((series[j] + fd).norm() < 1e-6 * (1.0 + fd.norm()), "({k},{l}) t{j}: {} {fd}", series[j]);
        }
    }
}

#[test]
fn loop_insertion_of_planar_resolvent() {
    let c = quartic(vec![0.0, 0.0, 0.5, 0.0, 0.1]);
    let e = engine(&c);
    let (p, q) = (phys(0.2, 0.8), phys(-1.0, -0.6));
    let a = e.correlator(0, 0, p, &[q]).unwrap();
    let b = e.kernel.w00_two_point(p, q).unwrap();
    assert_eq!(a, b);
}

#[test]
fn budget_and_dependencies() {
    let e = Engine::new(&gaussian(0.5), EngineOptions { max_level: 4, ..EngineOptions::default() }).unwrap();
    let p = phys(1.0, 1.0);
    assert!(matches!(e.correlator(2, 0, p, &[]), Err(Error::BudgetExceeded { requested: 5, max: 4 })));
    e.correlator(1, 0, p, &[]).unwrap();
    e.correlator(0, 1, p, &[phys(0.0, 2.0)]).unwrap();
    let deps = e.dependencies();
    assert!(deps[&(1, 0, 1)].contains(&(0, 0, 2)));
    assert!(deps[&(0, 1, 2)].contains(&(0, 1, 1)));
    assert!(deps[&(0, 1, 2)].contains(&(0, 0, 2)));
    for (parent, children) in deps {
        for child in children {
            assert!(2 * child.0 + child.1 + child.2 < 2 * parent.0 + parent.1 + parent.2 + 1);
        }
    }
}

#[test]
fn unphysical_sheet_consistency() {
    // W_{0,0}(pbar) = V' - W_{0,0}(p); higher orders continue analytically across the cut
    let c = quartic(vec![0.0, 0.0, 0.5, 0.0, 0.1]);
    let e = engine(&c);
    let (a, b) = (c.endpoints()[0], c.endpoints()[1]);
    let x = 0.3 * a + 0.7 * b;
    for (k, l) in [(0, 1), (1, 0)] {
        let above = e.correlator(k, l, phys(x, 1e-7), &[]).unwrap();
        let below = e.correlator(k, l, PointOnCurve::unphysical(C::new(x, -1e-7)), &[]).unwrap();
        assert!((above - below).norm() < 1e-5 * (1.0 + above.norm()), "{above} {below}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]
    #[test]
    fn symmetry_random_quartic(g in 0.02f64..0.3, t3 in -0.05f64..0.05, seed in 0u64..1000) {
        let c = quartic(vec![0.0, 0.0, 0.5, t3, g]);
        let e = engine(&c);
        let pts = random_points(seed, 2);
        for (k, l) in [(0, 1), (1, 0)] {
            let a = e.correlator(k, l, pts[0], &[pts[1]]).unwrap();
            let b = e.correlator(k, l, pts[1], &[pts[0]]).unwrap();
            prop_assert!((a - b).norm() < 1e-9 * (1.0 + a.norm()));
        }
    }
}
