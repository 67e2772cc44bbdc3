use betamm_core::poly::*;
use num_bigint::BigInt;
use num_complex::Complex64 as C;
use num_rational::BigRational;
use num_traits::Signed;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

fn qp(c: &[i64]) -> Poly<BigRational> {
    Poly::new(c.iter().map(|&v| q(v, 1)).collect())
}

fn cp(c: &[f64]) -> Poly<C> {
    Poly::new(c.iter().map(|&v| C::new(v, 0.0)).collect())
}

#[test]
fn roots_of_x2_minus_4() {
    let r = poly_roots(&cp(&[-4.0, 0.0, 1.0]), 1e-12).unwrap();
    assert_eq!(r.roots.len(), 2);
    assert!((r.roots[0].0 - C::new(-2.0, 0.0)).norm() < 1e-14 && r.roots[0].1 == 1);
    assert!((r.roots[1].0 - C::new(2.0, 0.0)).norm() < 1e-14 && r.roots[1].1 == 1);
}

#[test]
fn double_root_is_merged() {
    let r = poly_roots(&cp(&[1.0, -2.0, 1.0]), 1e-12).unwrap();
    assert_eq!(r.roots.len(), 1);
    assert_eq!(r.roots[0].1, 2);
    assert!((r.roots[0].0 - C::new(1.0, 0.0)).norm() < 1e-12);
}

#[test]
fn cubic_roots_polished() {
    let p = cp(&[1.0, -2.0, 0.0, 1.0]);
    let r = poly_roots(&p, 1e-12).unwrap();
    assert_eq!(r.roots.iter().map(|x| x.1).sum::<usize>(), 3);
    for (z, _) in &r.roots {
        assert!(p.eval(z).norm() < 1e-10);
    }
    // x^3 - 2x + 1 = (x - 1)(x^2 + x - 1)
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let expect = [-(golden + 1.0), golden, 1.0];
    for (e, (z, _)) in expect.iter().zip(&r.roots) {
        assert!((z.re - e).abs() < 1e-13 && z.im.abs() < 1e-13);
    }
}

#[test]
fn high_precision_roots() {
    set_mp_precision(200);
    let p: Poly<Mp> = Poly::new(vec![Mp::new(-2.0, 0.0), Mp::new(0.0, 0.0), Mp::new(1.0, 0.0)]);
    let r = poly_roots(&p, 1e-50).unwrap();
    let s2 = rug::Float::with_val(200, 2).sqrt();
    let err = rug::Float::with_val(200, r.roots[1].0.real() - &s2).abs();
    assert!(err < 1e-55);
}

#[test]
fn geometric_series_at_infinity() {
    let a = q(3, 2);
    let f = RationalFn::new(Poly::constant(q(1, 1)), Poly::new(vec![-a.clone(), q(1, 1)])).unwrap();
    let s = series_at(&f, &Center::Infinity, 3).unwrap();
    assert_eq!(s.coeff(-1).unwrap(), q(1, 1));
    assert_eq!(s.coeff(-2).unwrap(), a.clone());
    assert_eq!(s.coeff(-3).unwrap(), &a * &a);
    assert_eq!(s.coeff(0).unwrap(), q(0, 1));
    assert!(s.coeff(-4).is_err());
}

#[test]
fn polynomial_has_no_tail() {
    let f = RationalFn::from_poly(qp(&[0, 1]));
    let s = series_at(&f, &Center::Infinity, 5).unwrap();
    assert_eq!(s.coeffs.len(), 1);
    assert_eq!(s.coeff(1).unwrap(), q(1, 1));
}

#[test]
fn long_division_oracle() {
    let f = RationalFn::new(qp(&[1, 0, 1]), qp(&[-4, 0, 1])).unwrap();
    let s = series_at(&f, &Center::Infinity, 4).unwrap();
    // (p^2 + 1) / (p^2 - 4) = 1 + 5/p^2 + 20/p^4 + ...
    assert_eq!(s.coeff(0).unwrap(), q(1, 1));
    assert_eq!(s.coeff(-1).unwrap(), q(0, 1));
    assert_eq!(s.coeff(-2).unwrap(), q(5, 1));
    assert_eq!(s.coeff(-3).unwrap(), q(0, 1));
    assert_eq!(s.coeff(-4).unwrap(), q(20, 1));
}

#[test]
fn order_cap_is_enforced() {
    let f = RationalFn::new(qp(&[1]), qp(&[1, 1])).unwrap();
    assert!(matches!(
        series_at(&f, &Center::Infinity, ORDER_CAP + 1),
        Err(betamm_core::Error::OrderTooLarge { .. })
    ));
}

#[test]
fn residue_conventions() {
    let inv_x = RationalFn::new(qp(&[1]), qp(&[0, 1])).unwrap();
    assert_eq!(residue_at(&inv_x, &Center::Infinity).unwrap(), q(-1, 1));
    let f = RationalFn::new(qp(&[1]), qp(&[-2, 1])).unwrap();
    assert_eq!(residue_at(&f, &Center::At(q(2, 1))).unwrap(), q(1, 1));
}

#[test]
fn residue_matches_circle_quadrature() {
    let den = qp(&[-1, 1]).mul(&qp(&[-3, 1]).pow(2));
    let f = RationalFn::new(qp(&[0, 0, 1]), den).unwrap();
    let exact = residue_at(&f, &Center::At(q(3, 1))).unwrap();
    let fc = RationalFn::new(f.num.map(|c| c.to_c64()), f.den.map(|c| c.to_c64())).unwrap();
    let circle = Contour::Circle { center: C::new(3.0, 0.0), radius: 0.5 };
    let i = contour_integral(|z| fc.eval(&z).unwrap(), &circle, &QuadOptions::default()).unwrap();
    let numeric = i.value / (2.0 * std::f64::consts::PI * C::i());
    assert!((numeric - exact.to_c64()).norm() < 1e-12);
    assert_eq!(exact, q(3, 4));
}

#[test]
fn truncated_series_reports_unresolvable_residue() {
    let f = RationalFn::new(qp(&[1]), qp(&[-2, 1]).pow(3)).unwrap();
    let s = series_at(&f, &Center::At(q(2, 1)), -2).unwrap();
    assert!(residue_of_series(&s).is_err());
}

#[test]
fn unit_circle_integral() {
    let c = Contour::Circle { center: C::new(0.0, 0.0), radius: 1.0 };
    let i = contour_integral(|z| 1.0 / z, &c, &QuadOptions::default()).unwrap();
    let r = i.value / (2.0 * std::f64::consts::PI * C::i());
    assert!((r - 1.0).norm() < 1e-14);
    // doubling the rule changes the value by less than the reported error
    let finer = c.gauss_rule(2 * i.nodes / 128, 64).integrate(|z| 1.0 / z);
    assert!((finer - i.value).norm() <= i.error.max(1e-14));
}

#[test]
fn stadium_encloses_segment() {
    let c = Contour::Stadium { a: C::new(-1.0, 0.0), b: C::new(2.0, 0.0), clearance: 0.3 };
    let i = contour_integral(|z| 1.0 / ((z + 0.5) * (z - 1.5)), &c, &QuadOptions::default()).unwrap();
    assert!(i.value.norm() < 1e-12);
    let j = contour_integral(|z| z * z / (z - 1.0), &c, &QuadOptions::default()).unwrap();
    assert!((j.value / (2.0 * std::f64::consts::PI * C::i()) - 1.0).norm() < 1e-12);
}

#[test]
fn quadrature_failure_is_flagged() {
    let c = Contour::Circle { center: C::new(0.0, 0.0), radius: 1.0 };
    let opts = QuadOptions { max_nodes: 256, ..QuadOptions::default() };
    let r = contour_integral(|z| 1.0 / (z - C::new(1.0 + 1e-9, 0.0)), &c, &opts);
    assert!(matches!(r, Err(betamm_core::Error::QuadratureNotConverged { .. })));
}

#[test]
fn reduction_is_idempotent() {
    let f = RationalFn::new(qp(&[-1, 0, 1]), qp(&[-2, 1, 1])).unwrap();
    let r = f.reduced();
    assert_eq!(r.num, qp(&[1, 1]));
    assert_eq!(r.den, qp(&[2, 1]));
    assert_eq!(r.reduced(), r);
}

fn small_poly() -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-9i64..=9, 0..6)
}

proptest! {
    #[test]
    fn degrees_are_additive(a in small_poly(), b in small_poly()) {
        let (pa, pb) = (qp(&a), qp(&b));
        if let (Some(da), Some(db)) = (pa.degree(), pb.degree()) {
            prop_assert_eq!(pa.mul(&pb).degree(), Some(da + db));
        }
        let s = pa.add(&pb);
        prop_assert!(s.degree() <= pa.degree().max(pb.degree()));
        prop_assert!(s.is_zero() || !s.leading().is_zero());
    }

    #[test]
    fn division_identity(a in small_poly(), b in small_poly()) {
        let (pa, pb) = (qp(&a), qp(&b));
        prop_assume!(!pb.is_zero());
        let (qq, r) = pa.div_rem(&pb).unwrap();
        prop_assert_eq!(qq.mul(&pb).add(&r), pa);
        prop_assert!(r.degree() < pb.degree());
    }

    #[test]
    fn series_product_respects_truncation(a in small_poly(), b in small_poly(), x in 3i64..9) {
        let den = qp(&[-1, 0, 1]);
        let fa = RationalFn::new(qp(&a), den.clone()).unwrap();
        let fb = RationalFn::new(qp(&b), den).unwrap();
        let sa = series_at(&fa, &Center::Infinity, 12).unwrap();
        let sb = series_at(&fb, &Center::Infinity, 12).unwrap();
        let prod = sa.mul(&sb).unwrap();
        let direct = series_at(&fa.mul(&fb), &Center::Infinity, 30).unwrap();
        for e in prod.trunc..=8 {
            prop_assert_eq!(prod.coeff(e).unwrap(), direct.coeff(e).unwrap());
        }
        let xv = q(x, 1);
        let exact = fa.eval(&xv).unwrap();
        let approx = series_at(&fa, &Center::Infinity, 40).unwrap().eval(&xv);
        let tol = q(1, 1) / (q(x, 1) * q(1, 1)).pow(30);
        let diff = &exact - &approx;
        prop_assert!(diff.abs() <= tol * q(1000, 1));
    }

    #[test]
    fn roots_reexpand(r1 in -5i32..5, r2 in -5i32..5, r3 in -5i32..5, s in 1i32..4) {
        let roots: Vec<C> = [r1, r2, r3].iter().map(|&r| C::new(r as f64 / s as f64, 0.3 * r as f64)).collect();
        let p = Poly::from_roots(&roots);
        let got = poly_roots(&p, 1e-10).unwrap();
        prop_assert_eq!(got.roots.iter().map(|x| x.1).sum::<usize>(), 3);
        let mut all = Vec::new();
        for (z, m) in &got.roots { for _ in 0..*m { all.push(*z); } }
        let back = Poly::from_roots(&all);
        for k in 0..4 {
            prop_assert!((back.coeff(k) - p.coeff(k)).norm() < 1e-7);
        }
    }
}
