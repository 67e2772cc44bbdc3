use betamm_oracle::mehta::bernoulli;
use betamm_oracle::*;
use proptest::prelude::*;
use rug::Rational;

fn quartic() -> Potential {
    Potential::new(vec![0.0, 0.0, 0.5, 0.0, 0.1]).unwrap()
}

#[test]
fn bernoulli_numbers() {
    let b = bernoulli(12);
    assert_eq!(b[1], Rational::from((-1, 2)));
    assert_eq!(b[2], Rational::from((1, 6)));
    assert_eq!(b[4], Rational::from((-1, 30)));
    assert_eq!(b[12], Rational::from((-691, 2730)));
    assert!(b[3] == 0 && b[11] == 0);
}

#[test]
fn single_particle_is_a_gaussian_integral() {
    for (beta, t0, t2) in [(1.0, 1.0, 0.5), (2.5, 0.7, 3.0), (0.5, 2.0, 0.25)] {
        let z = mehta_log_z(1, beta, t0, t2).unwrap();
        let want = (2.0 * std::f64::consts::PI * t0 / (2.0 * t2 * beta)).ln() / 2.0;
        assert!((z.to_f64() - want).abs() < 1e-15);
    }
}

#[test]
fn mehta_against_quadrature() {
    let g = Potential::gaussian(0.5);
    let cases = [(2, 1.0, 1e-10), (3, 2.0, 1e-8), (4, 1.0, 1e-8), (5, 2.0, 1e-8), (6, 1.0, 1e-8)];
    for (n, beta, tol) in cases {
        let exact = mehta_log_z(n, beta, 1.0, 0.5).unwrap().to_f64();
        let q = brute_force_log_z(&g, n, beta, 1.0).unwrap();
        assert_eq!(q.error_bar, 0.0);
        assert!((q.log_z - exact).abs() < tol * (1.0 + exact.abs()), "N={n}: {} vs {exact}", q.log_z);
    }
}

#[test]
fn quadrature_preconditions() {
    assert!(matches!(brute_force_log_z(&quartic(), 3, 0.5, 1.0), Err(OracleError::Unsupported(_))));
    assert!(matches!(brute_force_log_z(&quartic(), 7, 1.0, 1.0), Err(OracleError::InvalidInput(_))));
    assert!(Potential::new(vec![0.0, 0.0, 0.5, 1.0]).is_err());
}

#[test]
fn quartic_quadrature_is_stable_in_the_rule_size() {
    // the rule with beta (N-1) + 1 nodes is exact; larger rules only add rounding
    let q = quartic();
    let a = brute_force_log_z(&q, 3, 2.0, 1.0).unwrap().log_z;
    let rule = GaussRule::new(&q, 6.0, 30).unwrap();
    let n = rule.nodes.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                let x = [rule.nodes[i], rule.nodes[j], rule.nodes[k]];
                let d = (x[1] - x[0]) * (x[2] - x[0]) * (x[2] - x[1]);
                z += rule.weights[i] * rule.weights[j] * rule.weights[k] * d.powi(4);
            }
        }
    }
    let b = (6.0 * z).ln() + 3.0 * rule.log_mass;
    assert!((a - b).abs() < 1e-12, "{a} vs {b}");
}

#[test]
fn asymptotics_track_the_exact_sum() {
    for beta in [0.5, 1.0, 2.0, 3.0] {
        let a = MehtaAsymptotics::new(beta, 1.0, 0.5, 6).unwrap();
        let exact = mehta_log_z(40, beta, 1.0, 0.5).unwrap().to_f64();
        assert!((a.eval(40.0).to_f64() - exact).abs() < 1e-11 * exact.abs());
        // truncation error of order N^-7
        let exact = mehta_log_z(10, beta, 1.0, 0.5).unwrap().to_f64();
        assert!((a.eval(10.0).to_f64() - exact).abs() < 1e-8);
    }
}

#[test]
fn gue_genus_expansion() {
    // beta = 1: F_{g,0} are the Harer-Zagier constants B_{2g}/(2g(2g-2)) with F = -log Z
    let e = mehta_expansion(1.0, 0.5, 4, &[0.5, 1.0, 2.0, 3.0, 5.0]).unwrap();
    let f = |k, l| e.entries[&(k, l)].to_f64();
    assert!((f(0, 0) - 0.75).abs() < 1e-30);
    assert!((f(2, 0) - 1.0 / 240.0).abs() < 1e-25);
    assert!((f(3, 0) - (-1.0 / 1008.0)).abs() < 1e-25);
}

#[test]
fn planar_gaussian_coefficient() {
    for t2 in [0.5, 1.0, 2.0] {
        let e = mehta_expansion(1.0, t2, 0, &[0.5, 1.0, 2.0, 3.0]).unwrap();
        let want = 0.75 + 0.5 * (2.0 * t2).ln();
        assert!((e.entries[&(0, 0)].to_f64() - want).abs() < 1e-15);
    }
}

#[test]
fn coupling_dependence_is_exact_in_differences() {
    // only F_{0,0} and F_{0,1} depend on t2, through +-(1/2) log t2
    let betas = [0.5, 1.0, 2.0, 3.0];
    let a = mehta_expansion(1.0, 0.5, 2, &betas).unwrap();
    let b = mehta_expansion(1.0, 2.0, 2, &betas).unwrap();
    for (key, va) in &a.entries {
        let d = (b.entries[key].clone() - va).to_f64();
        let want = match key {
            (0, 0) => 0.5 * 4f64.ln(),
            (0, 1) => -0.5 * 4f64.ln(),
            _ => 0.0,
        };
        assert!((d - want).abs() < 1e-30, "{key:?}: {d}");
    }
}

#[test]
fn beta_one_slice_has_no_odd_levels() {
    let e = mehta_expansion(1.0, 0.5, 3, &[1.0, 2.0, 3.0, 5.0]).unwrap();
    for lev in [-1i64, 1, 3] {
        let s: f64 = e
            .entries
            .iter()
            .filter(|((k, l), _)| 2 * *k as i64 + *l as i64 - 2 == lev)
            .map(|((_, l), v)| v.to_f64() * 0f64.powi(*l as i32))
            .sum();
        assert_eq!(s, 0.0);
    }
}

#[test]
fn expansion_needs_enough_beta_samples() {
    assert!(matches!(mehta_expansion(1.0, 0.5, 4, &[1.0, 2.0, 2.0]), Err(OracleError::IllConditioned(_))));
    // beta and 1/beta share gamma^2: odd levels cannot be separated
    assert!(matches!(mehta_expansion(1.0, 0.5, 3, &[0.5, 1.0, 2.0, 3.0]), Err(OracleError::IllConditioned(_))));
    assert!(matches!(mehta_expansion(1.0, 0.5, 7, &[1.0, 2.0]), Err(OracleError::InvalidInput(_))));
}

#[test]
fn monte_carlo_agrees_with_quadrature() {
    let q = quartic();
    let mc = monte_carlo_log_z(&q, 3, 2.0, 1.0, &McOptions::default()).unwrap();
    let bf = brute_force_log_z(&q, 3, 2.0, 1.0).unwrap();
    assert!(!mc.flagged);
    assert!(mc.error_bar > 0.0 && mc.error_bar < 0.01);
    assert!((mc.log_z - bf.log_z).abs() < 3.0 * mc.error_bar, "{} +- {} vs {}", mc.log_z, mc.error_bar, bf.log_z);
    let again = monte_carlo_log_z(&q, 3, 2.0, 1.0, &McOptions::default()).unwrap();
    assert_eq!(mc.log_z, again.log_z);
}

#[test]
fn monte_carlo_non_integer_beta() {
    // the Gaussian path endpoint: V = V_0 makes the estimate exact
    let g = Potential::gaussian(0.5);
    let mc = monte_carlo_log_z(&g, 4, 0.5, 1.0, &McOptions { sweeps: 2000, burn_in: 200, ..McOptions::default() }).unwrap();
    let exact = mehta_log_z(4, 0.5, 1.0, 0.5).unwrap().to_f64();
    assert!((mc.log_z - exact).abs() < 1e-12);
}

#[test]
fn r_hat_detects_disagreeing_chains() {
    let a: Vec<f64> = (0..200).map(|i| (i as f64 * 0.7).sin()).collect();
    let b: Vec<f64> = a.iter().map(|x| x + 5.0).collect();
    assert!(monte_carlo::r_hat(&[a.clone(), a.iter().rev().copied().collect()]) < 1.05);
    assert!(monte_carlo::r_hat(&[a, b]) > 1.05);
}

fn synthetic(n: usize, f: impl Fn(f64) -> f64) -> OracleResult {
    OracleResult {
        n,
        beta: 2.0,
        potential: Potential::gaussian(0.5),
        t0: 1.0,
        log_z: f(n as f64),
        error_bar: 0.0,
        method: OracleMethod::Quadrature,
        flagged: false,
    }
}

#[test]
fn fit_recovers_exact_coefficients() {
    let data: Vec<OracleResult> = (2..=7).map(|n| synthetic(n, |x| -1.5 * x * x + 0.25 * x + 0.1 - 0.3 / x)).collect();
    let r = fit_expansion(&data, &[2, 1, 0, -1]).unwrap();
    assert!((r.coefficient(2).unwrap() + 1.5).abs() < 1e-10);
    assert!((r.coefficient(-1).unwrap() + 0.3).abs() < 1e-9);
    assert!(r.residual < 1e-9);
    // F = -log Z with N^2 = beta hbar^-2 for t0 = 1
    let lv = r.free_energy_levels();
    assert!((lv[0].1 - 1.5 / 2.0).abs() < 1e-10 && lv[0].0 == -2);
    assert!(fit_expansion(&data[..5], &[2, 1, 0, -1]).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn gaussian_rescaling(n in 1usize..30, beta in 0.2f64..4.0, t2 in 0.1f64..5.0) {
        let a = mehta_log_z(n, beta, 1.0, t2).unwrap().to_f64();
        let b = mehta_log_z(n, beta, 1.0, 1.0).unwrap().to_f64();
        let nf = n as f64;
        let want = -0.5 * (nf + beta * nf * (nf - 1.0)) * t2.ln();
        prop_assert!((a - b - want).abs() < 1e-12 * (1.0 + a.abs()));
    }
}
