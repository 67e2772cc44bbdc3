use betamm_cli::*;
use proptest::prelude::*;
use serde_json::Value;
use std::process::Command as Process;

fn job(text: &str) -> JobConfig {
    JobConfig::parse(text).unwrap_or_else(|e| panic!("{e}"))
}

fn run_doc(text: &str) -> Report {
    run(&job(text), &Options::default())
}

fn num(v: &Value) -> f64 {
    v.as_str().unwrap().parse().unwrap()
}

fn binary() -> Process {
    Process::new(env!("CARGO_BIN_EXE_betamm"))
}

#[test]
fn numbers_are_exact() {
    let q = |s: &str| Number::parse(s).unwrap().value;
    assert_eq!(q("3/4"), q("0.75"));
    assert_eq!(q("1.25e-3"), q("1/800"));
    assert_eq!(q("-0.5"), q("-1/2"));
    assert_eq!(q(" 12 "), q("12"));
    let from_json: Number = serde_json::from_str("0.1").unwrap();
    assert_eq!(from_json.value, q("1/10"));
    for bad in ["", "1/0", "abc", "1.2.3", "e5", "--1"] {
        assert!(Number::parse(bad).is_err(), "{bad:?}");
    }
}

#[test]
fn unknown_keys_are_rejected_with_their_path() {
    let e = JobConfig::parse(r#"{"command": "curve", "potential": [0, 0, 1], "bogus": 1}"#).unwrap_err();
    assert_eq!(e.path, "bogus");
    let e = JobConfig::parse(r#"{"command": "oracle", "potential": [0, 0, 1], "oracle": {"method": "mehta", "n": [2], "x": 0}}"#).unwrap_err();
    assert_eq!(e.path, "oracle.x");
    let e = JobConfig::parse(r#"{"command": "curve", "potential": [0, "zero", 1]}"#).unwrap_err();
    assert_eq!(e.path, "potential[1]");
    let e = JobConfig::parse(r#"{"command": "curve", "potential": [0, 0, 1], "n_cuts": 2}"#).unwrap_err();
    assert_eq!(e.path, "fractions");
    let e = JobConfig::parse(r#"{"command": "oracle", "potential": [0, 0, 1]}"#).unwrap_err();
    assert_eq!(e.path, "oracle");
}

#[test]
fn config_round_trip() {
    let text = r#"{"command": "free-energy", "potential": ["0", 0.1, "-1", 0, "1/4"], "t0": "0.1", "n_cuts": 2,
        "fractions": ["3/100"], "initial_guess": "wells", "beta": 2, "points": [["0.5", "0.25"]],
        "precision": "float100", "seed": 7, "output": {"density_csv": "d.csv"}}"#;
    let a = job(text);
    let b = job(&serde_json::to_string(&a).unwrap());
    assert_eq!(a, b);
    let c = job(r#"{"command": "curve", "potential": [0, 0, 1], "initial_guess": ["-1", "1"]}"#);
    assert_eq!(c, job(&serde_json::to_string(&c).unwrap()));
}

#[test]
fn gaussian_curve_endpoints() {
    let r = run_doc(r#"{"command": "curve", "potential": [0, 0, 0.5], "t0": 1, "n_cuts": 1}"#);
    assert_eq!(r.status, exit::OK);
    let ends = &r.document["result"]["curve"]["endpoints"];
    assert_eq!(num(&ends[0]), -2.0);
    assert_eq!(num(&ends[1]), 2.0);
}

#[test]
fn rational_mode_gives_catalan_numbers() {
    let r = run_doc(r#"{"command": "curve", "potential": [0, 0, "1/2"], "precision": "rational", "series_order": 17}"#);
    let planar = &r.document["result"]["planar"];
    assert_eq!(planar["arithmetic"], "rational");
    assert_eq!(planar["endpoints"], serde_json::json!(["-2", "2"]));
    let series = planar["w00_at_infinity"].as_array().unwrap();
    let catalan = ["1", "1", "2", "5", "14", "42", "132", "429", "1430"];
    for (k, c) in catalan.iter().enumerate() {
        let row = series.iter().find(|r| r["power"] == -(2 * k as i64) - 1).unwrap();
        assert_eq!(row["value"], *c);
    }
    // a shifted, rescaled Gaussian keeps exact endpoints
    let r = run_doc(r#"{"command": "curve", "potential": [0, "1", "2"], "precision": "rational"}"#);
    assert_eq!(r.document["result"]["planar"]["endpoints"], serde_json::json!(["-5/4", "3/4"]));
}

#[test]
fn multiprecision_endpoints() {
    // x^2/2 + g x^4: a = 2 sqrt(R), 24 g R = sqrt(1 + 48 g) - 1; 50-digit mpmath value at g = 1/10
    let r = run_doc(r#"{"command": "curve", "potential": [0, 0, "1/2", 0, "1/10"], "precision": "float100"}"#);
    let planar = &r.document["result"]["planar"];
    let b = planar["endpoints"][1].as_str().unwrap();
    assert_eq!(b, "1.5320568504238885325512122876e0");
    assert!(num(&planar["asymptotic_residual"]) < 1e-90);
}

#[test]
fn free_energy_at_beta_one_has_no_odd_levels() {
    let r = run_doc(r#"{"command": "free-energy", "potential": [0, 0, 0.5], "beta": 1, "max_level": 4}"#);
    assert_eq!(r.status, exit::OK);
    let res = &r.document["result"];
    assert_eq!(res["entries"].as_array().unwrap().len(), 9);
    for row in res["series"]["hbar_powers"].as_array().unwrap() {
        if row["power"].as_i64().unwrap() % 2 != 0 {
            assert_eq!(row["coefficient"]["re"], "0");
            assert_eq!(row["coefficient"]["im"], "0");
        }
    }
    let f11 = res["entries"].as_array().unwrap().iter().find(|e| e["k"] == 1 && e["l"] == 1).unwrap();
    assert!((num(&f11["value"]["re"]) - 1.0 / 24.0).abs() < 1e-12);
}

#[test]
fn multi_cut_torus_term_is_unavailable() {
    let r = run_doc(
        r#"{"command": "free-energy", "potential": [0, 0.1, -1, 0, 0.25], "t0": "0.1", "n_cuts": 2, "fractions": ["0.03"], "max_level": 2}"#,
    );
    assert_eq!(r.status, exit::OK);
    let un = r.document["result"]["unavailable"].as_array().unwrap();
    assert_eq!(un.len(), 1);
    assert_eq!((un[0]["k"].as_u64(), un[0]["l"].as_u64()), (Some(1), Some(0)));
    assert_eq!(un[0]["code"], "unsupported");
    assert!(r.document["result"]["series"]["unavailable"].is_string());
}

#[test]
fn verify_passes_on_healthy_curves() {
    for text in [
        r#"{"command": "verify", "potential": [0, 0, 0.5, 0, 0.1], "max_level": 3}"#,
        r#"{"command": "verify", "potential": [0, 0.1, -1, 0, 0.25], "t0": "0.1", "n_cuts": 2, "fractions": ["0.03"]}"#,
    ] {
        let r = run_doc(text);
        assert_eq!(r.status, exit::OK, "{}", r.document);
        let checks = r.document["result"]["checks"].as_array().unwrap();
        assert!(checks.len() >= 7);
        assert!(checks.iter().all(|c| c["status"] == "pass"));
    }
}

#[test]
fn correlators_match_closed_forms() {
    let r = run_doc(r#"{"command": "correlators", "potential": [0, 0, 0.5], "max_level": 2, "points": [["3", "0"]]}"#);
    let rows = r.document["result"]["correlators"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    let get = |k: u64, l: u64| rows.iter().find(|r| r["k"] == k && r["l"] == l).unwrap();
    assert!((num(&get(0, 0)["value"]["re"]) - (3.0 - 5f64.sqrt()) / 2.0).abs() < 1e-15);
    // genus one: 1 / (p^2 - 4)^{5/2}
    assert!((num(&get(1, 0)["value"]["re"]) - 5f64.powf(-2.5)).abs() < 1e-15);
    assert!(rows.iter().all(|r| num(&r["loop_equation_residual"]) < 1e-12));
}

#[test]
fn density_extract() {
    let c = betamm_core::curve::solve_endpoints(
        &betamm_core::curve::Potential::new(vec![0.0, 0.0, 0.5]).unwrap(),
        &betamm_core::curve::FillingData::new(1.0, vec![]).unwrap(),
        1,
        &betamm_core::curve::InitialGuess::Auto,
    )
    .unwrap();
    let t = density_table(&c, 5);
    assert_eq!(t[2].0, 0.0);
    assert!((t[2].1 - 1.0 / std::f64::consts::PI).abs() < 1e-15);
    assert!((density_integral(&c) - 1.0).abs() < 1e-8);

    let r = run_doc(
        r#"{"command": "curve", "potential": [0, 0.1, -1, 0, 0.25], "t0": "0.1", "n_cuts": 2, "fractions": ["0.03"],
            "output": {"density_csv": "unused.csv", "density_samples": 11}}"#,
    );
    assert!((num(&r.document["provenance"]["density_integral"]) - 1.0).abs() < 1e-8);
    let (_, csv) = r.density_csv.unwrap();
    let rows: Vec<(f64, f64)> = csv.lines().skip(1).map(|l| l.split_once(',').unwrap()).map(|(x, d)| (x.parse().unwrap(), d.parse().unwrap())).collect();
    assert_eq!(rows.len(), 22);
    let ends: Vec<f64> = r.document["result"]["curve"]["endpoints"].as_array().unwrap().iter().map(num).collect();
    assert_eq!([rows[0].0, rows[10].0, rows[11].0, rows[21].0], [ends[0], ends[1], ends[2], ends[3]]);
    assert!(rows[10].0 < rows[11].0);
    assert!(rows.iter().all(|r| r.1 >= 0.0));
}

#[test]
fn oracle_command() {
    let r = run_doc(r#"{"command": "oracle", "potential": [0, 0, 0.5], "beta": 2, "oracle": {"method": "mehta", "n": [3]}}"#);
    let q = run_doc(r#"{"command": "oracle", "potential": [0, 0, 0.5], "beta": 2, "oracle": {"method": "quadrature", "n": [3]}}"#);
    let a = num(&r.document["result"]["results"][0]["log_z"]);
    let b = num(&q.document["result"]["results"][0]["log_z"]);
    assert!((a - b).abs() < 1e-12 * a.abs().max(1.0), "{a} {b}");
    let bad = run_doc(r#"{"command": "oracle", "potential": [0, 0, 0.5, 0, 0.1], "oracle": {"method": "mehta", "n": [3]}}"#);
    assert_eq!(bad.status, exit::SOLVER);
    assert_eq!(bad.document["error"]["path"], "potential");
}

#[test]
fn monte_carlo_is_reproducible() {
    let text = r#"{"command": "oracle", "potential": [0, 0, 0.5, 0, 0.1], "beta": "1/2",
        "oracle": {"method": "monte-carlo", "n": [3], "sweeps": 400, "burn_in": 100, "chains": 2}}"#;
    let a = serde_json::to_string(&run_doc(text).document).unwrap();
    let b = serde_json::to_string(&run_doc(text).document).unwrap();
    assert_eq!(a, b);
    let c = run(&job(text), &Options { seed: Some(99), ..Options::default() });
    assert_ne!(a, serde_json::to_string(&c.document).unwrap());
    assert_eq!(c.document["provenance"]["seed"], 99);
}

#[test]
fn solver_failures_carry_code_and_path() {
    let r = run_doc(r#"{"command": "curve", "potential": [0, 0, 1], "n_cuts": 2, "fractions": ["0.5"]}"#);
    assert_eq!(r.status, exit::SOLVER);
    assert_eq!(r.document["error"]["code"], "invalid_input");
    assert_eq!(r.document["error"]["path"], "potential");
}

#[test]
fn binary_exit_statuses_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let write = |name: &str, text: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, text).unwrap();
        p
    };
    let good = write("good.json", r#"{"command": "curve", "potential": [0, 0, 0.5], "output": {"density_csv": "DENSITY"}}"#);
    let csv = dir.path().join("rho.csv");
    let text = std::fs::read_to_string(&good).unwrap().replace("DENSITY", csv.to_str().unwrap());
    std::fs::write(&good, text).unwrap();
    let out1 = dir.path().join("a.json");
    let out2 = dir.path().join("b.json");
    for out in [&out1, &out2] {
        let s = binary().args(["--config", good.to_str().unwrap(), "--output", out.to_str().unwrap(), "--threads", "2"]).status().unwrap();
        assert_eq!(s.code(), Some(0));
    }
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    assert!(std::fs::read_to_string(&csv).unwrap().starts_with("x,density\n"));

    let bad = write("bad.json", r#"{"command": "curve", "potential": [0, 0, 1], "colour": "red"}"#);
    let o = binary().args(["--config", bad.to_str().unwrap()]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let doc: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["error"]["path"], "colour");
    assert_eq!(binary().args(["--config", dir.path().join("missing.json").to_str().unwrap()]).output().unwrap().status.code(), Some(1));

    let fail = write("fail.json", r#"{"command": "curve", "potential": [0, 0, 1], "n_cuts": 2, "fractions": ["0.5"]}"#);
    assert_eq!(binary().args(["--config", fail.to_str().unwrap()]).output().unwrap().status.code(), Some(2));

    let s = binary().env(THREADS_ENV, "0").args(["--config", good.to_str().unwrap()]).output().unwrap();
    assert_eq!(s.status.code(), Some(1));
    let s = binary().env(THREADS_ENV, "0").args(["--config", good.to_str().unwrap(), "--threads", "1"]).output().unwrap();
    assert_eq!(s.status.code(), Some(0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn number_text_round_trip(n in -10_000i64..10_000, d in 1i64..10_000, e in -20i32..20) {
        let frac = Number::parse(&format!("{n}/{d}")).unwrap();
        let again: Number = serde_json::from_str(&serde_json::to_string(&frac).unwrap()).unwrap();
        prop_assert_eq!(&frac, &again);
        let dec = Number::parse(&format!("{n}e{e}")).unwrap();
        let scaled = Number::parse(&format!("{}", n as f64)).unwrap();
        prop_assert_eq!(dec.value.clone() * num_rational::BigRational::from_integer(10.into()).pow(-e), scaled.value);
    }
}
