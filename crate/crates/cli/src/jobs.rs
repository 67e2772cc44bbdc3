use crate::config::{Command, Guess, GuessName, JobConfig, OracleKind, Precision};
use crate::curve_out::{curve_section, planar_section};
use crate::density::{density_integral, density_table};
use crate::exit;
use crate::format;
use crate::verify::run_checks;
use betamm_core::correlators::{Engine, EngineOptions};
use betamm_core::curve::{solve_endpoints, ExpansionParams, FillingData, InitialGuess, PointOnCurve, Potential, SpectralCurve};
use betamm_core::free_energy::{assemble_series, level, FreeEnergyTable};
use betamm_oracle as oracle;
use num_complex::Complex64 as C;
use serde_json::{json, Value};

/// Overrides from the command line.
#[derive(Clone, Debug, Default)]
pub struct Options {
    pub precision: Option<Precision>,
    pub seed: Option<u64>,
}

/// The output document, the exit status and the CSV extract if one was requested.
#[derive(Clone, Debug)]
pub struct Report {
    pub document: Value,
    pub status: u8,
    pub density_csv: Option<(String, String)>,
}

struct Failure {
    code: &'static str,
    path: String,
    message: String,
}

fn core_code(e: &betamm_core::Error) -> &'static str {
    use betamm_core::Error::*;
    match e {
        DivisionByZero => "division_by_zero",
        InvalidInput(_) => "invalid_input",
        OrderTooLarge { .. } => "order_too_large",
        Unresolvable(_) => "unresolvable",
        QuadratureNotConverged { .. } => "quadrature_not_converged",
        RootsNotConverged(_) => "roots_not_converged",
        NewtonFailed { .. } => "newton_failed",
        DegenerateCut(..) => "degenerate_cut",
        Singular(_) => "singular",
        Unsupported(_) => "unsupported",
        BudgetExceeded { .. } => "budget_exceeded",
        Pole(_) => "pole",
        Hypothesis(_) => "hypothesis_violated",
    }
}

fn oracle_code(e: &oracle::OracleError) -> &'static str {
    match e {
        oracle::OracleError::InvalidInput(_) => "invalid_input",
        oracle::OracleError::IllConditioned(_) => "ill_conditioned",
        oracle::OracleError::Unsupported(_) => "unsupported",
        oracle::OracleError::NotConverged(_) => "not_converged",
    }
}

fn at(path: &str) -> impl Fn(betamm_core::Error) -> Failure + '_ {
    move |e| Failure { code: core_code(&e), path: path.into(), message: e.to_string() }
}

fn oracle_at(path: &str) -> impl Fn(oracle::OracleError) -> Failure + '_ {
    move |e| Failure { code: oracle_code(&e), path: path.into(), message: e.to_string() }
}

fn solve_curve(cfg: &JobConfig) -> Result<SpectralCurve, Failure> {
    let v = Potential::new(cfg.couplings()).map_err(at("potential"))?;
    let filling = FillingData::new(cfg.t0.to_f64(), cfg.fractions.iter().map(|f| f.to_f64()).collect()).map_err(at("fractions"))?;
    let guess = match &cfg.initial_guess {
        Some(Guess::Explicit(e)) => InitialGuess::Explicit(e.iter().map(|x| x.to_f64()).collect()),
        Some(Guess::Named(GuessName::Wells)) => InitialGuess::Wells,
        Some(Guess::Named(GuessName::Auto)) => InitialGuess::Auto,
        None if cfg.n_cuts == 1 => InitialGuess::Auto,
        None => InitialGuess::Wells,
    };
    solve_endpoints(&v, &filling, cfg.n_cuts, &guess).map_err(at("potential"))
}

fn sample_points(cfg: &JobConfig, c: &SpectralCurve) -> Vec<PointOnCurve> {
    if cfg.points.is_empty() {
        let s = c.scale();
        let mid = 0.5 * (c.endpoints()[0] + c.endpoints()[c.endpoints().len() - 1]);
        [(0.5, 0.8), (-0.9, 0.6), (1.3, -0.5), (0.2, -1.1)].iter().map(|&(x, y)| PointOnCurve::physical(C::new(mid + x * s, y * s))).collect()
    } else {
        cfg.points.iter().map(|[re, im]| PointOnCurve::physical(C::new(re.to_f64(), im.to_f64()))).collect()
    }
}

fn engine(cfg: &JobConfig, c: &SpectralCurve) -> Result<Engine, Failure> {
    let opts = EngineOptions { max_level: cfg.max_level.max(EngineOptions::default().max_level), ..EngineOptions::default() };
    Engine::new(c, opts).map_err(at("potential"))
}

fn indices(max: usize) -> Vec<(usize, usize)> {
    (0..=max).flat_map(|s| (0..=s / 2).map(move |k| (k, s - 2 * k))).collect()
}

fn curve_job(cfg: &JobConfig, c: &SpectralCurve, precision: Precision) -> Value {
    let order = cfg.series_order.unwrap_or(8);
    json!({ "curve": curve_section(c), "planar": planar_section(cfg, c, precision, order) })
}

fn correlators_job(cfg: &JobConfig, c: &SpectralCurve) -> Result<Value, Failure> {
    let e = engine(cfg, c)?;
    let mut rows = Vec::new();
    for (i, pt) in sample_points(cfg, c).into_iter().enumerate() {
        let path = format!("points[{i}]");
        for (k, l) in indices(cfg.max_level) {
            let w = e.correlator(k, l, pt, &[]).map_err(at(&path))?;
            let r = e.loop_equation_residual(k, l, pt.p, &[]).map_err(at(&path))?;
            rows.push(json!({ "k": k, "l": l, "p": format::complex(pt.p), "value": format::complex(w), "loop_equation_residual": format::real(r.norm()) }));
        }
    }
    Ok(json!({ "curve": curve_section(c), "correlators": rows }))
}

fn free_energy_job(cfg: &JobConfig, c: &SpectralCurve) -> Result<Value, Failure> {
    let e = engine(cfg, c)?;
    let params = ExpansionParams::new(cfg.beta.to_f64(), cfg.t0.to_f64()).map_err(at("beta"))?;
    let max_level = cfg.max_level as i64 - 2;
    let table = FreeEnergyTable::compute(&e, params, max_level);
    let entries: Vec<Value> = table
        .entries
        .iter()
        .map(|(&(k, l), (v, m))| json!({ "k": k, "l": l, "level": level(k, l), "method": m.tag(), "value": format::complex(*v) }))
        .collect();
    let unavailable: Vec<Value> = table
        .failures
        .iter()
        .map(|(&(k, l), err)| json!({ "k": k, "l": l, "code": core_code(err), "reason": err.to_string() }))
        .collect();
    let series = match assemble_series(&table, &params, max_level) {
        Ok(s) => json!({
            "beta": format::real(params.beta),
            "gamma": format::real(params.gamma),
            "hbar_powers": (0..s.coeffs.len()).map(|i| json!({ "power": i as i64 - 2, "coefficient": format::complex(s.coeffs[i]) })).collect::<Vec<_>>(),
        }),
        Err(err) => json!({ "unavailable": err.to_string() }),
    };
    Ok(json!({ "curve": curve_section(c), "entries": entries, "unavailable": unavailable, "series": series }))
}

fn oracle_job(cfg: &JobConfig, seed: u64) -> Result<Value, Failure> {
    let o = cfg.oracle.as_ref().expect("validated");
    let pot = oracle::Potential::new(cfg.couplings()).map_err(oracle_at("potential"))?;
    let (beta, t0) = (cfg.beta.to_f64(), cfg.t0.to_f64());
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for (i, &n) in o.n.iter().enumerate() {
        let path = format!("oracle.n[{i}]");
        let (r, exact) = match o.method {
            OracleKind::Mehta => {
                if pot.degree() != 2 || pot.couplings[1] != 0.0 {
                    return Err(Failure { code: "unsupported", path: "potential".into(), message: "the Mehta oracle needs V = t2 x^2".into() });
                }
                let z = oracle::mehta_log_z(n, beta, t0, pot.couplings[2]).map_err(oracle_at(&path))?;
                let r = oracle::OracleResult { n, beta, potential: pot.clone(), t0, log_z: z.to_f64(), error_bar: 0.0, method: oracle::OracleMethod::Mehta, flagged: false };
                (r, Some(format::mp(&z)))
            }
            OracleKind::Quadrature => (oracle::brute_force_log_z(&pot, n, beta, t0).map_err(oracle_at(&path))?, None),
            OracleKind::MonteCarlo => {
                let d = oracle::McOptions::default();
                let opts = oracle::McOptions {
                    seed,
                    sweeps: o.sweeps.unwrap_or(d.sweeps),
                    burn_in: o.burn_in.unwrap_or(d.burn_in),
                    chains: o.chains.unwrap_or(d.chains),
                    ..d
                };
                (oracle::monte_carlo_log_z(&pot, n, beta, t0, &opts).map_err(oracle_at(&path))?, None)
            }
        };
        rows.push(json!({
            "n": n,
            "log_z": exact.unwrap_or_else(|| format::real(r.log_z)),
            "error_bar": format::real(r.error_bar),
            "flagged": r.flagged,
        }));
        results.push(r);
    }
    let fit = match &o.fit {
        None => Value::Null,
        Some(powers) => {
            let f = oracle::fit_expansion(&results, powers).map_err(oracle_at("oracle.fit"))?;
            json!({
                "coefficients": powers.iter().zip(&f.coefficients).enumerate().map(|(i, (a, c))| json!({
                    "power": a,
                    "value": format::real(*c),
                    "std_error": format::real(f.covariance[(i, i)].max(0.0).sqrt()),
                })).collect::<Vec<_>>(),
                "residual": format::real(f.residual),
                "condition": format::real(f.condition),
                "free_energy_levels": f.free_energy_levels().iter().map(|(l, c)| json!({ "level": l, "value": format::real(*c) })).collect::<Vec<_>>(),
            })
        }
    };
    let method = match o.method {
        OracleKind::Mehta => "mehta",
        OracleKind::Quadrature => "quadrature",
        OracleKind::MonteCarlo => "monte-carlo",
    };
    Ok(json!({ "method": method, "results": rows, "fit": fit }))
}

fn command_name(c: Command) -> &'static str {
    match c {
        Command::Curve => "curve",
        Command::Correlators => "correlators",
        Command::FreeEnergy => "free-energy",
        Command::Verify => "verify",
        Command::Oracle => "oracle",
    }
}

/// Runs one job; never panics on bad input, failures become an error document.
pub fn run(cfg: &JobConfig, opts: &Options) -> Report {
    let precision = opts.precision.or(cfg.precision).unwrap_or(Precision::Float50);
    let seed = opts.seed.or(cfg.seed).unwrap_or(1);
    let mut status = exit::OK;
    let mut density_csv = None;
    let mut provenance = json!({
        "precision": precision,
        "seed": seed,
        "numeric_note": "values are 30 significant digits of the computed number; values from double-precision paths carry relative error of order 2.2e-16 times the conditioning",
    });
    let outcome: Result<Value, Failure> = (|| {
        if cfg.command == Command::Oracle {
            return oracle_job(cfg, seed);
        }
        let c = solve_curve(cfg)?;
        provenance["curve_residuals"] = format::reals(&c.residuals);
        provenance["density_integral"] = Value::String(format::real(density_integral(&c)));
        if let Some(path) = cfg.output.as_ref().and_then(|o| o.density_csv.clone()) {
            let samples = cfg.output.as_ref().and_then(|o| o.density_samples).unwrap_or(201);
            let mut csv = String::from("x,density\n");
            for (x, rho) in density_table(&c, samples) {
                csv.push_str(&format!("{},{}\n", format::real(x), format::real(rho)));
            }
            density_csv = Some((path, csv));
        }
        match cfg.command {
            Command::Curve => Ok(curve_job(cfg, &c, precision)),
            Command::Correlators => correlators_job(cfg, &c),
            Command::FreeEnergy => free_energy_job(cfg, &c),
            Command::Verify => {
                let e = engine(cfg, &c)?;
                let (checks, ok) = run_checks(&e, &sample_points(cfg, &c), cfg.max_level).map_err(at("points"))?;
                if !ok {
                    status = exit::VERIFY;
                }
                Ok(json!({ "checks": checks, "all_pass": ok }))
            }
            Command::Oracle => unreachable!(),
        }
    })();
    let document = match outcome {
        Ok(result) => json!({ "command": command_name(cfg.command), "result": result, "provenance": provenance }),
        Err(f) => {
            status = exit::SOLVER;
            json!({ "command": command_name(cfg.command), "error": { "code": f.code, "path": f.path, "message": f.message }, "provenance": provenance })
        }
    };
    Report { document, status, density_csv }
}
