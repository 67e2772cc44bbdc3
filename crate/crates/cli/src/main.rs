use betamm_cli::{exit, run, JobConfig, Options, Precision, THREADS_ENV};
use clap::Parser;
use serde_json::json;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "betamm", version, about = "1/N expansion of the beta-deformed one-matrix model")]
struct Args {
    /// Job configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output document; overrides the config and defaults to stdout.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    precision: Option<Precision>,
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads; defaults to the BETAMM_THREADS environment variable.
    #[arg(long)]
    threads: Option<usize>,
}

fn emit(text: &str, path: Option<&PathBuf>) -> std::io::Result<()> {
    match path {
        Some(p) => std::fs::write(p, text),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn config_failure(path: &str, message: &str, out: Option<&PathBuf>) -> ExitCode {
    let doc = json!({ "error": { "code": "config", "path": path, "message": message } });
    let text = serde_json::to_string_pretty(&doc).unwrap();
    eprintln!("{text}");
    let _ = emit(&text, out);
    ExitCode::from(exit::CONFIG)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let threads = args.threads.or_else(|| std::env::var(THREADS_ENV).ok().and_then(|v| v.parse().ok()));
    if let Some(n) = threads {
        if n == 0 || rayon::ThreadPoolBuilder::new().num_threads(n).build_global().is_err() {
            return config_failure("--threads", "invalid thread count", args.output.as_ref());
        }
    }
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return config_failure("--config", &e.to_string(), args.output.as_ref()),
    };
    let cfg = match JobConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return config_failure(&e.path, &e.message, args.output.as_ref()),
    };
    let report = run(&cfg, &Options { precision: args.precision, seed: args.seed });
    let out = args.output.clone().or_else(|| cfg.output.as_ref().and_then(|o| o.document.clone()).map(PathBuf::from));
    let mut text = serde_json::to_string_pretty(&report.document).unwrap();
    text.push('\n');
    let written = match &out {
        Some(p) => std::fs::write(p, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    };
    if let Err(e) = written {
        eprintln!("cannot write the output document: {e}");
        return ExitCode::from(exit::CONFIG);
    }
    if let Some((path, csv)) = &report.density_csv {
        if let Err(e) = std::fs::write(path, csv) {
            eprintln!("cannot write {path}: {e}");
            return ExitCode::from(exit::CONFIG);
        }
    }
    ExitCode::from(report.status)
}
