use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use fermicert::config::Task;
use fermicert::{parse, run, Diagnostic, RunError, RunOptions, Status, EXIT_CERTIFICATION, EXIT_OK};
use serde_json::{json, Value};

/// Certify Lieb-Robinson bounds, conditional expectations and spectral gaps
/// of lattice fermion models.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Args {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides `seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Number of grid points for time series and flow paths.
    #[arg(long)]
    grid: Option<usize>,
    /// Task tolerance; overrides `tolerance`.
    #[arg(long)]
    tol: Option<f64>,
    /// Worker threads for sample-parallel tasks.
    #[arg(long, env = "FERMICERT_THREADS")]
    threads: Option<usize>,
}

fn apply_overrides(config: &mut Value, args: &Args) {
    let Some(root) = config.as_object_mut() else { return };
    if let Some(seed) = args.seed {
        root.insert("seed".into(), json!(seed));
    }
    if let Some(tol) = args.tol {
        root.insert("tolerance".into(), json!(tol));
    }
    if let Some(out) = &args.out {
        let output = root.entry("output").or_insert_with(|| json!({}));
        if let Some(o) = output.as_object_mut() {
            o.insert("dir".into(), json!(out.display().to_string()));
        }
    }
    if let Some(points) = args.grid {
        let section =
            if root.get("task").and_then(Value::as_str) == Some(Task::FlowCheck.as_str()) { "flow" } else { "time" };
        let s = root.entry(section).or_insert_with(|| json!({}));
        if let Some(o) = s.as_object_mut() {
            o.insert("points".into(), json!(points));
        }
    }
}

fn fail(err: &RunError) -> ExitCode {
    eprintln!("{}", err.to_json());
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => return fail(&RunError::io(&args.config, e)),
    };
    let mut value: Value = match serde_json::from_str(&text) {
        Ok(v) => v,
        Err(e) => return fail(&RunError::Format(format!("{}: {e}", args.config.display()))),
    };
    apply_overrides(&mut value, &args);
    let config = match parse(&value) {
        Ok(c) => c,
        Err(d) => return fail(&RunError::Config(d)),
    };
    let options = match args.threads {
        Some(0) => return fail(&RunError::Config(vec![Diagnostic::new("threads", "need at least one thread")])),
        Some(threads) => RunOptions { threads },
        None => RunOptions::default(),
    };
    match run(&config, &options) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            if outcome.status == Status::Passed {
                ExitCode::from(EXIT_OK as u8)
            } else {
                let err = json!({
                    "error": "certification-failed",
                    "message": format!("{} did not certify", config.task.as_str()),
                    "report": outcome.files.first(),
                });
                eprintln!("{err}");
                ExitCode::from(EXIT_CERTIFICATION as u8)
            }
        }
        Err(e) => fail(&e),
    }
}
