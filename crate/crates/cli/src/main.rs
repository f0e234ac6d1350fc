mod checks;
mod commands;
mod config;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use parcyl::conjugation::ChainManifest;
use parcyl::numeric::Precision;

use commands::{Failure, Lab, Outcome};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "parcyl", version, about = "Parabolic cylinders of a shear/overshear automorphism of C^2")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, value_enum)]
    precision: Option<PrecisionArg>,
    #[arg(long, global = true)]
    n_max: Option<u64>,
    /// `golden` or `cf:a1,a2,...` (a trailing `...` repeats the block).
    #[arg(long, global = true)]
    theta: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Double,
    DoubleDouble,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Diophantine constant and sum bound of the rotation.
    Diophantine,
    /// Invariant-axis, inverse, coefficient, growth and Jacobian checks of F.
    MapCheck,
    /// Iterate F from `point` and write orbit.csv.
    Orbit,
    /// Fit u_n = n + A log n + B along the orbit of `point`.
    FitA,
    /// Approximate Fatou coordinate at `point`.
    Fatou,
    /// Classify a slice window and write basin.pgm.
    Basin,
    /// Run every check.
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Diophantine => "diophantine",
            Command::MapCheck => "map-check",
            Command::Orbit => "orbit",
            Command::FitA => "fit-a",
            Command::Fatou => "fatou",
            Command::Basin => "basin",
            Command::Verify => "verify",
        }
    }
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config: &'a RunConfig,
    rotation: Value,
    chain: Option<ChainManifest>,
    #[serde(flatten)]
    outcome: &'a Outcome,
    error: Option<String>,
}

fn load_config(cli: &Cli) -> Result<RunConfig, Failure> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Failure::Usage(format!("reading {}: {e}", path.display())))?;
            RunConfig::from_json(&text).map_err(Failure::Usage)?
        }
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(p) = cli.precision {
        cfg.precision = match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::DoubleDouble => Precision::DoubleDouble,
        };
    }
    if let Some(n) = cli.n_max {
        cfg.n_max = n;
    }
    if let Some(t) = &cli.theta {
        cfg.theta = t.clone();
    }
    cfg.validate().map_err(Failure::Usage)?;
    Ok(cfg)
}

fn run(command: Command, lab: &Lab) -> Result<Outcome, Failure> {
    match command {
        Command::Diophantine => commands::diophantine(lab),
        Command::MapCheck => commands::map_check(lab),
        Command::Orbit => commands::orbit(lab),
        Command::FitA => commands::fit_a(lab),
        Command::Fatou => commands::fatou(lab),
        Command::Basin => commands::basin(lab),
        Command::Verify => commands::verify(lab),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let cfg = match load_config(&cli) {
        Ok(c) => c,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.exit_code() as u8);
        }
    };
    if let Some(t) = cfg.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("warning: thread pool: {e}");
        }
    }
    if let Err(e) = fs::create_dir_all(&cfg.out) {
        eprintln!("error: creating {}: {e}", cfg.out.display());
        return ExitCode::from(3);
    }
    let lab = match Lab::new(cfg) {
        Ok(l) => l,
        Err(f) => {
            eprintln!("error: {}", f.message());
            return ExitCode::from(f.exit_code() as u8);
        }
    };

    let result = run(cli.command, &lab);
    let (outcome, error, code) = match result {
        Ok(o) => {
            let code = if o.pass { 0 } else { 1 };
            (o, None, code)
        }
        Err(f) => (Outcome::default(), Some(f.message().to_string()), f.exit_code()),
    };

    for w in &outcome.warnings {
        eprintln!("warning: {w}");
    }
    for f in &outcome.failures {
        eprintln!("FAIL {f}");
    }
    if let Some(e) = &error {
        eprintln!("error: {e}");
    }
    println!("{}", serde_json::to_string_pretty(&outcome.summary).unwrap_or_default());

    let rot = &lab.rot;
    let manifest = Manifest {
        command: cli.command.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: &lab.cfg,
        rotation: json!({
            "theta": rot.theta.to_f64(),
            "lambda": rot.lambda,
            "cf": rot.cf.iter().take(16).collect::<Vec<_>>(),
            "dio_c": rot.dio_c,
            "dio_r": rot.dio_r,
        }),
        chain: lab.chain_manifest(),
        outcome: &outcome,
        error,
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    let path = lab.cfg.out.join("manifest.json");
    if let Err(e) = fs::write(&path, text) {
        eprintln!("error: writing {}: {e}", path.display());
        return ExitCode::from(3);
    }
    ExitCode::from(code as u8)
}
