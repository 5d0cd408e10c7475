//! `pphi2`: run configured experiments and the built-in check suites.

mod config;
mod output;
mod tasks;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::{json, Value};

use pphi2_verify::{run_suite, Suite};

const EXIT_VALIDATION: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

#[derive(Parser)]
#[command(name = "pphi2", version, about = "Classical and truncated-Fock computations for the cut-off P(φ)₂ model")]
struct Cli {
    /// Directory for report.json, table.csv and plot.dat.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the config-level seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for parallel scans (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the task described by a TOML (or .json) config file.
    Run { config: PathBuf },
    /// Run a check suite: oracles, invariants or paper-values.
    Verify { suite: String },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads: must be at least 1");
            return ExitCode::from(EXIT_VALIDATION);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    }
    match &cli.command {
        Command::Run { config } => run(config, &cli),
        Command::Verify { suite } => verify(suite, &cli),
    }
}

fn run(path: &Path, cli: &Cli) -> ExitCode {
    let start = Instant::now();
    let mut config = match config::load(path) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let pot = match config.potential() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let hash = output::config_hash(&config);
    let setup_seconds = start.elapsed().as_secs_f64();

    let task_start = Instant::now();
    let outcome = tasks::run(&config, &pot);
    let task_seconds = task_start.elapsed().as_secs_f64();

    let (out, error) = match outcome {
        Ok(out) => {
            let failure = out.failure.clone();
            (Some(out), failure)
        }
        Err(pphi2_core::Error::InvalidParameter { name, reason }) => {
            eprintln!("error: invalid config: task.{name}: {reason}");
            return ExitCode::from(EXIT_VALIDATION);
        }
        Err(e) => (None, Some(e.to_string())),
    };

    let dir = cli.out_dir.clone().unwrap_or_else(|| PathBuf::from("out"));
    if let Err(e) = std::fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {e}", dir.display());
        return ExitCode::from(EXIT_NUMERICAL);
    }
    let report = output::RunReport {
        version: output::VERSION,
        config_hash: &hash,
        config: &config,
        task: config.task.name(),
        status: if error.is_none() { "ok" } else { "numerical-failure" },
        error: error.clone(),
        results: out.as_ref().map_or(Value::Null, |o| o.results.clone()),
        diagnostics: out.as_ref().map_or_else(|| json!({}), |o| o.diagnostics.clone()),
        timing: output::Timing { setup_seconds, task_seconds },
    };
    let written = (|| -> std::io::Result<()> {
        output::write_report(&dir, &report)?;
        if let Some(out) = &out {
            if let Some(table) = &out.table {
                output::write_table(&dir, &hash, table)?;
            }
            if let Some((labels, points)) = &out.plot {
                output::write_plot(&dir, &hash, *labels, points)?;
            }
        }
        Ok(())
    })();
    if let Err(e) = written {
        eprintln!("error: writing outputs to {}: {e}", dir.display());
        return ExitCode::from(EXIT_NUMERICAL);
    }

    match error {
        None => {
            println!("{}: ok ({:.2} s), outputs in {}", config.task.name(), task_seconds, dir.display());
            ExitCode::SUCCESS
        }
        Some(e) => {
            eprintln!("error: {}: numerical failure: {e} (partial report in {})", config.task.name(), dir.display());
            ExitCode::from(EXIT_NUMERICAL)
        }
    }
}

fn verify(name: &str, cli: &Cli) -> ExitCode {
    let suite: Suite = match name.parse() {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let checks = run_suite(suite, cli.seed.unwrap_or(0));
    for c in &checks {
        println!("{c}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{suite}: {} checks, {failed} failed", checks.len());
    if let Some(dir) = &cli.out_dir {
        let written = std::fs::create_dir_all(dir).and_then(|_| {
            let text = serde_json::to_string_pretty(&json!({ "suite": suite.to_string(), "checks": checks }))
                .map_err(std::io::Error::other)?;
            std::fs::write(dir.join("checks.json"), text + "\n")
        });
        if let Err(e) = written {
            eprintln!("error: writing checks.json: {e}");
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
