//! Command-line front end: one subcommand per analysis step, driven by a JSON config.
//!
//! Exit status: 0 on success, 1 on input or computation errors, 2 when the
//! analysis ran but the requested property fails (no dual, not Riesz, ...).

mod config;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::json;

use config::{AnalysisConfig, Format};
use run::{output_dir, Command, Run};

#[derive(Parser, Debug)]
#[command(name = "weylzak", version, about = "Weyl-Zak transform and frame analysis of twisted translates")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// Analysis config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to `<outputs.directory>/<command>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Artifact format; overrides `outputs.formats`.
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Seed for randomized checks.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to one per core.
    #[arg(long)]
    threads: Option<usize>,
}

fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0))
}

fn main_inner(cli: Cli) -> Result<u8> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().context("configuring the thread pool")?;
    }
    let cfg = AnalysisConfig::load(&cli.config)?;
    let out = output_dir(cli.out.as_deref(), &cfg, cli.command);
    let formats = cli.format.map(|f| vec![f]).unwrap_or_else(|| cfg.outputs.formats.clone());
    let mut run = Run::new(cfg, out.clone(), formats, cli.seed);
    let done = run.execute(cli.command)?;
    let status = if done.failure.is_some() { "verdict_failure" } else { "ok" };
    let report = json!({
        "command": cli.command.name(),
        "config_hash": run.hash,
        "timestamp": timestamp(),
        "seed": cli.seed,
        "config": run.cfg,
        "status": status,
        "failure": done.failure,
        "diagnostics": run.diagnostics,
        "result": done.result,
        "artifacts": run.artifacts,
    });
    let path = out.join("report.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n").with_context(|| format!("writing {}", path.display()))?;
    println!("{} [{}]", cli.command.name(), &run.hash[..12]);
    for line in &done.summary {
        println!("  {line}");
    }
    println!("  report: {}", path.display());
    Ok(match done.failure {
        Some(msg) => {
            eprintln!("weylzak: {msg}");
            2
        }
        None => 0,
    })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            // usage errors are input errors; help and version are not errors
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match main_inner(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("weylzak: error: {e:#}");
            ExitCode::from(1)
        }
    }
}
