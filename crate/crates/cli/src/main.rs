//! `plap`: command-line front end for the p-Laplacian critical-point solvers.

mod commands;
mod config;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use serde_json::{json, Value};

use commands::{Failure, Outcome};
use config::{Command, Format, Overrides, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "plap", version, about = "Critical points of nonsmooth p-Laplacian energies", allow_negative_numbers = true)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// TOML (or `.json`) configuration; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for the multiplicity sweep.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[command(flatten)]
    overrides: Overrides,
}

fn resolve(cli: &Cli) -> Result<RunConfig, String> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load_for(path, cli.command)?,
        None => RunConfig::new(cli.command),
    };
    cfg.apply_env_seed(std::env::var("PLAP_SEED").ok())?;
    cfg.apply(&cli.overrides)?;
    if cli.jobs == 0 {
        return Err("--jobs must be at least 1".into());
    }
    Ok(cfg)
}

fn write(path: &Path, contents: &str) -> Result<(), String> {
    std::fs::write(path, contents).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn emit(cfg: &RunConfig, outcome: &Outcome, status: &str, wall: f64) -> Result<(), String> {
    let dir = &cfg.output.dir;
    std::fs::create_dir_all(dir).map_err(|e| format!("cannot create {}: {e}", dir.display()))?;
    let config = serde_json::to_value(cfg).map_err(|e| e.to_string())?;
    write(&dir.join("config.json"), &(serde_json::to_string_pretty(&config).map_err(|e| e.to_string())? + "\n"))?;
    if cfg.output.wants(Format::Json) {
        let mut report = json!({
            "command": cfg.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config": config,
            "status": status,
            "result": outcome.result,
            "diagnostics": outcome.diagnostics,
        });
        if cfg.output.wall_time {
            report["wall_time_s"] = Value::from(wall);
        }
        write(&dir.join("report.json"), &(serde_json::to_string_pretty(&report).map_err(|e| e.to_string())? + "\n"))?;
    }
    if cfg.output.wants(Format::Csv) {
        for (name, x) in &outcome.solutions {
            write(&dir.join(name), &x.to_csv_string().map_err(|e| e.to_string())?)?;
        }
        for (name, text) in &outcome.tables {
            write(&dir.join(name), text)?;
        }
    }
    if cfg.output.wants(Format::Svg) && !outcome.panels.is_empty() {
        write(&dir.join("run.svg"), &svg::render(&outcome.panels))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match resolve(&cli) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("plap: configuration error: {e}");
            return ExitCode::from(1);
        }
    };
    let started = Instant::now();
    let result = commands::run(&cfg, cli.jobs);
    let wall = started.elapsed().as_secs_f64();
    let (outcome, status, code) = match result {
        Ok(o) => (o, "ok", 0),
        Err(Failure::Config(e)) => {
            eprintln!("plap: configuration error: {e}");
            return ExitCode::from(1);
        }
        Err(Failure::Numerical(o)) => (*o, "failed", 2),
    };
    for d in &outcome.diagnostics {
        eprintln!("plap: {d}");
    }
    if let Err(e) = emit(&cfg, &outcome, status, wall) {
        eprintln!("plap: {e}");
        return ExitCode::from(2);
    }
    println!("plap {:?}: {status}, outputs in {}", cfg.command, cfg.output.dir.display());
    ExitCode::from(code)
}
