mod commands;
mod config;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde_json::json;

use commands::Payload;
use config::{Cli, Command, RunConfig};

const DEFAULT_PDE_CELLS: usize = qjump::pde::DEFAULT_CELLS;
const DEFAULT_TIME_INTERVALS: usize = 4000;

fn configure_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("QJUMP_THREADS") {
        let n: usize = raw
            .trim()
            .parse()
            .with_context(|| format!("QJUMP_THREADS must be a positive integer, got `{raw}`"))?;
        anyhow::ensure!(n > 0, "QJUMP_THREADS must be a positive integer, got 0");
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    Ok(())
}

fn emit(cfg: &RunConfig, payload: Payload) -> Result<()> {
    let sink: Box<dyn Write> = match &cfg.out_path {
        Some(path) => Box::new(
            File::create(path).with_context(|| format!("cannot write output file {}", path.display()))?,
        ),
        None => Box::new(io::stdout().lock()),
    };
    let mut w = BufWriter::new(sink);
    match payload {
        Payload::Csv(body) => {
            qjump::export::write_header(&mut w, &cfg.header_entries())?;
            w.write_all(&body)?;
        }
        Payload::Json(result) => {
            let mut doc = json!({ "config": cfg, "result": result });
            if cfg.timestamp {
                doc["generated"] = json!(chrono::Utc::now().to_rfc3339());
            }
            qjump::export::write_json(&mut w, &doc)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    configure_threads()?;
    let (cfg, payload) = match &cli.command {
        Command::Delay(args) => {
            let cfg = RunConfig::resolve("delay", args, DEFAULT_TIME_INTERVALS)?;
            let p = commands::delay(&cfg)?;
            (cfg, p)
        }
        Command::Pde { common, field, every } => {
            let cfg = RunConfig::resolve("pde", common, DEFAULT_PDE_CELLS)?;
            let p = commands::pde(&cfg, *field, *every)?;
            (cfg, p)
        }
        Command::Mc(args) => {
            let cfg = RunConfig::resolve("mc", args, DEFAULT_PDE_CELLS)?;
            let p = commands::mc(&cfg)?;
            (cfg, p)
        }
        Command::Baseline(args) => {
            let cfg = RunConfig::resolve("baseline", args, DEFAULT_TIME_INTERVALS)?;
            let p = commands::baseline(&cfg)?;
            (cfg, p)
        }
        Command::Sweep {
            common,
            gamma_min,
            gamma_max,
            points,
        } => {
            let cfg = RunConfig::resolve("sweep", common, DEFAULT_TIME_INTERVALS)?;
            let p = commands::sweep(&cfg, *gamma_min, *gamma_max, *points)?;
            (cfg, p)
        }
        Command::Fig1 { common, panel } => {
            let cfg = RunConfig::resolve("fig1", common, DEFAULT_TIME_INTERVALS)?;
            let p = commands::fig1(&cfg, *panel)?;
            (cfg, p)
        }
    };
    emit(&cfg, payload)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) if is_broken_pipe(&err) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

fn is_broken_pipe(err: &anyhow::Error) -> bool {
    err.chain()
        .filter_map(|e| e.downcast_ref::<std::io::Error>())
        .any(|e| e.kind() == std::io::ErrorKind::BrokenPipe)
}
