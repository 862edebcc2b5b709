//! Command-line entry point orchestrating the laboratory: field synthesis,
//! ensemble simulation, estimation, bound tables, resolvent iteration, the
//! two-level sandwich and the lemma audits, each leaving a manifest behind.

mod commands;
mod config;
mod manifest;

use clap::{Parser, Subcommand};
use config::RunConfig;
use manifest::ManifestBuilder;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "curlgff", version, about = "Brownian particle in the curl of the smoothed 2d Gaussian free field: Monte Carlo and resolvent numerics")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (default: $CURLGFF_OUT or ./runs, plus the command name).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker thread count override (default: available parallelism).
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Lambda list override, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    lambda: Option<Vec<f64>>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Sample one environment, validate it, and emit the covariance table.
    Synth,
    /// Integrate an ensemble of paths and emit displacement statistics.
    Simulate,
    /// Turn an ensemble CSV into D(t), Laplace sweeps and log-scaling fits.
    Estimate,
    /// Bound-function tables, the c sequence and the identity report.
    Bounds,
    /// Resolvent iteration sweep over the lambda list.
    Iterate,
    /// Two-level truncated solve against a Monte Carlo ensemble.
    Sandwich,
    /// All appendix-lemma quadrature audits.
    Quadcheck,
    /// Aggregate table comparing Monte Carlo, D_diag and the envelope.
    Report,
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Simulate => "simulate",
            Command::Estimate => "estimate",
            Command::Bounds => "bounds",
            Command::Iterate => "iterate",
            Command::Sandwich => "sandwich",
            Command::Quadcheck => "quadcheck",
            Command::Report => "report",
        }
    }
}

fn emit_error(out_dir: Option<&PathBuf>, command: &str, code: u8, err: &anyhow::Error) {
    let log = serde_json::json!({
        "command": command,
        "exit_code": code,
        "error": format!("{err:#}"),
        "at": chrono::Utc::now().to_rfc3339(),
    });
    eprintln!("{log}");
    if let Some(dir) = out_dir {
        let _ = std::fs::create_dir_all(dir);
        let _ = std::fs::write(dir.join("error.json"), serde_json::to_vec_pretty(&log).unwrap_or_default());
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let command = cli.command.name();

    // configuration phase: any failure here is a configuration error (exit 2)
    let loaded = (|| -> anyhow::Result<(RunConfig, Vec<u8>)> {
        let path = cli
            .config
            .as_ref()
            .ok_or_else(|| anyhow::anyhow!("--config <path> is required"))?;
        let bytes = std::fs::read(path)?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(seed) = cli.seed {
            cfg.master_seed = seed;
        }
        if let Some(lambdas) = &cli.lambda {
            cfg.lambdas = lambdas.clone();
        }
        if let Some(workers) = cli.workers {
            cfg.workers = Some(workers);
        }
        cfg.validate(command)?;
        Ok((cfg, bytes))
    })();

    let (cfg, config_bytes) = match loaded {
        Ok(x) => x,
        Err(e) => {
            emit_error(cli.out.as_ref(), command, 2, &e);
            return ExitCode::from(2);
        }
    };

    let out_root = cli
        .out
        .clone()
        .or_else(|| cfg.out_dir.as_ref().map(PathBuf::from))
        .or_else(|| std::env::var_os("CURLGFF_OUT").map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("runs"));
    let out_dir = out_root.join(command);
    if let Err(e) = std::fs::create_dir_all(&out_dir) {
        emit_error(Some(&out_dir), command, 1, &e.into());
        return ExitCode::from(1);
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.unwrap_or(0))
        .build();
    let pool = match pool {
        Ok(p) => p,
        Err(e) => {
            emit_error(Some(&out_dir), command, 1, &e.into());
            return ExitCode::from(1);
        }
    };

    let config_snapshot = serde_json::to_value(&cfg).expect("config serializes");
    let mut m = ManifestBuilder::new(command, config_snapshot, &out_dir);
    m.record_input("config", &config_bytes);

    let run = pool.install(|| match cli.command {
        Command::Synth => commands::synth(&cfg, &mut m),
        Command::Simulate => commands::simulate(&cfg, &mut m),
        Command::Estimate => commands::estimate(&cfg, &mut m),
        Command::Bounds => commands::bounds_cmd(&cfg, &mut m),
        Command::Iterate => commands::iterate(&cfg, &mut m),
        Command::Sandwich => commands::sandwich(&cfg, &mut m),
        Command::Quadcheck => commands::quadcheck(&cfg, &mut m),
        Command::Report => commands::report(&cfg, &mut m),
    });

    match run {
        Ok(()) => match m.finish() {
            Ok(path) => {
                println!("manifest: {}", path.display());
                ExitCode::SUCCESS
            }
            Err(e) => {
                emit_error(Some(&out_dir), command, 1, &e);
                ExitCode::from(1)
            }
        },
        Err(e) => {
            let _ = m.finish();
            emit_error(Some(&out_dir), command, 1, &e);
            ExitCode::from(1)
        }
    }
}
