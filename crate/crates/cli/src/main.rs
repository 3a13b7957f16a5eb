use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use airport_sim::experiment::{batch, load_config, ExperimentConfig};
use airport_sim::world::build_layout;
use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

/// Airport simulation with and without ambient-intelligence assistance.
#[derive(Parser)]
#[command(version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of seeded simulations and write the result files.
    Batch(BatchArgs),
    /// Print the airport map built from the configuration.
    Map(ConfigArgs),
    /// Print the effective configuration (every key).
    Config(ConfigArgs),
}

#[derive(Args)]
struct ConfigArgs {
    /// Config file (`key = value` lines); defaults apply when omitted.
    #[arg(short, long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set boarding-gates=6`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

#[derive(Args)]
struct BatchArgs {
    #[command(flatten)]
    config: ConfigArgs,
    #[arg(long)]
    runs: Option<u32>,
    /// Base seed; run i uses seed + i.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for CSV / SVG / trace files.
    #[arg(short, long)]
    out: Option<PathBuf>,
    /// Write message traces, agent event logs and queue lengths per run.
    #[arg(long)]
    trace: bool,
    /// Write per-tick satisfaction series per run and their mean.
    #[arg(long)]
    series: bool,
    /// Write the mean satisfaction series as an SVG chart.
    #[arg(long)]
    svg: bool,
}

fn resolve(args: &ConfigArgs) -> Result<ExperimentConfig> {
    let mut cfg = match &args.config {
        Some(path) => load_config(path)?,
        None => ExperimentConfig::default(),
    };
    for kv in &args.overrides {
        cfg.apply_override(kv)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn run_batch(args: &BatchArgs) -> Result<ExitCode> {
    let mut cfg = resolve(&args.config)?;
    if let Some(n) = args.runs {
        cfg.runs = n;
    }
    if let Some(s) = args.seed {
        cfg.setup.seed = s;
    }
    if let Some(dir) = &args.out {
        cfg.out_dir = Some(dir.clone());
    }
    cfg.trace |= args.trace;
    cfg.series |= args.series;
    cfg.svg |= args.svg;
    cfg.validate()?;

    let started = Instant::now();
    let out = batch(&cfg).context("batch failed")?;
    print!("{}", out.summary);
    let [non, ami] = [out.summary.rows[2].average, out.summary.rows[3].average];
    if non > 0.0 {
        println!("time saved with AmI: {:.1}%", (non - ami) / non * 100.0);
    }
    println!(
        "{} runs in {:.2}s",
        out.results.len(),
        started.elapsed().as_secs_f64()
    );
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    let truncated: Vec<u64> = out
        .results
        .iter()
        .filter(|r| r.truncated)
        .map(|r| r.seed)
        .collect();
    if !truncated.is_empty() {
        eprintln!("runs hit the tick cap with agents still inside (seeds {truncated:?})");
        return Ok(ExitCode::from(2));
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> Result<ExitCode> {
    let cli = Cli::parse();
    match cli.command {
        Command::Batch(args) => run_batch(&args),
        Command::Map(args) => {
            let cfg = resolve(&args)?;
            print!("{}", build_layout(&cfg.setup)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Config(args) => {
            print!("{}", resolve(&args)?.dump());
            Ok(ExitCode::SUCCESS)
        }
    }
}
