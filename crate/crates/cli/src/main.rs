use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mp2_cli::commands::{self, DEFAULT_ALPHAS};
use mp2_cli::{CliError, RunConfig};
use mp2_core::models::ModelKind;

#[derive(Parser)]
#[command(name = "mp2", version, about = "Train and evaluate pointwise/pairwise recommenders")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Flat key=value config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Ratings file; relative paths also resolve under $MP2_DATA_DIR.
    #[arg(long)]
    dataset: Option<String>,
    /// ml100k-tab, ml1m-double-colon or csv.
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    model: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    beta: Option<String>,
    /// Training seed; also replaces the seed list of grid and reproduce.
    #[arg(long)]
    seed: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<String>,
    /// Extra key=value settings, applied last.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Train one model; writes checkpoint, log, split manifest and config.
    Train(Common),
    /// Score a checkpoint on a split manifest.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        split: PathBuf,
        /// Metrics CSV path.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated cutoffs.
        #[arg(long, default_value = "5,20")]
        ks: String,
    },
    /// Sweep alpha (and optionally beta) for the configured model.
    Grid {
        #[command(flatten)]
        common: Common,
        /// Comma-separated alpha values.
        #[arg(long)]
        alphas: Option<String>,
        /// Comma-separated beta values.
        #[arg(long)]
        betas: Option<String>,
        /// Keep one checkpoint per grid point and seed.
        #[arg(long)]
        save_checkpoints: bool,
    },
    /// Multi-seed comparison table for several models.
    Reproduce {
        #[command(flatten)]
        common: Common,
        /// Comma-separated model names.
        #[arg(long, default_value = "neumf-lite,bpr,ranknet-nn,appl,t3,mp2")]
        models: String,
    },
}

fn build_config(c: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = match &c.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    let flags = [
        ("dataset", &c.dataset),
        ("format", &c.format),
        ("model", &c.model),
        ("alpha", &c.alpha),
        ("beta", &c.beta),
        ("out", &c.out),
    ];
    for (key, value) in flags {
        if let Some(v) = value {
            cfg.set(key, v)?;
        }
    }
    if let Some(seed) = &c.seed {
        cfg.set("seed", seed)?;
        cfg.set("seeds", seed)?;
    }
    for kv in &c.set {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got `{kv}`")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    Ok(cfg)
}

fn parse_list<T: std::str::FromStr>(what: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse().map_err(|_| CliError::Config(format!("bad {what} `{x}`"))))
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train(common) => {
            let cfg = build_config(&common)?;
            let out = commands::train(&cfg)?;
            println!("checkpoint: {}", out.checkpoint.display());
            println!("log:        {}", out.log.display());
            println!("split:      {}", out.manifest.display());
        }
        Command::Eval {
            checkpoint,
            split,
            out,
            ks,
        } => {
            let ks: Vec<usize> = parse_list("cutoff", &ks)?;
            let report = commands::eval(&checkpoint, &split, &out, &ks)?;
            print!("{}", commands::format_table(&report));
        }
        Command::Grid {
            common,
            alphas,
            betas,
            save_checkpoints,
        } => {
            let cfg = build_config(&common)?;
            let alphas = match alphas {
                Some(s) => parse_list("alpha", &s)?,
                None => DEFAULT_ALPHAS.to_vec(),
            };
            let betas = betas.map(|s| parse_list::<f64>("beta", &s)).transpose()?;
            let (path, points) = commands::grid(&cfg, &alphas, betas.as_deref(), save_checkpoints)?;
            let failed = points.iter().filter(|p| p.result.is_err()).count();
            println!("{} grid points ({failed} failed): {}", points.len(), path.display());
        }
        Command::Reproduce { common, models } => {
            let cfg = build_config(&common)?;
            let models: Vec<ModelKind> = parse_list("model", &models)?;
            let (path, summaries) = commands::reproduce(&cfg, &models)?;
            for s in &summaries {
                match &s.result {
                    Ok((mean, _)) => {
                        let cells: Vec<String> = mean
                            .ks
                            .iter()
                            .enumerate()
                            .map(|(i, k)| format!("HR@{k} {:.4}  NDCG@{k} {:.4}", mean.hit_rate[i], mean.ndcg[i]))
                            .collect();
                        println!("{:<12} {}", s.model.name(), cells.join("  "));
                    }
                    Err(e) => println!("{:<12} failed: {e}", s.model.name()),
                }
            }
            println!("table: {}", path.display());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
