use std::fs::{self, File, OpenOptions};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use mp2_core::data::{read_manifest, resolve_manifest, write_manifest};
use mp2_core::eval::{evaluate, MetricValues, MetricsReport, RepresentationScorer};
use mp2_core::models::{load_checkpoint, save_checkpoint, Checkpoint, Hyperparams, ModelKind};

use crate::config::{RunConfig, TrainSettings};
use crate::error::CliError;
use crate::reference::Constants;
use crate::runner::{self, PreparedData};

pub const CHECKPOINT_FILE: &str = "checkpoint.txt";
pub const LOG_FILE: &str = "train.log";
pub const MANIFEST_FILE: &str = "split.tsv";
pub const CONFIG_FILE: &str = "config.txt";
pub const GRID_FILE: &str = "grid.csv";
pub const REPRODUCE_FILE: &str = "reproduce.csv";

pub const GRID_HEADER: &str = "alpha,beta,metric,k,value,seeds,status";
pub const REPRODUCE_HEADER: &str = "dataset,model,metric,k,mean,std,seeds,reference,status,hyper";

/// The hyperparameter grid swept by `grid` when none is given.
pub const DEFAULT_ALPHAS: [f64; 8] = [0.0, 0.1, 0.5, 0.9, 0.99, 0.999, 0.9999, 1.0];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TrainOutput {
    pub checkpoint: PathBuf,
    pub log: PathBuf,
    pub manifest: PathBuf,
    pub config: PathBuf,
}

fn create_dir(path: &Path) -> Result<(), CliError> {
    fs::create_dir_all(path).map_err(|e| CliError::output(path, e))
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::output(path, e))
}

fn save(ckpt: &Checkpoint<f64>, path: &Path) -> Result<(), CliError> {
    save_checkpoint(ckpt, path).map_err(|e| match e {
        mp2_core::Error::Io(io) => CliError::output(path, io),
        other => CliError::Core(other),
    })
}

/// Commas and newlines would break the CSV row.
fn sanitize(msg: &str) -> String {
    msg.replace([',', '\n', '\r'], " ")
}

/// Trains one model and writes the checkpoint, the per-epoch log, the split
/// manifest and the fully resolved config into `cfg.out`.
pub fn train(cfg: &RunConfig) -> Result<TrainOutput, CliError> {
    cfg.validate()?;
    let settings = cfg.settings_for(cfg.model)?;
    let data = PreparedData::load(cfg)?;
    create_dir(&cfg.out)?;
    let out = TrainOutput {
        checkpoint: cfg.out.join(CHECKPOINT_FILE),
        log: cfg.out.join(LOG_FILE),
        manifest: cfg.out.join(MANIFEST_FILE),
        config: cfg.out.join(CONFIG_FILE),
    };
    write_file(&out.config, &cfg.resolved_text(cfg.model)?)?;

    let mut log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&out.log)
        .map_err(|e| CliError::output(&out.log, e))?;
    let model = runner::train(&data, cfg.model, &settings, |epoch, loss| {
        writeln!(log, "{}", runner::log_line(epoch, loss)).map_err(|e| CliError::output(&out.log, e))
    })?;

    let ckpt = Checkpoint {
        model,
        users: data.users.clone(),
        items: data.items.clone(),
    };
    save(&ckpt, &out.checkpoint)?;

    let file = File::create(&out.manifest).map_err(|e| CliError::output(&out.manifest, e))?;
    let mut w = BufWriter::new(file);
    write_manifest(&mut w, &data.split.test, &data.users, &data.items)?;
    w.flush().map_err(|e| CliError::output(&out.manifest, e))?;
    Ok(out)
}

/// Scores a saved checkpoint on a saved split and writes the metrics CSV.
pub fn eval(checkpoint: &Path, manifest: &Path, out_csv: &Path, ks: &[usize]) -> Result<MetricsReport, CliError> {
    let ckpt: Checkpoint<f64> = load_checkpoint(checkpoint).map_err(|e| CliError::input(checkpoint, e))?;
    let file = File::open(manifest).map_err(|e| CliError::input(manifest, e.into()))?;
    let entries = read_manifest(BufReader::new(file)).map_err(|e| CliError::input(manifest, e))?;
    let test = resolve_manifest(&entries, &ckpt.users, &ckpt.items).map_err(|e| CliError::input(manifest, e))?;
    let scorer = RepresentationScorer::vanilla(&ckpt.model)?;
    let values = evaluate(&scorer, &test, ks)?;
    let report = runner::report(&ckpt.model, values);
    if let Some(dir) = out_csv.parent().filter(|d| !d.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    let mut buf = Vec::new();
    MetricsReport::write_csv(std::slice::from_ref(&report), &mut buf)?;
    fs::write(out_csv, buf).map_err(|e| CliError::output(out_csv, e))?;
    Ok(report)
}

/// Human-readable metrics table.
pub fn format_table(report: &MetricsReport) -> String {
    let v = &report.values;
    let mut s = format!("{:<12}", "model");
    for k in &v.ks {
        s.push_str(&format!(" {:>10} {:>10}", format!("HR@{k}"), format!("NDCG@{k}")));
    }
    s.push('\n');
    s.push_str(&format!("{:<12}", report.model));
    for i in 0..v.ks.len() {
        s.push_str(&format!(" {:>10.4} {:>10.4}", v.hit_rate[i], v.ndcg[i]));
    }
    s.push('\n');
    s
}

fn metric_rows(values: &MetricValues) -> Vec<(&'static str, usize, f64)> {
    let mut rows: Vec<(&'static str, usize, f64)> = values
        .ks
        .iter()
        .zip(&values.hit_rate)
        .map(|(&k, &x)| ("hitrate", k, x))
        .collect();
    rows.extend(values.ks.iter().zip(&values.ndcg).map(|(&k, &x)| ("ndcg", k, x)));
    rows
}

/// Settings for one grid point. `alpha = 1` is part of the sweep, so the
/// degenerate flag is raised for it.
pub fn grid_settings(cfg: &RunConfig, alpha: f64, beta: Option<f64>) -> Result<TrainSettings, CliError> {
    let mut s = cfg.settings_for(cfg.model)?;
    s.hyper.alpha = alpha;
    if let Some(b) = beta {
        s.hyper.beta = b;
    }
    s.hyper.allow_degenerate_alpha = s.hyper.allow_degenerate_alpha || alpha == 1.0;
    s.hyper.validate()?;
    Ok(s)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GridPoint {
    pub alpha: f64,
    pub beta: f64,
    /// Mean over seeds, or the failure message.
    pub result: Result<MetricValues, String>,
}

/// Trains and evaluates `cfg.model` at every `(alpha, beta)` pair for every
/// seed in `cfg.seeds`. Failed points become rows with an error status.
pub fn grid(
    cfg: &RunConfig,
    alphas: &[f64],
    betas: Option<&[f64]>,
    save_checkpoints: bool,
) -> Result<(PathBuf, Vec<GridPoint>), CliError> {
    if alphas.is_empty() {
        return Err(CliError::Config("the alpha sweep is empty".into()));
    }
    if betas.is_some_and(<[f64]>::is_empty) {
        return Err(CliError::Config("the beta sweep is empty".into()));
    }
    cfg.validate()?;
    let data = PreparedData::load(cfg)?;
    create_dir(&cfg.out)?;
    let beta_list: Vec<Option<f64>> = match betas {
        Some(bs) => bs.iter().copied().map(Some).collect(),
        None => vec![None],
    };

    let mut points = Vec::new();
    for &alpha in alphas {
        for &beta in &beta_list {
            let outcome = (|| -> Result<(f64, MetricValues), CliError> {
                let base = grid_settings(cfg, alpha, beta)?;
                let mut runs = Vec::with_capacity(cfg.seeds.len());
                for &seed in &cfg.seeds {
                    let mut s = base.clone();
                    s.hyper.seed = seed;
                    let model = runner::train(&data, cfg.model, &s, |_, _| Ok(()))?;
                    runs.push(runner::evaluate_model(&model, &data.split, &cfg.ks)?);
                    if save_checkpoints {
                        let dir = cfg.out.join("grid");
                        create_dir(&dir)?;
                        let path = dir.join(format!("alpha-{alpha}_beta-{}_seed-{seed}.ckpt", s.hyper.beta));
                        let ckpt = Checkpoint {
                            model,
                            users: data.users.clone(),
                            items: data.items.clone(),
                        };
                        save(&ckpt, &path)?;
                    }
                }
                let (mean, _) = runner::summarize(&runs)
                    .ok_or_else(|| CliError::Config("`seeds` must not be empty".into()))?;
                Ok((base.hyper.beta, mean))
            })();
            let fallback_beta = beta.unwrap_or_else(|| {
                cfg.settings_for(cfg.model)
                    .map(|s| s.hyper.beta)
                    .unwrap_or(Hyperparams::default().beta)
            });
            points.push(match outcome {
                Ok((b, mean)) => GridPoint {
                    alpha,
                    beta: b,
                    result: Ok(mean),
                },
                Err(e) => GridPoint {
                    alpha,
                    beta: fallback_beta,
                    result: Err(e.to_string()),
                },
            });
        }
    }

    let mut csv = String::from(GRID_HEADER);
    csv.push('\n');
    for p in &points {
        match &p.result {
            Ok(values) => {
                for (metric, k, v) in metric_rows(values) {
                    csv.push_str(&format!("{},{},{metric},{k},{v},{},ok\n", p.alpha, p.beta, cfg.seeds.len()));
                }
            }
            Err(msg) => {
                csv.push_str(&format!(
                    "{},{},,,,{},error: {}\n",
                    p.alpha,
                    p.beta,
                    cfg.seeds.len(),
                    sanitize(msg)
                ));
            }
        }
    }
    let path = cfg.out.join(GRID_FILE);
    write_file(&path, &csv)?;
    Ok((path, points))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSummary {
    pub model: ModelKind,
    /// `(mean, std)` over seeds, or the failure message.
    pub result: Result<(MetricValues, MetricValues), String>,
    pub hyper: String,
}

fn snapshot_without_seed(h: &Hyperparams) -> String {
    h.to_pairs()
        .into_iter()
        .filter(|(k, _)| *k != "seed")
        .map(|(k, v)| format!("{k}={v}"))
        .collect::<Vec<_>>()
        .join(";")
}

/// Trains every listed model with its frozen defaults over `cfg.seeds` and
/// writes the comparison table next to the reference values.
pub fn reproduce(cfg: &RunConfig, models: &[ModelKind]) -> Result<(PathBuf, Vec<ModelSummary>), CliError> {
    if models.is_empty() {
        return Err(CliError::Config("no models to reproduce".into()));
    }
    if cfg.seeds.is_empty() {
        return Err(CliError::Config("`seeds` must not be empty".into()));
    }
    cfg.validate()?;
    let data = PreparedData::load(cfg)?;
    create_dir(&cfg.out)?;
    let dataset = cfg.dataset_name();
    let constants = Constants::bundled();

    let mut summaries = Vec::new();
    for &model in models {
        let settings = cfg.settings_for(model);
        let hyper = settings
            .as_ref()
            .map(|s| snapshot_without_seed(&s.hyper))
            .unwrap_or_default();
        let result = settings
            .and_then(|s| runner::run_seeds(&data, model, &s, &cfg.seeds, &cfg.ks))
            .and_then(|runs| {
                runner::summarize(&runs).ok_or_else(|| CliError::Config("no runs".into()))
            })
            .map_err(|e| e.to_string());
        summaries.push(ModelSummary { model, result, hyper });
    }

    let mut csv = String::from(REPRODUCE_HEADER);
    csv.push('\n');
    let n = cfg.seeds.len();
    for s in &summaries {
        match &s.result {
            Ok((mean, std)) => {
                for ((metric, k, m), (_, _, sd)) in metric_rows(mean).into_iter().zip(metric_rows(std)) {
                    let reference = constants
                        .reference(&dataset, s.model, metric, k)
                        .map(|r| r.to_string())
                        .unwrap_or_default();
                    csv.push_str(&format!(
                        "{dataset},{},{metric},{k},{m},{sd},{n},{reference},ok,{}\n",
                        s.model, s.hyper
                    ));
                }
            }
            Err(msg) => {
                csv.push_str(&format!(
                    "{dataset},{},,,,,{n},,error: {},{}\n",
                    s.model,
                    sanitize(msg),
                    s.hyper
                ));
            }
        }
    }
    let path = cfg.out.join(REPRODUCE_FILE);
    write_file(&path, &csv)?;
    Ok((path, summaries))
}
