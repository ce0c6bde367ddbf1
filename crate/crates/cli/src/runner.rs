//! Data preparation, training and evaluation shared by every command.

use mp2_core::data::{
    parse_ratings, sample_pairs, split_leave_latest_out, DatasetSplit, IdMap, TripletSample,
};
use mp2_core::eval::{evaluate, MetricValues, MetricsReport, RepresentationScorer};
use mp2_core::losses::LossBreakdown;
use mp2_core::models::{ModelKind, ModelState};
use mp2_core::numerics::RngSeed;
use mp2_core::Error;

use crate::config::{RunConfig, TrainSettings};
use crate::error::CliError;

/// A parsed dataset with its split and fixed negative pools.
#[derive(Clone, Debug)]
pub struct PreparedData {
    pub users: IdMap,
    pub items: IdMap,
    pub split: DatasetSplit,
    pub threshold: f64,
}

impl PreparedData {
    /// Parses, splits and draws negatives. The split depends only on the
    /// data and `eval_seed`, never on training seeds.
    pub fn load(cfg: &RunConfig) -> Result<Self, CliError> {
        let path = cfg.resolve_dataset();
        let ds = parse_ratings(&path, cfg.format).map_err(|e| CliError::input(&path, e))?;
        let mut split = split_leave_latest_out(&ds.interactions, ds.n_users(), ds.n_items(), cfg.threshold);
        if split.test.is_empty() {
            return Err(CliError::input(
                &path,
                Error::EmptyDataset("no user has two positive ratings to hold out".into()),
            ));
        }
        split.attach_negatives(cfg.negatives_per_user, RngSeed(cfg.eval_seed).derive("eval"))?;
        Ok(Self {
            users: ds.users,
            items: ds.items,
            split,
            threshold: cfg.threshold,
        })
    }

    pub fn from_split(users: IdMap, items: IdMap, split: DatasetSplit, threshold: f64) -> Self {
        Self {
            users,
            items,
            split,
            threshold,
        }
    }

    pub fn training_pairs(&self, settings: &TrainSettings) -> Vec<TripletSample> {
        sample_pairs(
            &self.split.train,
            settings.pairs_per_user,
            self.threshold,
            RngSeed(settings.hyper.seed).derive("pairs"),
        )
    }
}

/// Trains a fresh model for `hyper.epochs` epochs on pre-built triplets,
/// calling `on_epoch` after each epoch.
pub fn train_on_samples(
    kind: ModelKind,
    settings: &TrainSettings,
    n_users: usize,
    n_items: usize,
    samples: &[TripletSample],
    mut on_epoch: impl FnMut(usize, &LossBreakdown<f64>) -> Result<(), CliError>,
) -> Result<ModelState<f64>, CliError> {
    if samples.is_empty() {
        return Err(Error::EmptyDataset("no training pairs could be sampled".into()).into());
    }
    let mut model = ModelState::<f64>::new(kind, settings.hyper.clone(), n_users, n_items)?;
    for epoch in 0..settings.hyper.epochs {
        let loss = model.train_epoch(samples, epoch).map_err(|e| match e {
            Error::NonFiniteLoss { batch } => CliError::NonFinite { epoch, batch },
            other => CliError::Core(other),
        })?;
        on_epoch(epoch, &loss)?;
    }
    Ok(model)
}

pub fn train(
    data: &PreparedData,
    kind: ModelKind,
    settings: &TrainSettings,
    on_epoch: impl FnMut(usize, &LossBreakdown<f64>) -> Result<(), CliError>,
) -> Result<ModelState<f64>, CliError> {
    let samples = data.training_pairs(settings);
    train_on_samples(
        kind,
        settings,
        data.split.n_users,
        data.split.n_items,
        &samples,
        on_epoch,
    )
}

/// Ranks each test user's held-out item with vanilla-path scores.
pub fn evaluate_model(model: &ModelState<f64>, split: &DatasetSplit, ks: &[usize]) -> Result<MetricValues, CliError> {
    let scorer = RepresentationScorer::vanilla(model)?;
    Ok(evaluate(&scorer, &split.test, ks)?)
}

pub fn report(model: &ModelState<f64>, values: MetricValues) -> MetricsReport {
    MetricsReport {
        model: model.kind.name().to_string(),
        values,
        seed: model.hyper.seed,
        hyper: model.hyper.snapshot(),
    }
}

/// `epoch,pointwise,pairwise,reg,total`.
pub fn log_line(epoch: usize, l: &LossBreakdown<f64>) -> String {
    format!(
        "{epoch},{},{},{},{}",
        l.pointwise, l.pairwise, l.regularization, l.total
    )
}

/// Trains and evaluates once per seed, returning one metric set per seed.
pub fn run_seeds(
    data: &PreparedData,
    kind: ModelKind,
    base: &TrainSettings,
    seeds: &[u64],
    ks: &[usize],
) -> Result<Vec<MetricValues>, CliError> {
    seeds
        .iter()
        .map(|&seed| {
            let mut settings = base.clone();
            settings.hyper.seed = seed;
            let model = train(data, kind, &settings, |_, _| Ok(()))?;
            evaluate_model(&model, &data.split, ks)
        })
        .collect()
}

/// Coordinatewise mean and population standard deviation of metric sets
/// that share the same cutoffs.
pub fn summarize(runs: &[MetricValues]) -> Option<(MetricValues, MetricValues)> {
    let first = runs.first()?;
    let n = runs.len() as f64;
    let stat = |pick: fn(&MetricValues) -> &Vec<f64>| -> (Vec<f64>, Vec<f64>) {
        (0..first.ks.len())
            .map(|i| {
                let mean = runs.iter().map(|r| pick(r)[i]).sum::<f64>() / n;
                let var = runs.iter().map(|r| (pick(r)[i] - mean).powi(2)).sum::<f64>() / n;
                (mean, var.sqrt())
            })
            .unzip()
    };
    let (hit_mean, hit_std) = stat(|m| &m.hit_rate);
    let (ndcg_mean, ndcg_std) = stat(|m| &m.ndcg);
    let make = |hit_rate, ndcg| MetricValues {
        ks: first.ks.clone(),
        hit_rate,
        ndcg,
        users: first.users,
    };
    Some((make(hit_mean, ndcg_mean), make(hit_std, ndcg_std)))
}
