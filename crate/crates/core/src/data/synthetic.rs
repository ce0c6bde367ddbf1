//! Synthetic data with annotation bias.
//!
//! Every user has a latent preference `s ∈ (0, 1)` for every item. Pairwise
//! labels follow the true order of `s`. Pointwise labels are drawn fresh for
//! each training triplet as `1[s + noise > 0.5]`, so items with `s` close to
//! 0.5 receive both 0 and 1 labels for the same user across samples. The test
//! target of each user is the unobserved item with the largest `s`.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use super::{DatasetSplit, TestCase, TripletSample};
use crate::error::{Error, Result};
use crate::numerics::RngSeed;

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticConfig {
    pub n_users: usize,
    pub n_items: usize,
    pub latent_dim: usize,
    /// Scale on the latent inner product before the logistic squashing.
    pub sharpness: f64,
    /// Items each user has observed (training candidates).
    pub observed_per_user: usize,
    pub pairs_per_user: usize,
    /// Standard deviation of the context noise added before thresholding.
    pub label_noise: f64,
    pub negatives_per_user: usize,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            n_users: 500,
            n_items: 200,
            latent_dim: 4,
            sharpness: 1.5,
            observed_per_user: 40,
            pairs_per_user: 20,
            label_noise: 0.2,
            negatives_per_user: 100,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticData {
    /// `preference[u][i]`.
    pub preference: Vec<Vec<f64>>,
    pub train: Vec<TripletSample>,
    pub split: DatasetSplit,
}

impl SyntheticData {
    /// Fraction of (user, item) occurrences in `train` that carry both labels.
    pub fn conflicting_label_rate(&self) -> f64 {
        use std::collections::HashMap;
        let mut seen: HashMap<(usize, usize), (bool, bool)> = HashMap::new();
        for s in &self.train {
            for (item, y) in [(s.item_j, s.y_j), (s.item_t, s.y_t)] {
                let e = seen.entry((s.user, item)).or_insert((false, false));
                if y {
                    e.0 = true;
                } else {
                    e.1 = true;
                }
            }
        }
        let conflicted = seen.values().filter(|(a, b)| *a && *b).count();
        conflicted as f64 / seen.len().max(1) as f64
    }
}

pub fn generate(config: &SyntheticConfig, seed: RngSeed) -> Result<SyntheticData> {
    let c = config;
    if c.observed_per_user < 2 || c.observed_per_user + c.negatives_per_user + 1 > c.n_items {
        return Err(Error::invalid(
            "catalog too small for observed items plus a negative pool",
        ));
    }
    let noise = Normal::new(0.0, c.label_noise)
        .map_err(|e| Error::invalid(format!("label noise: {e}")))?;

    let mut rng = seed.derive("synthetic/latent").rng();
    let mut latent = |n: usize| -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| (0..c.latent_dim).map(|_| StandardNormal.sample(&mut rng)).collect())
            .collect()
    };
    let users = latent(c.n_users);
    let items = latent(c.n_items);
    let norm = (c.latent_dim as f64).sqrt();
    let preference: Vec<Vec<f64>> = users
        .iter()
        .map(|p| {
            items
                .iter()
                .map(|q| {
                    let x: f64 = p.iter().zip(q).map(|(a, b)| a * b).sum::<f64>() / norm;
                    1.0 / (1.0 + (-c.sharpness * x).exp())
                })
                .collect()
        })
        .collect();

    let mut train = Vec::with_capacity(c.n_users * c.pairs_per_user);
    let mut test = Vec::with_capacity(c.n_users);
    for (user, prefs) in preference.iter().enumerate() {
        let mut rng = seed.derive_indexed("synthetic/user", user as u64).rng();
        let mut order: Vec<usize> = (0..c.n_items).collect();
        order.shuffle(&mut rng);
        let (observed, unobserved) = order.split_at(c.observed_per_user);

        for _ in 0..c.pairs_per_user {
            let (a, b) = loop {
                let a = observed[rng.gen_range(0..observed.len())];
                let b = observed[rng.gen_range(0..observed.len())];
                if a != b && prefs[a] != prefs[b] {
                    break (a, b);
                }
            };
            let (j, t) = if prefs[a] > prefs[b] { (a, b) } else { (b, a) };
            let mut label = |item: usize| prefs[item] + noise.sample(&mut rng) > 0.5;
            let (y_j, y_t) = (label(j), label(t));
            train.push(TripletSample {
                user,
                item_j: j,
                item_t: t,
                y_j,
                y_t,
            });
        }

        let target = *unobserved
            .iter()
            .max_by(|&&a, &&b| prefs[a].total_cmp(&prefs[b]))
            .expect("unobserved items exist");
        let mut rest: Vec<usize> = unobserved.iter().copied().filter(|&i| i != target).collect();
        rest.shuffle(&mut rng);
        let mut negatives = rest[..c.negatives_per_user].to_vec();
        negatives.sort_unstable();
        test.push(TestCase {
            user,
            item: target,
            negatives,
        });
    }

    Ok(SyntheticData {
        preference,
        train,
        split: DatasetSplit {
            n_users: c.n_users,
            n_items: c.n_items,
            train: vec![],
            test,
        },
    })
}
