//! Ratings ingestion and training-set construction.
//!
//! Raw ratings are parsed into dense-id [`Interaction`]s, split with
//! leave-latest-one-out, and turned into [`TripletSample`]s by sampling item
//! pairs with strictly different ratings under the same user.

mod batches;
mod pairs;
mod parse;
mod split;
pub mod synthetic;

pub use batches::make_batches;
pub use pairs::{binarize, sample_pairs, DEFAULT_PAIRS_PER_USER};
pub use parse::{parse_ratings, parse_ratings_from, RatingsFormat};
pub use split::{
    read_manifest, resolve_manifest, sample_negatives, split_leave_latest_out, write_manifest,
    DatasetSplit, ManifestEntry, TestCase, DEFAULT_NEGATIVES,
};

use std::collections::HashMap;

/// Rating threshold: a rating strictly above it is a positive label.
pub const DEFAULT_THRESHOLD: f64 = 3.0;

/// One rating record with dense ids.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interaction {
    pub user: usize,
    pub item: usize,
    pub rating: f64,
    pub timestamp: i64,
}

/// A training triplet: user, preferred item `j`, less-preferred item `t`,
/// and the two binarized pointwise labels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct TripletSample {
    pub user: usize,
    pub item_j: usize,
    pub item_t: usize,
    pub y_j: bool,
    pub y_t: bool,
}

/// Bijection between raw ids and dense indices, in first-appearance order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IdMap {
    raw: Vec<String>,
    index: HashMap<String, usize>,
}

impl IdMap {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_raw(raw: Vec<String>) -> crate::Result<Self> {
        let mut index = HashMap::with_capacity(raw.len());
        for (i, r) in raw.iter().enumerate() {
            if index.insert(r.clone(), i).is_some() {
                return Err(crate::Error::InvalidArgument(format!("duplicate raw id `{r}`")));
            }
        }
        Ok(Self { raw, index })
    }

    pub fn intern(&mut self, raw: &str) -> usize {
        if let Some(&i) = self.index.get(raw) {
            return i;
        }
        let i = self.raw.len();
        self.raw.push(raw.to_string());
        self.index.insert(raw.to_string(), i);
        i
    }

    pub fn encode(&self, raw: &str) -> Option<usize> {
        self.index.get(raw).copied()
    }

    pub fn decode(&self, dense: usize) -> Option<&str> {
        self.raw.get(dense).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn raw_ids(&self) -> &[String] {
        &self.raw
    }
}

/// Parsed ratings with their id tables.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub interactions: Vec<Interaction>,
    pub users: IdMap,
    pub items: IdMap,
}

impl Dataset {
    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }
}
