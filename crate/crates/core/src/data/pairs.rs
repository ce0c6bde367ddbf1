use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::Rng;

use super::{Interaction, TripletSample};
use crate::numerics::RngSeed;

pub const DEFAULT_PAIRS_PER_USER: usize = 10;

/// 1 iff `rating > threshold`.
#[inline]
pub fn binarize(rating: f64, threshold: f64) -> bool {
    rating > threshold
}

/// Per-user rated items, deduplicated by keeping the latest rating.
fn ratings_by_user(interactions: &[Interaction]) -> BTreeMap<usize, Vec<(usize, f64)>> {
    let mut latest: HashMap<(usize, usize), (i64, f64)> = HashMap::new();
    for it in interactions {
        let e = latest.entry((it.user, it.item)).or_insert((it.timestamp, it.rating));
        if it.timestamp >= e.0 {
            *e = (it.timestamp, it.rating);
        }
    }
    let mut by_user: BTreeMap<usize, Vec<(usize, f64)>> = BTreeMap::new();
    for ((u, i), (_, r)) in latest {
        by_user.entry(u).or_default().push((i, r));
    }
    for items in by_user.values_mut() {
        items.sort_by_key(|&(i, _)| i);
    }
    by_user
}

fn eligible_pair_count(items: &[(usize, f64)]) -> usize {
    let n = items.len();
    let mut counts: HashMap<u64, usize> = HashMap::new();
    for &(_, r) in items {
        *counts.entry(r.to_bits()).or_default() += 1;
    }
    let ties: usize = counts.values().map(|&c| c * (c - 1) / 2).sum();
    n * (n.saturating_sub(1)) / 2 - ties
}

/// Up to `pairs_per_user` distinct unordered item pairs per user, drawn
/// uniformly among pairs with strictly different ratings, oriented so the
/// higher-rated item comes first.
pub fn sample_pairs(
    interactions: &[Interaction],
    pairs_per_user: usize,
    threshold: f64,
    seed: RngSeed,
) -> Vec<TripletSample> {
    let mut out = Vec::new();
    if pairs_per_user == 0 {
        return out;
    }
    for (user, items) in ratings_by_user(interactions) {
        let eligible = eligible_pair_count(&items);
        if eligible == 0 {
            continue;
        }
        let k = pairs_per_user.min(eligible);
        let mut rng = seed.derive_indexed("pairs", user as u64).rng();
        let chosen: Vec<(usize, usize)> = if eligible <= 4 * k {
            let mut all: Vec<(usize, usize)> = (0..items.len())
                .flat_map(|a| (a + 1..items.len()).map(move |b| (a, b)))
                .filter(|&(a, b)| items[a].1 != items[b].1)
                .collect();
            let (picked, _) = all.partial_shuffle(&mut rng, k);
            picked.to_vec()
        } else {
            let mut seen = HashSet::with_capacity(k);
            let mut picked = Vec::with_capacity(k);
            while picked.len() < k {
                let a = rng.gen_range(0..items.len());
                let b = rng.gen_range(0..items.len());
                if a == b || items[a].1 == items[b].1 {
                    continue;
                }
                let key = (a.min(b), a.max(b));
                if seen.insert(key) {
                    picked.push(key);
                }
            }
            picked
        };
        for (a, b) in chosen {
            let (hi, lo) = if items[a].1 > items[b].1 {
                (items[a], items[b])
            } else {
                (items[b], items[a])
            };
            out.push(TripletSample {
                user,
                item_j: hi.0,
                item_t: lo.0,
                y_j: binarize(hi.1, threshold),
                y_t: binarize(lo.1, threshold),
            });
        }
    }
    out
}
