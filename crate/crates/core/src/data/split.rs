use std::collections::{BTreeMap, HashSet};
use std::io::{BufRead, Write};

use rand::seq::index;

use super::{binarize, IdMap, Interaction};
use crate::error::{Error, Result};
use crate::numerics::RngSeed;

pub const DEFAULT_NEGATIVES: usize = 100;

/// One held-out positive with its sampled negative pool.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TestCase {
    pub user: usize,
    pub item: usize,
    pub negatives: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetSplit {
    pub n_users: usize,
    pub n_items: usize,
    pub train: Vec<Interaction>,
    pub test: Vec<TestCase>,
}

impl DatasetSplit {
    /// Items each user touched in train or test.
    pub fn interacted(&self) -> Vec<HashSet<usize>> {
        let mut sets = vec![HashSet::new(); self.n_users];
        for it in &self.train {
            sets[it.user].insert(it.item);
        }
        for tc in &self.test {
            sets[tc.user].insert(tc.item);
        }
        sets
    }

    /// Draws `n` negatives for every test user.
    pub fn attach_negatives(&mut self, n: usize, seed: RngSeed) -> Result<()> {
        let interacted = self.interacted();
        for tc in &mut self.test {
            tc.negatives = draw_negatives(tc.user, &interacted[tc.user], self.n_items, n, seed)?;
        }
        Ok(())
    }
}

/// Leave-latest-one-out: each user with at least two positives
/// (`rating > threshold`) gives up its most recent positive as the test
/// item; ties on timestamp go to the larger item id. Everything else is
/// training data.
pub fn split_leave_latest_out(
    interactions: &[Interaction],
    n_users: usize,
    n_items: usize,
    threshold: f64,
) -> DatasetSplit {
    let mut latest: BTreeMap<usize, (usize, (i64, usize))> = BTreeMap::new();
    let mut positives = vec![0usize; n_users];
    for it in interactions {
        if !binarize(it.rating, threshold) {
            continue;
        }
        positives[it.user] += 1;
        let key = (it.timestamp, it.item);
        let e = latest.entry(it.user).or_insert((it.item, key));
        if key > e.1 {
            *e = (it.item, key);
        }
    }
    let held: BTreeMap<usize, usize> = latest
        .into_iter()
        .filter(|(u, _)| positives[*u] >= 2)
        .map(|(u, (item, _))| (u, item))
        .collect();
    let train = interactions
        .iter()
        .filter(|it| held.get(&it.user) != Some(&it.item))
        .copied()
        .collect();
    let test = held
        .into_iter()
        .map(|(user, item)| TestCase {
            user,
            item,
            negatives: vec![],
        })
        .collect();
    DatasetSplit {
        n_users,
        n_items,
        train,
        test,
    }
}

/// `n` distinct items the user never interacted with, uniform without
/// replacement, returned in ascending order.
pub fn sample_negatives(
    user: usize,
    n: usize,
    seed: RngSeed,
    split: &DatasetSplit,
) -> Result<Vec<usize>> {
    if user >= split.n_users {
        return Err(Error::Index {
            index: user,
            limit: split.n_users,
        });
    }
    let seen: HashSet<usize> = split
        .train
        .iter()
        .filter(|it| it.user == user)
        .map(|it| it.item)
        .chain(split.test.iter().filter(|t| t.user == user).map(|t| t.item))
        .collect();
    draw_negatives(user, &seen, split.n_items, n, seed)
}

fn draw_negatives(
    user: usize,
    seen: &HashSet<usize>,
    n_items: usize,
    n: usize,
    seed: RngSeed,
) -> Result<Vec<usize>> {
    if n == 0 {
        return Err(Error::invalid("negatives per user must be >= 1"));
    }
    let pool: Vec<usize> = (0..n_items).filter(|i| !seen.contains(i)).collect();
    if pool.len() < n {
        return Err(Error::invalid(format!(
            "user {user} has only {} unseen items, {n} negatives requested",
            pool.len()
        )));
    }
    let mut rng = seed.derive_indexed("negatives", user as u64).rng();
    let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), n)
        .into_iter()
        .map(|i| pool[i])
        .collect();
    picked.sort_unstable();
    Ok(picked)
}

/// Raw-id form of one manifest line.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestEntry {
    pub user: String,
    pub item: String,
    pub negatives: Vec<String>,
}

/// Writes `user<TAB>test_item<TAB>neg1,neg2,...` with raw ids.
pub fn write_manifest<W: Write>(
    mut out: W,
    test: &[TestCase],
    users: &IdMap,
    items: &IdMap,
) -> Result<()> {
    let raw = |m: &IdMap, i: usize| {
        m.decode(i)
            .map(str::to_string)
            .ok_or(Error::Index { index: i, limit: m.len() })
    };
    for tc in test {
        let negs = tc
            .negatives
            .iter()
            .map(|&n| raw(items, n))
            .collect::<Result<Vec<_>>>()?;
        writeln!(out, "{}\t{}\t{}", raw(users, tc.user)?, raw(items, tc.item)?, negs.join(","))?;
    }
    Ok(())
}

pub fn read_manifest<R: BufRead>(reader: R) -> Result<Vec<ManifestEntry>> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: idx + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let negatives: Vec<String> = fields[2]
            .split(',')
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect();
        if negatives.is_empty() {
            return Err(Error::Parse {
                line: idx + 1,
                message: "empty negative pool".into(),
            });
        }
        out.push(ManifestEntry {
            user: fields[0].to_string(),
            item: fields[1].to_string(),
            negatives,
        });
    }
    if out.is_empty() {
        return Err(Error::EmptyDataset("split manifest has no test users".into()));
    }
    Ok(out)
}

/// Maps manifest raw ids through the given tables. Unknown ids mean the
/// manifest and the id tables disagree.
pub fn resolve_manifest(entries: &[ManifestEntry], users: &IdMap, items: &IdMap) -> Result<Vec<TestCase>> {
    let lookup = |m: &IdMap, raw: &str, what: &str| {
        m.encode(raw)
            .ok_or_else(|| Error::Contract(format!("remap mismatch: unknown {what} id `{raw}`")))
    };
    entries
        .iter()
        .map(|e| {
            Ok(TestCase {
                user: lookup(users, &e.user, "user")?,
                item: lookup(items, &e.item, "item")?,
                negatives: e
                    .negatives
                    .iter()
                    .map(|n| lookup(items, n, "item"))
                    .collect::<Result<_>>()?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn it(user: usize, item: usize, rating: f64, timestamp: i64) -> Interaction {
        Interaction {
            user,
            item,
            rating,
            timestamp,
        }
    }

    #[test]
    fn latest_positive_held_out() {
        let s = split_leave_latest_out(
            &[it(0, 1, 5.0, 10), it(0, 2, 4.0, 20), it(0, 3, 2.0, 30)],
            1,
            4,
            3.0,
        );
        assert_eq!(s.test.len(), 1);
        assert_eq!(s.test[0].item, 2);
        assert_eq!(s.train.len(), 2);
    }

    #[test]
    fn users_without_two_positives_stay_in_train() {
        let s = split_leave_latest_out(&[it(0, 1, 2.0, 1), it(1, 1, 5.0, 1)], 2, 2, 3.0);
        assert!(s.test.is_empty());
        assert_eq!(s.train.len(), 2);
    }

    #[test]
    fn timestamp_tie_goes_to_larger_item() {
        let s = split_leave_latest_out(&[it(0, 4, 5.0, 7), it(0, 9, 5.0, 7), it(0, 2, 5.0, 7)], 1, 10, 3.0);
        assert_eq!(s.test[0].item, 9);
    }

    #[test]
    fn negatives_exhaust_small_catalog() {
        let train: Vec<Interaction> = (0..10).map(|i| it(0, i, 4.0, i as i64)).collect();
        let split = DatasetSplit {
            n_users: 1,
            n_items: 15,
            train,
            test: vec![],
        };
        let n = sample_negatives(0, 5, RngSeed(3), &split).unwrap();
        assert_eq!(n, vec![10, 11, 12, 13, 14]);
        assert!(sample_negatives(0, 6, RngSeed(3), &split).is_err());
    }

    #[test]
    fn negatives_avoid_interacted_and_are_seeded() {
        let mut s = split_leave_latest_out(
            &(0..30).map(|i| it(0, i * 2, 5.0, i as i64)).collect::<Vec<_>>(),
            1,
            200,
            3.0,
        );
        s.attach_negatives(20, RngSeed(5)).unwrap();
        let seen = &s.interacted()[0];
        assert!(s.test[0].negatives.iter().all(|n| !seen.contains(n)));
        let again = sample_negatives(0, 20, RngSeed(5), &s).unwrap();
        assert_eq!(again, s.test[0].negatives);
    }

    #[test]
    fn manifest_round_trip_and_mismatch() {
        let users = IdMap::from_raw(vec!["u1".into(), "u2".into()]).unwrap();
        let items = IdMap::from_raw(vec!["a".into(), "b".into(), "c".into()]).unwrap();
        let test = vec![TestCase {
            user: 1,
            item: 0,
            negatives: vec![1, 2],
        }];
        let mut buf = Vec::new();
        write_manifest(&mut buf, &test, &users, &items).unwrap();
        assert_eq!(String::from_utf8(buf.clone()).unwrap(), "u2\ta\tb,c\n");
        let entries = read_manifest(buf.as_slice()).unwrap();
        assert_eq!(resolve_manifest(&entries, &users, &items).unwrap(), test);
        let other = IdMap::from_raw(vec!["a".into(), "z".into(), "c".into()]).unwrap();
        assert!(matches!(resolve_manifest(&entries, &users, &other), Err(Error::Contract(_))));
    }
}
