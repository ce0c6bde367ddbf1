//! HitRate@K and NDCG@K over sampled candidate pools.
//!
//! Each test user contributes one held-out positive ranked against its
//! negatives. Ties are broken pessimistically: every candidate scoring at
//! least as high as the target ranks above it.

use std::io::Write;

use crate::data::TestCase;
use crate::error::{Error, Result};
use crate::layers::TowerParams;
use crate::models::{score, ModelState};
use crate::scalar::Scalar;

pub const DEFAULT_KS: [usize; 2] = [5, 20];

/// Anything that can score candidate items for a user.
pub trait Scorer {
    fn scores(&self, user: usize, items: &[usize]) -> Result<Vec<f64>>;
}

impl<F> Scorer for F
where
    F: Fn(usize, usize) -> f64,
{
    fn scores(&self, user: usize, items: &[usize]) -> Result<Vec<f64>> {
        Ok(items.iter().map(|&i| self(user, i)).collect())
    }
}

/// Precomputed user and item representations for dot-product scoring.
#[derive(Clone, Debug)]
pub struct RepresentationScorer<T> {
    users: Vec<Vec<T>>,
    items: Vec<Vec<T>>,
}

impl<T: Scalar> RepresentationScorer<T> {
    pub fn from_towers(user_tower: &TowerParams<T>, item_tower: &TowerParams<T>) -> Result<Self> {
        let users = (0..user_tower.rows())
            .map(|u| user_tower.represent(u))
            .collect::<Result<_>>()?;
        let items = (0..item_tower.rows())
            .map(|i| item_tower.represent(i))
            .collect::<Result<_>>()?;
        Ok(Self { users, items })
    }

    /// Scores with the vanilla item tower, `u·v`.
    pub fn vanilla(model: &ModelState<T>) -> Result<Self> {
        Self::from_towers(&model.user_tower, &model.item_vanilla)
    }
}

impl<T: Scalar> Scorer for RepresentationScorer<T> {
    fn scores(&self, user: usize, items: &[usize]) -> Result<Vec<f64>> {
        let u = self.users.get(user).ok_or(Error::Index {
            index: user,
            limit: self.users.len(),
        })?;
        items
            .iter()
            .map(|&i| {
                let v = self.items.get(i).ok_or(Error::Index {
                    index: i,
                    limit: self.items.len(),
                })?;
                Ok(score(u, v)?.as_f64())
            })
            .collect()
    }
}

/// `1 + #{c ≠ target : score(c) ≥ score(target)}`.
pub fn rank_of_target(scores: &[(usize, f64)], target: usize) -> Result<usize> {
    let target_score = scores
        .iter()
        .find(|(c, _)| *c == target)
        .map(|&(_, s)| s)
        .ok_or_else(|| Error::Contract(format!("target {target} not among candidates")))?;
    if scores.iter().any(|(_, s)| s.is_nan()) {
        return Err(Error::Contract("NaN candidate score".into()));
    }
    Ok(1 + scores
        .iter()
        .filter(|&&(c, s)| c != target && s >= target_score)
        .count())
}

pub fn hit_rate_at_k(rank: usize, k: usize) -> f64 {
    if rank >= 1 && rank <= k {
        1.0
    } else {
        0.0
    }
}

/// Single relevant item, so IDCG = 1.
pub fn ndcg_at_k(rank: usize, k: usize) -> f64 {
    if rank >= 1 && rank <= k {
        1.0 / ((rank + 1) as f64).log2()
    } else {
        0.0
    }
}

/// Mean metrics over test users, one entry per cutoff.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricValues {
    pub ks: Vec<usize>,
    pub hit_rate: Vec<f64>,
    pub ndcg: Vec<f64>,
    pub users: usize,
}

impl MetricValues {
    pub fn hit_rate_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.hit_rate[i])
    }

    pub fn ndcg_at(&self, k: usize) -> Option<f64> {
        self.ks.iter().position(|&x| x == k).map(|i| self.ndcg[i])
    }
}

pub fn evaluate<S: Scorer + ?Sized>(scorer: &S, test: &[TestCase], ks: &[usize]) -> Result<MetricValues> {
    if test.is_empty() {
        return Err(Error::EmptyDataset("no test users to evaluate".into()));
    }
    if ks.is_empty() || ks.contains(&0) {
        return Err(Error::invalid("cutoffs must be non-empty and >= 1"));
    }
    let mut hit = vec![0.0; ks.len()];
    let mut ndcg = vec![0.0; ks.len()];
    let mut candidates = Vec::new();
    for tc in test {
        candidates.clear();
        candidates.push(tc.item);
        candidates.extend_from_slice(&tc.negatives);
        let scores = scorer.scores(tc.user, &candidates)?;
        let scored: Vec<(usize, f64)> = candidates.iter().copied().zip(scores).collect();
        let rank = rank_of_target(&scored, tc.item)?;
        for (i, &k) in ks.iter().enumerate() {
            hit[i] += hit_rate_at_k(rank, k);
            ndcg[i] += ndcg_at_k(rank, k);
        }
    }
    let n = test.len() as f64;
    Ok(MetricValues {
        ks: ks.to_vec(),
        hit_rate: hit.into_iter().map(|h| h / n).collect(),
        ndcg: ndcg.into_iter().map(|x| x / n).collect(),
        users: test.len(),
    })
}

/// Metrics for one model plus the run metadata needed to reproduce them.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricsReport {
    pub model: String,
    pub values: MetricValues,
    pub seed: u64,
    pub hyper: String,
}

pub const REPORT_CSV_HEADER: &str = "model,metric,k,value,users,seed";

impl MetricsReport {
    /// Rows in `model,metric,k,value,users,seed` order: every hit rate, then
    /// every NDCG.
    pub fn csv_rows(&self) -> Vec<String> {
        let v = &self.values;
        let rows = |name: &str, xs: &[f64]| -> Vec<String> {
            v.ks.iter()
                .zip(xs)
                .map(|(k, x)| format!("{},{name},{k},{x},{},{}", self.model, v.users, self.seed))
                .collect()
        };
        let mut out = rows("hitrate", &v.hit_rate);
        out.extend(rows("ndcg", &v.ndcg));
        out
    }

    pub fn write_csv<W: Write>(reports: &[MetricsReport], mut out: W) -> Result<()> {
        writeln!(out, "{REPORT_CSV_HEADER}")?;
        for r in reports {
            for row in r.csv_rows() {
                writeln!(out, "{row}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_rules() {
        let s = [(0, 0.9), (1, 0.5), (2, 0.1)];
        assert_eq!(rank_of_target(&s, 0).unwrap(), 1);
        let tied = [(0, 0.5), (1, 0.5), (2, 0.1)];
        assert_eq!(rank_of_target(&tied, 0).unwrap(), 2);
        let lowest: Vec<(usize, f64)> = (0..101).map(|i| (i, i as f64)).collect();
        assert_eq!(rank_of_target(&lowest, 0).unwrap(), 101);
        assert!(matches!(rank_of_target(&s, 7), Err(Error::Contract(_))));
    }

    #[test]
    fn metric_values() {
        assert_eq!((hit_rate_at_k(1, 5), ndcg_at_k(1, 5)), (1.0, 1.0));
        assert!((ndcg_at_k(3, 5) - 0.5).abs() < 1e-15);
        assert_eq!((hit_rate_at_k(6, 5), ndcg_at_k(6, 5)), (0.0, 0.0));
    }

    fn cases(n: usize) -> Vec<TestCase> {
        (0..n)
            .map(|u| TestCase {
                user: u,
                item: 0,
                negatives: (1..=100).collect(),
            })
            .collect()
    }

    #[test]
    fn oracle_and_constant_scorers() {
        let oracle = |_u: usize, i: usize| if i == 0 { 1.0 } else { 0.0 };
        let m = evaluate(&oracle, &cases(3), &DEFAULT_KS).unwrap();
        assert!(m.hit_rate.iter().chain(&m.ndcg).all(|&x| x == 1.0));

        let constant = |_u: usize, _i: usize| 0.3;
        let m = evaluate(&constant, &cases(3), &DEFAULT_KS).unwrap();
        assert_eq!(m.hit_rate_at(5), Some(0.0));
        assert_eq!(m.hit_rate_at(20), Some(0.0));
    }

    #[test]
    fn empty_test_set() {
        let s = |_u: usize, _i: usize| 0.0;
        assert!(matches!(evaluate(&s, &[], &DEFAULT_KS), Err(Error::EmptyDataset(_))));
    }

    #[test]
    fn csv_has_one_row_per_metric_and_cutoff() {
        let r = MetricsReport {
            model: "mp2".into(),
            values: MetricValues {
                ks: vec![5, 20],
                hit_rate: vec![0.5, 0.75],
                ndcg: vec![0.25, 0.5],
                users: 4,
            },
            seed: 7,
            hyper: String::new(),
        };
        let mut buf = Vec::new();
        MetricsReport::write_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], REPORT_CSV_HEADER);
        assert_eq!(lines[1], "mp2,hitrate,5,0.5,4,7");
        assert_eq!(lines[4], "mp2,ndcg,20,0.5,4,7");
        assert_eq!(lines.len(), 5);
    }
}
