use crate::data::TripletSample;
use crate::error::{Error, Result};
use crate::layers::TowerCache;
use crate::scalar::{dot, Scalar};

use super::{ModelKind, ModelState, WeightingMode};

/// Dot-product score of a user and an item representation.
pub fn score<T: Scalar>(u: &[T], v: &[T]) -> Result<T> {
    if u.len() != v.len() {
        return Err(Error::shape(format!(
            "score of vectors with lengths {} and {}",
            u.len(),
            v.len()
        )));
    }
    Ok(dot(u, v))
}

/// Mean absolute elementwise gap between two representations of one item.
pub fn discrepancy<T: Scalar>(v: &[T], v_momentum: &[T]) -> Result<T> {
    if v.len() != v_momentum.len() || v.is_empty() {
        return Err(Error::shape(format!(
            "discrepancy of vectors with lengths {} and {}",
            v.len(),
            v_momentum.len()
        )));
    }
    let sum = v
        .iter()
        .zip(v_momentum)
        .fold(T::zero(), |acc, (&a, &b)| acc + (a - b).abs());
    Ok(sum / T::from_usize(v.len()).expect("length fits scalar"))
}

/// Pointwise label weights for the two items of one sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleWeight<T> {
    pub item_j: T,
    pub item_t: T,
}

impl<T: Scalar> SampleWeight<T> {
    pub fn uniform() -> Self {
        Self {
            item_j: T::one(),
            item_t: T::one(),
        }
    }
}

fn confidence<T: Scalar>(d: T) -> T {
    // exp(-d) underflows for d > ~745; keep the weight strictly positive.
    (-d).exp().max(T::min_positive_value())
}

pub fn label_weight<T: Scalar>(
    delta_j: T,
    delta_t: T,
    mode: WeightingMode,
) -> Result<SampleWeight<T>> {
    if !(delta_j >= T::zero() && delta_t >= T::zero()) {
        return Err(Error::invalid(format!(
            "discrepancies must be >= 0, got {delta_j} and {delta_t}"
        )));
    }
    Ok(match mode {
        WeightingMode::Joint => {
            let w = confidence(delta_j + delta_t);
            SampleWeight { item_j: w, item_t: w }
        }
        WeightingMode::Separate => SampleWeight {
            item_j: confidence(delta_j),
            item_t: confidence(delta_t),
        },
        WeightingMode::Uniform => SampleWeight::uniform(),
    })
}

/// Representations and logits for one training triplet.
#[derive(Clone, Debug)]
pub struct TripletForward<T> {
    pub u: Vec<T>,
    pub v_j: Vec<T>,
    pub v_t: Vec<T>,
    /// Pointwise-path item representations; equal to `v_j`/`v_t` for
    /// two-tower kinds.
    pub vm_j: Vec<T>,
    pub vm_t: Vec<T>,
    pub logit_j: Option<T>,
    pub logit_t: Option<T>,
    pub logit_pair: Option<T>,
    pub(crate) user_cache: TowerCache<T>,
    pub(crate) v_j_cache: TowerCache<T>,
    pub(crate) v_t_cache: TowerCache<T>,
    /// Caches for the second item tower, present only when it is trained.
    pub(crate) second_caches: Option<(TowerCache<T>, TowerCache<T>)>,
}

impl<T: Scalar> ModelState<T> {
    pub fn forward_triplet(&self, sample: &TripletSample) -> Result<TripletForward<T>> {
        let (u, user_cache) = self.user_tower.forward_id(sample.user)?;
        let (v_j, v_j_cache) = self.item_vanilla.forward_id(sample.item_j)?;
        let (v_t, v_t_cache) = self.item_vanilla.forward_id(sample.item_t)?;

        let (vm_j, vm_t, second_caches) = match self.kind {
            ModelKind::Mp2 => {
                // Stop-gradient path: caches are not kept.
                let tower = self.item_momentum.as_ref().expect("mp2 has a momentum tower");
                (tower.represent(sample.item_j)?, tower.represent(sample.item_t)?, None)
            }
            ModelKind::ThreeTower => {
                let tower = self.item_pointwise.as_ref().expect("t3 has a second item tower");
                let (a, ca) = tower.forward_id(sample.item_j)?;
                let (b, cb) = tower.forward_id(sample.item_t)?;
                (a, b, Some((ca, cb)))
            }
            _ => (v_j.clone(), v_t.clone(), None),
        };

        let (logit_j, logit_t) = if self.kind.uses_pointwise() {
            (Some(score(&u, &vm_j)?), Some(score(&u, &vm_t)?))
        } else {
            (None, None)
        };
        let logit_pair = if self.kind.uses_pairwise() {
            Some(score(&u, &v_j)? - score(&u, &v_t)?)
        } else {
            None
        };
        Ok(TripletForward {
            u,
            v_j,
            v_t,
            vm_j,
            vm_t,
            logit_j,
            logit_t,
            logit_pair,
            user_cache,
            v_j_cache,
            v_t_cache,
            second_caches,
        })
    }

    /// Label weights implied by a forward pass. Only MP2 departs from 1.
    pub fn sample_weight(&self, fwd: &TripletForward<T>) -> Result<SampleWeight<T>> {
        if self.kind != ModelKind::Mp2 {
            return Ok(SampleWeight::uniform());
        }
        let dj = discrepancy(&fwd.v_j, &fwd.vm_j)?;
        let dt = discrepancy(&fwd.v_t, &fwd.vm_t)?;
        if dj.is_nan() || dt.is_nan() {
            // Diverged parameters: let the loss check report it.
            return Ok(SampleWeight { item_j: T::nan(), item_t: T::nan() });
        }
        label_weight(dj, dt, self.hyper.weighting)
    }

    pub fn batch_weights(&self, batch: &[TripletSample]) -> Result<Vec<SampleWeight<T>>> {
        batch
            .iter()
            .map(|s| {
                let f = self.forward_triplet(s)?;
                self.sample_weight(&f)
            })
            .collect()
    }
}
