use crate::data::TripletSample;
use crate::error::{Error, Result};
use crate::layers::TowerGrads;
use crate::losses::{
    l2_penalty, pairwise_logistic_grad, pairwise_logistic_margin, pointwise_ce,
    pointwise_ce_grad, total_loss, LossBreakdown,
};
use crate::numerics::{Matrix, RngSeed};
use crate::scalar::Scalar;

use super::forward::{SampleWeight, TripletForward};
use super::momentum::momentum_update;
use super::{ModelKind, ModelState};

/// Dense gradients, one list per trainable tower, aligned with
/// [`ModelState::trainable_towers`] and each tower's `matrices()`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelGradients<T> {
    pub towers: Vec<Vec<Matrix<T>>>,
}

impl<T: Scalar> ModelGradients<T> {
    pub fn flatten(&self) -> Vec<&Matrix<T>> {
        self.towers.iter().flatten().collect()
    }
}

/// Per-sample loss terms and the derivatives with respect to each logit,
/// before batch averaging.
struct SampleTerms<T> {
    pointwise: T,
    pairwise: T,
    d_logit_j: T,
    d_logit_t: T,
    d_pair: T,
}

impl<T: Scalar> ModelState<T> {
    fn sample_terms(
        &self,
        sample: &TripletSample,
        fwd: &TripletForward<T>,
        w: SampleWeight<T>,
    ) -> Result<SampleTerms<T>> {
        crate::losses::check_weight(w.item_j)?;
        crate::losses::check_weight(w.item_t)?;
        let beta = T::lit(self.hyper.beta);
        let mut terms = SampleTerms {
            pointwise: T::zero(),
            pairwise: T::zero(),
            d_logit_j: T::zero(),
            d_logit_t: T::zero(),
            d_pair: T::zero(),
        };
        if let (Some(zj), Some(zt)) = (fwd.logit_j, fwd.logit_t) {
            let (yj, yt) = (label(sample.y_j), label(sample.y_t));
            terms.pointwise = w.item_j * pointwise_ce(zj, yj) + w.item_t * pointwise_ce(zt, yt);
            terms.d_logit_j = w.item_j * pointwise_ce_grad(zj, yj);
            terms.d_logit_t = w.item_t * pointwise_ce_grad(zt, yt);
        }
        if let Some(d) = fwd.logit_pair {
            terms.pairwise = pairwise_logistic_margin(d);
            terms.d_pair = beta * pairwise_logistic_grad(d);
        }
        Ok(terms)
    }

    fn regularization(&self) -> T {
        let lambda = T::lit(self.hyper.lambda);
        let params: Vec<&Matrix<T>> = self
            .trainable_towers()
            .into_iter()
            .flat_map(|t| t.matrices())
            .collect();
        l2_penalty(&params, lambda)
    }

    fn resolve_weights<'a>(
        &self,
        batch: &[TripletSample],
        weights: Option<&'a [SampleWeight<T>]>,
    ) -> Result<Option<&'a [SampleWeight<T>]>> {
        if batch.is_empty() {
            return Err(Error::invalid("empty batch"));
        }
        if let Some(w) = weights {
            if w.len() != batch.len() {
                return Err(Error::shape(format!(
                    "{} weights for a batch of {}",
                    w.len(),
                    batch.len()
                )));
            }
        }
        Ok(weights)
    }

    /// Mean batch loss. With `weights = None` the label weights come from the
    /// forward pass; passing them explicitly holds them fixed.
    pub fn batch_loss(
        &self,
        batch: &[TripletSample],
        weights: Option<&[SampleWeight<T>]>,
    ) -> Result<LossBreakdown<T>> {
        let weights = self.resolve_weights(batch, weights)?;
        let (mut pw, mut pr) = (T::zero(), T::zero());
        for (i, s) in batch.iter().enumerate() {
            let f = self.forward_triplet(s)?;
            let w = match weights {
                Some(ws) => ws[i],
                None => self.sample_weight(&f)?,
            };
            let t = self.sample_terms(s, &f, w)?;
            pw = pw + t.pointwise;
            pr = pr + t.pairwise;
        }
        let n = T::from_usize(batch.len()).expect("batch size fits scalar");
        Ok(total_loss(pw / n, pr / n, T::lit(self.hyper.beta), self.regularization()))
    }

    /// Mean batch loss and its exact gradient with respect to every
    /// trainable matrix. Label weights are treated as constants and the
    /// momentum tower as a stop-gradient path.
    pub fn batch_gradients(
        &self,
        batch: &[TripletSample],
        weights: Option<&[SampleWeight<T>]>,
    ) -> Result<(LossBreakdown<T>, ModelGradients<T>)> {
        let weights = self.resolve_weights(batch, weights)?;
        let n = T::from_usize(batch.len()).expect("batch size fits scalar");
        let inv_n = T::one() / n;

        let mut g_user = TowerGrads::zeros_like(&self.user_tower);
        let mut g_item = TowerGrads::zeros_like(&self.item_vanilla);
        let mut g_second = self.item_pointwise.as_ref().map(TowerGrads::zeros_like);

        let (mut pw, mut pr) = (T::zero(), T::zero());
        for (i, s) in batch.iter().enumerate() {
            let f = self.forward_triplet(s)?;
            let w = match weights {
                Some(ws) => ws[i],
                None => self.sample_weight(&f)?,
            };
            let t = self.sample_terms(s, &f, w)?;
            pw = pw + t.pointwise;
            pr = pr + t.pairwise;

            let gj = t.d_logit_j * inv_n;
            let gt = t.d_logit_t * inv_n;
            let gd = t.d_pair * inv_n;

            // d/du of  gj·(u·vm_j) + gt·(u·vm_t) + gd·(u·v_j − u·v_t)
            let grad_u: Vec<T> = (0..f.u.len())
                .map(|k| gj * f.vm_j[k] + gt * f.vm_t[k] + gd * (f.v_j[k] - f.v_t[k]))
                .collect();
            self.user_tower.backward(&f.user_cache, &grad_u, &mut g_user)?;

            // Coefficients on u flowing into the vanilla item representations.
            let (mut cj, mut ct) = (gd, -gd);
            match self.kind {
                ModelKind::ThreeTower => {
                    let (ca, cb) = f.second_caches.as_ref().expect("t3 keeps second caches");
                    let tower = self.item_pointwise.as_ref().expect("t3 tower");
                    let grads = g_second.as_mut().expect("t3 grads");
                    tower.backward(ca, &scaled(&f.u, gj), grads)?;
                    tower.backward(cb, &scaled(&f.u, gt), grads)?;
                }
                ModelKind::Mp2 => {}
                _ => {
                    cj = cj + gj;
                    ct = ct + gt;
                }
            }
            self.item_vanilla.backward(&f.v_j_cache, &scaled(&f.u, cj), &mut g_item)?;
            self.item_vanilla.backward(&f.v_t_cache, &scaled(&f.u, ct), &mut g_item)?;
        }

        let loss = total_loss(pw / n, pr / n, T::lit(self.hyper.beta), self.regularization());

        let mut towers = vec![g_user.to_dense(&self.user_tower), g_item.to_dense(&self.item_vanilla)];
        if let (Some(g), Some(t)) = (&g_second, &self.item_pointwise) {
            towers.push(g.to_dense(t));
        }
        let two_lambda = T::lit(2.0 * self.hyper.lambda);
        if two_lambda != T::zero() {
            for (grads, tower) in towers.iter_mut().zip(self.trainable_towers()) {
                for (g, p) in grads.iter_mut().zip(tower.matrices()) {
                    g.add_scaled(p, two_lambda)?;
                }
            }
        }
        Ok((loss, ModelGradients { towers }))
    }

    /// One optimization step: forward, loss, backprop, optimizer update,
    /// then (MP2 only) the momentum update of the EMA item tower.
    pub fn train_step(
        &mut self,
        batch: &[TripletSample],
        batch_index: usize,
    ) -> Result<LossBreakdown<T>> {
        let (loss, grads) = self.batch_gradients(batch, None)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { batch: batch_index });
        }
        self.apply_gradients(&grads)?;
        if self.kind == ModelKind::Mp2 {
            let alpha = T::lit(self.hyper.alpha);
            let vanilla = &self.item_vanilla;
            let momentum = self.item_momentum.as_mut().expect("mp2 has a momentum tower");
            momentum_update(momentum, vanilla, alpha)?;
        }
        Ok(loss)
    }

    pub fn apply_gradients(&mut self, grads: &ModelGradients<T>) -> Result<()> {
        let mut optimizers = std::mem::take(&mut self.optimizers);
        let result = (|| {
            let towers = self.trainable_towers_mut();
            if towers.len() != grads.towers.len() || towers.len() != optimizers.len() {
                return Err(Error::shape("gradient towers do not match model"));
            }
            for ((tower, tower_grads), states) in towers
                .into_iter()
                .zip(&grads.towers)
                .zip(optimizers.iter_mut())
            {
                for ((param, g), state) in tower
                    .matrices_mut()
                    .into_iter()
                    .zip(tower_grads)
                    .zip(states.iter_mut())
                {
                    state.apply_step(param, g)?;
                }
            }
            Ok(())
        })();
        self.optimizers = optimizers;
        result
    }

    /// One pass over `samples` in a shuffled order derived from
    /// `(seed, epoch)`. Returns the mean breakdown over batches.
    pub fn train_epoch(
        &mut self,
        samples: &[TripletSample],
        epoch: usize,
    ) -> Result<LossBreakdown<T>> {
        let batches = crate::data::make_batches(
            samples,
            self.hyper.batch_size,
            RngSeed(self.hyper.seed).derive_indexed("epoch", epoch as u64),
        )?;
        let mut losses = Vec::with_capacity(batches.len());
        for (b, batch) in batches.iter().enumerate() {
            losses.push(self.train_step(batch, b)?);
        }
        LossBreakdown::mean(&losses).ok_or_else(|| Error::EmptyDataset("no training samples".into()))
    }
}

#[inline]
fn label<T: Scalar>(y: bool) -> T {
    if y {
        T::one()
    } else {
        T::zero()
    }
}

fn scaled<T: Scalar>(v: &[T], c: T) -> Vec<T> {
    v.iter().map(|&x| x * c).collect()
}
