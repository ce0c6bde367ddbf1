//! Training objectives.
//!
//! All losses take logits and use the overflow-free forms
//! `max(z, 0) - z·y + ln(1 + e^{-|z|})` and
//! `max(-d, 0) + ln(1 + e^{-|d|})`, so they stay finite for any finite input.
//! Each loss has a matching derivative with respect to its logit.

use crate::error::{Error, Result};
use crate::numerics::Matrix;
use crate::scalar::{sigmoid, Scalar};

/// Per-term loss values and their combination.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossBreakdown<T> {
    pub pointwise: T,
    pub pairwise: T,
    pub regularization: T,
    pub beta: T,
    pub total: T,
}

impl<T: Scalar> LossBreakdown<T> {
    pub fn is_finite(&self) -> bool {
        self.pointwise.is_finite()
            && self.pairwise.is_finite()
            && self.regularization.is_finite()
            && self.total.is_finite()
    }

    /// Mean of several breakdowns, term by term.
    pub fn mean(items: &[Self]) -> Option<Self> {
        let first = items.first()?;
        let n = T::from_usize(items.len())?;
        let sum = |f: fn(&Self) -> T| items.iter().map(f).fold(T::zero(), |a, b| a + b) / n;
        Some(Self {
            pointwise: sum(|b| b.pointwise),
            pairwise: sum(|b| b.pairwise),
            regularization: sum(|b| b.regularization),
            beta: first.beta,
            total: sum(|b| b.total),
        })
    }
}

#[inline]
fn softplus_neg_abs<T: Scalar>(z: T) -> T {
    (-z.abs()).exp().ln_1p()
}

/// Sigmoid cross-entropy for a binary label `y ∈ {0, 1}`.
#[inline]
pub fn pointwise_ce<T: Scalar>(logit: T, y: T) -> T {
    logit.max(T::zero()) - logit * y + softplus_neg_abs(logit)
}

/// d/dz of [`pointwise_ce`].
#[inline]
pub fn pointwise_ce_grad<T: Scalar>(logit: T, y: T) -> T {
    sigmoid(logit) - y
}

/// `ln(1 + e^{-(ŷ_j - ŷ_t)})` with item `j` the preferred one.
#[inline]
pub fn pairwise_logistic<T: Scalar>(logit_j: T, logit_t: T) -> T {
    pairwise_logistic_margin(logit_j - logit_t)
}

#[inline]
pub fn pairwise_logistic_margin<T: Scalar>(margin: T) -> T {
    (-margin).max(T::zero()) + softplus_neg_abs(margin)
}

/// d/dd of [`pairwise_logistic_margin`], equal to `-σ(-d)`.
#[inline]
pub fn pairwise_logistic_grad<T: Scalar>(margin: T) -> T {
    -sigmoid(-margin)
}

/// Confidence-weighted pointwise loss for both items of a pair, sharing one
/// weight `w ∈ (0, 1]`.
pub fn weighted_pointwise_ce<T: Scalar>(
    logit_j: T,
    y_j: T,
    logit_t: T,
    y_t: T,
    w: T,
) -> Result<T> {
    check_weight(w)?;
    Ok(w * pointwise_ce(logit_j, y_j) + w * pointwise_ce(logit_t, y_t))
}

/// NaN passes so that diverged parameters surface as a non-finite loss.
pub(crate) fn check_weight<T: Scalar>(w: T) -> Result<()> {
    if w.is_nan() || (w > T::zero() && w <= T::one()) {
        Ok(())
    } else {
        Err(Error::invalid(format!("label weight {w} outside (0, 1]")))
    }
}

/// `λ · Σ ‖θ‖²` over the given matrices.
pub fn l2_penalty<T: Scalar>(params: &[&Matrix<T>], lambda: T) -> T {
    if lambda == T::zero() {
        return T::zero();
    }
    lambda
        * params
            .iter()
            .fold(T::zero(), |acc, m| acc + m.squared_norm())
}

pub fn total_loss<T: Scalar>(pointwise: T, pairwise: T, beta: T, regularization: T) -> LossBreakdown<T> {
    LossBreakdown {
        pointwise,
        pairwise,
        regularization,
        beta,
        total: pointwise + beta * pairwise + regularization,
    }
}
