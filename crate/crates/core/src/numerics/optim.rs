use std::fmt;
use std::str::FromStr;

use super::Matrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptimizerKind {
    Sgd,
    Adam,
}

impl fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OptimizerKind::Sgd => "sgd",
            OptimizerKind::Adam => "adam",
        })
    }
}

impl FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sgd" => Ok(OptimizerKind::Sgd),
            "adam" => Ok(OptimizerKind::Adam),
            other => Err(Error::invalid(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// Per-parameter optimizer state. One instance is bound to one matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct OptimizerState<T> {
    pub kind: OptimizerKind,
    pub learning_rate: T,
    pub beta1: T,
    pub beta2: T,
    pub epsilon: T,
    /// First moment (Adam only; zero-sized for SGD).
    pub m: Matrix<T>,
    /// Second moment (Adam only; zero-sized for SGD).
    pub v: Matrix<T>,
    pub step_count: u64,
}

impl<T: Scalar> OptimizerState<T> {
    pub fn new(kind: OptimizerKind, learning_rate: T, rows: usize, cols: usize) -> Result<Self> {
        if !(learning_rate >= T::zero() && learning_rate.is_finite()) {
            return Err(Error::invalid(format!(
                "learning rate must be finite and non-negative, got {learning_rate}"
            )));
        }
        let (mr, mc) = match kind {
            OptimizerKind::Sgd => (0, 0),
            OptimizerKind::Adam => (rows, cols),
        };
        Ok(Self {
            kind,
            learning_rate,
            beta1: T::lit(0.9),
            beta2: T::lit(0.999),
            epsilon: T::lit(1e-8),
            m: Matrix::zeros(mr, mc),
            v: Matrix::zeros(mr, mc),
            step_count: 0,
        })
    }

    pub fn sgd(learning_rate: T, like: &Matrix<T>) -> Result<Self> {
        Self::new(OptimizerKind::Sgd, learning_rate, like.rows(), like.cols())
    }

    pub fn adam(learning_rate: T, like: &Matrix<T>) -> Result<Self> {
        Self::new(OptimizerKind::Adam, learning_rate, like.rows(), like.cols())
    }

    /// Applies one update to `params` in place.
    pub fn apply_step(&mut self, params: &mut Matrix<T>, grads: &Matrix<T>) -> Result<()> {
        params.check_same_shape(grads, "optimizer step")?;
        if self.kind == OptimizerKind::Adam {
            params.check_same_shape(&self.m, "optimizer moments")?;
        }
        self.step_count += 1;
        let lr = self.learning_rate;
        if lr == T::zero() {
            return Ok(());
        }
        match self.kind {
            OptimizerKind::Sgd => {
                for (p, &g) in params.as_mut_slice().iter_mut().zip(grads.as_slice()) {
                    *p = *p - lr * g;
                }
            }
            OptimizerKind::Adam => {
                let (b1, b2, eps) = (self.beta1, self.beta2, self.epsilon);
                let t = self.step_count as i32;
                let bc1 = T::one() - b1.powi(t);
                let bc2 = T::one() - b2.powi(t);
                let m = self.m.as_mut_slice();
                let v = self.v.as_mut_slice();
                for (i, (p, &g)) in params
                    .as_mut_slice()
                    .iter_mut()
                    .zip(grads.as_slice())
                    .enumerate()
                {
                    m[i] = b1 * m[i] + (T::one() - b1) * g;
                    v[i] = b2 * v[i] + (T::one() - b2) * g * g;
                    let m_hat = m[i] / bc1;
                    let v_hat = v[i] / bc2;
                    *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
                }
            }
        }
        Ok(())
    }
}
