use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Rescaling applied to a numeric feature before it is appended to the
/// embedded input.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NumericTransform<T> {
    MinMax { lo: T, hi: T },
    ZScore { mean: T, std: T },
    Symlog,
}

pub fn transform_numeric<T: Scalar>(x: T, method: NumericTransform<T>) -> Result<T> {
    match method {
        NumericTransform::MinMax { lo, hi } => {
            if !(hi > lo) {
                return Err(Error::invalid(format!("minmax needs hi > lo, got [{lo}, {hi}]")));
            }
            Ok((x - lo) / (hi - lo))
        }
        NumericTransform::ZScore { mean, std } => {
            if !(std > T::zero()) {
                return Err(Error::invalid(format!("zscore needs std > 0, got {std}")));
            }
            Ok((x - mean) / std)
        }
        NumericTransform::Symlog => Ok(x.signum() * x.abs().ln_1p()),
    }
}
