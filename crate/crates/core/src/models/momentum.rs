use crate::error::{Error, Result};
use crate::layers::TowerParams;
use crate::scalar::Scalar;

/// `θ_m ← α·θ_m + (1 − α)·θ_v` over every matrix of the tower, embeddings
/// included. `α = 0` copies `θ_v` exactly and `α = 1` leaves `θ_m` untouched.
pub fn momentum_update<T: Scalar>(
    momentum: &mut TowerParams<T>,
    vanilla: &TowerParams<T>,
    alpha: T,
) -> Result<()> {
    if !(alpha >= T::zero() && alpha <= T::one()) {
        return Err(Error::invalid(format!("momentum coefficient {alpha} outside [0, 1]")));
    }
    if !momentum.same_shape(vanilla) {
        return Err(Error::shape("momentum and vanilla towers differ in shape"));
    }
    if alpha == T::one() {
        return Ok(());
    }
    let keep = T::one() - alpha;
    for (m, v) in momentum.matrices_mut().into_iter().zip(vanilla.matrices()) {
        if alpha == T::zero() {
            m.as_mut_slice().copy_from_slice(v.as_slice());
            continue;
        }
        for (a, &b) in m.as_mut_slice().iter_mut().zip(v.as_slice()) {
            *a = alpha * *a + keep * b;
        }
    }
    Ok(())
}
