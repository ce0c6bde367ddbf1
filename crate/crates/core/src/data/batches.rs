use rand::seq::SliceRandom;

use super::TripletSample;
use crate::error::{Error, Result};
use crate::numerics::RngSeed;

/// Shuffles `samples` with `seed` and cuts them into consecutive batches.
/// The last batch may be short.
pub fn make_batches(
    samples: &[TripletSample],
    batch_size: usize,
    seed: RngSeed,
) -> Result<Vec<Vec<TripletSample>>> {
    if batch_size == 0 {
        return Err(Error::invalid("batch_size must be >= 1"));
    }
    let mut order = samples.to_vec();
    order.shuffle(&mut seed.rng());
    Ok(order.chunks(batch_size).map(<[TripletSample]>::to_vec).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn samples(n: usize) -> Vec<TripletSample> {
        (0..n)
            .map(|i| TripletSample {
                user: i,
                item_j: 0,
                item_t: 1,
                y_j: true,
                y_t: false,
            })
            .collect()
    }

    #[test]
    fn batch_sizes() {
        let b = make_batches(&samples(10), 4, RngSeed(0)).unwrap();
        assert_eq!(b.iter().map(Vec::len).collect::<Vec<_>>(), vec![4, 4, 2]);
        let b = make_batches(&samples(10), 1, RngSeed(0)).unwrap();
        assert_eq!(b.len(), 10);
        assert!(make_batches(&samples(3), 0, RngSeed(0)).is_err());
    }

    #[test]
    fn epochs_reorder_same_multiset() {
        let s = samples(50);
        let e0: Vec<usize> = make_batches(&s, 7, RngSeed(1).derive_indexed("epoch", 0))
            .unwrap()
            .concat()
            .iter()
            .map(|x| x.user)
            .collect();
        let e1: Vec<usize> = make_batches(&s, 7, RngSeed(1).derive_indexed("epoch", 1))
            .unwrap()
            .concat()
            .iter()
            .map(|x| x.user)
            .collect();
        assert_ne!(e0, e1);
        let (mut a, mut b) = (e0.clone(), e1.clone());
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
    }
}
