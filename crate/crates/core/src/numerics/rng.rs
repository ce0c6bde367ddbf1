use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Root seed from which every random stream in a run is derived.
///
/// Streams are keyed by a purpose label, so the draws used for, say,
/// parameter initialization do not shift when pair sampling changes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RngSeed(pub u64);

impl RngSeed {
    pub fn derive(self, label: &str) -> RngSeed {
        RngSeed(derive_seed(self.0, label))
    }

    pub fn derive_indexed(self, label: &str, index: u64) -> RngSeed {
        RngSeed(splitmix64(derive_seed(self.0, label) ^ splitmix64(index)))
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }
}

pub fn derive_seed(seed: u64, label: &str) -> u64 {
    // FNV-1a over the label, then mixed with the seed.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    splitmix64(seed ^ splitmix64(h))
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}
