//! Named seed streams.
//!
//! Every stochastic component derives its generator from the run seed plus a
//! path of labels and indices, so adding a tree to a forest or a layer to a
//! network never perturbs the draws of any other component.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// A position in the seed tree. Cheap to copy; children never collide with
/// their parent or siblings in practice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeedStream(u64);

impl SeedStream {
    pub fn new(seed: u64) -> Self {
        SeedStream(splitmix(seed))
    }

    pub fn named(self, label: &str) -> Self {
        SeedStream(splitmix(self.0 ^ fnv1a(label)))
    }

    pub fn index(self, i: u64) -> Self {
        SeedStream(splitmix(self.0.wrapping_add(splitmix(i ^ 0x5851_F42D_4C95_7F2D))))
    }

    pub fn value(self) -> u64 {
        self.0
    }

    pub fn rng(self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.0)
    }

    /// Uniform in [0, 1) derived purely from this stream position.
    pub fn unit(self) -> f64 {
        (splitmix(self.0) >> 11) as f64 / (1u64 << 53) as f64
    }
}
