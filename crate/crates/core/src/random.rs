//! Named, counter-based random streams.
//!
//! A stream is keyed by `(seed, id)`. The key is `seed ^ fnv1a64(id)` passed
//! through the SplitMix64 finalizer; draw `k` (k = 1, 2, …) is the SplitMix64
//! finalizer applied to `key + k·0x9E3779B97F4A7C15` (wrapping). This is the
//! plain SplitMix64 sequence started from `key`, so any language can
//! reproduce it bit for bit. Uniform doubles take the top 53 bits.

use rand::RngCore;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ b as u64).wrapping_mul(FNV_PRIME))
}

fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RandomStream {
    seed: u64,
    id: String,
    key: u64,
    counter: u64,
}

impl RandomStream {
    pub fn new(seed: u64, id: impl Into<String>) -> Self {
        let id = id.into();
        let key = mix64(seed ^ fnv1a64(id.as_bytes()));
        Self {
            seed,
            id,
            key,
            counter: 0,
        }
    }

    /// Independent stream `"<id>/<label>"` under the same seed.
    pub fn substream(&self, label: &str) -> Self {
        Self::new(self.seed, format!("{}/{}", self.id, label))
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn next_draw(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN_GAMMA)))
    }

    /// Uniform in [0, 1).
    pub fn uniform(&mut self) -> f64 {
        (self.next_draw() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform integer in [0, n) by `⌊uniform·n⌋`.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0);
        ((self.uniform() * n as f64) as usize).min(n - 1)
    }

    /// Fisher–Yates shuffle drawing `below(i + 1)` for i = len−1 down to 1.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.below(i + 1);
            items.swap(i, j);
        }
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        (self.next_draw() >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.next_draw()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        for chunk in dest.chunks_mut(8) {
            let bytes = self.next_draw().to_le_bytes();
            chunk.copy_from_slice(&bytes[..chunk.len()]);
        }
    }
}
