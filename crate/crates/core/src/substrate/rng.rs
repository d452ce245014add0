//! Counter-based random streams.
//!
//! Every draw is `splitmix64(key + counter * GOLDEN)`, where `key` is derived
//! from `(seed, stream)`. The sequence depends only on those two integers and
//! the counter, so it is identical on every platform and in any language that
//! implements the same 64-bit mixing function.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

/// The splitmix64 finalizer.
#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RngStream {
    seed: u64,
    stream: u64,
    key: u64,
    counter: u64,
}

impl RngStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let key = mix64(seed ^ mix64(stream.wrapping_add(GOLDEN)));
        Self {
            seed,
            stream,
            key,
            counter: 0,
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self) -> u64 {
        self.stream
    }

    pub fn counter(&self) -> u64 {
        self.counter
    }

    /// A new stream for a sub-task, keyed by `tag`. The parent is not advanced.
    pub fn derive(&self, tag: u64) -> RngStream {
        RngStream::new(self.seed, mix64(self.stream ^ mix64(tag.wrapping_mul(GOLDEN))))
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform in `[0, 1)` with 53 bits of resolution.
    pub fn draw_uniform(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`.
    pub fn draw_range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.draw_uniform()
    }

    /// Uniform integer in `0..n`. Returns 0 when `n == 0`.
    pub fn draw_index(&mut self, n: usize) -> usize {
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Standard normal via Box-Muller; consumes exactly two draws.
    pub fn draw_gaussian(&mut self) -> f64 {
        let u1 = 1.0 - self.draw_uniform();
        let u2 = self.draw_uniform();
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, items: &mut [T]) {
        for i in (1..items.len()).rev() {
            let j = self.draw_index(i + 1);
            items.swap(i, j);
        }
    }
}
