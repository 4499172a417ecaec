//! Counter-based pseudorandom generator, version `splitmix64-ctr-v1`.
//!
//! The generator is part of the experiment contract: any implementation
//! that reproduces the constants below reproduces every random phase
//! profile and every derived trial seed bit for bit.
//!
//! ```text
//! GAMMA = 0x9E3779B97F4A7C15
//! mix(z):
//!     z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (wrapping)
//!     z = (z ^ (z >> 27)) * 0x94D049BB133111EB   (wrapping)
//!     return z ^ (z >> 31)
//! word(key, i)   = mix(key + (i + 1) * GAMMA)      (wrapping, i ≥ 0)
//! unit(key, i)   = (word(key, i) >> 11) * 2^-53    (in [0, 1))
//! derive(seed, t) = word(seed, t)                  (per-trial seed)
//! ```
//!
//! `word(key, i)` is exactly the `i`-th output of a SplitMix64 stream
//! seeded with `key`.

pub const NAME: &str = "splitmix64-ctr-v1";

pub const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_MUL_1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_MUL_2: u64 = 0x94D0_49BB_1331_11EB;

#[inline]
pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_MUL_1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_MUL_2);
    z ^ (z >> 31)
}

/// Seed for repetition `index` of an experiment with master seed `master`.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    CounterRng::new(master).word(index)
}

/// Stateless-at-heart stream: output `i` depends only on `(key, i)`.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(key: u64) -> Self {
        Self { key, counter: 0 }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Random access to word `index` of the stream.
    #[inline]
    pub fn word(&self, index: u64) -> u64 {
        mix64(
            self.key
                .wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)),
        )
    }

    /// Random access to the unit-interval value at `index`.
    #[inline]
    pub fn unit(&self, index: u64) -> f64 {
        (self.word(index) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn next_u64(&mut self) -> u64 {
        let w = self.word(self.counter);
        self.counter += 1;
        w
    }

    /// Uniform on `[0, 1)` with 53 bits of resolution.
    pub fn next_f64(&mut self) -> f64 {
        let u = self.unit(self.counter);
        self.counter += 1;
        u
    }

    pub fn next_bit(&mut self) -> u8 {
        (self.next_u64() >> 63) as u8
    }

    /// Uniform integer in `[0, bound)` by rejection, `bound > 0`.
    pub fn below(&mut self, bound: u64) -> u64 {
        assert!(bound > 0, "below: empty range");
        let zone = u64::MAX - (u64::MAX % bound);
        loop {
            let w = self.next_u64();
            if w < zone {
                return w % bound;
            }
        }
    }
}
