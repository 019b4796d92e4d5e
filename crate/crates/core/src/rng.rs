//! Deterministic pseudo-random number generation.
//!
//! Every randomized step in the crate (coefficient draws, coarsening
//! tie-breaker measures, parameter initialization, shuffles) goes through
//! the generators here instead of a platform RNG, so a seed reproduces the
//! same streams bit for bit on every target.

/// Advances a SplitMix64 stream and returns the next output.
///
/// SplitMix64 adds the 64-bit golden-ratio constant to the state and
/// scrambles the result with two xor-shift-multiply rounds. It is used for
/// seed expansion and for deriving independent sub-seeds.
pub fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent sub-seed from a base seed and a stream tag.
///
/// Distinct tags give decorrelated streams for the same base seed, which
/// keeps nested consumers (per-level, per-block, per-matrix draws) from
/// sharing a sequence.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut s = seed;
    let mixed = splitmix64(&mut s) ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    let mut t = mixed;
    splitmix64(&mut t)
}

/// Hashes an identifier to a seed with 64-bit FNV-1a.
///
/// Used to turn stable string identifiers (matrix ids) into generator
/// seeds without depending on the standard library's unspecified hasher.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// xoshiro256++ generator.
///
/// The state is seeded through SplitMix64 as the algorithm's authors
/// recommend; consecutive SplitMix64 outputs are distinct, so the all-zero
/// state (the one invalid state) cannot occur.
#[derive(Clone, Debug)]
pub struct Rng {
    s: [u64; 4],
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        let mut sm = seed;
        let mut s = [0u64; 4];
        for slot in &mut s {
            *slot = splitmix64(&mut sm);
        }
        Rng { s }
    }

    pub fn next_u64(&mut self) -> u64 {
        let result = self.s[0]
            .wrapping_add(self.s[3])
            .rotate_left(23)
            .wrapping_add(self.s[0]);
        let t = self.s[1] << 17;
        self.s[2] ^= self.s[0];
        self.s[3] ^= self.s[1];
        self.s[1] ^= self.s[2];
        self.s[0] ^= self.s[3];
        self.s[2] ^= t;
        self.s[3] = self.s[3].rotate_left(45);
        result
    }

    /// Uniform draw in `[0, 1)` built from the top 53 bits of one output.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform draw in `[lo, hi)`; returns `lo` exactly when `hi == lo`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }

    /// Uniform integer in `[0, n)` via the multiply-shift reduction.
    ///
    /// The reduction has a bias below 2^-64 per draw, which is irrelevant
    /// here; what matters is that it is branch-free and portable.
    pub fn below(&mut self, n: usize) -> usize {
        assert!(n > 0, "below(0) is undefined");
        ((self.next_u64() as u128 * n as u128) >> 64) as usize
    }

    /// Uniform integer in the inclusive range `[lo, hi]`.
    pub fn int_in(&mut self, lo: usize, hi: usize) -> usize {
        assert!(lo <= hi, "empty integer range");
        lo + self.below(hi - lo + 1)
    }

    /// In-place Fisher-Yates shuffle.
    pub fn shuffle<T>(&mut self, xs: &mut [T]) {
        for i in (1..xs.len()).rev() {
            let j = self.below(i + 1);
            xs.swap(i, j);
        }
    }
}
