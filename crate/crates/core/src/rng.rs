//! Seeded pseudo-random generator used for weight init, dataset noise, and
//! playlist shuffling.
//!
//! The generator is SplitMix64 (Steele, Lea & Flood's `splitmix64`), chosen
//! because it is a fixed, published 64-bit algorithm that is trivial to
//! reproduce in any language: results here must be reproducible from the seed
//! alone, not from whichever RNG crate happens to be in the lock file.
//!
//! Derived values are produced as follows (all documented so an independent
//! implementation can match loss curves and playlists bit for bit):
//!
//! * `next_u64`: `state += 0x9E3779B97F4A7C15`, then mix
//!   `z = state; z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9;
//!   z = (z ^ (z >> 27)) * 0x94D049BB133111EB; return z ^ (z >> 31)`.
//! * `next_below(n)`: `next_u64() % n`. The modulo bias is at most
//!   `n / 2^64`, irrelevant for the desk-scale `n` used here.
//! * `next_unit_f32`: top 24 bits of `next_u64`, divided by `2^24`,
//!   giving a uniform value in `[0, 1)`.
//! * `next_range_f32(a, b)`: `a + (b - a) * next_unit_f32()`.
//! * `shuffle`: Fisher–Yates from the back, `j = next_below(i + 1)`,
//!   swapping `v[i]` and `v[j]` for `i = len-1 .. 1`.

/// SplitMix64 generator state.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform integer in `[0, n)`. `n` must be nonzero.
    pub fn next_below(&mut self, n: u64) -> u64 {
        assert!(n > 0, "next_below(0)");
        self.next_u64() % n
    }

    /// Uniform value in `[0, 1)` with 24 bits of resolution.
    pub fn next_unit_f32(&mut self) -> f32 {
        (self.next_u64() >> 40) as f32 / (1u64 << 24) as f32
    }

    /// Uniform value in `[a, b)`.
    pub fn next_range_f32(&mut self, a: f32, b: f32) -> f32 {
        a + (b - a) * self.next_unit_f32()
    }

    /// Signed integer in `[-m, m]`.
    pub fn next_signed(&mut self, m: i64) -> i64 {
        debug_assert!(m >= 0);
        self.next_below(2 * m as u64 + 1) as i64 - m
    }

    /// In-place Fisher–Yates shuffle.
    pub fn shuffle<T>(&mut self, v: &mut [T]) {
        for i in (1..v.len()).rev() {
            let j = self.next_below(i as u64 + 1) as usize;
            v.swap(i, j);
        }
    }
}
