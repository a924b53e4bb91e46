//! SplitMix64, the generator used wherever the toolkit draws random numbers.
//!
//! The whole state is one 64-bit word `s`. Each draw performs
//!
//! ```text
//! s  = s + 0x9E3779B97F4A7C15            (mod 2^64)
//! z  = s
//! z  = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9   (mod 2^64)
//! z  = (z ^ (z >> 27)) * 0x94D049BB133111EB   (mod 2^64)
//! out = z ^ (z >> 31)
//! ```
//!
//! and a uniform double in `[0, 1)` is `(out >> 11) * 2^-53`. The seed is
//! the initial `s`. These few lines are all another implementation needs to
//! reproduce generated instances and regression samples bit for bit.

#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)`.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `[lo, hi)`; returns `lo` when the range is empty.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
