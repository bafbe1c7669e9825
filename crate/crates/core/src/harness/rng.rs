//! SplitMix64, the reference generator for seeded initial data.

/// Sebastiano Vigna's SplitMix64 stream.
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

    /// `2 (u / 2⁶⁴) - 1` for the next raw output `u`.
    pub fn next_symmetric(&mut self) -> f64 {
        to_symmetric(self.next_u64())
    }
}

pub fn to_symmetric(u: u64) -> f64 {
    2.0 * (u as f64 / 18_446_744_073_709_551_616.0) - 1.0
}
