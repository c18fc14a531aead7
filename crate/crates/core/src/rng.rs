//! Deterministic, portable random streams.
//!
//! All stochastic pieces of the library (synthetic observation noise,
//! multistart shifts, per-candidate seeds) are driven by a counter-based
//! SplitMix64 stream so that a given seed reproduces the same values on any
//! platform. Gaussians come from the Box-Muller transform of two counter
//! draws.

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z ^= z >> 30;
    z = z.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z ^= z >> 27;
    z = z.wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based SplitMix64 stream: the value at index `i` is a pure
/// function of `(seed, i)`.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    seed: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        CounterRng { seed }
    }

    pub fn u64_at(&self, index: u64) -> u64 {
        mix(self
            .seed
            .wrapping_add(index.wrapping_add(1).wrapping_mul(GAMMA)))
    }

    /// Uniform draw in (0, 1].
    pub fn uniform_at(&self, index: u64) -> f64 {
        ((self.u64_at(index) >> 11) as f64 + 1.0) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard normal draw via Box-Muller on counters `2i` and `2i + 1`.
    pub fn normal_at(&self, index: u64) -> f64 {
        let u1 = self.uniform_at(2 * index);
        let u2 = self.uniform_at(2 * index + 1);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

/// FNV-1a 64-bit hash, used to derive per-candidate seeds from a global seed
/// and a stable label. Stable across platforms and releases.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xCBF2_9CE4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

/// Seed for one work item, independent of scheduling order.
pub fn derive_seed(global_seed: u64, label: &str) -> u64 {
    let mut bytes = Vec::with_capacity(9 + label.len());
    bytes.extend_from_slice(&global_seed.to_le_bytes());
    bytes.push(b'/');
    bytes.extend_from_slice(label.as_bytes());
    fnv1a64(&bytes)
}
