//! Deterministic seed derivation and counter-based Gaussian noise.
//!
//! Every random quantity is a pure function of a seed and a position, so results
//! never depend on how work is scheduled across threads.

use num_complex::Complex64;
use std::f64::consts::PI;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
pub fn splitmix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn fnv1a(label: &str) -> u64 {
    label.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01B3)
    })
}

/// Derives an independent 64-bit stream seed from `(master_seed, stream_label, index)`.
///
/// For a fixed master seed and label the map `index -> seed` is a bijection.
pub fn derive_seed(master_seed: u64, stream_label: &str, index: u64) -> u64 {
    let base = splitmix64(splitmix64(master_seed) ^ splitmix64(fnv1a(stream_label)));
    splitmix64(base.wrapping_add(index.wrapping_mul(GOLDEN)))
}

/// Counter-based source: the draw at position `k` depends only on `(key, k)`.
#[derive(Debug, Clone, Copy)]
pub struct CounterRng {
    key: u64,
}

impl CounterRng {
    pub fn new(seed: u64) -> Self {
        Self {
            key: splitmix64(seed ^ 0x6A09_E667_F3BC_C908),
        }
    }

    #[inline]
    fn word(&self, counter: u64) -> u64 {
        splitmix64(self.key.wrapping_add(counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `(0, 1]`.
    #[inline]
    pub fn uniform(&self, counter: u64) -> f64 {
        ((self.word(counter) >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Circularly symmetric complex Gaussian with unit total variance
    /// (each quadrature has variance 1/2).
    #[inline]
    pub fn complex_normal(&self, k: u64) -> Complex64 {
        let u1 = self.uniform(2 * k);
        let u2 = self.uniform(2 * k + 1);
        let r = (-u1.ln()).sqrt();
        let (s, c) = (2.0 * PI * u2).sin_cos();
        Complex64::new(r * c, r * s)
    }
}
