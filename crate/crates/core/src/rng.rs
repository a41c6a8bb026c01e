//! Counter-based random streams.
//!
//! Every stochastic stage draws from a [`Stream`] keyed by `(seed, stage,
//! label)`; an individual draw is a pure function of that key plus an item
//! key and a counter. Results therefore do not depend on iteration order or
//! thread scheduling, and toggling one stage never perturbs another.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a over the UTF-8 bytes. Stable across platforms and releases,
/// unlike `std::hash`.
pub fn stable_hash(s: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in s.as_bytes() {
        h ^= u64::from(*b);
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Stream {
    key: u64,
}

impl Stream {
    pub fn new(seed: u64, stage: &str) -> Self {
        Self {
            key: splitmix64(splitmix64(seed) ^ stable_hash(stage)),
        }
    }

    /// Derives an independent substream, e.g. one per group.
    pub fn substream(&self, label: &str) -> Self {
        Self {
            key: splitmix64(self.key ^ stable_hash(label).rotate_left(17)),
        }
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    /// Raw 64-bit draw for `(item, counter)`.
    #[inline]
    pub fn draw(&self, item: u64, counter: u64) -> u64 {
        let a = splitmix64(self.key ^ item);
        splitmix64(a ^ counter.wrapping_mul(GOLDEN).rotate_left(29))
    }

    /// Integer-threshold Bernoulli draw: true with probability `p`.
    #[inline]
    pub fn bernoulli(&self, item: u64, counter: u64, p: f64) -> bool {
        match threshold(p) {
            Threshold::Never => false,
            Threshold::Always => true,
            Threshold::Below(t) => self.draw(item, counter) < t,
        }
    }

    /// Uniform in `[0, 1)` with 53 bits of precision.
    #[inline]
    pub fn uniform(&self, item: u64, counter: u64) -> f64 {
        (self.draw(item, counter) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

enum Threshold {
    Never,
    Always,
    Below(u64),
}

fn threshold(p: f64) -> Threshold {
    if !(p > 0.0) {
        Threshold::Never
    } else if p >= 1.0 {
        Threshold::Always
    } else {
        // p * 2^64, exact for the f64 mantissa
        Threshold::Below((p * 18_446_744_073_709_551_616.0) as u64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn draws_are_pure_functions_of_key() {
        let s = Stream::new(7, "risk");
        assert_eq!(s.draw(3, 0), Stream::new(7, "risk").draw(3, 0));
        assert_ne!(s.draw(3, 0), s.draw(4, 0));
        assert_ne!(s.draw(3, 0), s.draw(3, 1));
        assert_ne!(s.key(), Stream::new(7, "tiers").key());
        assert_ne!(s.substream("a").key(), s.substream("b").key());
    }

    #[test]
    fn bernoulli_extremes() {
        let s = Stream::new(1, "x");
        for i in 0..1000 {
            assert!(!s.bernoulli(i, 0, 0.0));
            assert!(s.bernoulli(i, 0, 1.0));
            assert!(!s.bernoulli(i, 0, f64::NAN));
        }
    }

    #[test]
    fn bernoulli_rate() {
        let s = Stream::new(99, "rate");
        let n = 200_000u64;
        let hits = (0..n).filter(|&i| s.bernoulli(i, 0, 0.3)).count() as f64;
        let sd = (0.3 * 0.7 / n as f64).sqrt();
        assert!((hits / n as f64 - 0.3).abs() < 4.0 * sd);
    }

    #[test]
    fn fnv_reference_values() {
        assert_eq!(stable_hash(""), 0xcbf2_9ce4_8422_2325);
        assert_eq!(stable_hash("a"), 0xaf63_dc4c_8601_ec8c);
    }
}
