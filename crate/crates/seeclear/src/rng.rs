//! Counter-based splittable random number generation.
//!
//! Sampling noise is keyed by (global seed, frame index, step, coefficient
//! index), so results are independent of evaluation order and worker count.
//! The mixer is the SplitMix64 finalizer chained over key parts;
//! non-cryptographic but well diffused.

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Root generator holding the global seed. Split into independent streams by
/// key parts; streams never collide unless their key parts collide.
#[derive(Debug, Clone, Copy)]
pub struct KeyedRng {
    seed: u64,
}

impl KeyedRng {
    pub fn new(seed: u64) -> Self {
        KeyedRng { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    fn fold(&self, parts: &[u64]) -> u64 {
        let mut acc = mix64(self.seed ^ GOLDEN);
        for &p in parts {
            acc = mix64(acc.wrapping_add(GOLDEN) ^ mix64(p.wrapping_add(GOLDEN)));
        }
        acc
    }

    /// Derive an independent child generator, e.g. one per clip.
    pub fn split(&self, parts: &[u64]) -> KeyedRng {
        KeyedRng {
            seed: self.fold(parts),
        }
    }

    /// A sequential stream keyed by `parts` (for weight init and the like).
    pub fn stream(&self, parts: &[u64]) -> CounterRng {
        CounterRng {
            key: self.fold(parts),
            counter: 0,
        }
    }

    /// One u64 addressed directly by key parts plus a counter slot.
    pub fn raw(&self, parts: &[u64], slot: u64) -> u64 {
        mix64(self.fold(parts).wrapping_add(slot.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN))
    }

    /// Standard normal draw addressed by key parts, via Box-Muller on two
    /// counter slots.
    pub fn normal(&self, parts: &[u64]) -> f64 {
        let u1 = u64_to_open_f64(self.raw(parts, 0));
        let u2 = u64_to_unit_f64(self.raw(parts, 1));
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }
}

#[inline]
fn u64_to_unit_f64(x: u64) -> f64 {
    // 53 bits of precision, value in [0, 1).
    (x >> 11) as f64 / (1u64 << 53) as f64
}

#[inline]
fn u64_to_open_f64(x: u64) -> f64 {
    // Value in (0, 1], safe for ln().
    ((x >> 11) + 1) as f64 / (1u64 << 53) as f64
}

/// Sequential counter-based generator for a fixed key.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn next_u64(&mut self) -> u64 {
        let v = mix64(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)).wrapping_add(GOLDEN));
        self.counter += 1;
        v
    }

    pub fn next_f64(&mut self) -> f64 {
        u64_to_unit_f64(self.next_u64())
    }

    pub fn next_normal(&mut self) -> f64 {
        let u1 = u64_to_open_f64(self.next_u64());
        let u2 = u64_to_unit_f64(self.next_u64());
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
