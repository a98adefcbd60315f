//! Blocked membership filters for the buffer's read path.
//!
//! The buffer keeps one filter over its whole unsorted section and one per
//! page, both sized at 10 bits per expected entry. With that budget the
//! optimal probe count is `round(ln 2 * 10) = 7`, giving a theoretical false
//! positive rate just under 1%.
//!
//! Bit positions come from double hashing: two 64-bit hashes `h1`, `h2` are
//! derived from the key with a murmur-style avalanche mix, and probe `i`
//! tests bit `(h1 + i * h2) mod m`. That keeps per-key hashing to two mixes
//! regardless of the probe count.

use crate::entry::Key;

/// Murmur-style 64-bit finalizer. Full avalanche: every input bit affects
/// every output bit, which is all double hashing needs.
#[inline]
fn mix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51_afd7_ed55_8ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    x ^= x >> 33;
    x
}

#[derive(Debug, Clone)]
pub struct BloomFilter {
    words: Vec<u64>,
    m_bits: u64,
    hashes: u32,
    seed: u64,
    inserted: u64,
}

pub const DEFAULT_BITS_PER_ENTRY: usize = 10;

impl BloomFilter {
    /// Filter sized for `capacity` expected entries at `bits_per_entry`.
    /// The bit array is rounded up to a whole number of 64-bit words; probe
    /// count is `round(ln 2 * bits_per_entry)`, at least 1.
    pub fn new(capacity: usize, bits_per_entry: usize, seed: u64) -> Self {
        let wanted = (capacity.max(1) as u64).saturating_mul(bits_per_entry.max(1) as u64);
        let words = wanted.div_ceil(64).max(1) as usize;
        let hashes = ((bits_per_entry as f64) * std::f64::consts::LN_2).round().max(1.0) as u32;
        BloomFilter {
            words: vec![0; words],
            m_bits: words as u64 * 64,
            hashes,
            seed,
            inserted: 0,
        }
    }

    pub fn with_default_bits(capacity: usize, seed: u64) -> Self {
        BloomFilter::new(capacity, DEFAULT_BITS_PER_ENTRY, seed)
    }

    #[inline]
    fn bases(&self, key: Key) -> (u64, u64) {
        let h1 = mix64(key ^ self.seed);
        // Forcing h2 odd makes the probe stride a unit mod any power of two,
        // so the k probes never collapse onto one bit.
        let h2 = mix64(h1 ^ 0x9e37_79b9_7f4a_7c15) | 1;
        (h1, h2)
    }

    #[inline]
    pub fn insert(&mut self, key: Key) {
        let (h1, h2) = self.bases(key);
        let mut h = h1;
        for _ in 0..self.hashes {
            let bit = h % self.m_bits;
            self.words[(bit / 64) as usize] |= 1u64 << (bit % 64);
            h = h.wrapping_add(h2);
        }
        self.inserted += 1;
    }

    /// May return true for keys never inserted (false positive); never
    /// returns false for an inserted key.
    #[inline]
    pub fn contains(&self, key: Key) -> bool {
        if self.inserted == 0 {
            return false;
        }
        let (h1, h2) = self.bases(key);
        let mut h = h1;
        for _ in 0..self.hashes {
            let bit = h % self.m_bits;
            if self.words[(bit / 64) as usize] & (1u64 << (bit % 64)) == 0 {
                return false;
            }
            h = h.wrapping_add(h2);
        }
        true
    }

    pub fn clear(&mut self) {
        self.words.fill(0);
        self.inserted = 0;
    }

    pub fn is_empty(&self) -> bool {
        self.inserted == 0
    }

    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    pub fn bit_len(&self) -> u64 {
        self.m_bits
    }

    pub fn hash_count(&self) -> u32 {
        self.hashes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_xoshiro::Xoshiro256PlusPlus;

    #[test]
    fn sizing_rounds_up_to_words_and_seven_hashes() {
        let bf = BloomFilter::with_default_bits(1000, 0);
        assert_eq!(bf.bit_len(), 10048); // 10_000 rounded up to a multiple of 64
        assert_eq!(bf.bit_len() % 64, 0);
        assert_eq!(bf.hash_count(), 7); // round(ln2 * 10)
    }

    #[test]
    fn no_false_negatives() {
        let mut bf = BloomFilter::with_default_bits(10_000, 42);
        for k in (0..10_000u64).map(|i| i * 31 + 7) {
            bf.insert(k);
        }
        for k in (0..10_000u64).map(|i| i * 31 + 7) {
            assert!(bf.contains(k), "inserted key {k} must be reported present");
        }
    }

    #[test]
    fn empty_filter_contains_nothing() {
        let bf = BloomFilter::with_default_bits(100, 7);
        assert!(bf.is_empty());
        for k in 0..1000 {
            assert!(!bf.contains(k));
        }
    }

    #[test]
    fn clear_resets_membership() {
        let mut bf = BloomFilter::with_default_bits(100, 7);
        for k in 0..100 {
            bf.insert(k);
        }
        bf.clear();
        assert!(bf.is_empty());
        let fps = (0..100u64).filter(|k| bf.contains(*k)).count();
        assert_eq!(fps, 0);
    }

    #[test]
    fn deterministic_across_instances() {
        let mut a = BloomFilter::with_default_bits(1000, 99);
        let mut b = BloomFilter::with_default_bits(1000, 99);
        for k in 0..1000u64 {
            a.insert(k * 3);
            b.insert(k * 3);
        }
        assert_eq!(a.words, b.words);
        // A different seed should produce a different bit pattern.
        let mut c = BloomFilter::with_default_bits(1000, 100);
        for k in 0..1000u64 {
            c.insert(k * 3);
        }
        assert_ne!(a.words, c.words);
    }

    /// At design capacity and 10 bits per entry the theoretical false
    /// positive rate is ~0.8%; hold the measured rate under 2%.
    #[test]
    fn false_positive_rate_at_capacity() {
        let capacity = 50_000usize;
        let mut bf = BloomFilter::with_default_bits(capacity, 1234);
        for k in 0..capacity as u64 {
            bf.insert(k);
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(5678);
        let probes = 100_000;
        let mut fps = 0u64;
        for _ in 0..probes {
            // Keys strictly outside the inserted set.
            let k = rng.random_range(capacity as u64..u64::MAX);
            if bf.contains(k) {
                fps += 1;
            }
        }
        let fpr = fps as f64 / probes as f64;
        assert!(fpr <= 0.02, "measured FPR {fpr} above 0.02");
        // Sanity floor: the filter is actually doing something.
        assert!(fpr < 0.05);
    }

    #[test]
    fn partial_fill_has_lower_fpr_than_full() {
        let capacity = 50_000usize;
        let mut half = BloomFilter::with_default_bits(capacity, 9);
        let mut full = BloomFilter::with_default_bits(capacity, 9);
        for k in 0..capacity as u64 {
            full.insert(k);
            if k < capacity as u64 / 2 {
                half.insert(k);
            }
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(10);
        let mut fp_half = 0u64;
        let mut fp_full = 0u64;
        for _ in 0..50_000 {
            let k = rng.random_range(capacity as u64..u64::MAX);
            fp_half += bf_hit(&half, k);
            fp_full += bf_hit(&full, k);
        }
        assert!(fp_half < fp_full);
    }

    fn bf_hit(bf: &BloomFilter, k: u64) -> u64 {
        bf.contains(k) as u64
    }
}
