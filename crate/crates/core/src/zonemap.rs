//! Min/max/count summaries used to skip regions on the read path.
//!
//! A zonemap is attached to every buffer page, every sorted component, the
//! buffer as a whole, and the tree as a whole. Updates only widen the
//! summarized range; when the underlying region is rewritten (flush
//! compaction, query-driven sort) the owner rebuilds the map from scratch
//! rather than shrinking it in place.

use crate::entry::Key;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Zonemap {
    min_key: Key,
    max_key: Key,
    count: u64,
}

impl Zonemap {
    pub const fn new() -> Self {
        Zonemap { min_key: Key::MAX, max_key: 0, count: 0 }
    }

    pub fn from_keys<I: IntoIterator<Item = Key>>(keys: I) -> Self {
        let mut zm = Zonemap::new();
        for k in keys {
            zm.update(k);
        }
        zm
    }

    /// Summary of `count` keys whose extremes are already known, e.g. the
    /// two ends of a sorted run. Rebuilds over sorted regions use this to
    /// avoid touching every key.
    pub fn from_span(min_key: Key, max_key: Key, count: u64) -> Self {
        debug_assert!(count == 0 || min_key <= max_key);
        if count == 0 {
            return Zonemap::new();
        }
        Zonemap { min_key, max_key, count }
    }

    /// Widen the summary to cover `key`.
    #[inline]
    pub fn update(&mut self, key: Key) {
        self.min_key = self.min_key.min(key);
        self.max_key = self.max_key.max(key);
        self.count += 1;
    }

    pub fn reset(&mut self) {
        *self = Zonemap::new();
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Minimum summarized key. Meaningless while empty.
    pub fn min_key(&self) -> Key {
        self.min_key
    }

    /// Maximum summarized key. Meaningless while empty.
    pub fn max_key(&self) -> Key {
        self.max_key
    }

    /// Could `key` be present in the summarized region? Empty maps overlap
    /// nothing.
    #[inline]
    pub fn overlaps(&self, key: Key) -> bool {
        self.count > 0 && self.min_key <= key && key <= self.max_key
    }

    /// Could any key in the inclusive range `[lo, hi]` be present?
    #[inline]
    pub fn overlaps_range(&self, lo: Key, hi: Key) -> bool {
        self.count > 0 && self.min_key <= hi && lo <= self.max_key
    }
}

impl Default for Zonemap {
    fn default() -> Self {
        Zonemap::new()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_overlaps_nothing() {
        let zm = Zonemap::new();
        assert!(zm.is_empty());
        assert!(!zm.overlaps(0));
        assert!(!zm.overlaps(Key::MAX));
        assert!(!zm.overlaps_range(0, Key::MAX));
    }

    #[test]
    fn keys_10_to_20_overlap_semantics() {
        let zm = Zonemap::from_keys(10..=20);
        assert!(zm.overlaps(15));
        assert!(zm.overlaps(10));
        assert!(zm.overlaps(20));
        assert!(!zm.overlaps(9));
        assert!(!zm.overlaps(21));
        assert_eq!(zm.count(), 11);
    }

    #[test]
    fn range_overlap_is_inclusive_on_both_sides() {
        let zm = Zonemap::from_keys([10, 20]);
        assert!(zm.overlaps_range(0, 10));
        assert!(zm.overlaps_range(20, 99));
        assert!(zm.overlaps_range(12, 13)); // inside, even if no key actually there
        assert!(!zm.overlaps_range(0, 9));
        assert!(!zm.overlaps_range(21, 99));
    }

    #[test]
    fn update_only_widens() {
        let mut zm = Zonemap::from_keys([50]);
        zm.update(40);
        zm.update(60);
        assert_eq!((zm.min_key(), zm.max_key()), (40, 60));
        zm.update(50);
        assert_eq!((zm.min_key(), zm.max_key()), (40, 60));
        assert_eq!(zm.count(), 4);
    }

    #[test]
    fn single_key_map() {
        let zm = Zonemap::from_keys([7]);
        assert!(zm.overlaps(7));
        assert!(!zm.overlaps(6));
        assert!(!zm.overlaps(8));
        assert!(zm.overlaps_range(7, 7));
    }

    #[test]
    fn reset_returns_to_empty() {
        let mut zm = Zonemap::from_keys(0..100);
        zm.reset();
        assert!(zm.is_empty());
        assert!(!zm.overlaps(50));
    }
}
