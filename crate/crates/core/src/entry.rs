//! The record type shared by the buffer, the tree, and the workload tooling.

/// Key type. Keys are unsigned and fixed-width; ordering is numeric.
pub type Key = u64;

/// Value (payload) type.
pub type Value = u64;

/// Insertion sequence number. Assigned monotonically by whoever owns the
/// stream (the index on `put`, the workload reader on load), never serialized.
/// Two entries with equal keys are ordered by `seq`, so the pair
/// `(key, seq)` is always a strict total order and "newest version" is
/// well defined.
pub type Seq = u64;

/// A single keyed record.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Entry {
    pub key: Key,
    pub value: Value,
    pub seq: Seq,
}

impl Entry {
    pub fn new(key: Key, value: Value, seq: Seq) -> Self {
        Entry { key, value, seq }
    }

    /// The sort rank used everywhere: key ascending, ties by seq ascending.
    #[inline]
    pub fn rank(&self) -> (Key, Seq) {
        (self.key, self.seq)
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.rank().cmp(&other.rank())
    }
}
