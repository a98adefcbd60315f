//! Buffer sorting: a stable merge sort, a near-sortedness-exploiting
//! adaptive sort, and the rule for choosing between them.
//!
//! The adaptive sort runs two passes. Pass one is replacement selection
//! with a min-heap bounded at `window_w` entries: as long as disorder is
//! local (entries land within `window_w` positions of where they belong),
//! the heap absorbs it and emits a single sorted run in place. Entries that
//! arrive smaller than something already emitted can no longer join that
//! run and are set aside as stragglers. Pass two sorts the stragglers and
//! merges them back. Extra space is `O(window_w + stragglers)`.
//!
//! With few out-of-place entries (small K) the straggler set stays small;
//! with short displacement distances (small L) a window of `L * n` entries
//! produces no stragglers at all. Either way the adaptive sort approaches
//! linear time, which is why [`choose_sort`] picks it when *either* running
//! estimate is small, and falls back to merge sort for genuinely scrambled
//! inputs.

use crate::entry::Entry;

/// Adaptive when the buffer looks nearly sorted: fewer than 10% of entries
/// out of place, or displacement under 5% of the buffer.
pub const ADAPTIVE_K_CUTOFF: f64 = 0.10;
pub const ADAPTIVE_L_CUTOFF: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SortAlgorithm {
    MergeStable,
    AdaptiveKl,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SortStats {
    pub algorithm: SortAlgorithm,
    pub comparisons: u64,
    /// Entries diverted to the straggler set (adaptive sort only).
    pub stragglers: u64,
    /// Estimates that drove algorithm selection, when the caller selected
    /// via [`choose_sort`]; zero when a sort was invoked directly.
    pub k_estimate: f64,
    pub l_estimate: f64,
}

impl SortStats {
    fn new(algorithm: SortAlgorithm) -> Self {
        SortStats { algorithm, comparisons: 0, stragglers: 0, k_estimate: 0.0, l_estimate: 0.0 }
    }
}

/// Pick the sort for a buffer whose disorder is summarized by the two
/// running estimates. Boundary values (`k = 0.10`, `l = 0.05`) are *not*
/// nearly sorted and take the merge path.
pub fn choose_sort(k_estimate: f64, l_estimate: f64) -> SortAlgorithm {
    if k_estimate < ADAPTIVE_K_CUTOFF || l_estimate < ADAPTIVE_L_CUTOFF {
        SortAlgorithm::AdaptiveKl
    } else {
        SortAlgorithm::MergeStable
    }
}

/// Stable sort by `(key, seq)`. Equal keys keep arrival order because `seq`
/// is assigned in arrival order.
pub fn stable_sort(entries: &mut [Entry]) -> SortStats {
    let mut stats = SortStats::new(SortAlgorithm::MergeStable);
    let mut cmps = 0u64;
    entries.sort_by(|a, b| {
        cmps += 1;
        a.rank().cmp(&b.rank())
    });
    stats.comparisons = cmps;
    stats
}

/// Two-pass adaptive sort. Correct for any input and any `window_w >= 1`;
/// fast when the input is nearly sorted. Runs in place, with side storage
/// proportional to the window plus the straggler count.
pub fn adaptive_kl_sort(entries: &mut [Entry], window_w: usize) -> SortStats {
    let mut stats = SortStats::new(SortAlgorithm::AdaptiveKl);
    let n = entries.len();
    if n <= 1 {
        return stats;
    }
    let window = window_w.max(1);
    let mut cmps = 0u64;

    // Pass 1: replacement selection. The emitted run is written back over
    // the slice prefix; the emit cursor can never catch the read cursor
    // because the heap always holds at least one not-yet-emitted entry.
    let mut heap = MinHeap::with_capacity(window + 1);
    let mut stragglers: Vec<Entry> = Vec::new();
    let mut emit = 0usize;
    let mut last_emitted: Option<(u64, u64)> = None;

    for read in 0..n {
        let e = entries[read];
        if let Some(last) = last_emitted {
            cmps += 1;
            if e.rank() < last {
                stragglers.push(e);
                continue;
            }
        }
        heap.push(e, &mut cmps);
        if heap.len() > window {
            let m = heap.pop(&mut cmps);
            last_emitted = Some(m.rank());
            entries[emit] = m;
            emit += 1;
        }
    }
    while let Some(m) = heap.try_pop(&mut cmps) {
        entries[emit] = m;
        emit += 1;
    }
    stats.stragglers = stragglers.len() as u64;

    // Pass 2: order the stragglers, then merge the two runs from the back
    // of the slice so no extra full-size buffer is needed.
    stragglers.sort_by(|a, b| {
        cmps += 1;
        a.rank().cmp(&b.rank())
    });
    debug_assert_eq!(emit + stragglers.len(), n);
    let mut i = emit; // run length in entries[0..emit]
    let mut j = stragglers.len();
    let mut k = n;
    while j > 0 {
        let take_straggler = if i == 0 {
            true
        } else {
            cmps += 1;
            stragglers[j - 1].rank() > entries[i - 1].rank()
        };
        k -= 1;
        if take_straggler {
            entries[k] = stragglers[j - 1];
            j -= 1;
        } else {
            entries[k] = entries[i - 1];
            i -= 1;
        }
    }
    stats.comparisons = cmps;
    stats
}

/// Dispatch helper used by the buffer once [`choose_sort`] has decided.
pub fn sort_entries(
    algorithm: SortAlgorithm,
    entries: &mut [Entry],
    window_w: usize,
) -> SortStats {
    match algorithm {
        SortAlgorithm::MergeStable => stable_sort(entries),
        SortAlgorithm::AdaptiveKl => adaptive_kl_sort(entries, window_w),
    }
}

/// Minimal binary min-heap over `(key, seq)` with an external comparison
/// counter. `std::collections::BinaryHeap` would do the job but cannot
/// report how many comparisons it spent.
struct MinHeap {
    v: Vec<Entry>,
}

impl MinHeap {
    fn with_capacity(cap: usize) -> Self {
        MinHeap { v: Vec::with_capacity(cap) }
    }

    fn len(&self) -> usize {
        self.v.len()
    }

    fn push(&mut self, e: Entry, cmps: &mut u64) {
        self.v.push(e);
        let mut i = self.v.len() - 1;
        while i > 0 {
            let parent = (i - 1) / 2;
            *cmps += 1;
            if self.v[i].rank() < self.v[parent].rank() {
                self.v.swap(i, parent);
                i = parent;
            } else {
                break;
            }
        }
    }

    fn pop(&mut self, cmps: &mut u64) -> Entry {
        self.try_pop(cmps).expect("pop from empty heap")
    }

    fn try_pop(&mut self, cmps: &mut u64) -> Option<Entry> {
        if self.v.is_empty() {
            return None;
        }
        let last = self.v.len() - 1;
        self.v.swap(0, last);
        let min = self.v.pop().unwrap();
        let n = self.v.len();
        let mut i = 0;
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            if l >= n {
                break;
            }
            let mut smallest = l;
            if r < n {
                *cmps += 1;
                if self.v[r].rank() < self.v[l].rank() {
                    smallest = r;
                }
            }
            *cmps += 1;
            if self.v[smallest].rank() < self.v[i].rank() {
                self.v.swap(i, smallest);
                i = smallest;
            } else {
                break;
            }
        }
        Some(min)
    }
}
