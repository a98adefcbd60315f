//! The OSM-buffer: an append-only ingestion buffer that preserves whatever
//! order the input already has.
//!
//! Entries are appended strictly in arrival order, so the buffer naturally
//! decomposes into three regions:
//!
//! ```text
//! [ sorted section | sorted components ... | unsorted tail ]
//! 0                 sorted_boundary         tail_start      len
//! ```
//!
//! * The *sorted section* is the maximal fully-sorted prefix. On a sorted
//!   stream it simply grows with every append; after a flush it holds the
//!   re-sorted retained remainder.
//! * *Sorted components* are runs carved out of the tail by query-driven
//!   sorting: each read sorts at most one threshold-sized chunk of the
//!   oldest tail entries so that scan cost is paid by the queries that
//!   benefit, not by ingestion.
//! * The *unsorted tail* is everything appended after order first broke.
//!
//! Appends maintain cheap sortedness estimates. `k_counter` counts breaks
//! in the ascending run in progress — an append whose `(key, seq)` rank is
//! below the previous append's. On swap-displaced streams each displaced
//! entry breaks a run exactly once, so `k_counter / appends` tracks the
//! fraction of out-of-place entries. `l_counter` records the farthest
//! number of pages an out-of-order key landed ahead of where it belongs
//! (located by walking page zonemaps backwards), tracking maximum
//! displacement in page units. Flushes feed both estimates to
//! [`choose_sort`] to pick the cheapest sort for the retained remainder.
//!
//! `last_sorted_zone` tracks the last page of the sorted-by-pages prefix.
//! While the stream stays fully sorted it follows the append position; an
//! out-of-order key moves it left to the last page whose zonemap max does
//! not exceed that key. At flush time pages up to `last_sorted_zone` are
//! exactly the entries that can ship to the tree without sorting.
//!
//! Every page carries a zonemap and (in [`FilterMode::Full`]) a bloom
//! filter; one shared filter summarizes the whole unsorted tail so point
//! reads of absent keys skip the backward tail scan entirely.

use std::time::Instant;

use crate::entry::{Entry, Key, Seq, Value};
use crate::error::{OsmError, Result};
use crate::filters::BloomFilter;
use crate::sorting::{choose_sort, sort_entries, stable_sort, SortAlgorithm, SortStats};
use crate::zonemap::Zonemap;

/// Which bloom filters the buffer maintains and probes. `Full` is the
/// normal configuration; the other two exist for ablation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FilterMode {
    /// No bloom filters at all; reads gate on zonemaps alone.
    None,
    /// Only the shared tail filter, no per-page filters.
    GlobalOnly,
    /// Shared tail filter plus one filter per page.
    Full,
}

/// Tuning knobs for the buffer. `Default` mirrors the evaluation setup:
/// five-million-entry buffer, 256-entry pages, half-buffer flushes, and
/// query-driven sorting of 10% chunks.
#[derive(Debug, Clone)]
pub struct BufferConfig {
    /// Maximum number of buffered entries.
    pub capacity: usize,
    /// Entries per page; zonemap/filter granularity for the tail scan.
    pub page_entries: usize,
    /// Fraction of capacity evicted by each flush.
    pub flush_fraction: f64,
    /// Fraction of capacity the tail must reach before a read sorts one
    /// chunk of it into a component.
    pub unsorted_threshold_fraction: f64,
    /// Which bloom filters to maintain.
    pub filter_mode: FilterMode,
    /// Bits per entry for every bloom filter.
    pub bits_per_entry: usize,
    /// Hash seed shared by the buffer's filters.
    pub filter_seed: u64,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            capacity: 5_000_000,
            page_entries: 256,
            flush_fraction: 0.5,
            unsorted_threshold_fraction: 0.10,
            filter_mode: FilterMode::Full,
            bits_per_entry: 10,
            filter_seed: 0x05f5_e0ff_u64,
        }
    }
}

impl BufferConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(OsmError::Config("buffer capacity must be positive".into()));
        }
        if self.page_entries == 0 {
            return Err(OsmError::Config("page_entries must be positive".into()));
        }
        if !(self.flush_fraction > 0.0 && self.flush_fraction < 1.0) {
            return Err(OsmError::Config(format!(
                "flush_fraction must lie in (0, 1), got {}",
                self.flush_fraction
            )));
        }
        if !(self.unsorted_threshold_fraction > 0.0 && self.unsorted_threshold_fraction <= 1.0) {
            return Err(OsmError::Config(format!(
                "unsorted_threshold_fraction must lie in (0, 1], got {}",
                self.unsorted_threshold_fraction
            )));
        }
        if self.bits_per_entry == 0 {
            return Err(OsmError::Config("bits_per_entry must be positive".into()));
        }
        Ok(())
    }
}

/// One query-driven sorted run inside `[sorted_boundary, tail_start)`.
#[derive(Debug, Clone)]
struct Component {
    start: usize,
    end: usize,
    zonemap: Zonemap,
}

/// Counters describing buffer work. All monotone over the buffer's life;
/// the harness diffs snapshots around the phase it measures.
#[derive(Debug, Default, Clone, Copy)]
pub struct BufferStats {
    pub flushes: u64,
    /// Buffer sorts that ran the adaptive algorithm.
    pub sorts_adaptive: u64,
    /// Buffer sorts that ran the stable merge (includes query-driven ones).
    pub sorts_merge: u64,
    /// Subset of `sorts_merge` triggered by reads.
    pub query_driven_sorts: u64,
    pub sort_comparisons: u64,
    pub sort_ns: u64,
    /// Time spent rebuilding zonemaps/filters after flush compaction.
    pub metadata_ns: u64,
    /// Point reads rejected by the whole-buffer zonemap.
    pub zonemap_skips: u64,
    /// Tail pages skipped by their zonemap.
    pub page_zonemap_skips: u64,
    /// Tail pages skipped by their bloom filter.
    pub page_bf_skips: u64,
    pub bf_probes: u64,
    pub bf_positives: u64,
    /// Tail pages whose entries were actually scanned.
    pub pages_scanned: u64,
    pub tail_hits: u64,
    pub component_hits: u64,
    pub section_hits: u64,
    pub interp_searches: u64,
    pub interp_probes: u64,
}

impl BufferStats {
    /// Total buffer sorts, whatever the trigger or algorithm.
    pub fn sorts_performed(&self) -> u64 {
        self.sorts_adaptive + self.sorts_merge
    }
}

/// What a flush hands to the tree layer: `entries` ascending by
/// `(key, seq)`, plus whether they shipped straight from the sorted
/// prefix (`pre_sorted`) or required a full-buffer sort first.
#[derive(Debug)]
pub struct FlushPlan {
    /// Evicted entries in ascending rank order.
    pub entries: Vec<Entry>,
    /// True when the entries came off the sorted prefix as-is.
    pub pre_sorted: bool,
    /// Maximal ascending runs inside `entries` as `(start, end)` index
    /// ranges. A flush always produces a single run today; the field keeps
    /// the tree-side bulk loader honest about its input.
    pub runs: Vec<(usize, usize)>,
}

impl FlushPlan {
    pub fn flush_count(&self) -> usize {
        self.entries.len()
    }
}

/// The ingestion buffer. See the module docs for the region layout.
pub struct OsmBuffer {
    cfg: BufferConfig,
    entries: Vec<Entry>,
    /// End of the fully-sorted prefix.
    sorted_boundary: usize,
    /// Query-driven sorted runs tiling `[sorted_boundary, tail_start)`.
    components: Vec<Component>,
    page_zonemaps: Vec<Zonemap>,
    /// One filter per page; populated only in `FilterMode::Full`.
    page_filters: Vec<BloomFilter>,
    /// Shared filter over the unsorted tail; `None` in `FilterMode::None`.
    global_filter: Option<BloomFilter>,
    buffer_zonemap: Zonemap,
    /// Last page of the sorted-by-pages prefix, if any.
    last_sorted_zone: Option<usize>,
    /// Rank of the most recent append: the running max of the sort run in
    /// progress. Appends below it are counted as order breaks.
    run_max: Option<(Key, Seq)>,
    k_counter: u64,
    /// Farthest page displacement seen among out-of-order appends.
    l_counter_pages: usize,
    /// Appends since the last flush; denominator for `k_estimate`.
    appends: u64,
    stats: BufferStats,
}

impl OsmBuffer {
    pub fn new(cfg: BufferConfig) -> Result<Self> {
        cfg.validate()?;
        let global_filter = match cfg.filter_mode {
            FilterMode::None => None,
            // Sized for the steady state, where at most about half the
            // buffer is unsorted tail. A cold buffer can briefly exceed
            // that; the filter only loses precision, never correctness.
            FilterMode::GlobalOnly | FilterMode::Full => Some(BloomFilter::new(
                (cfg.capacity / 2).max(1),
                cfg.bits_per_entry,
                cfg.filter_seed,
            )),
        };
        Ok(OsmBuffer {
            entries: Vec::with_capacity(cfg.capacity),
            sorted_boundary: 0,
            components: Vec::new(),
            page_zonemaps: Vec::new(),
            page_filters: Vec::new(),
            global_filter,
            buffer_zonemap: Zonemap::new(),
            last_sorted_zone: None,
            run_max: None,
            k_counter: 0,
            l_counter_pages: 0,
            appends: 0,
            stats: BufferStats::default(),
            cfg,
        })
    }

    pub fn config(&self) -> &BufferConfig {
        &self.cfg
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.cfg.capacity
    }

    /// Raw contents in arrival order. Exposed for tests and oracles.
    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn sorted_boundary(&self) -> usize {
        self.sorted_boundary
    }

    /// First index of the unsorted tail.
    pub fn tail_start(&self) -> usize {
        self.components.last().map_or(self.sorted_boundary, |c| c.end)
    }

    pub fn tail_len(&self) -> usize {
        self.entries.len() - self.tail_start()
    }

    pub fn last_sorted_zone(&self) -> Option<usize> {
        self.last_sorted_zone
    }

    /// Number of sorted runs currently materialized: the sorted section (if
    /// non-empty) plus one per component. The tail is not counted.
    pub fn sorted_run_count(&self) -> usize {
        usize::from(self.sorted_boundary > 0) + self.components.len()
    }

    pub fn stats(&self) -> &BufferStats {
        &self.stats
    }

    /// Fraction of appends since the last flush that broke the running
    /// ascending order.
    pub fn k_estimate(&self) -> f64 {
        if self.appends == 0 {
            0.0
        } else {
            self.k_counter as f64 / self.appends as f64
        }
    }

    /// Farthest observed page displacement over the current page count.
    pub fn l_estimate(&self) -> f64 {
        let pages = self.page_zonemaps.len();
        if pages == 0 {
            0.0
        } else {
            (self.l_counter_pages as f64 / pages as f64).min(1.0)
        }
    }

    /// Append an entry. Returns `Ok(true)` when the buffer just reached
    /// capacity and must be flushed before the next insert.
    pub fn insert(&mut self, entry: Entry) -> Result<bool> {
        if self.is_full() {
            return Err(OsmError::BufferFull);
        }
        let pe = self.cfg.page_entries;
        let pos = self.entries.len();
        let page = pos / pe;
        if page == self.page_zonemaps.len() {
            self.page_zonemaps.push(Zonemap::new());
            if self.cfg.filter_mode == FilterMode::Full {
                self.page_filters.push(BloomFilter::new(
                    pe,
                    self.cfg.bits_per_entry,
                    self.cfg.filter_seed,
                ));
            }
        }
        self.page_zonemaps[page].update(entry.key);
        self.buffer_zonemap.update(entry.key);

        let rank = entry.rank();
        let in_order = self.run_max.map_or(true, |m| rank >= m);
        if in_order && pos == self.sorted_boundary {
            // Stream still fully sorted: the prefix and its page zone
            // extend under the append. Entries below the boundary are never
            // consulted by tail scans, so they stay out of the filters.
            self.run_max = Some(rank);
            self.sorted_boundary = pos + 1;
            self.last_sorted_zone = Some(page);
        } else {
            // Tail append: enters the filters that gate tail scans.
            if let Some(f) = self.page_filters.get_mut(page) {
                f.insert(entry.key);
            }
            if let Some(f) = self.global_filter.as_mut() {
                f.insert(entry.key);
            }
            self.run_max = Some(rank);
            if !in_order {
                self.k_counter += 1;
                // Retreat the sorted zone to the last page whose max does
                // not exceed the key. Page maxes are ascending up to the
                // zone, so a binary search finds it.
                if let Some(z) = self.last_sorted_zone {
                    let keep = self.page_zonemaps[..=z]
                        .partition_point(|zm| zm.max_key() <= entry.key);
                    self.last_sorted_zone = keep.checked_sub(1);
                }
                self.note_displacement(pos, entry.key);
            }
        }
        self.entries.push(entry);
        self.appends += 1;
        Ok(self.is_full())
    }

    /// Record how many pages behind its arrival position an out-of-order
    /// key belongs, by walking page zonemaps backwards to the nearest page
    /// whose max does not exceed it.
    ///
    /// `l_counter` is a running max, so once it reaches half the page count
    /// the estimate is saturated far beyond any decision threshold and the
    /// walk is skipped; that keeps ingesting fully-scrambled input linear
    /// instead of quadratic in pages.
    fn note_displacement(&mut self, pos: usize, key: Key) {
        let pages = self.page_zonemaps.len();
        let saturated_at = if pages <= 64 { pages } else { pages.div_ceil(2) };
        if self.l_counter_pages >= saturated_at {
            return;
        }
        let append_page = pos / self.cfg.page_entries;
        let mut reach = append_page + 1;
        for p in (0..append_page).rev() {
            if !self.page_zonemaps[p].is_empty() && self.page_zonemaps[p].max_key() <= key {
                reach = append_page - p;
                break;
            }
        }
        self.l_counter_pages = self.l_counter_pages.max(reach);
    }

    /// Decide what a flush evicts, sort whatever that requires, compact the
    /// buffer, and rebuild its metadata. The returned plan owns the evicted
    /// entries in ascending rank order.
    ///
    /// Selection mirrors ingestion's bookkeeping:
    /// 1. if the pages up to `last_sorted_zone` cover a full flush quantum,
    ///    evict that many entries straight off the sorted prefix;
    /// 2. otherwise, if the zone spans more than one page, evict exactly
    ///    the covered prefix (a smaller but still sort-free flush);
    /// 3. otherwise sort the whole buffer first, picking the algorithm from
    ///    the running (k, l) estimates, and evict a full quantum.
    pub fn plan_flush(&mut self) -> Result<FlushPlan> {
        let occ = self.entries.len();
        if occ == 0 {
            return Err(OsmError::Config("flush of an empty buffer".into()));
        }
        let pe = self.cfg.page_entries;
        let quantum = ((self.cfg.flush_fraction * self.cfg.capacity as f64).floor() as usize)
            .clamp(1, occ);
        let fully_sorted = self.sorted_boundary == occ && self.components.is_empty();
        let coverage = self
            .last_sorted_zone
            .map_or(0, |z| ((z + 1) * pe).min(self.sorted_boundary));
        let k_est = self.k_estimate();
        let l_est = self.l_estimate();

        let (cut, pre_sorted) = if coverage >= quantum {
            (quantum, true)
        } else if self.last_sorted_zone.is_some_and(|z| z >= 1) {
            (coverage, true)
        } else {
            self.run_sort(k_est, l_est, 0);
            (quantum, false)
        };

        let flushed: Vec<Entry> = self.entries.drain(..cut).collect();
        debug_assert!(flushed.windows(2).all(|w| w[0].rank() <= w[1].rank()));

        // The retained remainder becomes the new sorted section. It is
        // already in order when the whole buffer was (nothing was ever out
        // of place) or when branch 3 just sorted everything.
        if pre_sorted && !fully_sorted {
            self.run_sort(k_est, l_est, 0);
        }
        self.rebuild_after_rewrite();
        self.stats.flushes += 1;

        let runs = ascending_runs(&flushed);
        Ok(FlushPlan { entries: flushed, pre_sorted, runs })
    }

    /// Sort `entries[skip..]` with the algorithm chosen from the running
    /// estimates, tallying the work.
    fn run_sort(&mut self, k_est: f64, l_est: f64, skip: usize) {
        let slice = &mut self.entries[skip..];
        let n = slice.len();
        if n <= 1 {
            return;
        }
        let algorithm = choose_sort(k_est, l_est);
        let window = window_for(l_est, n);
        let t0 = Instant::now();
        let st = sort_entries(algorithm, slice, window);
        self.stats.sort_ns += t0.elapsed().as_nanos() as u64;
        self.note_sort(&st);
    }

    fn note_sort(&mut self, st: &SortStats) {
        match st.algorithm {
            SortAlgorithm::AdaptiveKl => self.stats.sorts_adaptive += 1,
            SortAlgorithm::MergeStable => self.stats.sorts_merge += 1,
        }
        self.stats.sort_comparisons += st.comparisons;
    }

    /// Recompute every derived structure after the entry array was
    /// compacted and re-sorted: the whole remainder is one sorted section.
    ///
    /// The remainder is a single ascending run, so every zonemap is just
    /// the two ends of its chunk, and — because pages inside the sorted
    /// section are never consulted by tail scans — the page filters start
    /// over empty. That keeps the rebuild O(pages), not O(entries).
    fn rebuild_after_rewrite(&mut self) {
        let t0 = Instant::now();
        debug_assert!(self.entries.windows(2).all(|w| w[0].rank() <= w[1].rank()));
        let pe = self.cfg.page_entries;
        let len = self.entries.len();
        self.components.clear();
        self.sorted_boundary = len;
        self.last_sorted_zone = if len == 0 { None } else { Some((len - 1) / pe) };
        self.run_max = self.entries.last().map(Entry::rank);
        self.k_counter = 0;
        self.l_counter_pages = 0;
        self.appends = 0;

        self.page_zonemaps.clear();
        for chunk in self.entries.chunks(pe) {
            self.page_zonemaps.push(Zonemap::from_span(
                chunk[0].key,
                chunk[chunk.len() - 1].key,
                chunk.len() as u64,
            ));
        }
        self.buffer_zonemap = match len {
            0 => Zonemap::new(),
            _ => Zonemap::from_span(self.entries[0].key, self.entries[len - 1].key, len as u64),
        };
        // The tail is empty now, so all the filters start clean.
        if self.cfg.filter_mode == FilterMode::Full {
            self.page_filters.truncate(self.page_zonemaps.len());
            for f in &mut self.page_filters {
                f.clear();
            }
            while self.page_filters.len() < self.page_zonemaps.len() {
                self.page_filters.push(BloomFilter::new(
                    pe,
                    self.cfg.bits_per_entry,
                    self.cfg.filter_seed,
                ));
            }
        }
        if let Some(f) = self.global_filter.as_mut() {
            f.clear();
        }
        self.stats.metadata_ns += t0.elapsed().as_nanos() as u64;
    }

    /// Sort one threshold-sized chunk of the oldest tail entries into a new
    /// component if the tail has grown past the threshold. Called by the
    /// read path before it searches; does at most one chunk per call so a
    /// single query never pays for more than one sort.
    pub fn maybe_query_driven_sort(&mut self) -> bool {
        let threshold = ((self.cfg.unsorted_threshold_fraction * self.cfg.capacity as f64).floor()
            as usize)
            .max(1);
        let ts = self.tail_start();
        if self.entries.len() - ts < threshold {
            return false;
        }
        let t0 = Instant::now();
        let slice = &mut self.entries[ts..ts + threshold];
        let st = stable_sort(slice);
        let zonemap = Zonemap::from_keys(slice.iter().map(|e| e.key));
        self.stats.sort_ns += t0.elapsed().as_nanos() as u64;
        self.stats.query_driven_sorts += 1;
        self.note_sort(&st);
        self.components.push(Component { start: ts, end: ts + threshold, zonemap });
        // The shared filter now covers too much; rebuild it over what is
        // still tail so absent-key probes keep their precision.
        if let Some(f) = self.global_filter.as_mut() {
            f.clear();
            for e in &self.entries[ts + threshold..] {
                f.insert(e.key);
            }
        }
        true
    }

    /// Newest visible version of `key`, if the buffer holds one. Searches
    /// tail, then components newest-first, then the sorted section, which
    /// is exactly reverse arrival order.
    pub fn point_query(&mut self, key: Key) -> Option<Value> {
        if self.entries.is_empty() {
            return None;
        }
        if !self.buffer_zonemap.overlaps(key) {
            self.stats.zonemap_skips += 1;
            return None;
        }
        if let Some(v) = self.search_tail(key) {
            return Some(v);
        }
        for ci in (0..self.components.len()).rev() {
            let (start, end) = {
                let c = &self.components[ci];
                if !c.zonemap.overlaps(key) {
                    continue;
                }
                (c.start, c.end)
            };
            if let Some(v) = self.search_sorted_slice(start, end, key) {
                self.stats.component_hits += 1;
                return Some(v);
            }
        }
        if self.sorted_boundary > 0 {
            if let Some(v) = self.search_sorted_slice(0, self.sorted_boundary, key) {
                self.stats.section_hits += 1;
                return Some(v);
            }
        }
        None
    }

    /// Backward scan of the unsorted tail, gated by the shared filter and
    /// per-page zonemaps/filters. Newest match wins.
    fn search_tail(&mut self, key: Key) -> Option<Value> {
        let ts = self.tail_start();
        let len = self.entries.len();
        if ts >= len {
            return None;
        }
        if let Some(f) = self.global_filter.as_ref() {
            self.stats.bf_probes += 1;
            if !f.contains(key) {
                return None;
            }
            self.stats.bf_positives += 1;
        }
        let pe = self.cfg.page_entries;
        let first_page = ts / pe;
        let last_page = (len - 1) / pe;
        for p in (first_page..=last_page).rev() {
            if !self.page_zonemaps[p].overlaps(key) {
                self.stats.page_zonemap_skips += 1;
                continue;
            }
            if self.cfg.filter_mode == FilterMode::Full {
                self.stats.bf_probes += 1;
                if !self.page_filters[p].contains(key) {
                    self.stats.page_bf_skips += 1;
                    continue;
                }
                self.stats.bf_positives += 1;
            }
            self.stats.pages_scanned += 1;
            let lo = (p * pe).max(ts);
            let hi = ((p + 1) * pe).min(len);
            for i in (lo..hi).rev() {
                if self.entries[i].key == key {
                    self.stats.tail_hits += 1;
                    return Some(self.entries[i].value);
                }
            }
        }
        None
    }

    fn search_sorted_slice(&mut self, start: usize, end: usize, key: Key) -> Option<Value> {
        let (hit, probes) = interpolation_search_last(&self.entries[start..end], key);
        self.stats.interp_searches += 1;
        self.stats.interp_probes += u64::from(probes);
        hit.map(|i| self.entries[start + i].value)
    }

    /// Every buffered entry with key in `[lo, hi]`, duplicates included;
    /// the caller resolves versions by `seq`.
    pub fn range_query(&mut self, lo: Key, hi: Key) -> Vec<Entry> {
        let mut out = Vec::new();
        if self.entries.is_empty() || !self.buffer_zonemap.overlaps_range(lo, hi) {
            if !self.entries.is_empty() {
                self.stats.zonemap_skips += 1;
            }
            return out;
        }
        for e in &self.entries[self.tail_start()..] {
            if lo <= e.key && e.key <= hi {
                out.push(*e);
            }
        }
        for c in &self.components {
            if c.zonemap.overlaps_range(lo, hi) {
                copy_sorted_range(&self.entries[c.start..c.end], lo, hi, &mut out);
            }
        }
        if self.sorted_boundary > 0 {
            copy_sorted_range(&self.entries[..self.sorted_boundary], lo, hi, &mut out);
        }
        out
    }
}

/// Replacement-selection window for a given displacement estimate:
/// `floor(l * n) + 1`, capped at the slice length.
fn window_for(l_est: f64, n: usize) -> usize {
    (((l_est * n as f64).floor() as usize) + 1).min(n.max(1))
}

fn copy_sorted_range(slice: &[Entry], lo: Key, hi: Key, out: &mut Vec<Entry>) {
    let a = slice.partition_point(|e| e.key < lo);
    let b = slice.partition_point(|e| e.key <= hi);
    out.extend_from_slice(&slice[a..b]);
}

/// Maximal ascending `(key, seq)` runs of `entries` as index ranges.
fn ascending_runs(entries: &[Entry]) -> Vec<(usize, usize)> {
    let mut runs = Vec::new();
    if entries.is_empty() {
        return runs;
    }
    let mut start = 0;
    for i in 1..entries.len() {
        if entries[i].rank() < entries[i - 1].rank() {
            runs.push((start, i));
            start = i;
        }
    }
    runs.push((start, entries.len()));
    runs
}

/// Interpolation search over a slice sorted by `(key, seq)`, returning the
/// index of the *last* entry with the given key (the newest version) and
/// the number of probes spent.
///
/// Guesses are position estimates from the key distribution, so uniform
/// keys converge in O(log log n) probes; after `2 * log2(n)` probes the
/// search falls back to plain bisection, bounding the worst case.
pub fn interpolation_search_last(entries: &[Entry], key: Key) -> (Option<usize>, u32) {
    let n = entries.len();
    if n == 0 {
        return (None, 0);
    }
    let budget = 2 * (u64::BITS - (n as u64).leading_zeros());
    // Invariant: entries[..lo] have key <= `key`, entries[hi..] have
    // key > `key`; converge on the upper bound.
    let mut lo = 0usize;
    let mut hi = n;
    let mut probes = 0u32;
    while lo < hi {
        probes += 1;
        let idx = if probes <= budget {
            let klo = entries[lo].key;
            let khi = entries[hi - 1].key;
            if key < klo {
                // Everything in [lo, hi) exceeds the key; lo is the bound.
                break;
            }
            if key >= khi {
                lo = hi;
                break;
            }
            // klo <= key < khi, so the divisor is positive and the guess
            // lands strictly inside [lo, hi).
            let span = (hi - lo - 1) as u128;
            lo + (((key - klo) as u128 * span) / ((khi - klo) as u128)) as usize
        } else {
            lo + (hi - lo) / 2
        };
        if entries[idx].key <= key {
            lo = idx + 1;
        } else {
            hi = idx;
        }
    }
    if lo > 0 && entries[lo - 1].key == key {
        (Some(lo - 1), probes)
    } else {
        (None, probes)
    }
}
