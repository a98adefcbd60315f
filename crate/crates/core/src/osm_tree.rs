//! The OSM-tree: the ingestion buffer from [`crate::osm_buffer`] stacked on
//! the B+-tree from [`crate::bptree`].
//!
//! Writes append to the buffer; when it fills, a flush evicts a sorted
//! batch and routes it into the tree along two paths:
//!
//! * keys above the current tree maximum are *bulk loaded* — packed into
//!   fresh leaves and attached at the rightmost edge without any per-key
//!   descent;
//! * keys overlapping the tree's range fall back to ordinary top-inserts,
//!   a page-sized batch at a time, re-checking the overlap after each
//!   batch so the load switches to bulk the moment the batch crosses the
//!   old maximum.
//!
//! The sortedness of the input therefore directly sets the fraction of
//! entries that take the cheap path: a fully sorted stream never
//! top-inserts at all, a fully scrambled one almost always does.
//!
//! Reads consult the buffer first (it only holds versions newer than
//! anything flushed), then the tree, gated by a zonemap mirroring the
//! tree's key range. Sequence numbers assigned at `put` time make version
//! order explicit end to end.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::bptree::{BPlusTree, TreeConfig, TreeStats};
use crate::entry::{Entry, Key, Seq, Value};
use crate::error::Result;
use crate::osm_buffer::{BufferConfig, BufferStats, FlushPlan, OsmBuffer};
use crate::pager::{PageStore, PageStoreConfig, PagerStats};
use crate::zonemap::Zonemap;

/// Top-level configuration: one knob set per layer.
#[derive(Debug, Clone, Default)]
pub struct OsmConfig {
    pub buffer: BufferConfig,
    pub tree: TreeConfig,
    pub store: PageStoreConfig,
}

/// Counters for the glue layer. Buffer- and tree-level work is tracked by
/// [`BufferStats`] and [`TreeStats`]; these cover routing and read paths.
#[derive(Debug, Default, Clone, Copy)]
pub struct OsmStats {
    pub puts: u64,
    pub gets: u64,
    pub scans: u64,
    pub flush_cycles: u64,
    /// Flushed entries that took the top-insert path.
    pub top_inserted: u64,
    /// Flushed entries that took the bulk-load path.
    pub bulk_loaded: u64,
    /// Older versions dropped at flush time or overwritten in the tree.
    pub shadowed_versions: u64,
    pub buffer_hits: u64,
    pub tree_hits: u64,
    pub misses: u64,
    /// Tree lookups skipped because the key missed the tree's range.
    pub tree_zonemap_skips: u64,
    pub bulk_load_ns: u64,
    pub top_insert_ns: u64,
    pub buffer_query_ns: u64,
    pub tree_search_ns: u64,
}

impl OsmStats {
    /// Fraction of flushed entries that went down the bulk path.
    pub fn bulk_fraction(&self) -> f64 {
        let total = self.top_inserted + self.bulk_loaded;
        if total == 0 {
            0.0
        } else {
            self.bulk_loaded as f64 / total as f64
        }
    }
}

/// The ordered index. See the module docs for the write/read paths.
pub struct OsmTree {
    buffer: OsmBuffer,
    tree: BPlusTree,
    /// Mirror of the tree's key range, refreshed after every flush.
    tree_zonemap: Zonemap,
    next_seq: Seq,
    stats: OsmStats,
}

impl OsmTree {
    pub fn new(cfg: OsmConfig) -> Result<Self> {
        let store = PageStore::from_config(&cfg.store)?;
        let tree = BPlusTree::new(store, cfg.tree)?;
        let buffer = OsmBuffer::new(cfg.buffer)?;
        let mut this = OsmTree {
            buffer,
            tree,
            tree_zonemap: Zonemap::new(),
            next_seq: 0,
            stats: OsmStats::default(),
        };
        this.refresh_tree_zonemap();
        Ok(this)
    }

    /// In-memory index with the given buffer capacity; everything else at
    /// defaults. The common construction in tests and examples.
    pub fn in_memory(buffer_capacity: usize) -> Result<Self> {
        let mut cfg = OsmConfig::default();
        cfg.buffer.capacity = buffer_capacity;
        OsmTree::new(cfg)
    }

    pub fn buffer(&self) -> &OsmBuffer {
        &self.buffer
    }

    pub fn buffer_mut(&mut self) -> &mut OsmBuffer {
        &mut self.buffer
    }

    pub fn tree(&self) -> &BPlusTree {
        &self.tree
    }

    pub fn tree_mut(&mut self) -> &mut BPlusTree {
        &mut self.tree
    }

    pub fn stats(&self) -> OsmStats {
        self.stats
    }

    pub fn buffer_stats(&self) -> BufferStats {
        *self.buffer.stats()
    }

    pub fn tree_stats(&self) -> TreeStats {
        self.tree.stats()
    }

    pub fn pager_stats(&self) -> PagerStats {
        self.tree.pager_stats()
    }

    /// Total live entries across both layers.
    pub fn len(&self) -> u64 {
        self.buffer.len() as u64 + self.tree.entry_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Every accepted put is either live in a layer or accounted as a
    /// shadowed older version. Cheap enough to assert after every phase.
    pub fn conservation_holds(&self) -> bool {
        self.stats.puts
            == self.buffer.len() as u64 + self.tree.entry_count() + self.stats.shadowed_versions
    }

    pub fn put(&mut self, key: Key, value: Value) -> Result<()> {
        self.stats.puts += 1;
        let entry = Entry::new(key, value, self.next_seq);
        self.next_seq += 1;
        if self.buffer.insert(entry)? {
            self.flush_cycle()?;
        }
        Ok(())
    }

    /// Newest visible value for `key`.
    pub fn get(&mut self, key: Key) -> Result<Option<Value>> {
        self.stats.gets += 1;
        self.buffer.maybe_query_driven_sort();
        let t0 = Instant::now();
        let buffered = self.buffer.point_query(key);
        self.stats.buffer_query_ns += t0.elapsed().as_nanos() as u64;
        if let Some(v) = buffered {
            self.stats.buffer_hits += 1;
            return Ok(Some(v));
        }
        if !self.tree_zonemap.overlaps(key) {
            self.stats.tree_zonemap_skips += 1;
            self.stats.misses += 1;
            return Ok(None);
        }
        let t0 = Instant::now();
        let found = self.tree.search(key)?;
        self.stats.tree_search_ns += t0.elapsed().as_nanos() as u64;
        match found {
            Some(v) => {
                self.stats.tree_hits += 1;
                Ok(Some(v))
            }
            None => {
                self.stats.misses += 1;
                Ok(None)
            }
        }
    }

    /// All live keys in `[lo, hi]`, ascending, newest version per key.
    pub fn scan(&mut self, lo: Key, hi: Key) -> Result<Vec<(Key, Value)>> {
        self.stats.scans += 1;
        self.buffer.maybe_query_driven_sort();
        // Newest buffered version per key; `seq` resolves buffered dups.
        let mut buffered: BTreeMap<Key, (Seq, Value)> = BTreeMap::new();
        for e in self.buffer.range_query(lo, hi) {
            match buffered.get(&e.key) {
                Some(&(seq, _)) if seq >= e.seq => {}
                _ => {
                    buffered.insert(e.key, (e.seq, e.value));
                }
            }
        }
        let mut from_tree = Vec::new();
        self.tree.scan_into(lo, hi, &mut from_tree)?;
        // Merge the two ascending streams; the buffer never holds anything
        // older than the tree's version of the same key, so it wins ties.
        let mut out = Vec::with_capacity(buffered.len() + from_tree.len());
        let mut buf_iter = buffered.into_iter().peekable();
        let mut tree_iter = from_tree.into_iter().peekable();
        loop {
            match (buf_iter.peek(), tree_iter.peek()) {
                (Some(&(bk, _)), Some(&(tk, _))) => {
                    if bk < tk {
                        let (k, (_, v)) = buf_iter.next().unwrap();
                        out.push((k, v));
                    } else if tk < bk {
                        out.push(tree_iter.next().unwrap());
                    } else {
                        let (k, (_, v)) = buf_iter.next().unwrap();
                        tree_iter.next();
                        out.push((k, v));
                    }
                }
                (Some(_), None) => {
                    let (k, (_, v)) = buf_iter.next().unwrap();
                    out.push((k, v));
                }
                (None, Some(_)) => out.push(tree_iter.next().unwrap()),
                (None, None) => break,
            }
        }
        Ok(out)
    }

    /// Flush one quantum out of the buffer, whether or not it is full.
    pub fn flush_now(&mut self) -> Result<()> {
        if self.buffer.is_empty() {
            return Ok(());
        }
        self.flush_cycle()
    }

    /// Flush until the buffer is empty, then push tree pages to storage.
    /// Used when an ingest phase ends and the index should be durable.
    pub fn drain_to_tree(&mut self) -> Result<()> {
        while !self.buffer.is_empty() {
            self.flush_cycle()?;
        }
        self.tree.flush_store()
    }

    fn flush_cycle(&mut self) -> Result<()> {
        let plan = self.buffer.plan_flush()?;
        self.stats.flush_cycles += 1;
        self.apply_flush(plan)
    }

    /// Route a flush batch into the tree: bulk-load the part above the
    /// tree's maximum, top-insert the overlapping part in page-sized
    /// batches, re-checking the overlap after each batch.
    fn apply_flush(&mut self, plan: FlushPlan) -> Result<()> {
        let mut entries = plan.entries;
        let before = entries.len();
        dedup_keep_newest(&mut entries);
        self.stats.shadowed_versions += (before - entries.len()) as u64;

        let batch = self.buffer.config().page_entries;
        let n = entries.len();
        let mut i = 0;
        while i < n {
            match self.tree.max_key() {
                Some(tree_max) if entries[i].key <= tree_max => {
                    let t0 = Instant::now();
                    let batch_end = (i + batch).min(n);
                    while i < batch_end && entries[i].key <= tree_max {
                        if self.tree.top_insert(entries[i].key, entries[i].value)? {
                            self.stats.shadowed_versions += 1;
                        }
                        self.stats.top_inserted += 1;
                        i += 1;
                    }
                    self.stats.top_insert_ns += t0.elapsed().as_nanos() as u64;
                }
                _ => {
                    // Everything from here on sits above the tree: one
                    // bulk load finishes the flush.
                    let t0 = Instant::now();
                    self.tree.bulk_load_run(&entries[i..])?;
                    self.stats.bulk_load_ns += t0.elapsed().as_nanos() as u64;
                    self.stats.bulk_loaded += (n - i) as u64;
                    i = n;
                }
            }
        }
        self.refresh_tree_zonemap();
        Ok(())
    }

    fn refresh_tree_zonemap(&mut self) {
        self.tree_zonemap.reset();
        if let (Some(lo), Some(hi)) = (self.tree.min_key(), self.tree.max_key()) {
            self.tree_zonemap.update(lo);
            self.tree_zonemap.update(hi);
        }
    }

    pub fn tree_zonemap(&self) -> &Zonemap {
        &self.tree_zonemap
    }

    /// Every counter from every layer as a flat name → value map, for
    /// harnesses that serialize stats without knowing the layer structs.
    pub fn metrics(&self) -> BTreeMap<&'static str, f64> {
        let s = self.stats;
        let b = self.buffer.stats();
        let t = self.tree.stats();
        let p = self.tree.pager_stats();
        let mut m = BTreeMap::new();
        m.insert("puts", s.puts as f64);
        m.insert("gets", s.gets as f64);
        m.insert("scans", s.scans as f64);
        m.insert("flush_cycles", s.flush_cycles as f64);
        m.insert("top_inserted", s.top_inserted as f64);
        m.insert("bulk_loaded", s.bulk_loaded as f64);
        m.insert("bulk_fraction", s.bulk_fraction());
        m.insert("shadowed_versions", s.shadowed_versions as f64);
        m.insert("buffer_hits", s.buffer_hits as f64);
        m.insert("tree_hits", s.tree_hits as f64);
        m.insert("misses", s.misses as f64);
        m.insert("tree_zonemap_skips", s.tree_zonemap_skips as f64);
        m.insert("bulk_load_ns", s.bulk_load_ns as f64);
        m.insert("top_insert_ns", s.top_insert_ns as f64);
        m.insert("buffer_query_ns", s.buffer_query_ns as f64);
        m.insert("tree_search_ns", s.tree_search_ns as f64);
        m.insert("buffer_len", self.buffer.len() as f64);
        m.insert("buffer_sorts_adaptive", b.sorts_adaptive as f64);
        m.insert("buffer_sorts_merge", b.sorts_merge as f64);
        m.insert("buffer_query_driven_sorts", b.query_driven_sorts as f64);
        m.insert("buffer_sort_comparisons", b.sort_comparisons as f64);
        m.insert("buffer_sort_ns", b.sort_ns as f64);
        m.insert("buffer_metadata_ns", b.metadata_ns as f64);
        m.insert("buffer_pages_scanned", b.pages_scanned as f64);
        m.insert("buffer_bf_probes", b.bf_probes as f64);
        m.insert("buffer_bf_positives", b.bf_positives as f64);
        m.insert("buffer_zonemap_skips", b.zonemap_skips as f64);
        m.insert("tree_entry_count", self.tree.entry_count() as f64);
        m.insert("tree_top_inserts", t.top_inserts as f64);
        m.insert("tree_fast_path_inserts", t.fast_path_inserts as f64);
        m.insert("tree_leaf_splits", t.leaf_splits as f64);
        m.insert("tree_internal_splits", t.internal_splits as f64);
        m.insert("tree_leaf_nodes", t.leaf_nodes as f64);
        m.insert("tree_internal_nodes", t.internal_nodes as f64);
        m.insert("tree_node_count", t.node_count() as f64);
        m.insert("pager_logical_reads", p.logical_reads as f64);
        m.insert("pager_physical_reads", p.physical_reads as f64);
        m.insert("pager_physical_writes", p.physical_writes as f64);
        m.insert("pager_evictions", p.evictions as f64);
        m
    }
}

/// Keep only the newest version of each key. Input ascending by
/// `(key, seq)`, so the last entry of an equal-key group wins.
fn dedup_keep_newest(entries: &mut Vec<Entry>) {
    if entries.len() < 2 {
        return;
    }
    let mut w = 0;
    for r in 0..entries.len() {
        if r + 1 == entries.len() || entries[r + 1].key != entries[r].key {
            entries[w] = entries[r];
            w += 1;
        }
    }
    entries.truncate(w);
}

/// Feasibility verdict from [`buffer_size_bound`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BufferBound {
    /// Largest buffer size, as a fraction `p` of total data size, that
    /// keeps worst-case point-lookup overhead within the target.
    Feasible { max_fraction: f64 },
    /// No buffer size meets the target; feasible slowdown targets are
    /// strictly above `min_delta`.
    Infeasible { min_delta: f64 },
}

/// Closed-form bound on the buffer size that keeps worst-case point
/// lookups within `(1 + delta)` times the plain tree's cost:
///
/// ```text
/// p < 2 * (delta * log_B(N_B) - 1)
///     / (v + f_G * f_p * N_B - 1 - 2 * log_B(N_B))
/// ```
///
/// with `N_B` the tree size in pages, `B` its fanout, `v` the ratio of
/// existing to empty point queries, and `f_G`/`f_p` the false-positive
/// rates of the shared and per-page filters. The model assumes the worst
/// case where no zonemap skips anything, so it is a conservative tuning
/// aid, not a promise.
pub fn buffer_size_bound(
    delta: f64,
    pages_in_tree: f64,
    fanout: f64,
    existing_query_ratio: f64,
    fpr_global: f64,
    fpr_page: f64,
) -> BufferBound {
    let log_b = pages_in_tree.ln() / fanout.ln();
    let min_delta = 1.0 / log_b;
    if delta <= min_delta {
        return BufferBound::Infeasible { min_delta };
    }
    let numerator = 2.0 * (delta * log_b - 1.0);
    let denominator =
        existing_query_ratio + fpr_global * fpr_page * pages_in_tree - 1.0 - 2.0 * log_b;
    if denominator <= 0.0 {
        // Trees small enough to flip the denominator impose no constraint:
        // the buffer overhead can never dominate the lookup.
        return BufferBound::Feasible { max_fraction: f64::INFINITY };
    }
    BufferBound::Feasible { max_fraction: numerator / denominator }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::workload::{generate, WorkloadSpec};

    fn small_tree(capacity: usize) -> OsmTree {
        OsmTree::in_memory(capacity).unwrap()
    }

    #[test]
    fn sorted_ingest_never_top_inserts_or_sorts() {
        let mut idx = small_tree(1000);
        for k in 0..10_000u64 {
            idx.put(k, k * 2).unwrap();
        }
        assert_eq!(idx.stats().top_inserted, 0);
        assert_eq!(idx.buffer_stats().sorts_performed(), 0);
        assert!(idx.stats().flush_cycles > 0);
        assert!(idx.conservation_holds());
        for k in (0..10_000u64).step_by(997) {
            assert_eq!(idx.get(k).unwrap(), Some(k * 2));
        }
        assert_eq!(idx.get(10_000).unwrap(), None);
        idx.tree_mut().check_structure().unwrap();
    }

    #[test]
    fn overwrites_stay_visible_across_flushes() {
        let mut idx = small_tree(64);
        idx.put(7, 1).unwrap();
        idx.drain_to_tree().unwrap();
        assert_eq!(idx.get(7).unwrap(), Some(1));
        idx.put(7, 2).unwrap();
        assert_eq!(idx.get(7).unwrap(), Some(2), "buffered version shadows the tree");
        idx.drain_to_tree().unwrap();
        assert_eq!(idx.get(7).unwrap(), Some(2), "tree upsert keeps the newest");
        assert_eq!(idx.stats().shadowed_versions, 1);
        assert!(idx.conservation_holds());
    }

    #[test]
    fn flush_routing_splits_on_tree_max() {
        let mut idx = small_tree(4096);
        // Preload the tree with 0..=1000 via a synthetic flush.
        let entries: Vec<Entry> = (0..=1000u64).map(|k| Entry::new(k, k, k)).collect();
        idx.apply_flush(FlushPlan {
            runs: vec![(0, entries.len())],
            entries,
            pre_sorted: true,
        })
        .unwrap();
        assert_eq!(idx.stats().bulk_loaded, 1001);
        assert_eq!(idx.stats().top_inserted, 0);

        // 50 overlapping keys, then 100 above the max: the flush must
        // top-insert exactly the overlap and bulk-load the rest.
        let mut entries: Vec<Entry> = (900..950u64).map(|k| Entry::new(k, k + 1, 2000 + k)).collect();
        entries.extend((1001..1101u64).map(|k| Entry::new(k, k + 1, 3000 + k)));
        idx.apply_flush(FlushPlan {
            runs: vec![(0, entries.len())],
            entries,
            pre_sorted: true,
        })
        .unwrap();
        assert_eq!(idx.stats().top_inserted, 50);
        assert_eq!(idx.stats().bulk_loaded, 1001 + 100);
        assert_eq!(idx.stats().shadowed_versions, 50, "overlap upserts older versions");
        assert_eq!(idx.get(920).unwrap(), Some(921));
        assert_eq!(idx.get(1100).unwrap(), Some(1101));
        idx.tree_mut().check_structure().unwrap();
    }

    #[test]
    fn matches_oracle_under_mixed_churn() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_xoshiro::Xoshiro256PlusPlus::seed_from_u64(21);
        let mut idx = small_tree(512);
        let mut oracle: BTreeMap<Key, Value> = BTreeMap::new();
        for step in 0..20_000u64 {
            let key = rng.random_range(0..2_000u64);
            match rng.random_range(0..10) {
                0..=5 => {
                    idx.put(key, step).unwrap();
                    oracle.insert(key, step);
                }
                6..=8 => {
                    assert_eq!(idx.get(key).unwrap(), oracle.get(&key).copied(), "step {step}");
                }
                _ => {
                    let hi = key + rng.random_range(0..100);
                    let got = idx.scan(key, hi).unwrap();
                    let want: Vec<(Key, Value)> =
                        oracle.range(key..=hi).map(|(&k, &v)| (k, v)).collect();
                    assert_eq!(got, want, "step {step}");
                }
            }
        }
        assert!(idx.conservation_holds());
        idx.tree_mut().check_structure().unwrap();
    }

    #[test]
    fn scrambled_ingest_matches_oracle_and_top_inserts() {
        let spec = WorkloadSpec::new(20_000, 1.0, 1.0, 17);
        let entries = generate(&spec).unwrap();
        let mut idx = small_tree(1000);
        for e in &entries {
            idx.put(e.key, e.value).unwrap();
        }
        idx.drain_to_tree().unwrap();
        let s = idx.stats();
        let routed = s.top_inserted + s.bulk_loaded;
        assert!(
            s.top_inserted as f64 / routed as f64 > 0.9,
            "scrambled data should overlap the tree almost always: {s:?}"
        );
        for k in (0..20_000u64).step_by(1013) {
            assert_eq!(idx.get(k).unwrap(), Some(k));
        }
        assert!(idx.conservation_holds());
    }

    #[test]
    fn tree_zonemap_mirrors_tree_range() {
        let mut idx = small_tree(256);
        for k in 500..3000u64 {
            idx.put(k, k).unwrap();
        }
        idx.drain_to_tree().unwrap();
        let zm = idx.tree_zonemap();
        assert_eq!(Some(zm.max_key()), idx.tree().max_key());
        assert_eq!(Some(zm.min_key()), idx.tree().min_key());
        // Keys outside the range never touch the tree.
        let skips = idx.stats().tree_zonemap_skips;
        assert_eq!(idx.get(3).unwrap(), None);
        assert_eq!(idx.get(9999).unwrap(), None);
        assert_eq!(idx.stats().tree_zonemap_skips, skips + 2);
    }

    #[test]
    fn scan_merges_layers_newest_first() {
        let mut idx = small_tree(128);
        for k in 0..200u64 {
            idx.put(k, k).unwrap();
        }
        idx.drain_to_tree().unwrap();
        for k in (0..200u64).step_by(10) {
            idx.put(k, k + 10_000).unwrap();
        }
        let got = idx.scan(0, 199).unwrap();
        assert_eq!(got.len(), 200);
        for (i, &(k, v)) in got.iter().enumerate() {
            assert_eq!(k, i as u64);
            let want = if k % 10 == 0 { k + 10_000 } else { k };
            assert_eq!(v, want, "key {k}");
        }
        assert_eq!(idx.scan(500, 600).unwrap(), vec![]);
    }

    #[test]
    fn buffer_size_bound_matches_hand_evaluation() {
        // v=1, f_G=f_p=0.008, N_B=1e6 pages, B=256, delta=0.5.
        let log_b = 1e6f64.ln() / 256f64.ln();
        let want = 2.0 * (0.5 * log_b - 1.0) / (1.0 + 0.008 * 0.008 * 1e6 - 1.0 - 2.0 * log_b);
        match buffer_size_bound(0.5, 1e6, 256.0, 1.0, 0.008, 0.008) {
            BufferBound::Feasible { max_fraction } => {
                assert!((max_fraction - want).abs() <= 1e-12 * want.abs());
            }
            other => panic!("expected feasible bound, got {other:?}"),
        }
    }

    #[test]
    fn buffer_size_bound_flags_infeasible_targets() {
        let log_b = 1e6f64.ln() / 256f64.ln();
        let min = 1.0 / log_b;
        match buffer_size_bound(min, 1e6, 256.0, 1.0, 0.008, 0.008) {
            BufferBound::Infeasible { min_delta } => {
                assert!((min_delta - min).abs() < 1e-15);
            }
            other => panic!("delta at the boundary must be infeasible, got {other:?}"),
        }
        // Marginally above the boundary is feasible, and the bound grows
        // with delta.
        let lo = buffer_size_bound(min + 0.01, 1e6, 256.0, 1.0, 0.008, 0.008);
        let hi = buffer_size_bound(min + 0.5, 1e6, 256.0, 1.0, 0.008, 0.008);
        match (lo, hi) {
            (
                BufferBound::Feasible { max_fraction: a },
                BufferBound::Feasible { max_fraction: b },
            ) => {
                assert!(a > 0.0 && b > a, "monotone in delta: {a} vs {b}");
            }
            other => panic!("expected feasible bounds, got {other:?}"),
        }
    }

    #[test]
    fn dedup_keeps_newest_version_per_key() {
        let mut entries = vec![
            Entry::new(1, 10, 0),
            Entry::new(2, 20, 1),
            Entry::new(2, 21, 5),
            Entry::new(2, 22, 9),
            Entry::new(3, 30, 2),
        ];
        dedup_keep_newest(&mut entries);
        let keys: Vec<(Key, Value)> = entries.iter().map(|e| (e.key, e.value)).collect();
        assert_eq!(keys, vec![(1, 10), (2, 22), (3, 30)]);
    }
}
