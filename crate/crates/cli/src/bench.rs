//! Benchmark engine: builds an index variant, replays a generated or
//! file-loaded workload against it in one of four modes, and reports
//! wall-clock plus counter results.
//!
//! Latency is measured with a monotonic clock around batches of 10⁴
//! operations; per-op means are derived from the batch totals, since
//! timing individual microsecond-scale operations measures mostly the
//! clock. Counters are exactly reproducible for a fixed seed; wall-clock
//! numbers of course are not.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use rand::{Rng, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use osm_core::workload::{generate, read_workload};
use osm_core::{
    Backend, BPlusTree, BufferConfig, Entry, FilterMode, Key, OsmConfig, OsmTree, PageStore,
    PageStoreConfig, TreeConfig, Value, WorkloadSpec,
};

use crate::csv::{CsvSink, Row};

/// Operations per timed batch.
const BATCH: usize = 10_000;
/// Seed offset so lookup key choices never correlate with generation.
const LOOKUP_SEED_OFFSET: u64 = 0x517c_c1b7_2722_0a95;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    /// Time the puts of the whole stream.
    Ingest,
    /// Preload the stream, then time point lookups of existing keys.
    Reads,
    /// Preload part of the stream, then time an interleave of the rest
    /// with lookups.
    Mixed,
    /// Preload and drain, then time range scans at each selectivity.
    Scan,
}

impl Mode {
    pub fn as_str(&self) -> &'static str {
        match self {
            Mode::Ingest => "ingest",
            Mode::Reads => "reads",
            Mode::Mixed => "mixed",
            Mode::Scan => "scan",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum IndexKind {
    /// Plain B+-tree, every entry top-inserted, 50:50 splits.
    BplusBaseline,
    /// The buffered index with all filters.
    Osm,
    /// Ablation: no bloom filters at all.
    OsmNoBf,
    /// Ablation: shared tail filter only.
    OsmGlobalBfOnly,
}

impl IndexKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            IndexKind::BplusBaseline => "bplus-baseline",
            IndexKind::Osm => "osm",
            IndexKind::OsmNoBf => "osm-no-bf",
            IndexKind::OsmGlobalBfOnly => "osm-global-bf-only",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum BackendKind {
    Memory,
    File,
}

/// Everything one benchmark run needs. Built from CLI flags.
#[derive(Debug, Clone)]
pub struct BenchSpec {
    pub workload_path: Option<PathBuf>,
    pub n: u64,
    /// Nominal K in percent, matching the CLI flag.
    pub k_percent: f64,
    /// Nominal L in percent.
    pub l_percent: f64,
    pub seed: u64,
    pub mode: Mode,
    /// Fraction of timed operations that are reads in `Mixed`.
    pub read_ratio: f64,
    /// Fraction of the stream ingested before the timed phase
    /// (`Mixed`): the evaluation interleaves after 80% of the ingest.
    pub preload_fraction: f64,
    pub lookups: u64,
    pub scan_selectivities: Vec<f64>,
    pub scan_count: u64,
    pub index: IndexKind,
    pub backend: BackendKind,
    pub db_path: Option<PathBuf>,
    pub page_size: usize,
    pub bufferpool_bytes: usize,
    /// 0 means auto: 1% of n, at least 4096.
    pub buffer_entries: usize,
    pub flush_fraction: f64,
    pub qsort_threshold: f64,
    pub repetitions: u32,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.workload_path.is_none() && self.n == 0 {
            bail!("need --workload or a positive --n");
        }
        for (name, v) in [
            ("--k", self.k_percent / 100.0),
            ("--l", self.l_percent / 100.0),
            ("--ratio", self.read_ratio),
            ("--preload-fraction", self.preload_fraction),
        ] {
            if !(0.0..=1.0).contains(&v) {
                bail!("{name} out of range");
            }
        }
        if self.repetitions == 0 {
            bail!("--reps must be at least 1");
        }
        for &s in &self.scan_selectivities {
            if !(s > 0.0 && s <= 1.0) {
                bail!("scan selectivity {s} out of (0, 1]");
            }
        }
        Ok(())
    }

    pub fn effective_buffer_entries(&self, n: u64) -> usize {
        if self.buffer_entries > 0 {
            self.buffer_entries
        } else {
            ((n / 100) as usize).max(4096)
        }
    }
}

/// Wall-clock + counter outcome of one spec (median over repetitions).
/// `n`/`k_pct`/`l_pct`/`seed` are the effective workload identity: the
/// file header when a workload file was given, the inline flags otherwise.
#[derive(Debug, Clone)]
pub struct BenchResult {
    pub n: u64,
    pub k_pct: f64,
    pub l_pct: f64,
    pub seed: u64,
    pub total_ns: u64,
    pub min_total_ns: u64,
    pub ops: u64,
    pub mean_ns_per_op: f64,
    pub metrics: BTreeMap<&'static str, f64>,
}

impl BenchResult {
    pub fn metric(&self, name: &str) -> f64 {
        self.metrics.get(name).copied().unwrap_or(0.0)
    }
}

/// The index under test. Both variants own their page store; the file
/// backend keeps its scratch directory alive for the run.
enum Driver {
    Baseline { tree: BPlusTree, _scratch: Option<tempfile::TempDir> },
    Osm { tree: OsmTree, _scratch: Option<tempfile::TempDir> },
}

impl Driver {
    fn build(spec: &BenchSpec, n: u64) -> Result<Driver> {
        let (store_cfg, scratch) = store_config(spec)?;
        match spec.index {
            IndexKind::BplusBaseline => {
                let store = PageStore::from_config(&store_cfg)?;
                let tree = BPlusTree::new(store, TreeConfig::baseline())?;
                Ok(Driver::Baseline { tree, _scratch: scratch })
            }
            kind => {
                let filter_mode = match kind {
                    IndexKind::OsmNoBf => FilterMode::None,
                    IndexKind::OsmGlobalBfOnly => FilterMode::GlobalOnly,
                    _ => FilterMode::Full,
                };
                let cfg = OsmConfig {
                    buffer: BufferConfig {
                        capacity: spec.effective_buffer_entries(n),
                        flush_fraction: spec.flush_fraction,
                        unsorted_threshold_fraction: spec.qsort_threshold,
                        filter_mode,
                        ..BufferConfig::default()
                    },
                    tree: TreeConfig::default(),
                    store: store_cfg,
                };
                Ok(Driver::Osm { tree: OsmTree::new(cfg)?, _scratch: scratch })
            }
        }
    }

    fn put(&mut self, key: Key, value: Value) -> Result<()> {
        match self {
            Driver::Baseline { tree, .. } => {
                tree.top_insert(key, value)?;
                Ok(())
            }
            Driver::Osm { tree, .. } => Ok(tree.put(key, value)?),
        }
    }

    fn get(&mut self, key: Key) -> Result<Option<Value>> {
        match self {
            Driver::Baseline { tree, .. } => Ok(tree.search(key)?),
            Driver::Osm { tree, .. } => Ok(tree.get(key)?),
        }
    }

    fn scan(&mut self, lo: Key, hi: Key) -> Result<usize> {
        match self {
            Driver::Baseline { tree, .. } => Ok(tree.scan(lo, hi)?.len()),
            Driver::Osm { tree, .. } => Ok(tree.scan(lo, hi)?.len()),
        }
    }

    /// Settle outstanding buffered work (no-op for the baseline).
    fn settle(&mut self) -> Result<()> {
        match self {
            Driver::Baseline { .. } => Ok(()),
            Driver::Osm { tree, .. } => Ok(tree.drain_to_tree()?),
        }
    }

    fn metrics(&self) -> BTreeMap<&'static str, f64> {
        match self {
            Driver::Baseline { tree, .. } => {
                let t = tree.stats();
                let p = tree.pager_stats();
                let mut m = BTreeMap::new();
                m.insert("puts", t.top_inserts as f64);
                m.insert("top_inserted", t.top_inserts as f64);
                m.insert("bulk_loaded", 0.0);
                m.insert("bulk_fraction", 0.0);
                m.insert("tree_entry_count", tree.entry_count() as f64);
                m.insert("tree_leaf_nodes", t.leaf_nodes as f64);
                m.insert("tree_internal_nodes", t.internal_nodes as f64);
                m.insert("tree_node_count", t.node_count() as f64);
                m.insert("tree_leaf_splits", t.leaf_splits as f64);
                m.insert("pager_physical_reads", p.physical_reads as f64);
                m.insert("pager_physical_writes", p.physical_writes as f64);
                m
            }
            Driver::Osm { tree, .. } => tree.metrics(),
        }
    }
}

fn store_config(spec: &BenchSpec) -> Result<(PageStoreConfig, Option<tempfile::TempDir>)> {
    match spec.backend {
        BackendKind::Memory => Ok((
            PageStoreConfig { page_size: spec.page_size, ..PageStoreConfig::default() },
            None,
        )),
        BackendKind::File => {
            let (path, scratch) = match &spec.db_path {
                Some(p) => (p.clone(), None),
                None => {
                    let dir = tempfile::tempdir().context("creating scratch dir")?;
                    (dir.path().join("osm-bench.db"), Some(dir))
                }
            };
            // A fresh run never appends to a stale database.
            if path.exists() {
                std::fs::remove_file(&path)
                    .with_context(|| format!("removing stale {}", path.display()))?;
            }
            Ok((
                PageStoreConfig {
                    page_size: spec.page_size,
                    backend: Backend::File,
                    path: Some(path),
                    bufferpool_bytes: spec.bufferpool_bytes,
                },
                scratch,
            ))
        }
    }
}

/// Load or generate the workload stream for a spec.
pub fn load_entries(spec: &BenchSpec) -> Result<(Vec<Entry>, u64, f64, f64, u64)> {
    match &spec.workload_path {
        Some(path) => {
            let (wspec, entries) =
                read_workload(path).with_context(|| format!("reading {}", path.display()))?;
            Ok((entries, wspec.n, wspec.k_pct * 100.0, wspec.l_pct * 100.0, wspec.seed))
        }
        None => {
            let wspec = WorkloadSpec::new(
                spec.n,
                spec.k_percent / 100.0,
                spec.l_percent / 100.0,
                spec.seed,
            );
            let entries = generate(&wspec)?;
            Ok((entries, spec.n, spec.k_percent, spec.l_percent, spec.seed))
        }
    }
}

/// Time `ops` operations in batches; returns elapsed nanoseconds.
fn timed<F: FnMut(usize) -> Result<()>>(ops: usize, mut f: F) -> Result<u64> {
    let mut total = 0u64;
    let mut done = 0;
    while done < ops {
        let end = (done + BATCH).min(ops);
        let t0 = Instant::now();
        for i in done..end {
            f(i)?;
        }
        total += t0.elapsed().as_nanos() as u64;
        done = end;
    }
    Ok(total)
}

/// One repetition of the spec. Returns (timed ns, timed op count).
fn run_once(spec: &BenchSpec, entries: &[Entry], driver: &mut Driver) -> Result<(u64, u64)> {
    let n = entries.len();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed ^ LOOKUP_SEED_OFFSET);
    match spec.mode {
        Mode::Ingest => {
            let ns = timed(n, |i| driver.put(entries[i].key, entries[i].value))?;
            driver.settle()?;
            Ok((ns, n as u64))
        }
        Mode::Reads => {
            for e in entries {
                driver.put(e.key, e.value)?;
            }
            let lookups = spec.lookups as usize;
            let ns = timed(lookups, |_| {
                let key = entries[rng.random_range(0..n)].key;
                driver.get(key)?;
                Ok(())
            })?;
            Ok((ns, lookups as u64))
        }
        Mode::Mixed => {
            let preload = ((spec.preload_fraction * n as f64) as usize).min(n);
            for e in &entries[..preload] {
                driver.put(e.key, e.value)?;
            }
            // Interleave the remaining puts with lookups of already-written
            // keys until the stream is exhausted.
            let mut next = preload;
            let writes = n - preload;
            let reads = if spec.read_ratio >= 1.0 {
                spec.lookups as usize
            } else {
                ((writes as f64) * spec.read_ratio / (1.0 - spec.read_ratio)).round() as usize
            };
            let total_ops = writes + reads;
            let mut reads_left = reads;
            let ns = timed(total_ops, |_| {
                let do_read = next >= n
                    || (reads_left > 0 && rng.random_range(0.0..1.0) < spec.read_ratio);
                if do_read {
                    let bound = next.max(1);
                    let key = entries[rng.random_range(0..bound)].key;
                    driver.get(key)?;
                    reads_left = reads_left.saturating_sub(1);
                } else {
                    driver.put(entries[next].key, entries[next].value)?;
                    next += 1;
                }
                Ok(())
            })?;
            Ok((ns, total_ops as u64))
        }
        Mode::Scan => {
            for e in entries {
                driver.put(e.key, e.value)?;
            }
            driver.settle()?;
            let mut total = 0u64;
            let mut ops = 0u64;
            for &sel in &spec.scan_selectivities {
                let width = ((sel * n as f64) as u64).max(1);
                let count = spec.scan_count as usize;
                total += timed(count, |_| {
                    let lo = rng.random_range(0..(n as u64).saturating_sub(width) + 1);
                    driver.scan(lo, lo + width - 1)?;
                    Ok(())
                })?;
                ops += count as u64;
            }
            Ok((total, ops))
        }
    }
}

/// Run a spec (all repetitions), append the median row to the sink, and
/// return the median result.
pub fn run(spec: &BenchSpec, sink: &mut CsvSink, run_id: u64) -> Result<BenchResult> {
    spec.validate()?;
    let (entries, n, k_pct, l_pct, seed) = load_entries(spec)?;
    let mut reps: Vec<(u64, u64, BTreeMap<&'static str, f64>)> = Vec::new();
    for _ in 0..spec.repetitions {
        let mut driver = Driver::build(spec, n)?;
        let (ns, ops) = run_once(spec, &entries, &mut driver)?;
        reps.push((ns, ops, driver.metrics()));
    }
    reps.sort_by_key(|r| r.0);
    let min_total_ns = reps[0].0;
    let (total_ns, ops, metrics) = reps.swap_remove(reps.len() / 2);
    let mean_ns_per_op = if ops == 0 { 0.0 } else { total_ns as f64 / ops as f64 };

    let result = BenchResult {
        n,
        k_pct,
        l_pct,
        seed,
        total_ns,
        min_total_ns,
        ops,
        mean_ns_per_op,
        metrics,
    };
    let ratio = match spec.mode {
        Mode::Mixed => spec.read_ratio,
        // The ratio column doubles as the selectivity for scan rows.
        Mode::Scan => spec.scan_selectivities.first().copied().unwrap_or(0.0),
        _ => 0.0,
    };
    let row = Row {
        run_id,
        index: spec.index.as_str().into(),
        mode: spec.mode.as_str().into(),
        n,
        k: k_pct,
        l: l_pct,
        seed,
        ratio,
        buffer_entries: if spec.index == IndexKind::BplusBaseline {
            0
        } else {
            spec.effective_buffer_entries(n) as u64
        },
        flush_fraction: spec.flush_fraction,
        qsort_threshold: spec.qsort_threshold,
        total_ns,
        mean_ns_per_op,
        bulk_frac: result.metric("bulk_fraction"),
        top_frac: top_fraction(&result),
        node_count_internal: result.metric("tree_internal_nodes") as u64,
        node_count_leaf: result.metric("tree_leaf_nodes") as u64,
        sorts_adaptive: result.metric("buffer_sorts_adaptive") as u64,
        sorts_merge: result.metric("buffer_sorts_merge") as u64,
        pages_scanned: result.metric("buffer_pages_scanned") as u64,
        bf_probes: result.metric("buffer_bf_probes") as u64,
        bf_positives: result.metric("buffer_bf_positives") as u64,
        physical_reads: result.metric("pager_physical_reads") as u64,
    };
    sink.append(&row)?;
    Ok(result)
}

fn top_fraction(r: &BenchResult) -> f64 {
    let top = r.metric("top_inserted");
    let bulk = r.metric("bulk_loaded");
    if top + bulk == 0.0 {
        0.0
    } else {
        top / (top + bulk)
    }
}

/// Human summary printed after each run.
pub fn print_result(spec: &BenchSpec, r: &BenchResult) {
    println!(
        "[{}] index={} n={} k={}% l={}% seed={}",
        spec.mode.as_str(),
        spec.index.as_str(),
        r.n,
        r.k_pct,
        r.l_pct,
        r.seed
    );
    println!(
        "  total {:.3} ms   mean {:.0} ns/op   ops {}   (min across reps {:.3} ms)",
        r.total_ns as f64 / 1e6,
        r.mean_ns_per_op,
        r.ops,
        r.min_total_ns as f64 / 1e6,
    );
    println!(
        "  bulk_frac {:.3}  top {}  bulk {}  nodes {} ({} leaf / {} internal)",
        r.metric("bulk_fraction"),
        r.metric("top_inserted") as u64,
        r.metric("bulk_loaded") as u64,
        r.metric("tree_node_count") as u64,
        r.metric("tree_leaf_nodes") as u64,
        r.metric("tree_internal_nodes") as u64,
    );
    println!(
        "  sorts adaptive/merge {}/{}  pages_scanned {}  bf_probes {}  physical_reads {}",
        r.metric("buffer_sorts_adaptive") as u64,
        r.metric("buffer_sorts_merge") as u64,
        r.metric("buffer_pages_scanned") as u64,
        r.metric("buffer_bf_probes") as u64,
        r.metric("pager_physical_reads") as u64,
    );
}
