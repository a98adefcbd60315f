//! CSV output with a stable, versioned schema.
//!
//! Every result file starts with a comment line carrying the schema
//! version and a hash of the header, so downstream tooling can refuse
//! files whose column layout it does not understand. Rows are appended;
//! re-running a benchmark extends the same file.

use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Column order is the public contract; never reorder, only append in a
/// new schema version.
pub const COLUMNS: [&str; 23] = [
    "run_id",
    "index",
    "mode",
    "n",
    "k",
    "l",
    "seed",
    "ratio",
    "buffer_entries",
    "flush_fraction",
    "qsort_threshold",
    "total_ns",
    "mean_ns_per_op",
    "bulk_frac",
    "top_frac",
    "node_count_internal",
    "node_count_leaf",
    "sorts_adaptive",
    "sorts_merge",
    "pages_scanned",
    "bf_probes",
    "bf_positives",
    "physical_reads",
];

/// FNV-1a over the joined header; cheap, stable, and good enough to catch
/// accidental column edits.
pub fn schema_hash() -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for byte in COLUMNS.join(",").bytes() {
        h ^= u64::from(byte);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// One benchmark result row. Everything is pre-rendered to strings by the
/// caller except the common numeric fields.
#[derive(Debug, Clone)]
pub struct Row {
    pub run_id: u64,
    pub index: String,
    pub mode: String,
    pub n: u64,
    pub k: f64,
    pub l: f64,
    pub seed: u64,
    pub ratio: f64,
    pub buffer_entries: u64,
    pub flush_fraction: f64,
    pub qsort_threshold: f64,
    pub total_ns: u64,
    pub mean_ns_per_op: f64,
    pub bulk_frac: f64,
    pub top_frac: f64,
    pub node_count_internal: u64,
    pub node_count_leaf: u64,
    pub sorts_adaptive: u64,
    pub sorts_merge: u64,
    pub pages_scanned: u64,
    pub bf_probes: u64,
    pub bf_positives: u64,
    pub physical_reads: u64,
}

impl Row {
    fn render(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{},{},{},{:.2},{:.6},{:.6},{},{},{},{},{},{},{},{}",
            self.run_id,
            self.index,
            self.mode,
            self.n,
            self.k,
            self.l,
            self.seed,
            self.ratio,
            self.buffer_entries,
            self.flush_fraction,
            self.qsort_threshold,
            self.total_ns,
            self.mean_ns_per_op,
            self.bulk_frac,
            self.top_frac,
            self.node_count_internal,
            self.node_count_leaf,
            self.sorts_adaptive,
            self.sorts_merge,
            self.pages_scanned,
            self.bf_probes,
            self.bf_positives,
            self.physical_reads,
        )
    }
}

/// Appends rows to `osm-bench.csv` in the output directory. The directory
/// comes from `OSM_CSV_DIR` when set, otherwise the current directory.
pub struct CsvSink {
    path: Option<PathBuf>,
}

impl CsvSink {
    /// `enabled = false` turns the sink into a no-op (`--no-csv`).
    pub fn new(enabled: bool) -> Self {
        if !enabled {
            return CsvSink { path: None };
        }
        let dir = std::env::var_os("OSM_CSV_DIR")
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("."));
        CsvSink { path: Some(dir.join("osm-bench.csv")) }
    }

    pub fn path(&self) -> Option<&Path> {
        self.path.as_deref()
    }

    pub fn append(&mut self, row: &Row) -> Result<()> {
        let Some(path) = &self.path else {
            return Ok(());
        };
        if let Some(dir) = path.parent() {
            std::fs::create_dir_all(dir)
                .with_context(|| format!("creating CSV directory {}", dir.display()))?;
        }
        let fresh = !path.exists();
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .with_context(|| format!("opening {}", path.display()))?;
        if fresh {
            writeln!(f, "# osm-bench schema v{} hash {:016x}", SCHEMA_VERSION, schema_hash())?;
            writeln!(f, "{}", COLUMNS.join(","))?;
        }
        writeln!(f, "{}", row.render())?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_is_stable() {
        // Frozen: changing any column name or the order is a schema break
        // and must come with a version bump.
        assert_eq!(schema_hash(), 0x5ca5_a06a_b00a_4d87);
        assert_eq!(COLUMNS.len(), 23);
        assert_eq!(COLUMNS[0], "run_id");
        assert_eq!(COLUMNS[22], "physical_reads");
    }

    #[test]
    fn rows_render_one_line() {
        let row = Row {
            run_id: 1,
            index: "osm".into(),
            mode: "ingest".into(),
            n: 10,
            k: 0.05,
            l: 0.01,
            seed: 42,
            ratio: 0.5,
            buffer_entries: 100,
            flush_fraction: 0.5,
            qsort_threshold: 0.1,
            total_ns: 1000,
            mean_ns_per_op: 100.0,
            bulk_frac: 1.0,
            top_frac: 0.0,
            node_count_internal: 1,
            node_count_leaf: 2,
            sorts_adaptive: 0,
            sorts_merge: 0,
            pages_scanned: 0,
            bf_probes: 0,
            bf_positives: 0,
            physical_reads: 0,
        };
        let line = row.render();
        assert_eq!(line.split(',').count(), COLUMNS.len());
        assert!(!line.contains('\n'));
    }
}
