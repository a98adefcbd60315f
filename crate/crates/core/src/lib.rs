//! Sortedness-adaptive ordered indexing.
//!
//! The centerpiece is [`OsmTree`]: a B+-tree fronted by a sortedness-aware
//! ingestion buffer. The buffer observes how ordered the incoming stream is,
//! keeps cheap running estimates of that order, and uses them to decide how
//! much work each flush actually needs — fully sorted prefixes are handed to
//! the tree as bulk-loaded runs, overlapping stragglers fall back to ordinary
//! top inserts, and everything in between lands on a spectrum between the two.
//!
//! Supporting pieces, each usable on its own:
//!
//! - [`workload`]: a (K, L) workload generator. `K` controls *how many*
//!   entries are out of place, `L` controls *how far* they may travel. The
//!   generator is deterministic per seed and round-trips through a small
//!   binary file format.
//! - [`sorting`]: a stable merge sort plus a two-pass adaptive sort that
//!   exploits near-sortedness, and the rule for picking between them.
//! - [`filters`] / [`zonemap`]: blocked membership and min/max pruning
//!   metadata used by the buffer's read path.
//! - [`pager`]: page-granular storage with in-memory and file-backed
//!   implementations (the file backend runs an LRU buffer pool).
//! - [`bptree`]: the paged B+-tree itself, with top inserts, a right-edge
//!   fast path, and append-style bulk loading of sorted runs.

pub mod bptree;
pub mod entry;
pub mod error;
pub mod filters;
pub mod osm_buffer;
pub mod osm_tree;
pub mod pager;
pub mod sorting;
pub mod workload;
pub mod zonemap;

pub use bptree::{BPlusTree, TreeConfig, TreeStats};
pub use entry::{Entry, Key, Seq, Value};
pub use error::{OsmError, Result};
pub use filters::BloomFilter;
pub use osm_buffer::{BufferConfig, FilterMode, FlushPlan, OsmBuffer};
pub use osm_tree::{buffer_size_bound, BufferBound, OsmConfig, OsmStats, OsmTree};
pub use pager::{Backend, PageId, PageStore, PageStoreConfig, PagerStats};
pub use sorting::{choose_sort, SortAlgorithm, SortStats};
pub use workload::{measure_sortedness, Sortedness, WorkloadSpec};
pub use zonemap::Zonemap;
