//! Paged B+-tree over a [`PageStore`].
//!
//! Nodes are fixed-fanout pages; the fanout is computed from the page size
//! at startup (a 4 KiB page holds 255 leaf entries or 255 children). Keys
//! and values are fixed-width u64s, stored little endian.
//!
//! Three ingestion paths with very different costs:
//!
//! - [`BPlusTree::top_insert`]: ordinary root-to-leaf descent with upsert
//!   semantics, `O(log N)` node touches.
//! - [`BPlusTree::fast_path_insert`]: `O(1)` append into the rightmost
//!   leaf; accepted only when the key belongs there and the leaf has room.
//! - [`BPlusTree::bulk_load_run`]: appends a sorted run of keys beyond the
//!   current maximum as pre-packed leaves (default 95% full), extending the
//!   internal levels bottom-up along the right spine.
//!
//! Splits move `split_ratio` of a node into the left half, but by default
//! only when the key that caused the split is the node's maximum — the
//! append pattern that benefits from leaving the left node packed. All
//! other splits are 50:50.
//!
//! Page layout (offsets in bytes, all little endian):
//!
//! ```text
//! 0   tag (1 = leaf, 2 = internal)
//! 2   count: u16    leaf: entries; internal: children
//! 8   next leaf page id (leaves only; 0 = none)
//! 16  keys           leaf: count keys        internal: count-1 separators
//! ..  payload        leaf: count values      internal: count child page ids
//! ```
//!
//! The payload region starts at a fixed offset (after space for a full key
//! array) so inserts shift only the occupied prefixes.

use crate::entry::{Entry, Key, Value};
use crate::error::{OsmError, Result};
use crate::pager::{PageId, PageStore};

const TAG_LEAF: u8 = 1;
const TAG_INTERNAL: u8 = 2;
const HDR: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct TreeConfig {
    /// Fill factor for bulk-loaded leaves, in (0, 1].
    pub fill_factor: f64,
    /// Fraction of entries kept in the left node on a split, in [0.5, 0.95].
    pub split_ratio: f64,
    /// Apply `split_ratio` only when the splitting key is the node's
    /// maximum; all other splits divide 50:50.
    pub rightmost_split_only: bool,
}

impl Default for TreeConfig {
    fn default() -> Self {
        TreeConfig { fill_factor: 0.95, split_ratio: 0.80, rightmost_split_only: true }
    }
}

impl TreeConfig {
    /// Baseline configuration: plain 50:50 splits everywhere.
    pub fn baseline() -> Self {
        TreeConfig { fill_factor: 0.95, split_ratio: 0.5, rightmost_split_only: false }
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.fill_factor) || self.fill_factor <= 0.0 {
            return Err(OsmError::Config(format!(
                "fill_factor {} outside (0, 1]",
                self.fill_factor
            )));
        }
        if !(0.5..=0.95).contains(&self.split_ratio) {
            return Err(OsmError::Config(format!(
                "split_ratio {} outside [0.5, 0.95]",
                self.split_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TreeStats {
    pub top_inserts: u64,
    pub fast_path_inserts: u64,
    pub fast_path_rejects: u64,
    pub bulk_loaded_entries: u64,
    pub leaf_splits: u64,
    pub internal_splits: u64,
    pub leaf_nodes: u64,
    pub internal_nodes: u64,
}

impl TreeStats {
    pub fn node_count(&self) -> u64 {
        self.leaf_nodes + self.internal_nodes
    }
}

pub struct BPlusTree {
    store: PageStore,
    config: TreeConfig,
    leaf_cap: usize,
    /// Maximum child count of an internal node.
    fanout: usize,
    root: Option<PageId>,
    rightmost_leaf: Option<PageId>,
    /// Number of levels; a lone leaf is height 1.
    height: usize,
    min_key: Option<Key>,
    max_key: Option<Key>,
    entry_count: u64,
    stats: TreeStats,
}

impl BPlusTree {
    pub fn new(store: PageStore, config: TreeConfig) -> Result<Self> {
        config.validate()?;
        let ps = store.page_size();
        let leaf_cap = (ps - HDR) / 16;
        let fanout = (ps - 8) / 16;
        let mut tree = BPlusTree {
            store,
            config,
            leaf_cap,
            fanout,
            root: None,
            rightmost_leaf: None,
            height: 0,
            min_key: None,
            max_key: None,
            entry_count: 0,
            stats: TreeStats::default(),
        };
        tree.root = tree.store.root();
        if tree.root.is_some() {
            tree.recover()?;
        }
        Ok(tree)
    }

    /// Rebuild cached metadata from an existing store (reopen path).
    fn recover(&mut self) -> Result<()> {
        let root = self.root.expect("recover needs a root");
        // Height and rightmost leaf: follow last children down.
        let mut id = root;
        let mut height = 1;
        loop {
            let page = self.store.read(id)?;
            if tag(page) == TAG_LEAF {
                break;
            }
            let n = count(page);
            id = PageId(read_u64(page, child_off(self.fanout, n - 1)));
            height += 1;
        }
        self.height = height;
        self.rightmost_leaf = Some(id);
        let page = self.store.read(id)?;
        let n = count(page);
        self.max_key = Some(read_u64(page, HDR + (n - 1) * 8));
        // Min, counts and node tallies: walk the leaf chain.
        let mut leftmost = root;
        loop {
            let page = self.store.read(leftmost)?;
            if tag(page) == TAG_LEAF {
                break;
            }
            leftmost = PageId(read_u64(page, child_off(self.fanout, 0)));
        }
        let first = self.store.read(leftmost)?;
        self.min_key = Some(read_u64(first, HDR));
        let mut cursor = Some(leftmost);
        let mut entries = 0u64;
        let mut leaves = 0u64;
        while let Some(id) = cursor {
            let page = self.store.read(id)?;
            entries += count(page) as u64;
            leaves += 1;
            cursor = next_leaf(page);
        }
        self.entry_count = entries;
        self.stats.leaf_nodes = leaves;
        self.stats.internal_nodes = self.store.live_pages() - leaves;
        Ok(())
    }

    pub fn stats(&self) -> TreeStats {
        self.stats
    }

    pub fn pager_stats(&self) -> crate::pager::PagerStats {
        self.store.stats()
    }

    pub fn entry_count(&self) -> u64 {
        self.entry_count
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn max_key(&self) -> Option<Key> {
        self.max_key
    }

    pub fn min_key(&self) -> Option<Key> {
        self.min_key
    }

    pub fn leaf_capacity(&self) -> usize {
        self.leaf_cap
    }

    pub fn is_empty(&self) -> bool {
        self.root.is_none()
    }

    /// Persist the root slot and all dirty pages.
    pub fn flush_store(&mut self) -> Result<()> {
        self.store.set_root(self.root);
        self.store.flush()
    }

    pub fn search(&mut self, key: Key) -> Result<Option<Value>> {
        let Some(mut id) = self.root else { return Ok(None) };
        loop {
            let page = self.store.read(id)?;
            if tag(page) == TAG_LEAF {
                let n = count(page);
                return Ok(match leaf_find(page, n, key) {
                    Ok(pos) => Some(read_u64(page, HDR + self.leaf_cap * 8 + pos * 8)),
                    Err(_) => None,
                });
            }
            let slot = route(page, key);
            id = PageId(read_u64(page, child_off(self.fanout, slot)));
        }
    }

    /// Root-to-leaf insert with upsert semantics. Returns true when an
    /// existing value was replaced.
    pub fn top_insert(&mut self, key: Key, value: Value) -> Result<bool> {
        self.stats.top_inserts += 1;
        let Some(root) = self.root else {
            let leaf = self.new_leaf()?;
            let page = self.store.page_mut(leaf)?;
            write_u64(page, HDR, key);
            let vbase = HDR + self.leaf_cap * 8;
            write_u64(page, vbase, value);
            set_count(page, 1);
            self.root = Some(leaf);
            self.rightmost_leaf = Some(leaf);
            self.height = 1;
            self.min_key = Some(key);
            self.max_key = Some(key);
            self.entry_count = 1;
            return Ok(false);
        };

        // Descend, remembering which child slot we took at each level.
        let mut path: Vec<(PageId, usize)> = Vec::with_capacity(self.height);
        let mut id = root;
        loop {
            let page = self.store.read(id)?;
            if tag(page) == TAG_LEAF {
                break;
            }
            let slot = route(page, key);
            path.push((id, slot));
            id = PageId(read_u64(page, child_off(self.fanout, slot)));
        }

        let leaf = self.store.page_mut(id)?;
        let n = count(leaf);
        let pos = match leaf_find(leaf, n, key) {
            Ok(pos) => {
                write_u64(leaf, HDR + self.leaf_cap * 8 + pos * 8, value);
                return Ok(true);
            }
            Err(pos) => pos,
        };
        self.entry_count += 1;
        self.min_key = Some(self.min_key.map_or(key, |m| m.min(key)));
        self.max_key = Some(self.max_key.map_or(key, |m| m.max(key)));

        if n < self.leaf_cap {
            leaf_insert_at(leaf, self.leaf_cap, n, pos, key, value);
            return Ok(false);
        }
        self.split_leaf_insert(id, pos, key, value, &path)?;
        Ok(false)
    }

    /// O(1) append into the rightmost leaf. Accepted iff the tree is
    /// non-empty, the key is at least the rightmost leaf's minimum, and the
    /// leaf has room (or the key upserts in place).
    pub fn fast_path_insert(&mut self, key: Key, value: Value) -> Result<bool> {
        let Some(id) = self.rightmost_leaf else {
            self.stats.fast_path_rejects += 1;
            return Ok(false);
        };
        let page = self.store.page_mut(id)?;
        let n = count(page);
        debug_assert!(n > 0);
        if key < read_u64(page, HDR) {
            self.stats.fast_path_rejects += 1;
            return Ok(false);
        }
        match leaf_find(page, n, key) {
            Ok(pos) => {
                write_u64(page, HDR + self.leaf_cap * 8 + pos * 8, value);
                self.stats.fast_path_inserts += 1;
                Ok(true)
            }
            Err(pos) => {
                if n == self.leaf_cap {
                    self.stats.fast_path_rejects += 1;
                    return Ok(false);
                }
                leaf_insert_at(page, self.leaf_cap, n, pos, key, value);
                self.stats.fast_path_inserts += 1;
                self.entry_count += 1;
                self.max_key = Some(self.max_key.map_or(key, |m| m.max(key)));
                Ok(true)
            }
        }
    }

    /// Append a sorted run whose keys all exceed the current maximum.
    /// Leaves are packed to `fill_factor`; internal levels extend along the
    /// right spine. The run must be strictly ascending.
    pub fn bulk_load_run(&mut self, run: &[Entry]) -> Result<()> {
        if run.is_empty() {
            return Ok(());
        }
        for w in run.windows(2) {
            if w[1].key <= w[0].key {
                return Err(OsmError::BulkOrder(format!(
                    "run not strictly ascending at key {}",
                    w[1].key
                )));
            }
        }
        if let Some(max) = self.max_key {
            if run[0].key <= max {
                return Err(OsmError::BulkOrder(format!(
                    "run starts at {} but the tree already holds keys up to {max}",
                    run[0].key
                )));
            }
        }

        let per_leaf = ((self.leaf_cap as f64 * self.config.fill_factor) as usize)
            .clamp(1, self.leaf_cap);
        let vbase = HDR + self.leaf_cap * 8;
        for chunk in run.chunks(per_leaf) {
            let leaf = self.new_leaf()?;
            let page = self.store.page_mut(leaf)?;
            for (i, e) in chunk.iter().enumerate() {
                write_u64(page, HDR + i * 8, e.key);
                write_u64(page, vbase + i * 8, e.value);
            }
            set_count(page, chunk.len());
            let leaf_min = chunk[0].key;

            match self.rightmost_leaf {
                None => {
                    self.root = Some(leaf);
                    self.height = 1;
                    self.min_key = Some(leaf_min);
                }
                Some(prev) => {
                    set_next_leaf(self.store.page_mut(prev)?, Some(leaf));
                    self.attach_rightmost(leaf, leaf_min, 0)?;
                }
            }
            self.rightmost_leaf = Some(leaf);
            self.max_key = Some(chunk.last().unwrap().key);
            self.entry_count += chunk.len() as u64;
        }
        self.stats.bulk_loaded_entries += run.len() as u64;
        Ok(())
    }

    /// Inclusive range scan.
    pub fn scan(&mut self, lo: Key, hi: Key) -> Result<Vec<(Key, Value)>> {
        let mut out = Vec::new();
        self.scan_into(lo, hi, &mut out)?;
        Ok(out)
    }

    pub fn scan_into(&mut self, lo: Key, hi: Key, out: &mut Vec<(Key, Value)>) -> Result<()> {
        if lo > hi {
            return Ok(());
        }
        let Some(mut id) = self.root else { return Ok(()) };
        loop {
            let page = self.store.read(id)?;
            if tag(page) == TAG_LEAF {
                break;
            }
            let slot = route(page, lo);
            id = PageId(read_u64(page, child_off(self.fanout, slot)));
        }
        let vbase = HDR + self.leaf_cap * 8;
        let mut cursor = Some(id);
        while let Some(id) = cursor {
            let page = self.store.read(id)?;
            let n = count(page);
            let start = leaf_find(page, n, lo).unwrap_or_else(|p| p);
            for i in start..n {
                let k = read_u64(page, HDR + i * 8);
                if k > hi {
                    return Ok(());
                }
                out.push((k, read_u64(page, vbase + i * 8)));
            }
            cursor = next_leaf(page);
        }
        Ok(())
    }

    fn new_leaf(&mut self) -> Result<PageId> {
        let id = self.store.allocate()?;
        let page = self.store.page_mut(id)?;
        page[0] = TAG_LEAF;
        set_count(page, 0);
        set_next_leaf(page, None);
        self.stats.leaf_nodes += 1;
        Ok(id)
    }

    fn new_internal(&mut self) -> Result<PageId> {
        let id = self.store.allocate()?;
        let page = self.store.page_mut(id)?;
        page[0] = TAG_INTERNAL;
        set_count(page, 0);
        self.stats.internal_nodes += 1;
        Ok(id)
    }

    /// Does `split_ratio` apply to this split? `max_pos` is the virtual
    /// position of the inserted item, `total` the virtual item count.
    fn split_share(&self, inserted_last: bool, total: usize) -> usize {
        let ratio = if !self.config.rightmost_split_only || inserted_last {
            self.config.split_ratio
        } else {
            0.5
        };
        ((total as f64 * ratio) as usize).clamp(1, total - 1)
    }

    fn split_leaf_insert(
        &mut self,
        id: PageId,
        pos: usize,
        key: Key,
        value: Value,
        path: &[(PageId, usize)],
    ) -> Result<()> {
        self.stats.leaf_splits += 1;
        let total = self.leaf_cap + 1;
        let mut keys = Vec::with_capacity(total);
        let mut vals = Vec::with_capacity(total);
        {
            let page = self.store.read(id)?;
            let vbase = HDR + self.leaf_cap * 8;
            for i in 0..self.leaf_cap {
                keys.push(read_u64(page, HDR + i * 8));
                vals.push(read_u64(page, vbase + i * 8));
            }
        }
        keys.insert(pos, key);
        vals.insert(pos, value);

        let left_n = self.split_share(pos == total - 1, total);
        let right_id = self.new_leaf()?;
        let vbase = HDR + self.leaf_cap * 8;
        {
            let right = self.store.page_mut(right_id)?;
            for (i, (k, v)) in keys[left_n..].iter().zip(&vals[left_n..]).enumerate() {
                write_u64(right, HDR + i * 8, *k);
                write_u64(right, vbase + i * 8, *v);
            }
            set_count(right, total - left_n);
        }
        let old_next = {
            let left = self.store.page_mut(id)?;
            let old_next = next_leaf(left);
            for (i, (k, v)) in keys[..left_n].iter().zip(&vals[..left_n]).enumerate() {
                write_u64(left, HDR + i * 8, *k);
                write_u64(left, vbase + i * 8, *v);
            }
            set_count(left, left_n);
            set_next_leaf(left, Some(right_id));
            old_next
        };
        set_next_leaf(self.store.page_mut(right_id)?, old_next);
        if self.rightmost_leaf == Some(id) {
            self.rightmost_leaf = Some(right_id);
        }
        let sep = keys[left_n];
        self.insert_into_parent(path, sep, right_id)
    }

    /// Insert (separator, right child) into the lowest node on `path`,
    /// splitting upward as necessary.
    fn insert_into_parent(
        &mut self,
        path: &[(PageId, usize)],
        mut sep: Key,
        mut right: PageId,
    ) -> Result<()> {
        for level in (0..path.len()).rev() {
            let (parent, slot) = path[level];
            let page = self.store.page_mut(parent)?;
            let n = count(page);
            if n < self.fanout {
                internal_insert_at(page, self.fanout, n, slot, sep, right);
                return Ok(());
            }
            // Split the full parent around the virtual arrays.
            self.stats.internal_splits += 1;
            let total = n + 1; // children after the virtual insert
            let mut keys = Vec::with_capacity(total - 1);
            let mut children = Vec::with_capacity(total);
            {
                let page = self.store.read(parent)?;
                for i in 0..n - 1 {
                    keys.push(read_u64(page, HDR + i * 8));
                }
                for i in 0..n {
                    children.push(read_u64(page, child_off(self.fanout, i)));
                }
            }
            keys.insert(slot, sep);
            children.insert(slot + 1, right.0);

            let left_c = self.split_share(slot + 1 == total - 1, total).clamp(2, total - 2);
            let promote = keys[left_c - 1];
            let right_id = self.new_internal()?;
            {
                let rp = self.store.page_mut(right_id)?;
                for (i, k) in keys[left_c..].iter().enumerate() {
                    write_u64(rp, HDR + i * 8, *k);
                }
                for (i, c) in children[left_c..].iter().enumerate() {
                    write_u64(rp, child_off(self.fanout, i), *c);
                }
                set_count(rp, total - left_c);
            }
            {
                let lp = self.store.page_mut(parent)?;
                for (i, k) in keys[..left_c - 1].iter().enumerate() {
                    write_u64(lp, HDR + i * 8, *k);
                }
                for (i, c) in children[..left_c].iter().enumerate() {
                    write_u64(lp, child_off(self.fanout, i), *c);
                }
                set_count(lp, left_c);
            }
            sep = promote;
            right = right_id;
        }
        // The root itself split.
        let old_root = self.root.expect("split propagated from an existing root");
        let new_root = self.new_internal()?;
        let page = self.store.page_mut(new_root)?;
        write_u64(page, HDR, sep);
        write_u64(page, child_off(self.fanout, 0), old_root.0);
        write_u64(page, child_off(self.fanout, 1), right.0);
        set_count(page, 2);
        self.root = Some(new_root);
        self.height += 1;
        Ok(())
    }

    /// Attach `child` (whose subtree minimum is `child_min` and whose
    /// height above the leaf level is `child_level`) at the right edge.
    fn attach_rightmost(&mut self, child: PageId, child_min: Key, child_level: usize) -> Result<()> {
        if child_level == self.height - 1 {
            // Child sits at the root's level: grow a new root above both.
            let old_root = self.root.expect("attach into empty tree");
            let new_root = self.new_internal()?;
            let page = self.store.page_mut(new_root)?;
            write_u64(page, HDR, child_min);
            write_u64(page, child_off(self.fanout, 0), old_root.0);
            write_u64(page, child_off(self.fanout, 1), child.0);
            set_count(page, 2);
            self.root = Some(new_root);
            self.height += 1;
            return Ok(());
        }
        // Rightmost internal node at child_level + 1: descend last children.
        let mut id = self.root.expect("attach into empty tree");
        for _ in 0..(self.height - 1) - (child_level + 1) {
            let page = self.store.read(id)?;
            let n = count(page);
            id = PageId(read_u64(page, child_off(self.fanout, n - 1)));
        }
        let page = self.store.page_mut(id)?;
        let n = count(page);
        if n < self.fanout {
            write_u64(page, HDR + (n - 1) * 8, child_min);
            write_u64(page, child_off(self.fanout, n), child.0);
            set_count(page, n + 1);
            return Ok(());
        }
        // Full: move the last child out so the new sibling starts with two
        // children (single-child internals never materialize).
        let moved = read_u64(page, child_off(self.fanout, n - 1));
        let moved_min = read_u64(page, HDR + (n - 2) * 8);
        set_count(page, n - 1);
        let sibling = self.new_internal()?;
        let sp = self.store.page_mut(sibling)?;
        write_u64(sp, HDR, child_min);
        write_u64(sp, child_off(self.fanout, 0), moved);
        write_u64(sp, child_off(self.fanout, 1), child.0);
        set_count(sp, 2);
        self.attach_rightmost(sibling, moved_min, child_level + 1)
    }

    // ---- validation and introspection (used heavily by tests) ----

    /// Full structural check: key order within and across nodes, separator
    /// bounds, uniform leaf depth, consistent leaf chain, and cached
    /// metadata agreeing with the pages.
    pub fn check_structure(&mut self) -> Result<()> {
        let Some(root) = self.root else {
            if self.entry_count != 0 {
                return Err(OsmError::Format("empty tree with nonzero entry count".into()));
            }
            return Ok(());
        };
        let mut leaf_depths = Vec::new();
        let mut chain = Vec::new();
        let mut entries = 0u64;
        self.walk(root, 0, None, None, &mut leaf_depths, &mut chain, &mut entries)?;
        let depth = leaf_depths[0];
        if !leaf_depths.iter().all(|&d| d == depth) {
            return Err(OsmError::Format("leaves at unequal depth".into()));
        }
        if depth + 1 != self.height {
            return Err(OsmError::Format("cached height wrong".into()));
        }
        if entries != self.entry_count {
            return Err(OsmError::Format(format!(
                "cached entry count {} but pages hold {entries}",
                self.entry_count
            )));
        }
        // Leaf chain must visit exactly the in-order leaves.
        let mut cursor = Some(chain[0]);
        let mut i = 0;
        while let Some(id) = cursor {
            if i >= chain.len() || chain[i] != id {
                return Err(OsmError::Format("leaf chain diverges from tree order".into()));
            }
            i += 1;
            cursor = next_leaf(self.store.read(id)?);
        }
        if i != chain.len() {
            return Err(OsmError::Format("leaf chain shorter than tree order".into()));
        }
        if self.rightmost_leaf != chain.last().copied() {
            return Err(OsmError::Format("cached rightmost leaf wrong".into()));
        }
        Ok(())
    }

    #[allow(clippy::too_many_arguments)]
    fn walk(
        &mut self,
        id: PageId,
        depth: usize,
        lower: Option<Key>, // inclusive
        upper: Option<Key>, // exclusive
        leaf_depths: &mut Vec<usize>,
        chain: &mut Vec<PageId>,
        entries: &mut u64,
    ) -> Result<()> {
        let page = self.store.read(id)?;
        let n = count(page);
        if n == 0 {
            return Err(OsmError::Format(format!("empty node {id}")));
        }
        if tag(page) == TAG_LEAF {
            let mut prev: Option<Key> = None;
            for i in 0..n {
                let k = read_u64(page, HDR + i * 8);
                if prev.is_some_and(|p| p >= k) {
                    return Err(OsmError::Format(format!("leaf {id} keys not ascending")));
                }
                if lower.is_some_and(|b| k < b) || upper.is_some_and(|b| k >= b) {
                    return Err(OsmError::Format(format!("leaf {id} key {k} out of bounds")));
                }
                prev = Some(k);
            }
            *entries += n as u64;
            leaf_depths.push(depth);
            chain.push(id);
            return Ok(());
        }
        if n < 2 {
            return Err(OsmError::Format(format!("internal {id} has {n} children")));
        }
        let mut seps = Vec::with_capacity(n - 1);
        let mut children = Vec::with_capacity(n);
        for i in 0..n - 1 {
            seps.push(read_u64(page, HDR + i * 8));
        }
        for i in 0..n {
            children.push(PageId(read_u64(page, child_off(self.fanout, i))));
        }
        if seps.windows(2).any(|w| w[0] >= w[1]) {
            return Err(OsmError::Format(format!("internal {id} separators not ascending")));
        }
        for (i, &child) in children.iter().enumerate() {
            let lo = if i == 0 { lower } else { Some(seps[i - 1]) };
            let hi = if i == n - 1 { upper } else { Some(seps[i]) };
            self.walk(child, depth + 1, lo, hi, leaf_depths, chain, entries)?;
        }
        Ok(())
    }

    /// Mean leaf and internal occupancy, as fractions of capacity.
    pub fn occupancy(&mut self) -> Result<(f64, f64)> {
        let Some(root) = self.root else { return Ok((0.0, 0.0)) };
        let mut leaf = (0u64, 0u64); // (filled, slots)
        let mut internal = (0u64, 0u64);
        let mut stack = vec![root];
        while let Some(id) = stack.pop() {
            let page = self.store.read(id)?;
            let n = count(page);
            if tag(page) == TAG_LEAF {
                leaf.0 += n as u64;
                leaf.1 += self.leaf_cap as u64;
            } else {
                internal.0 += n as u64;
                internal.1 += self.fanout as u64;
                for i in 0..n {
                    stack.push(PageId(read_u64(page, child_off(self.fanout, i))));
                }
            }
        }
        let frac = |(num, den): (u64, u64)| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        Ok((frac(leaf), frac(internal)))
    }
}

// ---- raw page accessors ----

#[inline]
fn tag(page: &[u8]) -> u8 {
    page[0]
}

#[inline]
fn count(page: &[u8]) -> usize {
    u16::from_le_bytes([page[2], page[3]]) as usize
}

#[inline]
fn set_count(page: &mut [u8], n: usize) {
    page[2..4].copy_from_slice(&(n as u16).to_le_bytes());
}

#[inline]
fn next_leaf(page: &[u8]) -> Option<PageId> {
    let raw = read_u64(page, 8);
    (raw != 0).then_some(PageId(raw))
}

#[inline]
fn set_next_leaf(page: &mut [u8], next: Option<PageId>) {
    write_u64(page, 8, next.map_or(0, |p| p.0));
}

#[inline]
fn read_u64(page: &[u8], off: usize) -> u64 {
    u64::from_le_bytes(page[off..off + 8].try_into().unwrap())
}

#[inline]
fn write_u64(page: &mut [u8], off: usize, v: u64) {
    page[off..off + 8].copy_from_slice(&v.to_le_bytes());
}

#[inline]
fn child_off(fanout: usize, slot: usize) -> usize {
    HDR + (fanout - 1) * 8 + slot * 8
}

/// Binary search over a leaf's key array.
#[inline]
fn leaf_find(page: &[u8], n: usize, key: Key) -> std::result::Result<usize, usize> {
    let (mut lo, mut hi) = (0usize, n);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if read_u64(page, HDR + mid * 8) < key {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    if lo < n && read_u64(page, HDR + lo * 8) == key {
        Ok(lo)
    } else {
        Err(lo)
    }
}

/// Child slot for `key`: the number of separators <= key, so keys equal to
/// a separator route right of it.
#[inline]
fn route(page: &[u8], key: Key) -> usize {
    let nkeys = count(page) - 1;
    let (mut lo, mut hi) = (0usize, nkeys);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if read_u64(page, HDR + mid * 8) <= key {
            lo = mid + 1;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Shift-insert into a leaf with room.
fn leaf_insert_at(page: &mut [u8], leaf_cap: usize, n: usize, pos: usize, key: Key, value: Value) {
    let ko = HDR + pos * 8;
    page.copy_within(ko..HDR + n * 8, ko + 8);
    write_u64(page, ko, key);
    let vbase = HDR + leaf_cap * 8;
    let vo = vbase + pos * 8;
    page.copy_within(vo..vbase + n * 8, vo + 8);
    write_u64(page, vo, value);
    set_count(page, n + 1);
}

/// Insert (sep, right) after child `slot` in an internal node with room.
fn internal_insert_at(page: &mut [u8], fanout: usize, n: usize, slot: usize, sep: Key, right: PageId) {
    let ko = HDR + slot * 8;
    page.copy_within(ko..HDR + (n - 1) * 8, ko + 8);
    write_u64(page, ko, sep);
    let cbase = child_off(fanout, 0);
    let co = cbase + (slot + 1) * 8;
    page.copy_within(co..cbase + n * 8, co + 8);
    write_u64(page, co, right.0);
    set_count(page, n + 1);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pager::{Backend, PageStoreConfig};
    use std::collections::BTreeMap;

    fn mem_tree(config: TreeConfig) -> BPlusTree {
        let store = PageStore::memory(512).unwrap(); // small pages -> deep trees quickly
        BPlusTree::new(store, config).unwrap()
    }

    fn entries(range: std::ops::Range<u64>) -> Vec<Entry> {
        range.map(|k| Entry::new(k, k * 10, k)).collect()
    }

    #[test]
    fn fanout_derived_from_page_size() {
        let tree = mem_tree(TreeConfig::default());
        assert_eq!(tree.leaf_capacity(), (512 - 16) / 16); // 31
        assert_eq!(tree.fanout, (512 - 8) / 16); // 31
        let big = BPlusTree::new(PageStore::memory(4096).unwrap(), TreeConfig::default()).unwrap();
        assert_eq!(big.leaf_capacity(), 255);
        assert_eq!(big.fanout, 255);
    }

    #[test]
    fn empty_tree_behaviour() {
        let mut tree = mem_tree(TreeConfig::default());
        assert_eq!(tree.search(5).unwrap(), None);
        assert!(tree.scan(0, 100).unwrap().is_empty());
        assert!(tree.is_empty());
        tree.check_structure().unwrap();
    }

    #[test]
    fn upsert_replaces_in_place() {
        let mut tree = mem_tree(TreeConfig::default());
        assert!(!tree.top_insert(7, 1).unwrap());
        assert!(tree.top_insert(7, 2).unwrap());
        assert!(tree.top_insert(7, 3).unwrap());
        assert_eq!(tree.search(7).unwrap(), Some(3));
        assert_eq!(tree.entry_count(), 1);
    }

    #[test]
    fn ascending_inserts_match_oracle() {
        let mut tree = mem_tree(TreeConfig::default());
        let mut oracle = BTreeMap::new();
        for k in 0..5000u64 {
            tree.top_insert(k, k * 3).unwrap();
            oracle.insert(k, k * 3);
        }
        tree.check_structure().unwrap();
        for k in (0..5000).step_by(7) {
            assert_eq!(tree.search(k).unwrap(), oracle.get(&k).copied());
        }
        assert_eq!(tree.search(5000).unwrap(), None);
        assert_eq!(tree.entry_count(), 5000);
        assert!(tree.height() >= 3);
    }

    #[test]
    fn scattered_inserts_match_oracle() {
        let mut tree = mem_tree(TreeConfig::default());
        let mut oracle = BTreeMap::new();
        // Deterministic pseudo-random order without pulling in a generator.
        let mut k = 1u64;
        for _ in 0..4000 {
            k = k.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            let key = k % 10_000;
            tree.top_insert(key, k).unwrap();
            oracle.insert(key, k);
        }
        tree.check_structure().unwrap();
        for key in 0..10_000 {
            assert_eq!(tree.search(key).unwrap(), oracle.get(&key).copied(), "key {key}");
        }
        assert_eq!(tree.entry_count(), oracle.len() as u64);
        let got = tree.scan(2000, 4000).unwrap();
        let want: Vec<(u64, u64)> =
            oracle.range(2000..=4000).map(|(k, v)| (*k, *v)).collect();
        assert_eq!(got, want);
    }

    #[test]
    fn scan_is_inclusive_and_ordered() {
        let mut tree = mem_tree(TreeConfig::default());
        for e in entries(0..1000) {
            tree.top_insert(e.key, e.value).unwrap();
        }
        let got = tree.scan(100, 200).unwrap();
        assert_eq!(got.len(), 101);
        assert_eq!(got[0], (100, 1000));
        assert_eq!(got[100], (200, 2000));
        assert!(got.windows(2).all(|w| w[0].0 < w[1].0));
        assert!(tree.scan(2000, 3000).unwrap().is_empty());
        assert!(tree.scan(200, 100).unwrap().is_empty());
    }

    #[test]
    fn fast_path_accepts_only_rightmost_fits() {
        let mut tree = mem_tree(TreeConfig::default());
        assert!(!tree.fast_path_insert(1, 1).unwrap(), "empty tree has no right edge");
        for k in 0..100u64 {
            tree.top_insert(k * 2, k).unwrap();
        }
        // In range of the rightmost leaf and room available: accepted.
        assert!(tree.fast_path_insert(1000, 7).unwrap());
        assert_eq!(tree.search(1000).unwrap(), Some(7));
        // Below the rightmost leaf's minimum: rejected, tree unchanged.
        assert!(!tree.fast_path_insert(0, 9).unwrap());
        assert_eq!(tree.search(0).unwrap(), Some(0));
        // Upsert through the fast path.
        assert!(tree.fast_path_insert(1000, 8).unwrap());
        assert_eq!(tree.search(1000).unwrap(), Some(8));
        tree.check_structure().unwrap();
    }

    #[test]
    fn fast_path_acceptance_on_ascending_stream() {
        let mut tree = mem_tree(TreeConfig::default());
        tree.top_insert(0, 0).unwrap();
        let n = 10_000u64;
        let mut accepted = 0u64;
        for k in 1..n {
            if tree.fast_path_insert(k, k).unwrap() {
                accepted += 1;
            } else {
                tree.top_insert(k, k).unwrap(); // leaf was full; split happens here
            }
        }
        let splits = tree.stats().leaf_splits;
        assert!(
            accepted as f64 / (n - 1) as f64 >= 1.0 - splits as f64 / (n - 1) as f64,
            "only split-causing inserts may miss the fast path"
        );
        tree.check_structure().unwrap();
    }

    #[test]
    fn bulk_load_into_empty_tree() {
        let mut tree = mem_tree(TreeConfig::default());
        let run = entries(0..10_000);
        tree.bulk_load_run(&run).unwrap();
        tree.check_structure().unwrap();
        assert_eq!(tree.entry_count(), 10_000);
        for k in (0..10_000).step_by(13) {
            assert_eq!(tree.search(k).unwrap(), Some(k * 10));
        }
        assert_eq!(tree.stats().bulk_loaded_entries, 10_000);
        assert_eq!(tree.stats().top_inserts, 0);
    }

    #[test]
    fn bulk_load_appends_after_inserts() {
        let mut tree = mem_tree(TreeConfig::default());
        for k in 0..500u64 {
            tree.top_insert(k, k).unwrap();
        }
        tree.bulk_load_run(&entries(500..3000)).unwrap();
        tree.bulk_load_run(&entries(3000..3001)).unwrap(); // single-entry run
        tree.check_structure().unwrap();
        assert_eq!(tree.entry_count(), 3001);
        assert_eq!(tree.search(499).unwrap(), Some(499));
        assert_eq!(tree.search(2999).unwrap(), Some(29990));
        assert_eq!(tree.search(3000).unwrap(), Some(30000));
        // Scan spanning the insert/bulk boundary.
        let got = tree.scan(490, 510).unwrap();
        assert_eq!(got.len(), 21);
    }

    #[test]
    fn bulk_load_rejects_overlap_and_disorder() {
        let mut tree = mem_tree(TreeConfig::default());
        tree.bulk_load_run(&entries(0..100)).unwrap();
        // First key equal to the current max: overlap.
        let overlap = entries(99..200);
        assert!(matches!(tree.bulk_load_run(&overlap), Err(OsmError::BulkOrder(_))));
        // Not strictly ascending.
        let mut bad = entries(200..300);
        bad[50].key = bad[49].key;
        assert!(matches!(tree.bulk_load_run(&bad), Err(OsmError::BulkOrder(_))));
        // Failed calls leave the tree intact.
        tree.check_structure().unwrap();
        assert_eq!(tree.entry_count(), 100);
    }

    #[test]
    fn split_ratio_shapes_occupancy() {
        // Ascending top-inserts: 50:50 leaves ~half-full leaves, 80:20
        // leaves ~80%-full leaves.
        let mut even = mem_tree(TreeConfig::baseline());
        let mut packed = mem_tree(TreeConfig::default());
        for k in 0..20_000u64 {
            even.top_insert(k, k).unwrap();
            packed.top_insert(k, k).unwrap();
        }
        let (even_leaf, _) = even.occupancy().unwrap();
        let (packed_leaf, _) = packed.occupancy().unwrap();
        assert!((0.45..=0.55).contains(&even_leaf), "50:50 mean leaf fill {even_leaf}");
        assert!((0.75..=0.85).contains(&packed_leaf), "80:20 mean leaf fill {packed_leaf}");
        even.check_structure().unwrap();
        packed.check_structure().unwrap();
    }

    #[test]
    fn ratio_split_applies_only_at_the_right_edge_by_default() {
        // Descending inserts never split on their max key, so the 80:20
        // config must behave like 50:50 here.
        let mut tree = mem_tree(TreeConfig::default());
        for k in (0..20_000u64).rev() {
            tree.top_insert(k, k).unwrap();
        }
        let (leaf_fill, _) = tree.occupancy().unwrap();
        assert!((0.45..=0.60).contains(&leaf_fill), "descending fill {leaf_fill}");
        tree.check_structure().unwrap();
    }

    #[test]
    fn bulk_fill_factor_respected() {
        let mut tree = mem_tree(TreeConfig::default());
        tree.bulk_load_run(&entries(0..10_000)).unwrap();
        let (leaf_fill, internal_fill) = tree.occupancy().unwrap();
        assert!((0.90..=0.97).contains(&leaf_fill), "bulk leaf fill {leaf_fill}");
        assert!(internal_fill > 0.5);
    }

    #[test]
    fn file_backend_behaves_like_memory() {
        let dir = tempfile::tempdir().unwrap();
        let config = PageStoreConfig {
            page_size: 512,
            backend: Backend::File,
            path: Some(dir.path().join("tree.osm")),
            bufferpool_bytes: 8 * 512,
        };
        let store = PageStore::create(&config).unwrap();
        let mut disk = BPlusTree::new(store, TreeConfig::default()).unwrap();
        let mut mem = mem_tree(TreeConfig::default());
        for k in 0..3000u64 {
            let key = (k * 7919) % 5000;
            disk.top_insert(key, k).unwrap();
            mem.top_insert(key, k).unwrap();
        }
        for key in (0..5000).step_by(11) {
            assert_eq!(disk.search(key).unwrap(), mem.search(key).unwrap());
        }
        disk.check_structure().unwrap();
        assert!(disk.pager_stats().evictions > 0, "pool smaller than tree must evict");
    }

    #[test]
    fn file_backend_reopens() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("tree.osm");
        let config = PageStoreConfig {
            page_size: 512,
            backend: Backend::File,
            path: Some(path.clone()),
            bufferpool_bytes: 8 * 512,
        };
        {
            let store = PageStore::create(&config).unwrap();
            let mut tree = BPlusTree::new(store, TreeConfig::default()).unwrap();
            for k in 0..2000u64 {
                tree.top_insert(k, k + 1).unwrap();
            }
            tree.flush_store().unwrap();
        }
        let store = PageStore::open(&path, 8 * 512).unwrap();
        let mut tree = BPlusTree::new(store, TreeConfig::default()).unwrap();
        assert_eq!(tree.entry_count(), 2000);
        assert_eq!(tree.max_key(), Some(1999));
        assert_eq!(tree.min_key(), Some(0));
        for k in (0..2000).step_by(97) {
            assert_eq!(tree.search(k).unwrap(), Some(k + 1));
        }
        tree.check_structure().unwrap();
        // And the tree keeps working after reopen.
        tree.top_insert(5000, 1).unwrap();
        tree.bulk_load_run(&entries(6000..7000)).unwrap();
        tree.check_structure().unwrap();
    }

    #[test]
    fn mixed_bulk_and_top_inserts_stay_consistent() {
        let mut tree = mem_tree(TreeConfig::default());
        let mut oracle = BTreeMap::new();
        let mut next = 0u64;
        for round in 0..50 {
            // Bulk a run of fresh high keys...
            let run = entries(next..next + 137);
            tree.bulk_load_run(&run).unwrap();
            for e in &run {
                oracle.insert(e.key, e.value);
            }
            next += 137;
            // ...then punch some updates into older regions.
            for j in 0..20u64 {
                let key = (round * 31 + j * 17) % next;
                tree.top_insert(key, round * 1000 + j).unwrap();
                oracle.insert(key, round * 1000 + j);
            }
        }
        tree.check_structure().unwrap();
        for (k, v) in &oracle {
            assert_eq!(tree.search(*k).unwrap(), Some(*v));
        }
        let got = tree.scan(0, next).unwrap();
        assert_eq!(got.len(), oracle.len());
    }
}
