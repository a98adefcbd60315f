//! (K, L) workload generation, sortedness measurement, and the stream file
//! format.
//!
//! A stream's disorder is summarized by two numbers. Let `rank(i)` be the
//! position entry `i` would occupy after a stable sort:
//!
//! - `K`: the fraction of entries with `rank(i) != i` (how *many* are out
//!   of place),
//! - `L`: the maximum `|rank(i) - i| / n` (how *far* any entry strays).
//!
//! The generator starts from the identity stream (key `i` at position `i`)
//! and swaps `floor(k_pct * n / 2)` disjoint position pairs, each at a
//! distance of at most `floor(l_pct * n)`. Because the pairs are disjoint,
//! exactly `2 * floor(k_pct * n / 2)` entries end up displaced and no
//! displacement ever exceeds the window, so both guarantees are structural
//! rather than statistical.
//!
//! Determinism: all randomness comes from `Xoshiro256PlusPlus` seeded with
//! the spec's seed (via the standard SplitMix64 expansion); bounded draws
//! use a fixed 128-bit widening multiply. The byte stream behind a given
//! `(n, k, l, seed)` is therefore stable across platforms, and the seed is
//! recorded in the file header so a workload file can always be reproduced.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::entry::{Entry, Key};
use crate::error::{OsmError, Result};

pub const WORKLOAD_MAGIC: [u8; 8] = *b"OSMWKL01";

/// Attempts at randomly placing one swap pair before switching to a
/// deterministic scan for a still-free pair.
const REJECTION_ATTEMPTS: usize = 1_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorkloadSpec {
    /// Number of entries.
    pub n: u64,
    /// Target fraction of out-of-place entries, in `[0, 1]`.
    pub k_pct: f64,
    /// Maximum displacement as a fraction of `n`, in `[0, 1]`.
    pub l_pct: f64,
    pub seed: u64,
    /// Logical key width in bytes (1..=8). Keys are stored as u64 on disk
    /// regardless; the width bounds how many distinct keys may exist.
    pub key_width: u32,
    /// Logical payload size in bytes, recorded in the header. Values are
    /// stored as u64 on disk.
    pub payload_bytes: u32,
}

impl WorkloadSpec {
    pub fn new(n: u64, k_pct: f64, l_pct: f64, seed: u64) -> Self {
        WorkloadSpec { n, k_pct, l_pct, seed, key_width: 4, payload_bytes: 4 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.k_pct) || !self.k_pct.is_finite() {
            return Err(OsmError::Config(format!("k_pct {} outside [0, 1]", self.k_pct)));
        }
        if !(0.0..=1.0).contains(&self.l_pct) || !self.l_pct.is_finite() {
            return Err(OsmError::Config(format!("l_pct {} outside [0, 1]", self.l_pct)));
        }
        if !(1..=8).contains(&self.key_width) {
            return Err(OsmError::Config(format!("key_width {} outside 1..=8", self.key_width)));
        }
        if self.key_width < 8 && self.n > 1u64 << (8 * self.key_width) {
            return Err(OsmError::Config(format!(
                "n {} does not fit in {}-byte keys",
                self.n, self.key_width
            )));
        }
        // k > 0 needs somewhere to move entries to.
        if self.k_pct > 0.0 && self.displacement_window() == 0 {
            return Err(OsmError::Config(format!(
                "k_pct {} requires a displacement window of at least one position \
                 (l_pct {} of n {} floors to zero)",
                self.k_pct, self.l_pct, self.n
            )));
        }
        Ok(())
    }

    /// `floor(l_pct * n)`, capped at `n - 1` (no displacement can exceed
    /// the stream itself).
    pub fn displacement_window(&self) -> u64 {
        let w = (self.l_pct * self.n as f64).floor() as u64;
        w.min(self.n.saturating_sub(1))
    }

    /// Number of disjoint position pairs to swap: `floor(k_pct * n / 2)`.
    pub fn swap_pairs(&self) -> u64 {
        (self.k_pct * self.n as f64 / 2.0).floor() as u64
    }
}

/// Bounded draw via 128-bit widening multiply. Fixed here (rather than
/// delegating to the rand crate's range code) so generated bytes cannot
/// shift under a dependency upgrade.
#[inline]
fn uniform_below(rng: &mut Xoshiro256PlusPlus, bound: u64) -> u64 {
    debug_assert!(bound > 0);
    ((rng.next_u64() as u128 * bound as u128) >> 64) as u64
}

/// Successor-with-deletion structure over free positions: `find(x)` is the
/// smallest free position `>= x` (`n` when none). Built lazily the first
/// time a fallback scan is needed; consuming a position links it to its
/// right neighbor, so chains of used positions compress away. This keeps
/// the fallback equivalent to a literal left-to-right scan — it selects
/// exactly the same pairs — without the scan's quadratic cost once most
/// positions are taken.
struct FreeSucc {
    parent: Vec<usize>,
}

impl FreeSucc {
    fn build(used: &[u64], n: usize) -> Self {
        let mut parent: Vec<usize> = (0..=n).collect();
        for i in 0..n {
            if used[i >> 6] >> (i & 63) & 1 == 1 {
                parent[i] = i + 1;
            }
        }
        FreeSucc { parent }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn mark_used(&mut self, i: usize) {
        debug_assert_eq!(self.parent[i], i);
        self.parent[i] = i + 1;
    }
}

/// Generate the stream for `spec`. Values mirror keys (`value == key`), and
/// `seq` is the stream position.
pub fn generate(spec: &WorkloadSpec) -> Result<Vec<Entry>> {
    spec.validate()?;
    let n = spec.n as usize;
    let mut entries: Vec<Entry> =
        (0..spec.n).map(|i| Entry::new(i, i, i)).collect();
    let pairs = spec.swap_pairs();
    if pairs == 0 {
        return Ok(entries);
    }

    let window = spec.displacement_window();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(spec.seed);
    // Occupancy bitmap. A bitset rather than Vec<bool>: at high k the
    // rejection loop probes it hundreds of millions of times, and 1 bit
    // per position keeps the whole map cache-resident.
    let mut used = vec![0u64; n.div_ceil(64)];
    let is_used = |used: &[u64], i: usize| used[i >> 6] >> (i & 63) & 1 == 1;
    let mut succ: Option<FreeSucc> = None;
    for placed in 0..pairs {
        let mut found = None;
        for _ in 0..REJECTION_ATTEMPTS {
            let d = 1 + uniform_below(&mut rng, window);
            let i = uniform_below(&mut rng, spec.n - d) as usize;
            let j = i + d as usize;
            if !is_used(&used, i) && !is_used(&used, j) {
                found = Some((i, j));
                break;
            }
        }
        // Near saturation, fall back to scanning for a still-free pair from
        // a random start so placement always terminates: take the first
        // free position (cyclically) that still has a free partner within
        // the window above it. The successor structure walks free slots
        // directly instead of stepping over every consumed position.
        if found.is_none() {
            let succ = succ.get_or_insert_with(|| FreeSucc::build(&used, n));
            let start = uniform_below(&mut rng, spec.n) as usize;
            'scan: for (lo, hi) in [(start, n), (0, start)] {
                let mut i = succ.find(lo);
                while i < hi {
                    let max_d = window.min((n - 1 - i) as u64) as usize;
                    let j = succ.find(i + 1);
                    if j <= i + max_d {
                        found = Some((i, j));
                        break 'scan;
                    }
                    // No partner above this slot; the next candidate is the
                    // next free position, which is j itself.
                    i = j;
                }
            }
        }
        let Some((i, j)) = found else {
            return Err(OsmError::Config(format!(
                "could not place swap {placed} of {pairs}: no free pair within \
                 window {window} remains"
            )));
        };
        used[i >> 6] |= 1 << (i & 63);
        used[j >> 6] |= 1 << (j & 63);
        if let Some(s) = succ.as_mut() {
            s.mark_used(i);
            s.mark_used(j);
        }
        entries.swap(i, j);
        // Restore seq to stream position: the swap moves keys, not slots.
        let (si, sj) = (entries[i].seq, entries[j].seq);
        entries[i].seq = sj;
        entries[j].seq = si;
    }
    Ok(entries)
}

/// Measured disorder of a stream. All four statistics are computed against
/// the stable sort order `(key, seq)`, so duplicate keys are handled.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sortedness {
    /// Fraction of entries not already at their sorted position.
    pub k_measured: f64,
    /// Maximum displacement between stream position and sorted position,
    /// as a fraction of `n`. Always in `[0, 1)`.
    pub l_measured: f64,
    /// Number of inverted pairs.
    pub inversions: u64,
    /// Number of maximal non-decreasing runs (1 for sorted input, `n` for
    /// strictly decreasing input, 0 for empty input).
    pub runs: u64,
}

pub fn measure_sortedness(entries: &[Entry]) -> Sortedness {
    let n = entries.len();
    if n == 0 {
        return Sortedness { k_measured: 0.0, l_measured: 0.0, inversions: 0, runs: 0 };
    }

    // rank[i] = sorted position of the entry at stream position i.
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_by_key(|&i| entries[i as usize].rank());
    let mut rank = vec![0u32; n];
    for (sorted_pos, &orig) in order.iter().enumerate() {
        rank[orig as usize] = sorted_pos as u32;
    }

    let mut displaced = 0u64;
    let mut max_disp = 0u64;
    for (i, &r) in rank.iter().enumerate() {
        let d = (r as i64 - i as i64).unsigned_abs();
        if d > 0 {
            displaced += 1;
            max_disp = max_disp.max(d);
        }
    }

    let mut runs = 1u64;
    for w in entries.windows(2) {
        if w[1].rank() < w[0].rank() {
            runs += 1;
        }
    }

    Sortedness {
        k_measured: displaced as f64 / n as f64,
        l_measured: max_disp as f64 / n as f64,
        inversions: count_inversions(&mut rank),
        runs,
    }
}

/// Merge-sort inversion count on the rank permutation. Consumes the scratch
/// slice.
fn count_inversions(v: &mut [u32]) -> u64 {
    let mut buf = vec![0u32; v.len()];
    fn go(v: &mut [u32], buf: &mut [u32]) -> u64 {
        let n = v.len();
        if n <= 1 {
            return 0;
        }
        let mid = n / 2;
        let mut inv = {
            let (a, b) = v.split_at_mut(mid);
            go(a, &mut buf[..mid]) + go(b, &mut buf[mid..])
        };
        let (mut i, mut j) = (0, mid);
        for slot in buf[..n].iter_mut() {
            if i < mid && (j >= n || v[i] <= v[j]) {
                *slot = v[i];
                i += 1;
            } else {
                inv += (mid - i) as u64;
                *slot = v[j];
                j += 1;
            }
        }
        v.copy_from_slice(&buf[..n]);
        inv
    }
    go(v, &mut buf)
}

/// Write `entries` with the header for `spec`. Layout (all little endian):
/// magic, n: u64, seed: u64, k_pct: f64, l_pct: f64, key_width: u32,
/// payload_bytes: u32, then n records of (key: u64, value: u64).
pub fn write_workload(path: &Path, spec: &WorkloadSpec, entries: &[Entry]) -> Result<()> {
    if entries.len() as u64 != spec.n {
        return Err(OsmError::Config(format!(
            "spec says n={} but {} entries were supplied",
            spec.n,
            entries.len()
        )));
    }
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(&WORKLOAD_MAGIC)?;
    w.write_all(&spec.n.to_le_bytes())?;
    w.write_all(&spec.seed.to_le_bytes())?;
    w.write_all(&spec.k_pct.to_le_bytes())?;
    w.write_all(&spec.l_pct.to_le_bytes())?;
    w.write_all(&spec.key_width.to_le_bytes())?;
    w.write_all(&spec.payload_bytes.to_le_bytes())?;
    for e in entries {
        w.write_all(&e.key.to_le_bytes())?;
        w.write_all(&e.value.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

/// Read a workload file back. Entries get `seq` equal to their position in
/// the stream.
pub fn read_workload(path: &Path) -> Result<(WorkloadSpec, Vec<Entry>)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic, "magic")?;
    if magic != WORKLOAD_MAGIC {
        return Err(OsmError::BadMagic { expected: WORKLOAD_MAGIC, found: magic });
    }
    let n = read_u64(&mut r, "n")?;
    let seed = read_u64(&mut r, "seed")?;
    let k_pct = f64::from_le_bytes(read_u64(&mut r, "k_pct")?.to_le_bytes());
    let l_pct = f64::from_le_bytes(read_u64(&mut r, "l_pct")?.to_le_bytes());
    let mut w32 = [0u8; 4];
    read_exact(&mut r, &mut w32, "key_width")?;
    let key_width = u32::from_le_bytes(w32);
    read_exact(&mut r, &mut w32, "payload_bytes")?;
    let payload_bytes = u32::from_le_bytes(w32);

    let mut entries = Vec::with_capacity(n.min(1 << 24) as usize);
    let mut rec = [0u8; 16];
    for i in 0..n {
        read_exact(&mut r, &mut rec, "entry record")?;
        let key = Key::from_le_bytes(rec[..8].try_into().unwrap());
        let value = u64::from_le_bytes(rec[8..].try_into().unwrap());
        entries.push(Entry::new(key, value, i));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(OsmError::Format("trailing bytes after final entry".into()));
    }
    Ok((WorkloadSpec { n, k_pct, l_pct, seed, key_width, payload_bytes }, entries))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    r.read_exact(buf)
        .map_err(|_| OsmError::Format(format!("truncated while reading {what}")))
}

fn read_u64<R: Read>(r: &mut R, what: &str) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b, what)?;
    Ok(u64::from_le_bytes(b))
}
