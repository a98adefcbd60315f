//! Ingestion microbenchmarks: buffered index against the plain B+-tree
//! baseline on sorted, nearly sorted, and scrambled streams. The whole
//! point of the design is the gap in the first two columns.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use osm_core::workload::generate;
use osm_core::{
    BPlusTree, BufferConfig, Entry, OsmConfig, OsmTree, PageStore, PageStoreConfig, TreeConfig,
    WorkloadSpec,
};

const N: u64 = 200_000;

fn workload(k: f64, l: f64) -> Vec<Entry> {
    generate(&WorkloadSpec::new(N, k, l, 42)).expect("generate workload")
}

fn ingest_osm(entries: &[Entry]) -> OsmTree {
    let mut cfg = OsmConfig::default();
    cfg.buffer = BufferConfig {
        capacity: (entries.len() / 100).max(4096),
        ..BufferConfig::default()
    };
    let mut tree = OsmTree::new(cfg).expect("osm tree");
    for e in entries {
        tree.put(e.key, e.value).expect("put");
    }
    tree.drain_to_tree().expect("drain");
    tree
}

fn ingest_baseline(entries: &[Entry]) -> BPlusTree {
    let store = PageStore::from_config(&PageStoreConfig::default()).expect("store");
    let mut tree = BPlusTree::new(store, TreeConfig::baseline()).expect("tree");
    for e in entries {
        tree.top_insert(e.key, e.value).expect("insert");
    }
    tree
}

fn ingest_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("ingest");
    group.throughput(Throughput::Elements(N));
    group.sample_size(10);

    for &(k, l, label) in
        &[(0.0, 0.0, "sorted"), (0.05, 0.05, "k5l5"), (1.0, 1.0, "scrambled")]
    {
        let entries = workload(k, l);
        group.bench_with_input(BenchmarkId::new("osm", label), &entries, |b, e| {
            b.iter(|| black_box(ingest_osm(e).len()))
        });
        group.bench_with_input(BenchmarkId::new("bplus-baseline", label), &entries, |b, e| {
            b.iter(|| black_box(ingest_baseline(e).entry_count()))
        });
    }
    group.finish();
}

criterion_group!(benches, ingest_benches);
criterion_main!(benches);
