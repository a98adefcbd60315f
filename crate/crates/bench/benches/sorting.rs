//! Sorting microbenchmarks: the adaptive (K, L) sort against the stable
//! merge sort across disorder levels. The adaptive sort should win on
//! nearly sorted buffers and degrade gracefully as K and L grow.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;

use osm_core::sorting::{adaptive_kl_sort, stable_sort};
use osm_core::workload::generate;
use osm_core::WorkloadSpec;

const N: u64 = 100_000;

fn sort_benches(c: &mut Criterion) {
    let mut group = c.benchmark_group("sort");
    group.throughput(Throughput::Elements(N));
    group.sample_size(20);

    for &(k, l) in &[(0.01, 0.01), (0.05, 0.05), (0.25, 0.25), (1.0, 1.0)] {
        let spec = WorkloadSpec::new(N, k, l, 42);
        let entries = generate(&spec).expect("generate workload");
        let window = ((l * N as f64) as usize + 1).min(N as usize);
        let label = format!("k{}l{}", (k * 100.0) as u32, (l * 100.0) as u32);

        group.bench_with_input(BenchmarkId::new("adaptive", &label), &entries, |b, e| {
            b.iter_batched(
                || e.clone(),
                |mut buf| black_box(adaptive_kl_sort(&mut buf, window)),
                criterion::BatchSize::LargeInput,
            )
        });
        group.bench_with_input(BenchmarkId::new("merge", &label), &entries, |b, e| {
            b.iter_batched(
                || e.clone(),
                |mut buf| black_box(stable_sort(&mut buf)),
                criterion::BatchSize::LargeInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, sort_benches);
criterion_main!(benches);
