//! `osm` — workload generator and benchmark harness for the OSM-tree.
//!
//! Subcommands:
//!
//! * `gen`    — write a (K, L) workload file
//! * `ingest` — shorthand for `bench --mode ingest`
//! * `bench`  — run one benchmark mode against chosen index variants
//! * `grid`   — sweep the (K, L) grid and print a speedup matrix
//! * `ablate` — compare bloom-filter configurations on one workload
//!
//! Results append to `osm-bench.csv` (directory from `OSM_CSV_DIR`, else
//! the working directory) unless `--no-csv` is given.

mod bench;
mod csv;

use std::path::PathBuf;
use std::time::SystemTime;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

use osm_core::workload::{generate, measure_sortedness, write_workload};
use osm_core::WorkloadSpec;

use bench::{run, BackendKind, BenchResult, BenchSpec, IndexKind, Mode};
use csv::CsvSink;

#[derive(Parser)]
#[command(name = "osm", version, about = "Sortedness-aware ordered index benchmark harness")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a (K, L) workload file and report its measured sortedness.
    Gen(GenArgs),
    /// Ingest a workload and report ingestion metrics.
    Ingest(RunArgs),
    /// Run a benchmark mode against one or more index variants.
    Bench(BenchArgs),
    /// Sweep the (K, L) grid and print the baseline/osm speedup matrix.
    Grid(GridArgs),
    /// Compare the three bloom-filter configurations on one workload.
    Ablate(AblateArgs),
}

#[derive(Args, Debug)]
struct WorkloadArgs {
    /// Workload file written by `osm gen`; overrides the inline parameters.
    #[arg(long)]
    workload: Option<PathBuf>,
    /// Stream length for inline generation.
    #[arg(long, default_value_t = 1_000_000)]
    n: u64,
    /// Percent of entries out of sorted position (the K knob).
    #[arg(long, default_value_t = 5.0)]
    k: f64,
    /// Maximum displacement as a percent of n (the L knob).
    #[arg(long, default_value_t = 5.0)]
    l: f64,
    /// Generator seed; fixed seeds make every counter reproducible.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug)]
struct IndexArgs {
    /// Page store backend.
    #[arg(long, value_enum, default_value_t = BackendKind::Memory)]
    backend: BackendKind,
    /// Database file for the file backend; a scratch dir is used if omitted.
    #[arg(long)]
    db: Option<PathBuf>,
    /// Page size in bytes (both backends).
    #[arg(long, default_value_t = 4096)]
    page_size: usize,
    /// Buffer pool budget for the file backend.
    #[arg(long, default_value_t = 4 * 1024 * 1024)]
    bufferpool_bytes: usize,
    /// Ingestion buffer capacity in entries; 0 = auto (1% of n, min 4096).
    #[arg(long, default_value_t = 0)]
    buffer_entries: usize,
    /// Fraction of the buffer evicted per flush.
    #[arg(long, default_value_t = 0.5)]
    flush_fraction: f64,
    /// Tail fraction that triggers query-driven sorting.
    #[arg(long, default_value_t = 0.10)]
    qsort_threshold: f64,
    /// Repetitions; reports the median, counters are per-seed stable.
    #[arg(long, default_value_t = 1)]
    reps: u32,
    /// Skip the CSV sink.
    #[arg(long)]
    no_csv: bool,
}

#[derive(Args, Debug)]
struct GenArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    /// Output path for the workload file.
    #[arg(long)]
    out: PathBuf,
    /// Key width in bytes recorded in the header.
    #[arg(long, default_value_t = 4)]
    key_width: u32,
    /// Payload bytes recorded in the header.
    #[arg(long, default_value_t = 4)]
    payload_bytes: u32,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    #[command(flatten)]
    index: IndexArgs,
    /// Index variants to run (repeatable).
    #[arg(long = "index", value_enum, default_values_t = vec![IndexKind::Osm])]
    indexes: Vec<IndexKind>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    run: RunArgs,
    /// Benchmark mode.
    #[arg(long, value_enum, default_value_t = Mode::Ingest)]
    mode: Mode,
    /// Read fraction of the timed phase in mixed mode.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
    /// Stream fraction ingested before the timed mixed phase.
    #[arg(long, default_value_t = 0.80)]
    preload_fraction: f64,
    /// Point lookups in reads mode.
    #[arg(long, default_value_t = 100_000)]
    lookups: u64,
    /// Scan selectivities (fractions of the key domain).
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0001, 0.01])]
    scan_selectivities: Vec<f64>,
    /// Scans per selectivity.
    #[arg(long, default_value_t = 100)]
    scan_count: u64,
}

#[derive(Args, Debug)]
struct GridArgs {
    #[command(flatten)]
    index: IndexArgs,
    /// Stream length per grid cell.
    #[arg(long, default_value_t = 100_000)]
    n: u64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// K values in percent.
    #[arg(long, value_delimiter = ',', default_values_t = vec![0.0, 1.0, 5.0, 10.0, 25.0, 50.0])]
    k_list: Vec<f64>,
    /// L values in percent.
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 5.0, 10.0, 25.0, 50.0])]
    l_list: Vec<f64>,
    /// Benchmark mode per cell.
    #[arg(long, value_enum, default_value_t = Mode::Ingest)]
    mode: Mode,
    /// Read fraction for mixed cells.
    #[arg(long, default_value_t = 0.5)]
    ratio: f64,
}

#[derive(Args, Debug)]
struct AblateArgs {
    #[command(flatten)]
    workload: WorkloadArgs,
    #[command(flatten)]
    index: IndexArgs,
    /// Timed point lookups per variant.
    #[arg(long, default_value_t = 100_000)]
    lookups: u64,
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Gen(args) => cmd_gen(args),
        Cmd::Ingest(args) => cmd_run(args, Mode::Ingest, 0.5, 0.80, 100_000, vec![0.01], 100),
        Cmd::Bench(args) => {
            let BenchArgs { run, mode, ratio, preload_fraction, lookups, scan_selectivities, scan_count } =
                args;
            cmd_run(run, mode, ratio, preload_fraction, lookups, scan_selectivities, scan_count)
        }
        Cmd::Grid(args) => cmd_grid(args),
        Cmd::Ablate(args) => cmd_ablate(args),
    }
}

fn cmd_gen(args: GenArgs) -> Result<()> {
    let w = &args.workload;
    let mut spec = WorkloadSpec::new(w.n, w.k / 100.0, w.l / 100.0, w.seed);
    spec.key_width = args.key_width;
    spec.payload_bytes = args.payload_bytes;
    let entries = generate(&spec)?;
    write_workload(&args.out, &spec, &entries)
        .with_context(|| format!("writing {}", args.out.display()))?;
    let m = measure_sortedness(&entries);
    println!("wrote {} entries to {}", entries.len(), args.out.display());
    println!(
        "  nominal K={}% L={}%   measured K={:.2}% L={:.2}%   runs={} inversions={}",
        w.k,
        w.l,
        m.k_measured * 100.0,
        m.l_measured * 100.0,
        m.runs,
        m.inversions
    );
    Ok(())
}

fn build_spec(
    w: &WorkloadArgs,
    ix: &IndexArgs,
    kind: IndexKind,
    mode: Mode,
    ratio: f64,
    preload_fraction: f64,
    lookups: u64,
    scan_selectivities: Vec<f64>,
    scan_count: u64,
) -> BenchSpec {
    BenchSpec {
        workload_path: w.workload.clone(),
        n: w.n,
        k_percent: w.k,
        l_percent: w.l,
        seed: w.seed,
        mode,
        read_ratio: ratio,
        preload_fraction,
        lookups,
        scan_selectivities,
        scan_count,
        index: kind,
        backend: ix.backend,
        db_path: ix.db.clone(),
        page_size: ix.page_size,
        bufferpool_bytes: ix.bufferpool_bytes,
        buffer_entries: ix.buffer_entries,
        flush_fraction: ix.flush_fraction,
        qsort_threshold: ix.qsort_threshold,
        repetitions: ix.reps,
    }
}

fn run_id() -> u64 {
    SystemTime::now()
        .duration_since(SystemTime::UNIX_EPOCH)
        .map(|d| d.as_nanos() as u64)
        .unwrap_or(0)
}

fn cmd_run(
    args: RunArgs,
    mode: Mode,
    ratio: f64,
    preload_fraction: f64,
    lookups: u64,
    scan_selectivities: Vec<f64>,
    scan_count: u64,
) -> Result<()> {
    let mut sink = CsvSink::new(!args.index.no_csv);
    let id = run_id();
    let mut results: Vec<(IndexKind, BenchResult)> = Vec::new();
    for &kind in &args.indexes {
        let spec = build_spec(
            &args.workload,
            &args.index,
            kind,
            mode,
            ratio,
            preload_fraction,
            lookups,
            scan_selectivities.clone(),
            scan_count,
        );
        let result = run(&spec, &mut sink, id)?;
        bench::print_result(&spec, &result);
        results.push((kind, result));
    }
    report_speedups(&results);
    if let Some(path) = sink.path() {
        println!("csv: {}", path.display());
    }
    Ok(())
}

/// When the baseline ran alongside other variants, print the headline
/// ratio the evaluation uses: baseline latency over variant latency.
fn report_speedups(results: &[(IndexKind, BenchResult)]) {
    let Some((_, base)) = results.iter().find(|(k, _)| *k == IndexKind::BplusBaseline) else {
        return;
    };
    for (kind, r) in results {
        if *kind == IndexKind::BplusBaseline || r.total_ns == 0 {
            continue;
        }
        println!(
            "speedup vs bplus-baseline: {} = {:.2}x",
            kind.as_str(),
            base.total_ns as f64 / r.total_ns as f64
        );
    }
}

fn cmd_grid(args: GridArgs) -> Result<()> {
    let mut sink = CsvSink::new(!args.index.no_csv);
    let id = run_id();
    let mut matrix: Vec<Vec<f64>> = Vec::new();
    for &k in &args.k_list {
        let mut row = Vec::new();
        for &l in &args.l_list {
            let w = WorkloadArgs {
                workload: None,
                n: args.n,
                k,
                l,
                seed: args.seed,
            };
            let mut cell = Vec::new();
            for kind in [IndexKind::BplusBaseline, IndexKind::Osm] {
                let spec = build_spec(
                    &w,
                    &args.index,
                    kind,
                    args.mode,
                    args.ratio,
                    0.80,
                    args.n / 10,
                    vec![0.01],
                    100,
                );
                cell.push(run(&spec, &mut sink, id)?);
            }
            row.push(cell[0].total_ns as f64 / cell[1].total_ns as f64);
        }
        matrix.push(row);
    }
    println!(
        "speedup matrix (bplus-baseline / osm), mode={}, n={}, seed={}",
        args.mode.as_str(),
        args.n,
        args.seed
    );
    print!("{:>8}", "");
    for &l in &args.l_list {
        print!("{:>9}", format!("L={l}%"));
    }
    println!();
    for (i, &k) in args.k_list.iter().enumerate() {
        print!("{:>8}", format!("K={k}%"));
        for v in &matrix[i] {
            print!("{v:>9.2}");
        }
        println!();
    }
    if let Some(path) = sink.path() {
        println!("csv: {}", path.display());
    }
    Ok(())
}

fn cmd_ablate(args: AblateArgs) -> Result<()> {
    let mut sink = CsvSink::new(!args.index.no_csv);
    let id = run_id();
    let variants = [IndexKind::OsmNoBf, IndexKind::OsmGlobalBfOnly, IndexKind::Osm];
    let mut results = Vec::new();
    for kind in variants {
        let spec = build_spec(
            &args.workload,
            &args.index,
            kind,
            Mode::Reads,
            0.0,
            1.0,
            args.lookups,
            vec![0.01],
            100,
        );
        let r = run(&spec, &mut sink, id)?;
        results.push((kind, r));
    }
    println!(
        "bloom-filter ablation: {} lookups on K={}% L={}% n={}",
        args.lookups, args.workload.k, args.workload.l, args.workload.n
    );
    println!(
        "{:<20} {:>12} {:>14} {:>12} {:>13}",
        "variant", "ns/lookup", "pages_scanned", "bf_probes", "bf_positives"
    );
    for (kind, r) in &results {
        println!(
            "{:<20} {:>12.0} {:>14} {:>12} {:>13}",
            kind.as_str(),
            r.mean_ns_per_op,
            r.metric("buffer_pages_scanned") as u64,
            r.metric("buffer_bf_probes") as u64,
            r.metric("buffer_bf_positives") as u64,
        );
    }
    if let Some(path) = sink.path() {
        println!("csv: {}", path.display());
    }
    Ok(())
}
