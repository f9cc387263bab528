//! Ensemble 2PCR scan, rayon pool vs calling thread.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use jc_pcs::ensemble::{build_mask_distribution, MaskSpec};
use jc_pcs::liouvillian::{AblationSpec, PhysicalParams};
use jc_pcs::par::Execution;
use jc_pcs::spectroscopy::{scan_observable, uniform_grid, Observable, ScanOptions};

fn ensemble_scan(c: &mut Criterion) {
    let dist = build_mask_distribution(&MaskSpec { n_bins: 16, n_positions: 100_000, ..MaskSpec::default() }).unwrap();
    let grid = uniform_grid(2.3, 2.5, 0.01).unwrap();
    let p = PhysicalParams::reference_point();
    let ab = AblationSpec::none();

    let mut group = c.benchmark_group("ensemble_scan");
    group.sample_size(10);
    for (name, exec) in [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)] {
        let opts = ScanOptions { exec, ..ScanOptions::default() };
        group.bench_with_input(BenchmarkId::from_parameter(name), &opts, |b, opts| {
            b.iter(|| scan_observable(&p, &dist, &grid, &ab, Observable::W2, opts).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, ensemble_scan);
criterion_main!(benches);
