use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use subdiff_bench::suite_specs;
use subdiff_core::rng::{substream, PathStreams};
use subdiff_core::subdiffusion::sample_clocked_path;
use subdiff_core::subordinator::{sample_increment, SamplerOptions};

fn increments(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample_increment");
    group.throughput(Throughput::Elements(1000));
    for (name, spec) in suite_specs() {
        group.bench_with_input(BenchmarkId::from_parameter(name), &spec, |b, spec| {
            let mut rng = substream(1, 0, 0);
            b.iter(|| {
                let mut acc = 0.0;
                for _ in 0..1000 {
                    acc += sample_increment(spec, black_box(0.01), &mut rng).unwrap();
                }
                acc
            })
        });
    }
    group.finish();
}

fn clocked_paths(c: &mut Criterion) {
    let mut group = c.benchmark_group("clocked_path");
    let times = [0.5, 1.0, 2.0];
    let opts = SamplerOptions::default();
    for (name, spec) in suite_specs() {
        for stationary in [false, true] {
            if stationary && !spec.mean_t1().is_finite() {
                continue;
            }
            let id = format!("{name}{}", if stationary { "_stationary" } else { "" });
            group.bench_function(id, |b| {
                let mut i = 0u64;
                b.iter(|| {
                    i += 1;
                    let mut streams = PathStreams::new(3, i);
                    sample_clocked_path(&spec, &times, 0.01, stationary, &opts, &mut streams).unwrap()
                })
            });
        }
    }
    group.finish();
}

criterion_group!(benches, increments, clocked_paths);
criterion_main!(benches);
