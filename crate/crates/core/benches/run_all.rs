use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use mtlmon::fixtures::{requirement_set, throughput_events};
use mtlmon::monitor::{run_all, Execution, RunOptions};
use mtlmon::trace::TimedStateSequence;

fn fixture_spec(c: &mut Criterion) {
    let set = requirement_set();
    let mut group = c.benchmark_group("autoclave");
    group.sample_size(10);
    for events in [10_000, 100_000] {
        let trace = TimedStateSequence::new(throughput_events(events).collect()).unwrap();
        group.throughput(Throughput::Elements(events as u64));
        for (label, execution) in [
            ("sequential", Execution::Sequential),
            ("parallel", Execution::Parallel),
        ] {
            let options = RunOptions {
                execution,
                ..RunOptions::default()
            };
            group.bench_with_input(BenchmarkId::new(label, events), &trace, |b, trace| {
                b.iter(|| run_all(black_box(&set), trace, options).unwrap())
            });
        }
    }
    group.finish();
}

fn chunk_size(c: &mut Criterion) {
    let set = requirement_set();
    let trace = TimedStateSequence::new(throughput_events(20_000).collect()).unwrap();
    let mut group = c.benchmark_group("chunk");
    group.sample_size(10);
    for chunk in [64, 1024, 8192] {
        let options = RunOptions {
            execution: Execution::Parallel,
            chunk,
            ..RunOptions::default()
        };
        group.bench_with_input(BenchmarkId::from_parameter(chunk), &trace, |b, trace| {
            b.iter(|| run_all(black_box(&set), trace, options).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, fixture_spec, chunk_size);
criterion_main!(benches);
