use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use vsens_bench::throughput_config;
use vsens_core::simulation::{run, Session};

fn batch(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let mut group = c.benchmark_group("batch_run");
    group.sample_size(10);
    for side in [4usize, 8] {
        let config = throughput_config(dir.path(), side, 10.0).unwrap();
        group.throughput(Throughput::Elements(601));
        group.bench_function(format!("{}_sensors_10s", side * side + 1), |b| {
            b.iter(|| run(config.clone(), dir.path()).unwrap())
        });
    }
    group.finish();
}

fn tick(c: &mut Criterion) {
    let dir = tempfile::tempdir().unwrap();
    let config = throughput_config(dir.path(), 8, 10.0).unwrap();
    let session = Session::new(config, dir.path()).unwrap();
    c.bench_function("step_65_sensors", |b| {
        b.iter_batched_ref(
            || session.clone(),
            |s| s.step().unwrap(),
            criterion::BatchSize::SmallInput,
        )
    });
}

criterion_group!(benches, batch, tick);
criterion_main!(benches);
