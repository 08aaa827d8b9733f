use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};
use std::hint::black_box;
use vsens_bench::{brute_force, heightfield, random_rays, room, triangle_soup};
use vsens_core::geometry::AccelIndex;

fn build(c: &mut Criterion) {
    let mut group = c.benchmark_group("accel_build");
    for cells in [25usize, 71, 150] {
        let mesh = heightfield(1, cells, 10.0);
        group.throughput(Throughput::Elements(mesh.triangles().len() as u64));
        group.bench_with_input(
            BenchmarkId::from_parameter(mesh.triangles().len()),
            &mesh,
            |b, mesh| b.iter(|| AccelIndex::build(mesh.clone())),
        );
    }
    group.finish();
}

fn query(c: &mut Criterion) {
    let scenes = [
        ("terrain_10k", heightfield(7, 71, 10.0)),
        ("room_10k", room(32)),
        ("soup_10k", triangle_soup(3, 10_000, 3.0)),
    ];
    let mut group = c.benchmark_group("ray_query");
    for (name, mesh) in scenes {
        let rays = random_rays(11, &mesh, 1000);
        let index = AccelIndex::build(mesh.clone());
        group.throughput(Throughput::Elements(rays.len() as u64));
        group.bench_function(BenchmarkId::new("accelerated", name), |b| {
            b.iter(|| {
                for r in &rays {
                    black_box(index.intersect(r, f64::INFINITY));
                }
            })
        });
        group.bench_function(BenchmarkId::new("brute_force", name), |b| {
            b.iter(|| {
                for r in &rays[..100] {
                    black_box(brute_force(&mesh, r, f64::INFINITY));
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, build, query);
criterion_main!(benches);
