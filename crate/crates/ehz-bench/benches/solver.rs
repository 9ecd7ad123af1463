use std::time::Duration;

use criterion::{criterion_group, criterion_main, Criterion};
use ehz_core::billiards::{shortest_orbit_direct, OrbitSearchConfig};
use ehz_core::capacity::{capacity_of_product, SolverConfig};
use ehz_core::{ConvexBody, LagrangianProduct};
use nalgebra::{DMatrix, DVector};

fn bench_capacity(c: &mut Criterion) {
    let disk = ConvexBody::ball(2, 1.0);
    let ellipse =
        ConvexBody::ellipsoid(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0]))).unwrap();
    let config = SolverConfig {
        modes: 8,
        samples: 48,
        starts: 1,
        refine: false,
        ..SolverConfig::default()
    };
    let mut group = c.benchmark_group("capacity");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    for (name, k, t) in [
        ("disk_x_disk", disk.clone(), disk.clone()),
        ("disk_x_ellipse", disk, ellipse),
    ] {
        let product = LagrangianProduct::new(k, t).unwrap();
        group.bench_function(name, |b| {
            b.iter(|| capacity_of_product(&product, &config).unwrap())
        });
    }
    group.finish();
}

fn bench_orbit_search(c: &mut Criterion) {
    let square = ConvexBody::polytope_smoothed(
        vec![
            DVector::from_vec(vec![1.0, 1.0]),
            DVector::from_vec(vec![-1.0, 1.0]),
            DVector::from_vec(vec![-1.0, -1.0]),
            DVector::from_vec(vec![1.0, -1.0]),
        ],
        24.0,
    )
    .unwrap();
    let triangle = ConvexBody::polytope_smoothed(
        vec![
            DVector::from_vec(vec![1.0, 0.0]),
            DVector::from_vec(vec![-0.5, 0.75f64.sqrt()]),
            DVector::from_vec(vec![-0.5, -(0.75f64.sqrt())]),
        ],
        24.0,
    )
    .unwrap();
    let disk = ConvexBody::ball(2, 1.0);
    let config = OrbitSearchConfig::default();
    let mut group = c.benchmark_group("shortest_orbit");
    group.sample_size(10).measurement_time(Duration::from_secs(20));
    group.bench_function("square_x_disk_m2", |b| {
        b.iter(|| shortest_orbit_direct(&square, &disk, 2, &config).unwrap())
    });
    group.bench_function("triangle_x_disk_m3", |b| {
        b.iter(|| shortest_orbit_direct(&triangle, &disk, 3, &config).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bench_capacity, bench_orbit_search);
criterion_main!(benches);
