use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ehz_core::ConvexBody;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bodies() -> Vec<(&'static str, ConvexBody)> {
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
    let sum = ConvexBody::sum(
        ConvexBody::ellipsoid(DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0])))
            .unwrap(),
        ConvexBody::ball(2, 0.5),
    )
    .unwrap();
    vec![
        ("ball4", ConvexBody::ball(4, 1.0)),
        ("pball6_4d", ConvexBody::pball(6.0, DVector::from_element(4, 1.0)).unwrap()),
        ("square_smoothed", square),
        ("ellipse_plus_ball", sum),
    ]
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
        let norm = v.norm();
        if norm > 1e-3 {
            return v / norm;
        }
    }
}

fn bench_support(c: &mut Criterion) {
    let mut group = c.benchmark_group("support");
    for (name, body) in bodies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = body.dim();
        group.bench_function(name, |b| {
            b.iter_batched(
                || random_direction(&mut rng, n),
                |u| body.support(&u),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

fn bench_gauge_grad(c: &mut Criterion) {
    let mut group = c.benchmark_group("gauge_grad");
    for (name, body) in bodies() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = body.dim();
        group.bench_function(name, |b| {
            b.iter_batched(
                || random_direction(&mut rng, n),
                |x| body.gauge_grad(&x).unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(benches, bench_support, bench_gauge_grad);
criterion_main!(benches);
