use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};

use tempus_bench::{clock, stable, SEED};
use tempus_core::moment_lab::stable_series;
use tempus_core::strong_error::{coupled_experiment, ResolutionLadder};
use tempus_core::{builtin_coefficients, euler_maruyama, ClockPath, Purpose, StreamFactory, SubordinatorModel};

fn sampling(c: &mut Criterion) {
    let mut group = c.benchmark_group("increment");
    let models = [
        ("stable", stable(0.85)),
        ("tempered", SubordinatorModel::tempered_stable(0.6, 1.0).unwrap()),
        ("gamma", SubordinatorModel::gamma()),
        (
            "mixture",
            SubordinatorModel::stable_mixture(vec![1.0, 2.0], vec![0.4, 0.8]).unwrap(),
        ),
    ];
    for (name, model) in &models {
        let mut rng = StreamFactory::new(SEED).stream(0, Purpose::Clock);
        group.bench_function(*name, |b| {
            b.iter(|| model.sample_increment(black_box(1e-3), &mut rng).unwrap())
        });
    }
    group.finish();
}

fn clocks(c: &mut Criterion) {
    let model = stable(0.9);
    let streams = StreamFactory::new(SEED);
    c.bench_function("clock/stable0.9/delta1e-3", |b| {
        let mut path = 0;
        b.iter(|| {
            path += 1;
            ClockPath::build(&model, 1e-3, 1.0, &mut streams.stream(path, Purpose::Clock)).unwrap()
        })
    });
}

fn scheme(c: &mut Criterion) {
    let pair = builtin_coefficients("fig2").unwrap();
    let base = clock(&stable(0.85), 1e-4);
    c.bench_function("euler_maruyama/fig2/delta1e-4", |b| {
        let mut rng = StreamFactory::new(SEED).stream(0, Purpose::Brownian);
        b.iter_batched(
            || base.clone(),
            |clock| euler_maruyama(clock, &pair, 1.0, &mut rng).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn series(c: &mut Criterion) {
    c.bench_function("stable_series/beta0.5/r1", |b| {
        b.iter(|| stable_series(0.5, black_box(1.0), 1.0, 1.0, 1e-15).unwrap())
    });
    c.bench_function("stable_series/beta0.5/r2/threshold", |b| {
        b.iter(|| stable_series(0.5, black_box(0.2), 1.0, 2.0, 1e-12).unwrap())
    });
}

fn coupling(c: &mut Criterion) {
    let pair = builtin_coefficients("fig2").unwrap();
    let ladder = ResolutionLadder::dyadic(2f64.powi(-12), 4, 7).unwrap();
    let mut group = c.benchmark_group("coupled");
    group.sample_size(10);
    group.bench_function("fig2/10paths", |b| {
        b.iter(|| coupled_experiment(&stable(0.85), &pair, 1.0, 1.0, &ladder, 10, &StreamFactory::new(SEED)).unwrap())
    });
    group.finish();
}

criterion_group!(benches, sampling, clocks, scheme, series, coupling);
criterion_main!(benches);
