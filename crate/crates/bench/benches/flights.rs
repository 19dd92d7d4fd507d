use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use flightlab_core::sampling::{sample_time_partition, sample_unit_direction};
use flightlab_core::{
    density_grid, estimate_tail, poisson_mixture_density, write_rate_csv, Family, FlightSpec,
    GridLaw, IsotropicDensity, RateFunction, RngStream, Tracer,
};

fn sampling(c: &mut Criterion) {
    let mut rng = RngStream::new(1, 0).rng();
    c.bench_function("unit_direction_d4", |b| {
        b.iter(|| sample_unit_direction(4, &mut rng).unwrap())
    });
    c.bench_function("time_partition_y3_n20", |b| {
        b.iter(|| sample_time_partition(Family::Y, 3, 20, 1.0, &mut rng).unwrap())
    });
}

fn trajectories(c: &mut Criterion) {
    let mut rng = RngStream::new(2, 0).rng();
    let mut tracer = Tracer::new();
    for (name, spec) in [
        (
            "summarize_z2_t40",
            FlightSpec::standard(2, 1.0, 1.0, 40.0).unwrap(),
        ),
        (
            "summarize_x2_n40",
            FlightSpec::conditional(Family::X, 2, 1.0, 40, 40.0).unwrap(),
        ),
    ] {
        c.bench_function(name, |b| b.iter(|| tracer.summarize(&spec, &mut rng)));
    }
    let spec = FlightSpec::standard(2, 1.0, 1.0, 10.0).unwrap();
    c.bench_function("estimate_tail_z2_1e5", |b| {
        b.iter_batched(
            || RngStream::new(3, 0),
            |s| estimate_tail(&spec, 0.5, 100_000, s).unwrap(),
            BatchSize::SmallInput,
        )
    });
}

fn densities(c: &mut Criterion) {
    let h = IsotropicDensity::new(Family::X, 3, 4, 1.0, 1.0).unwrap();
    c.bench_function("radial_mass_x3_n4", |b| {
        b.iter(|| black_box(h).radial_mass(0.0, 1.0))
    });
    c.bench_function("mixture_density_d4", |b| {
        b.iter(|| {
            poisson_mixture_density(4, 1.0, 1.0, 5.0, black_box(&[1.0, 0.5, 0.0, 0.0]), 200)
                .unwrap()
        })
    });
    let law = GridLaw::Standard(flightlab_core::StandardLaw::new(2, 1.0, 1.0, 1.0).unwrap());
    c.bench_function("density_grid_z2_100", |b| {
        b.iter(|| density_grid(&law, 100).unwrap())
    });
}

fn rates(c: &mut Criterion) {
    let list = [
        RateFunction::standard(2, 1.0, 1.0).unwrap(),
        RateFunction::standard(4, 1.0, 1.0).unwrap(),
        RateFunction::conditional(Family::Y, 4, 1.0, 0.6).unwrap(),
    ];
    let grid: Vec<f64> = (0..=1000).map(|k| k as f64 / 1000.0).collect();
    c.bench_function("rate_csv_3x1001", |b| {
        b.iter(|| {
            let mut out = Vec::with_capacity(1 << 17);
            write_rate_csv(&mut out, &list, &grid).unwrap();
            out
        })
    });
}

criterion_group!(benches, sampling, trajectories, densities, rates);
criterion_main!(benches);
