use std::f64::consts::PI;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nodal_core::periodic::{poincare_map, PeriodicSpec};
use nodal_core::rotation::{estimate_thresholds, BoundPair};
use nodal_core::shoot::grid::EtaGridSpec;
use nodal_core::shoot::{default_grid, scan_eta, solve_targets, SolveOptions};
use nodal_core::{build_truncation, shoot_rk, ProblemSpec, ScalarFn, ShotInput, ShotOptions};

fn reference() -> nodal_core::TruncatedSystem {
    let spec = ProblemSpec::ball(2, 10.0, 5.0, ScalarFn::constant(1.0), ScalarFn::new(|u| u * u * u));
    build_truncation(&spec).unwrap()
}

fn shots(c: &mut Criterion) {
    let sys = reference();
    let mut g = c.benchmark_group("shot");
    for eta in [0.1, 2.0, 9.0] {
        g.bench_function(format!("eta_{eta}"), |b| {
            b.iter(|| shoot_rk(&ShotInput::new(&sys, black_box(eta))).unwrap())
        });
    }
    g.finish();
}

fn scans(c: &mut Criterion) {
    let sys = reference();
    let grid = default_grid(&sys, &EtaGridSpec::default()).unwrap();
    let mut g = c.benchmark_group("scan");
    g.sample_size(10);
    g.bench_function("eta_grid", |b| b.iter(|| scan_eta(&sys, &grid, ShotOptions::default())));
    g.bench_function("solve_j0_to_3", |b| {
        b.iter(|| solve_targets(&sys, &[0, 1, 2, 3], &SolveOptions::default()).unwrap())
    });
    g.finish();
}

fn rotation(c: &mut Criterion) {
    let bounds = BoundPair::identity(1.0);
    let mut g = c.benchmark_group("rotation");
    g.sample_size(10);
    g.bench_function("thresholds_j2", |b| b.iter(|| estimate_thresholds(&bounds, black_box(2)).unwrap()));
    g.finish();
}

fn return_map(c: &mut Criterion) {
    let spec = PeriodicSpec::new(2.0 * PI, 10.0, ScalarFn::constant(1.0), ScalarFn::new(|u| u * u * u), 10.0).unwrap();
    c.bench_function("poincare_map", |b| {
        b.iter(|| poincare_map(&spec, spec.circle_point(black_box(0.5), 0.3)).unwrap())
    });
}

criterion_group!(benches, shots, scans, rotation, return_map);
criterion_main!(benches);
