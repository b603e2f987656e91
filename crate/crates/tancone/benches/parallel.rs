//! Parallel against sequential on the hot loops: ball masses on a fine mesh,
//! the density trace, and the scaled energy profile of a sampled map.
//!
//! `cargo bench -p tancone` runs both paths; with `--no-default-features`
//! the "parallel" rows fall back to the sequential code too.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use tancone::blowup::density_trace;
use tancone::currents::Region;
use tancone::examples;
use tancone::jholo::{EnergyProfile, Ladder, MapFamily, FD_STEP};
use tancone::par;

const O4: [f64; 4] = [0.0; 4];

fn currents(c: &mut Criterion) {
    let g = examples::holomorphic_graph(2, 1.0, 0.01).unwrap();
    let mut group = c.benchmark_group("z2_graph_h0.01");
    group.sample_size(20);
    for (name, seq) in [("parallel", false), ("sequential", true)] {
        let run = |f: &dyn Fn()| if seq { par::sequential(f) } else { f() };
        group.bench_function(BenchmarkId::new("ball_mass", name), |b| {
            b.iter(|| run(&|| { black_box(g.mass(&Region::ball(&O4, 0.5)).unwrap()); }))
        });
        group.bench_function(BenchmarkId::new("density_trace", name), |b| {
            b.iter(|| run(&|| { black_box(density_trace(&g, &O4, 0.8, 8, 0.7).unwrap()); }))
        });
    }
    group.finish();
}

fn maps(c: &mut Criterion) {
    let u = MapFamily::Hopf.sampled(FD_STEP, Ladder::geometric(1.0, 12).unwrap()).unwrap();
    let mut group = c.benchmark_group("hopf_map");
    group.sample_size(10);
    group.bench_function(BenchmarkId::new("energy_profile", "parallel"), |b| {
        b.iter(|| black_box(EnergyProfile::compute(&u, &O4).unwrap()))
    });
    group.bench_function(BenchmarkId::new("energy_profile", "sequential"), |b| {
        b.iter(|| par::sequential(|| black_box(EnergyProfile::compute(&u, &O4).unwrap())))
    });
    group.finish();
}

criterion_group!(benches, currents, maps);
criterion_main!(benches);
