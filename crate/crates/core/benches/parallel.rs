//! Parallel vs sequential throughput on the two data-parallel workloads:
//! grid sweeps and randomized FM verification trials.
//!
//! Build with `--no-default-features` to measure the crate without rayon;
//! with the default `parallel` feature, `run_sweep` fans out over the pool
//! and `run_sweep_sequential` is the in-process baseline.

use criterion::{criterion_group, criterion_main, Criterion};

use gic_core::channel::{Channel, ManyToOneChannel, OneToManyChannel};
use gic_core::fmcheck::{run_verify, VerifyConfig};
use gic_core::hk::Topology;
use gic_core::sweep::{run_sweep, run_sweep_sequential, Axis, SweepGrid, SweepParam};

fn one_to_many_grid(step: f64) -> SweepGrid {
    let base = Channel::OneToMany(
        OneToManyChannel::new(vec![1.0, 1.0, 1.0], vec![0.0, 0.0]).unwrap(),
    );
    SweepGrid {
        base,
        x: Axis::new(SweepParam::Gain(1), 0.0, 4.0, step).unwrap(),
        y: Some(Axis::new(SweepParam::Gain(2), 0.0, 4.0, step).unwrap()),
    }
}

/// Four users make each cell classify over 8 decode sets and 12 special
/// indices, which is closer to the real sweep workloads.
fn four_user_grid(step: f64) -> SweepGrid {
    let base = Channel::ManyToOne(
        ManyToOneChannel::new(vec![2.0, 2.0, 2.0, 2.0], vec![0.0, 0.0, 1.1]).unwrap(),
    );
    SweepGrid {
        base,
        x: Axis::new(SweepParam::Gain(2), 0.0, 4.0, step).unwrap(),
        y: Some(Axis::new(SweepParam::Gain(3), 0.0, 4.0, step).unwrap()),
    }
}

fn bench_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("sweep_3user_81x81");
    let grid = one_to_many_grid(0.05);
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| run_sweep(&grid).unwrap()));
    group.bench_function("sequential", |b| b.iter(|| run_sweep_sequential(&grid).unwrap()));
    group.finish();

    let mut group = c.benchmark_group("sweep_4user_41x41");
    let grid = four_user_grid(0.1);
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| run_sweep(&grid).unwrap()));
    group.bench_function("sequential", |b| b.iter(|| run_sweep_sequential(&grid).unwrap()));
    group.finish();
}

fn bench_verify(c: &mut Criterion) {
    let cfg = VerifyConfig {
        topology: Topology::ManyToOne,
        users: 3,
        trials: 4,
        samples: 1000,
        seed: 7,
    };
    let mut group = c.benchmark_group("verify_fm_k3");
    group.sample_size(10);
    group.bench_function("parallel", |b| b.iter(|| run_verify(&cfg).unwrap()));
    group.finish();
}

criterion_group!(benches, bench_sweep, bench_verify);
criterion_main!(benches);
