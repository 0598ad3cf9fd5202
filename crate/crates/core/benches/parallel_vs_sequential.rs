use std::hint::black_box;
use std::time::Duration;

use cover_core::envgen::{generate, EnvKind};
use cover_core::environment::Aabb;
use cover_core::report::{run_batch, BatchSpec};
use cover_core::sim_runtime::{simulate, CloudSource, Policy, Scenario};
use cover_core::{Execution, Point3};
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

fn scenario(robots: usize, t_max: f64) -> Scenario {
    let ws = Aabb::new(Point3::ORIGIN, Point3::new(30.0, 30.0, 0.0)).unwrap();
    let env = generate(EnvKind::Cluttered, ws, 0.3, 7).unwrap();
    let mut s = env.scenario(robots, CloudSource::Points(env.points.clone())).unwrap();
    s.t_max = t_max;
    s
}

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

/// Robots within one trial planned in parallel.
fn per_robot(c: &mut Criterion) {
    let mut group = c.benchmark_group("trial_8_robots");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let s = scenario(8, 2.0);
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(simulate(&s, exec).unwrap().metrics.steps))
        });
    }
    group.finish();
}

/// Whole trials spread across the pool.
fn per_trial(c: &mut Criterion) {
    let mut group = c.benchmark_group("batch_8_trials");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let s = scenario(2, 2.0);
    let spec = BatchSpec { trials: 8, base_seed: 0, policies: vec![Policy::Proposed] };
    for (name, exec) in MODES {
        group.bench_with_input(BenchmarkId::from_parameter(name), &exec, |b, &exec| {
            b.iter(|| black_box(run_batch(&s, &spec, exec).unwrap().trials.len()))
        });
    }
    group.finish();
}

criterion_group!(benches, per_robot, per_trial);
criterion_main!(benches);
