use std::f64::consts::FRAC_PI_4;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use aepea::batch::{self, Job};
use aepea::scenario::{reference_experiment, static_equilibrium_solve, Phase, RunConfig, ScenarioScript, Stage};

/// Reference runs with shortened holds and staggered start angles.
fn jobs(count: usize) -> Vec<Job> {
    let (script, cfg) = reference_experiment();
    (0..count)
        .map(|i| {
            let config = RunConfig {
                duration_scale: 0.05,
                initial_equilibrium: -FRAC_PI_4 + 0.01 * i as f64,
                ..cfg.clone()
            };
            Job { script: script.clone(), config }
        })
        .collect()
}

/// Short equilibrium moves between many target pairs.
fn transition_jobs(count: usize) -> Vec<Job> {
    (0..count)
        .map(|i| {
            let target = -1.0 + 2.0 * i as f64 / count as f64;
            let phases = vec![Phase::ChangeEquilibrium(target), Phase::Hold(0.1)];
            Job {
                script: ScenarioScript { stages: vec![Stage { name: "move".into(), phases }] },
                config: RunConfig { initial_equilibrium: 0.0, ..RunConfig::reference() },
            }
        })
        .collect()
}

fn bench_batch(c: &mut Criterion) {
    let mut group = c.benchmark_group("reference_batch");
    group.sample_size(10);
    for n in [4, 16] {
        let work = jobs(n);
        group.bench_with_input(BenchmarkId::new("sequential", n), &work, |b, w| b.iter(|| batch::run_batch_sequential(w)));
        group.bench_with_input(BenchmarkId::new("parallel", n), &work, |b, w| b.iter(|| batch::run_batch(w)));
    }
    group.finish();

    let mut group = c.benchmark_group("transition_sweep");
    group.sample_size(10);
    let work = transition_jobs(32);
    group.bench_function("sequential", |b| b.iter(|| batch::run_batch_sequential(&work)));
    group.bench_function("parallel", |b| b.iter(|| batch::run_batch(&work)));
    group.finish();
}

fn bench_static_sweep(c: &mut Criterion) {
    let cfg = RunConfig::reference();
    let targets: Vec<f64> = (0..4096).map(|i| -1.2 + 2.4 * i as f64 / 4096.0).collect();
    let solve = |q: &f64| static_equilibrium_solve(&cfg.params, &cfg.load, *q);
    let mut group = c.benchmark_group("static_sweep");
    group.bench_function("sequential", |b| b.iter(|| batch::map_sequential(&targets, solve)));
    group.bench_function("parallel", |b| b.iter(|| batch::map(&targets, solve)));
    group.finish();
}

criterion_group!(benches, bench_batch, bench_static_sweep);
criterion_main!(benches);
