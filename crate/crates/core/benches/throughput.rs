//! Single worker versus the full pool on the two hot loops: the budget
//! quadrature and the Langevin ensemble. Built without the `parallel`
//! feature both variants run the sequential fallback.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use fluxbalance::flux::{budget_grid, power_budget, BudgetOptions};
use fluxbalance::langevin::{run_ensemble, EnsembleSpec};
use fluxbalance::{with_workers, AtomParams, Bath};

fn pools() -> Vec<(&'static str, Option<usize>)> {
    vec![("sequential", Some(1)), ("all_workers", None)]
}

fn budget(c: &mut Criterion) {
    let p = AtomParams::from_damping(0.01, 1.0, 1.0).unwrap();
    let grid = budget_grid(&p, 100.0).unwrap();
    let bath = Bath::thermal(1.0).unwrap();
    let mut group = c.benchmark_group("power_budget");
    group.sample_size(10);
    for (name, workers) in pools() {
        group.bench_with_input(BenchmarkId::new(name, grid.len()), &grid, |b, grid| {
            b.iter(|| {
                with_workers(workers, || power_budget(&p, bath, grid, &BudgetOptions::default()).unwrap())
                    .unwrap()
            })
        });
    }
    group.finish();
}

fn ensemble(c: &mut Criterion) {
    let p = AtomParams::from_damping(0.1, 1.0, 1.0).unwrap();
    let mut spec = EnsembleSpec::new(p, Bath::Vacuum, 20.0, 64, 1);
    spec.t_total = 500.0;
    spec.t_burn = 100.0;
    let mut group = c.benchmark_group("langevin_ensemble");
    group.sample_size(10);
    for (name, workers) in pools() {
        group.bench_with_input(BenchmarkId::new(name, spec.n_traj), &spec, |b, spec| {
            b.iter(|| with_workers(workers, || run_ensemble(spec).unwrap()).unwrap())
        });
    }
    group.finish();
}

criterion_group!(benches, budget, ensemble);
criterion_main!(benches);
