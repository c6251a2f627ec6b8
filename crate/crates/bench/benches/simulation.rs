use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use nodswitch::integrator::{step, IntegratorConfig};
use nodswitch::safety::{filter_velocity, SafetyConfig};
use nodswitch::{scenarios, sim, AgentState, Waypoint};

fn simulation(c: &mut Criterion) {
    let params = scenarios::base_params();
    let cfg = IntegratorConfig::default();
    let mut state = AgentState::new(0.5, 0.6, 0.0);
    state.waypoint = Some(Waypoint { rho: 0.8, y: 0.05 });
    c.bench_function("rk4_step", |b| {
        b.iter(|| step(black_box(&state), &params, &cfg).unwrap())
    });

    let safety = SafetyConfig::default();
    let neighbours: Vec<[f64; 2]> = (0..7)
        .map(|i| [0.5 + 0.05 * f64::from(i), 0.02 * f64::from(i % 3)])
        .collect();
    c.bench_function("filter_velocity_7", |b| {
        b.iter(|| filter_velocity(&safety, black_box([0.6, 0.0]), [-0.05, 0.01], &neighbours))
    });

    let mut group = c.benchmark_group("run");
    group.sample_size(10);
    let mut declustering = scenarios::declustering(0);
    declustering.integrator.t_end = 20.0;
    group.bench_function("declustering_t20", |b| {
        b.iter_batched(
            || declustering.clone(),
            |s| sim::run(&s).unwrap(),
            BatchSize::SmallInput,
        )
    });
    let mut pair = scenarios::fast_vs_slow(0);
    pair.integrator.t_end = 100.0;
    group.bench_function("fast_vs_slow_t100", |b| {
        b.iter_batched(|| pair.clone(), |s| sim::run(&s).unwrap(), BatchSize::SmallInput)
    });
    group.finish();
}

criterion_group!(benches, simulation);
criterion_main!(benches);
