use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use nodswitch::bifurcation::{
    find_equilibria, switching_thresholds, trace_b_branch, trace_diagram, BifurcationProblem, ContinuationSettings,
};
use nodswitch::config::BifurcationSection;
use nodswitch::Param;

fn continuation(c: &mut Criterion) {
    let section = BifurcationSection::default();
    let settings = ContinuationSettings::default();
    let b_problem = section.problem().unwrap();
    let u_problem = BifurcationProblem::new(section.params, 0.05, Param::U, (0.5, 1.5)).unwrap();

    c.bench_function("trace_b_branch", |b| {
        b.iter(|| trace_b_branch(black_box(&b_problem), &settings).unwrap())
    });
    c.bench_function("trace_diagram_u", |b| {
        b.iter(|| trace_diagram(black_box(&u_problem), &settings).unwrap())
    });
    c.bench_function("switching_thresholds", |b| {
        b.iter(|| switching_thresholds(black_box(&section.params), section.rho, (-1.0, 1.0), &settings).unwrap())
    });
    c.bench_function("find_equilibria_601", |b| {
        b.iter(|| find_equilibria(black_box(&section.params), section.rho, -1.5, 1.5, 601))
    });
}

criterion_group!(benches, continuation);
criterion_main!(benches);
