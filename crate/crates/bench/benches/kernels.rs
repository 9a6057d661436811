use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rnnjet_bench::{dataset, inputs, net};
use rnnjet_core::{
    bernstein_eval, empirical_risk, output_jet, s_k, sample_on_grid, simulate, Excitation, SimConfig, StateSpaceSystem,
};

fn jets(c: &mut Criterion) {
    let mut g = c.benchmark_group("output_jet");
    let u = inputs(1).remove(0);
    for (n, k) in [(1, 4), (3, 4), (3, 12), (8, 12)] {
        let p = net(n, 1.0);
        let jet = u.jet(k - 1);
        g.bench_with_input(BenchmarkId::from_parameter(format!("n{n}_k{k}")), &k, |b, &k| {
            b.iter(|| output_jet(black_box(&p), black_box(&jet), k).unwrap())
        });
    }
    g.finish();
}

fn bernstein(c: &mut Criterion) {
    let u = inputs(1).remove(0);
    let mut g = c.benchmark_group("bernstein");
    for k in [4, 12] {
        let samples = sample_on_grid(&u, k - 1, 1.0).unwrap();
        g.bench_with_input(BenchmarkId::new("s_k", k), &k, |b, &k| {
            b.iter(|| s_k(black_box(&samples), k).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("eval", k), &k, |b, _| {
            b.iter(|| bernstein_eval(black_box(&samples), black_box(0.37)).unwrap())
        });
    }
    g.finish();
}

fn simulation(c: &mut Criterion) {
    let u = Excitation::from(inputs(1).remove(0));
    let sys = StateSpaceSystem::Rnn(net(3, 1.0));
    let cfg = SimConfig::default();
    c.bench_function("simulate_n3_default_grid", |b| {
        b.iter(|| simulate(black_box(&sys), black_box(&u), 1.0, &cfg).unwrap())
    });
}

fn risk(c: &mut Criterion) {
    let d = dataset(128, 4);
    let p = net(1, 1.0);
    c.bench_function("empirical_risk_N128_k4", |b| {
        b.iter(|| empirical_risk(black_box(&p), black_box(&d)).unwrap())
    });
}

criterion_group!(benches, jets, bernstein, simulation, risk);
criterion_main!(benches);
