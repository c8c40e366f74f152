//! Hot-path benchmarks: locally consistent jump rates, Gibbs swap weights,
//! per-particle event-rate assembly, the full infinite-swapping event loop,
//! and a small grid-oracle eigensolve.

use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use swapfv::{
    build_generator, event_rates, inf_swap_weight, principal_eigenpair, simulate_ins,
    transition_rates, Direction, GridPolicy, ProblemSpec, SimParams,
};

fn bench_transition_rates(c: &mut Criterion) {
    let mut group = c.benchmark_group("transition_rates");
    for dim in [1usize, 2, 4] {
        let b: Vec<f64> = (0..dim).map(|i| 0.3 - 0.1 * i as f64).collect();
        let a = vec![0.4; dim];
        group.bench_with_input(BenchmarkId::from_parameter(dim), &dim, |bench, _| {
            bench.iter(|| transition_rates(black_box(&b), black_box(&a), black_box(0.05)).unwrap())
        });
    }
    group.finish();
}

fn bench_swap_weight(c: &mut Criterion) {
    let spec = ProblemSpec::cosine(0.2).unwrap();
    let x = [0.31];
    let y = [-0.47];
    c.bench_function("inf_swap_weight", |bench| {
        bench.iter(|| inf_swap_weight(black_box(&x), black_box(&y), &spec).rho())
    });
}

fn bench_event_rates(c: &mut Criterion) {
    let cosine = ProblemSpec::cosine(0.2).unwrap();
    let mixture = ProblemSpec::gaussian_mixture(0.4).unwrap();
    let mut group = c.benchmark_group("event_rates");
    group.bench_function("cosine_1d", |bench| {
        bench.iter(|| event_rates(black_box(&[0.31]), 0.7, &cosine, 0.05).unwrap())
    });
    group.bench_function("mixture_2d", |bench| {
        bench.iter(|| event_rates(black_box(&[1.3, 2.6]), 0.7, &mixture, 0.05).unwrap())
    });
    group.finish();
}

fn bench_ins_loop(c: &mut Criterion) {
    let spec = ProblemSpec::cosine(0.2).unwrap();
    c.bench_function("simulate_ins_n10_t5", |bench| {
        let mut seed = 0u64;
        bench.iter(|| {
            seed += 1;
            let params =
                SimParams::new(10, 5.0, GridPolicy::Fixed { h: 0.05 }, seed).with_stride(100);
            simulate_ins(&spec, &params).unwrap()
        })
    });
}

fn bench_oracle(c: &mut Criterion) {
    let spec = ProblemSpec::cosine(0.2).unwrap();
    c.bench_function("oracle_eigenpair_n100", |bench| {
        bench.iter(|| {
            let gen = build_generator(&spec, 100, Direction::Forward).unwrap();
            principal_eigenpair(&gen).unwrap().lambda
        })
    });
}

criterion_group!(
    benches,
    bench_transition_rates,
    bench_swap_weight,
    bench_event_rates,
    bench_ins_loop,
    bench_oracle
);
criterion_main!(benches);
