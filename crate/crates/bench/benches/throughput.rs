use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion, Throughput};

use banditlb::envs::ClippedGaussianSpec;
use banditlb::info::exact_history_kl_oracle;
use banditlb::stream::seeded;
use banditlb::{run_episode, PolicyKind, PolicySpec};
use banditlb_bench::{bernoulli_spec, clipped_matrix};

const ROUNDS: usize = 4096;

fn episodes(c: &mut Criterion) {
    let mut group = c.benchmark_group("episode");
    group.throughput(Throughput::Elements(ROUNDS as u64));
    for arms in [2, 8] {
        let lm = clipped_matrix(arms, ROUNDS);
        for kind in [PolicyKind::Exp3, PolicyKind::Exp3Ix, PolicyKind::Exp3P { delta: 0.15 }] {
            let spec = PolicySpec::new(kind, arms, ROUNDS);
            let mut rng = seeded(2);
            group.bench_with_input(BenchmarkId::new(kind.to_string(), arms), &lm, |b, lm| {
                b.iter(|| run_episode(&spec, black_box(lm), &mut rng).unwrap().actions.len())
            });
        }
    }
    group.finish();
}

fn samplers(c: &mut Criterion) {
    let mut group = c.benchmark_group("sample");
    group.throughput(Throughput::Elements(ROUNDS as u64));
    let clipped = ClippedGaussianSpec::high_probability(4, ROUNDS, 0.15, 1).unwrap();
    let bernoulli = bernoulli_spec(4, ROUNDS);
    let mut rng = seeded(3);
    group.bench_function("clipped_gaussian", |b| b.iter(|| clipped.sample(&mut rng).unwrap()));
    group.bench_function("bernoulli", |b| b.iter(|| bernoulli.sample(&mut rng).unwrap()));
    group.finish();
}

fn oracle(c: &mut Criterion) {
    let spec = PolicySpec::new(PolicyKind::Exp3, 3, 4);
    let (p, q) = ([0.2, 0.5, 0.7], [0.2, 0.4, 0.9]);
    c.bench_function("oracle_k3_t4", |b| b.iter(|| exact_history_kl_oracle(&spec, black_box(&p), &q, 4).unwrap().lhs));
}

criterion_group!(benches, episodes, samplers, oracle);
criterion_main!(benches);
