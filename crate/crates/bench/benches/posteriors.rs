use criterion::{black_box, criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use seqbayes::tabular::{
    derive_posteriors_from_joint, joint_posterior, pooledmc2_posterior, pooledmc_posterior,
};
use seqbayes_bench::bench_spec;

fn posterior_benches(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let spec1 = bench_spec(1, 3, 5);
    let spec2 = bench_spec(2, 3, 5);
    let tables1 = derive_posteriors_from_joint(&spec1).unwrap();
    let tables2 = derive_posteriors_from_joint(&spec2).unwrap();
    let seq: Vec<usize> = (0..40).map(|_| rng.gen_range(0..5)).collect();

    c.bench_function("joint_posterior_t40", |b| {
        b.iter(|| joint_posterior(black_box(&spec1), black_box(&seq)).unwrap())
    });
    c.bench_function("pooledmc_posterior_t40", |b| {
        b.iter(|| pooledmc_posterior(black_box(&tables1), black_box(&seq)).unwrap())
    });
    c.bench_function("pooledmc2_posterior_t40", |b| {
        b.iter(|| pooledmc2_posterior(black_box(&tables2), black_box(&seq)).unwrap())
    });
    c.bench_function("derive_posteriors_order2", |b| {
        b.iter(|| derive_posteriors_from_joint(black_box(&spec2)).unwrap())
    });
}

criterion_group!(benches, posterior_benches);
criterion_main!(benches);
