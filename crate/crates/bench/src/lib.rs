//! Shared fixtures for the criterion benchmarks.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use seqbayes::tabular::PooledJointSpec;
use seqbayes::{EmbeddedSequence, Labeled};

/// A strictly positive generative law for benchmark inputs.
pub fn bench_spec(order: usize, n_labels: usize, n_symbols: usize) -> PooledJointSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    PooledJointSpec::random(order, n_labels, n_symbols, &mut rng).expect("valid sizes")
}

/// Deterministic embedded batch: `count` sequences of length `len` in
/// dimension `dim`, labels alternating.
pub fn bench_batch(count: usize, len: usize, dim: usize) -> Vec<Labeled<EmbeddedSequence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    (0..count)
        .map(|i| {
            let rows = (0..len)
                .map(|_| {
                    (0..dim)
                        .map(|_| rand::Rng::gen_range(&mut rng, -1.0..1.0))
                        .collect()
                })
                .collect();
            Labeled::new(
                EmbeddedSequence::from_rows(rows).expect("non-empty rows"),
                i % 2,
            )
        })
        .collect()
}
