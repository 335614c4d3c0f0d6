//! Cross-checks the log-space posterior against exact rational
//! arithmetic. The generative tables are built from small integer counts,
//! so an independent big-rational evaluation of Bayes' rule is exact; the
//! float path must stay within round-off of it even on sequences long
//! enough that direct probability products would underflow.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqbayes::tabular::TabularNB;
use seqbayes::ProbVector;

struct RationalNb {
    prior: Vec<BigRational>,
    emission: Vec<Vec<BigRational>>,
}

impl RationalNb {
    fn posterior(&self, y: &[usize]) -> Vec<f64> {
        let weights: Vec<BigRational> = self
            .prior
            .iter()
            .zip(&self.emission)
            .map(|(p, row)| {
                let mut w = p.clone();
                for &sym in y {
                    w *= row[sym].clone();
                }
                w
            })
            .collect();
        let total: BigRational = weights
            .iter()
            .cloned()
            .fold(BigRational::zero(), |a, b| a + b);
        weights
            .iter()
            .map(|w| (w / total.clone()).to_f64().expect("ratio fits in f64"))
            .collect()
    }
}

/// Integer counts in 1..=9 define each row; both models are built from the
/// same counts, so the only divergence between them is float round-off.
fn random_count_models(n_labels: usize, n_symbols: usize, seed: u64) -> (TabularNB, RationalNb) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw_row =
        |len: usize| -> Vec<i64> { (0..len).map(|_| rng.gen_range(1..=9)).collect() };

    let prior_counts = draw_row(n_labels);
    let emission_counts: Vec<Vec<i64>> = (0..n_labels).map(|_| draw_row(n_symbols)).collect();

    let to_floats = |counts: &[i64]| -> Vec<f64> {
        let total: i64 = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    };
    let to_rationals = |counts: &[i64]| -> Vec<BigRational> {
        let total: i64 = counts.iter().sum();
        counts
            .iter()
            .map(|&c| BigRational::new(BigInt::from(c), BigInt::from(total)))
            .collect()
    };

    let float_model = TabularNB::new(
        ProbVector::new(to_floats(&prior_counts)).unwrap(),
        emission_counts
            .iter()
            .map(|row| ProbVector::new(to_floats(row)).unwrap())
            .collect(),
    )
    .unwrap();
    let rational_model = RationalNb {
        prior: to_rationals(&prior_counts),
        emission: emission_counts
            .iter()
            .map(|row| to_rationals(row))
            .collect(),
    };
    (float_model, rational_model)
}

fn max_posterior_gap(t: usize, seed: u64) -> f64 {
    let n_symbols = 4;
    let (float_model, rational_model) = random_count_models(3, n_symbols, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xABCD);
    let y: Vec<usize> = (0..t).map(|_| rng.gen_range(0..n_symbols)).collect();
    let float_posterior = float_model.posterior(&y).unwrap();
    let exact_posterior = rational_model.posterior(&y);
    float_posterior
        .values()
        .iter()
        .zip(&exact_posterior)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

#[test]
fn log_space_posterior_matches_exact_rationals_at_length_200() {
    for seed in 0..5 {
        let gap = max_posterior_gap(200, seed);
        assert!(gap < 1e-12, "seed {seed}: max deviation {gap:e}");
    }
}

#[test]
fn log_space_posterior_survives_lengths_that_underflow_direct_products() {
    // At this length the per-class sequence probability is far below the
    // smallest positive f64, so only the log-space path is viable.
    let t = 2000;
    let (float_model, _) = random_count_models(3, 4, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let y: Vec<usize> = (0..t).map(|_| rng.gen_range(0..4)).collect();
    let mut direct = 1.0f64;
    for &sym in &y {
        direct *= float_model.emission(0).unwrap()[sym];
    }
    assert_eq!(direct, 0.0, "direct product should underflow");

    for seed in 0..5 {
        let gap = max_posterior_gap(t, seed);
        assert!(gap < 1e-11, "seed {seed}: max deviation {gap:e}");
    }
}
