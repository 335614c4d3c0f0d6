//! End-to-end acceptance checks for the whole library: classifier
//! equivalence, gradient correctness, synthetic recovery against the
//! enumerated optimum, a desk-scale sentiment study on generated text
//! with real file formats, protocol reproducibility, and the structural
//! identities between the order-0 models. Each check prints one PASS or
//! FAIL line with its measurements.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use seqbayes::data::{load_dataset, split, DatasetFormat, SplitPlan};
use seqbayes::embeddings::{
    embed, load_embeddings, tokenize, write_embeddings, EmbeddingTable, OovPolicy, TokenizerConfig,
};
use seqbayes::gaussian::fit_gaussian_nb;
use seqbayes::math::softmax;
use seqbayes::neural::{pooled_score, predict, PooledScorer};
use seqbayes::tabular::{
    derive_posteriors_from_joint, nb_posterior_discriminative, pooledmc_posterior, PooledJointSpec,
};
use seqbayes::training::{evaluate, multi_run, train, TrainConfig};
use seqbayes::verify::{exact_bayes_error, gradient_check, run_equivalence_suites, VerifyOptions};
use seqbayes::{EmbeddedSequence, Labeled, ProbVector};

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

fn report_line(name: &str, pass: bool, detail: &str) {
    println!(
        "criterion {name}: {} ({detail})",
        if pass { "PASS" } else { "FAIL" }
    );
}

#[test]
fn criterion_1_telescoping_classifiers_match_the_joint_law() {
    let started = Instant::now();
    let reports = run_equivalence_suites(&VerifyOptions::default()).unwrap();
    let elapsed = started.elapsed().as_secs_f64();

    let worst = reports
        .iter()
        .map(|r| r.max_deviation)
        .fold(0.0f64, f64::max);
    let specs: usize = reports.iter().map(|r| r.specs).sum();
    let pass = reports.iter().all(|r| r.passed()) && specs >= 300 && elapsed < 10.0;
    report_line(
        "1 (classifier equivalence)",
        pass,
        &format!("specs={specs} max_deviation={worst:.2e} elapsed={elapsed:.1}s"),
    );
    for r in &reports {
        assert!(r.passed(), "{r}");
    }
    assert!(specs >= 300);
    assert!(elapsed < 10.0, "took {elapsed:.1}s");
}

#[test]
fn criterion_2_analytic_gradients_match_finite_differences() {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for i in 0..20u64 {
        // Fixed seeds keep every pre-activation farther from the ReLU
        // kink than the finite-difference probe reaches.
        let mut rng = ChaCha8Rng::seed_from_u64(40 + i);
        let order = (i % 3) as usize;
        let embed_dim = rng.gen_range(2..=3);
        let hidden = rng.gen_range(3..=5);
        let n_labels = rng.gen_range(2..=3);
        let scorer =
            PooledScorer::pooled_mc(order, embed_dim, hidden, n_labels, rng.gen()).unwrap();
        let batch: Vec<Labeled<EmbeddedSequence>> = (0..rng.gen_range(2..=4))
            .map(|_| {
                let t = rng.gen_range(1..=5);
                let rows = (0..t)
                    .map(|_| (0..embed_dim).map(|_| rng.gen_range(-1.0..1.0)).collect())
                    .collect();
                Labeled::new(
                    EmbeddedSequence::from_rows(rows).unwrap(),
                    rng.gen_range(0..n_labels),
                )
            })
            .collect();
        let report = gradient_check(&scorer, &batch, 1e-5).unwrap();
        worst = worst.max(report.max_relative_error);
        assert!(
            report.max_relative_error < 1e-5,
            "instance {i} (order {order}): relative error {}",
            report.max_relative_error
        );
    }
    let elapsed = started.elapsed().as_secs_f64();
    let pass = worst < 1e-5 && elapsed < 30.0;
    report_line(
        "2 (gradient correctness)",
        pass,
        &format!("instances=20 worst_relative_error={worst:.2e} elapsed={elapsed:.1}s"),
    );
    assert!(elapsed < 30.0, "took {elapsed:.1}s");
}

/// Two order-1 laws over three symbols with identical uniform token
/// marginals at every time step, distinguishable only through transition
/// structure. Both transition matrices are doubly stochastic, so any
/// order-0 summary carries no signal.
fn hidden_transition_spec() -> PooledJointSpec {
    let pv = |v: &[f64]| ProbVector::new(v.to_vec()).unwrap();
    let circulant = |row: &[f64; 3]| -> Vec<ProbVector> {
        (0..3)
            .map(|shift| {
                let mut r = vec![0.0; 3];
                for (j, &value) in row.iter().enumerate() {
                    r[(j + shift) % 3] = value;
                }
                pv(&r)
            })
            .collect()
    };
    PooledJointSpec::markov1(
        pv(&[0.5, 0.5]),
        vec![pv(&[1.0 / 3.0; 3]), pv(&[1.0 / 3.0; 3])],
        vec![circulant(&[0.5, 0.3, 0.2]), circulant(&[0.5, 0.2, 0.3])],
    )
    .unwrap()
}

#[test]
fn criterion_3_exact_tables_recover_the_enumerated_optimum() {
    let spec = hidden_transition_spec();
    let t = 10;
    let bayes = exact_bayes_error(&spec, t).unwrap();
    let data = seqbayes::data::synth_generate(&spec, 20_000, t..=t, 17).unwrap();
    let tables = derive_posteriors_from_joint(&spec).unwrap();

    let mut mc_wrong = 0usize;
    let mut nb_wrong = 0usize;
    for ex in &data {
        let mc = pooledmc_posterior(&tables, &ex.sequence).unwrap();
        if argmax(mc.values()) != ex.label {
            mc_wrong += 1;
        }
        let nb = nb_posterior_discriminative(spec.class_prior(), &tables, &ex.sequence).unwrap();
        if argmax(nb.values()) != ex.label {
            nb_wrong += 1;
        }
    }
    let mc_error = mc_wrong as f64 / data.len() as f64;
    let nb_error = nb_wrong as f64 / data.len() as f64;

    let pass = (mc_error - bayes).abs() < 0.01 && nb_error >= mc_error;
    report_line(
        "3 (synthetic recovery)",
        pass,
        &format!(
            "bayes_error={bayes:.4} pooled_mc_error={mc_error:.4} naive_bayes_error={nb_error:.4}"
        ),
    );
    assert!(
        (mc_error - bayes).abs() < 0.01,
        "pooled MC error {mc_error:.4} vs enumerated optimum {bayes:.4}"
    );
    assert!(
        nb_error >= mc_error,
        "order-0 model should not beat the matched-order model here"
    );
}

// Desk-scale sentiment corpus: documents over a generated vocabulary
// whose polar words shift embeddings along a direction with zero
// component sum, so the scalar-reduction baseline is blind to the label
// while token-level models are not. Negations ("not" + opposite-polarity
// word) reward context windows over single tokens.
const EMBED_DIM: usize = 300;
const CORPUS_DOCS: usize = 6_000;
const DOC_LEN: std::ops::RangeInclusive<usize> = 10..=18;
const POLAR_WORDS: usize = 800;
const FILLER_WORDS: usize = 1_200;
const FILLER_PROB: f64 = 0.6;
const POLARITY_MATCH_PROB: f64 = 0.9;
const NEGATION_PROB: f64 = 0.25;
const NOISE_HALF_WIDTH: f64 = 0.09;

fn write_sentiment_corpus(dir: &Path, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    // Sentiment direction with zero component sum and unit length.
    let mut direction: Vec<f64> = (0..EMBED_DIM)
        .map(|_| if rng.gen_bool(0.5) { 1.0 } else { -1.0 })
        .collect();
    let mean = direction.iter().sum::<f64>() / EMBED_DIM as f64;
    for v in &mut direction {
        *v -= mean;
    }
    let norm = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
    for v in &mut direction {
        *v /= norm;
    }

    let mut table = EmbeddingTable::with_dim(EMBED_DIM).unwrap();
    let add_word = |name: &str, polarity: f64, rng: &mut ChaCha8Rng, table: &mut EmbeddingTable| {
        let vector: Vec<f64> = direction
            .iter()
            .map(|u| polarity * u + rng.gen_range(-NOISE_HALF_WIDTH..NOISE_HALF_WIDTH))
            .collect();
        assert!(table.insert(name, &vector).unwrap());
    };
    for w in 0..POLAR_WORDS {
        add_word(&format!("good{w:03}"), 1.0, &mut rng, &mut table);
        add_word(&format!("bad{w:03}"), -1.0, &mut rng, &mut table);
    }
    for w in 0..FILLER_WORDS {
        add_word(&format!("filler{w:04}"), 0.0, &mut rng, &mut table);
    }
    add_word("not", 0.0, &mut rng, &mut table);

    let embeddings_path = dir.join("vectors.txt");
    write_embeddings(&table, &embeddings_path).unwrap();

    let dataset_path = dir.join("reviews.jsonl");
    let mut lines = String::new();
    for d in 0..CORPUS_DOCS {
        let label_positive = d % 2 == 0;
        let target = rng.gen_range(DOC_LEN);
        let mut tokens: Vec<String> = Vec::with_capacity(target + 1);
        while tokens.len() < target {
            if rng.gen_bool(FILLER_PROB) {
                tokens.push(format!("filler{:04}", rng.gen_range(0..FILLER_WORDS)));
                continue;
            }
            let intended_positive = if rng.gen_bool(POLARITY_MATCH_PROB) {
                label_positive
            } else {
                !label_positive
            };
            let word = |positive: bool, rng: &mut ChaCha8Rng| {
                let w = rng.gen_range(0..POLAR_WORDS);
                if positive {
                    format!("good{w:03}")
                } else {
                    format!("bad{w:03}")
                }
            };
            if rng.gen_bool(NEGATION_PROB) {
                tokens.push("not".to_string());
                tokens.push(word(!intended_positive, &mut rng));
            } else {
                tokens.push(word(intended_positive, &mut rng));
            }
        }
        let record = serde_json::json!({
            "text": tokens.join(" "),
            "label": if label_positive { "pos" } else { "neg" },
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    std::fs::write(&dataset_path, lines).unwrap();
    (dataset_path, embeddings_path)
}

fn load_embedded_corpus(
    dataset_path: &Path,
    embeddings_path: &Path,
) -> Vec<Labeled<EmbeddedSequence>> {
    let dataset = load_dataset(dataset_path, DatasetFormat::Jsonl, "text", "label").unwrap();
    let table = load_embeddings(embeddings_path, Some(EMBED_DIM)).unwrap();
    let tokenizer = TokenizerConfig::default();
    dataset
        .examples()
        .iter()
        .map(|(text, label)| {
            let tokens = tokenize(text, &tokenizer);
            let sequence = embed(&tokens, &table, OovPolicy::Skip).unwrap();
            let label = dataset.labels().index_of(label).unwrap();
            Labeled::new(sequence, label)
        })
        .collect()
}

#[test]
fn criterion_4_desk_scale_sentiment_study() {
    let started = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let (dataset_path, embeddings_path) = write_sentiment_corpus(dir.path(), 2024);
    let corpus = load_embedded_corpus(&dataset_path, &embeddings_path);
    assert_eq!(corpus.len(), CORPUS_DOCS);

    // 4000 train / 2000 test.
    let (train_pool, test) = split(
        &corpus,
        &SplitPlan {
            val_fraction: 1.0 / 3.0,
            seed: 0,
        },
    )
    .unwrap();
    assert_eq!(train_pool.len(), 4_000);
    assert_eq!(test.len(), 2_000);

    let gaussian = fit_gaussian_nb(&train_pool, 2).unwrap();
    let gaussian_error = evaluate(&gaussian, &test).unwrap();

    let config = TrainConfig::default();
    let run_model = |order: usize| {
        let train_pool = &train_pool;
        let test = &test;
        move |seed: u64| -> seqbayes::Result<f64> {
            let plan = SplitPlan {
                val_fraction: 0.25,
                seed,
            };
            let (train_set, val_set) = split(train_pool, &plan)?;
            let scorer = PooledScorer::pooled_mc(order, EMBED_DIM, 64, 2, seed)?;
            let per_run = TrainConfig {
                seed,
                ..TrainConfig::default()
            };
            let (best, _) = train(&scorer, &train_set, &val_set, &per_run)?;
            evaluate(&best, test)
        }
    };
    let nb_report = multi_run(run_model(0), &config).unwrap();
    let mc2_report = multi_run(run_model(2), &config).unwrap();

    let elapsed = started.elapsed().as_secs_f64();
    let pass = gaussian_error >= 0.35
        && nb_report.mean() <= 0.25
        && mc2_report.mean() <= nb_report.mean() + 0.01
        && elapsed < 1800.0;
    report_line(
        "4 (desk-scale sentiment study)",
        pass,
        &format!(
            "gaussian_error={gaussian_error:.4} neural_nb_mean={:.4} neural_mc2_mean={:.4} elapsed={elapsed:.0}s",
            nb_report.mean(),
            mc2_report.mean()
        ),
    );
    assert!(
        gaussian_error >= 0.35,
        "scalar-reduction baseline should stay near chance, got {gaussian_error:.4}"
    );
    assert!(
        nb_report.mean() <= 0.25,
        "token-level model should beat 25%, got {:.4}",
        nb_report.mean()
    );
    assert!(
        mc2_report.mean() <= nb_report.mean() + 0.01,
        "context windows should not lose more than one point: {:.4} vs {:.4}",
        mc2_report.mean(),
        nb_report.mean()
    );
    assert!(elapsed < 1800.0, "took {elapsed:.0}s");
}

fn toy_embedded_set(n: usize, dim: usize, seed: u64) -> Vec<Labeled<EmbeddedSequence>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|i| {
            let label = i % 2;
            let center = if label == 0 { 0.8 } else { -0.8 };
            let t = rng.gen_range(2..=5);
            let rows = (0..t)
                .map(|_| {
                    (0..dim)
                        .map(|_| center + rng.gen_range(-0.5..0.5))
                        .collect()
                })
                .collect();
            Labeled::new(EmbeddedSequence::from_rows(rows).unwrap(), label)
        })
        .collect()
}

#[test]
fn criterion_5_protocol_is_bitwise_reproducible() {
    let data = toy_embedded_set(120, 4, 9);
    let (pool, test) = split(
        &data,
        &SplitPlan {
            val_fraction: 0.25,
            seed: 1,
        },
    )
    .unwrap();
    let config = TrainConfig {
        epochs: 2,
        batch_size: 16,
        runs: 5,
        seed: 5,
        ..TrainConfig::default()
    };

    let run = |seed: u64| -> seqbayes::Result<f64> {
        let (train_set, val_set) = split(
            &pool,
            &SplitPlan {
                val_fraction: 0.25,
                seed,
            },
        )?;
        let scorer = PooledScorer::neural_nb(4, 8, 2, seed)?;
        let per_run = TrainConfig { seed, ..config };
        let (best, _) = train(&scorer, &train_set, &val_set, &per_run)?;
        evaluate(&best, &test)
    };
    let first = multi_run(run, &config).unwrap();
    let second = multi_run(run, &config).unwrap();

    let n = first.runs().len() as f64;
    let mean = first.runs().iter().sum::<f64>() / n;
    let sample_var = first
        .runs()
        .iter()
        .map(|e| (e - mean) * (e - mean))
        .sum::<f64>()
        / (n - 1.0);
    let expected_half_width = 1.96 * sample_var.sqrt() / n.sqrt();

    let text = first.to_text();
    let pass = first == second
        && first.runs().len() == 5
        && first.mean() == mean
        && (first.half_width() - expected_half_width).abs() < 1e-15
        && text.contains("mean ")
        && text.contains("ci95 ");
    report_line(
        "5 (protocol fidelity)",
        pass,
        &format!(
            "runs=5 mean={:.4} half_width={:.4} bitwise_identical={}",
            first.mean(),
            first.half_width(),
            first == second
        ),
    );
    assert_eq!(first, second, "repeated invocations must agree bitwise");
    assert!(pass);
}

#[test]
fn criterion_6_structural_identities() {
    // Identity 1: the order-0 constructor is literally pooled MC of
    // order 0, so whole training protocols coincide report for report.
    let data = toy_embedded_set(100, 3, 21);
    let (pool, test) = split(
        &data,
        &SplitPlan {
            val_fraction: 0.25,
            seed: 2,
        },
    )
    .unwrap();
    let config = TrainConfig {
        epochs: 2,
        batch_size: 16,
        runs: 3,
        seed: 11,
        ..TrainConfig::default()
    };
    let protocol = |make: fn(u64) -> seqbayes::Result<PooledScorer>| {
        let pool = &pool;
        let test = &test;
        move |seed: u64| -> seqbayes::Result<f64> {
            let (train_set, val_set) = split(
                pool,
                &SplitPlan {
                    val_fraction: 0.25,
                    seed,
                },
            )?;
            let scorer = make(seed)?;
            let per_run = TrainConfig { seed, ..config };
            let (best, _) = train(&scorer, &train_set, &val_set, &per_run)?;
            evaluate(&best, test)
        }
    };
    let nb_report = multi_run(
        protocol(|seed| PooledScorer::neural_nb(3, 6, 2, seed)),
        &config,
    )
    .unwrap();
    let mc0_report = multi_run(
        protocol(|seed| PooledScorer::pooled_mc(0, 3, 6, 2, seed)),
        &config,
    )
    .unwrap();
    let identical_reports = nb_report == mc0_report;

    // Identity 2: order-0 predictions ignore token order.
    let scorer = PooledScorer::neural_nb(3, 5, 2, 33).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let mut permutation_invariant = true;
    for _ in 0..300 {
        let t = rng.gen_range(1..=8);
        let rows: Vec<Vec<f64>> = (0..t)
            .map(|_| (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect())
            .collect();
        let mut shuffled = rows.clone();
        shuffled.shuffle(&mut rng);
        let (label_a, _) = predict(&scorer, &EmbeddedSequence::from_rows(rows).unwrap()).unwrap();
        let (label_b, _) =
            predict(&scorer, &EmbeddedSequence::from_rows(shuffled).unwrap()).unwrap();
        if label_a != label_b {
            permutation_invariant = false;
        }
    }

    // Identity 3: softmax never changes the winner.
    let mut commutes = true;
    for _ in 0..10_000 {
        let len = rng.gen_range(2..=8);
        let scores: Vec<f64> = (0..len).map(|_| rng.gen_range(-30.0..30.0)).collect();
        let posterior = softmax(&scores).unwrap();
        if argmax(&scores) != argmax(posterior.values()) {
            commutes = false;
        }
    }

    let pass = identical_reports && permutation_invariant && commutes;
    report_line(
        "6 (structural identities)",
        pass,
        &format!(
            "identical_reports={identical_reports} permutation_invariant={permutation_invariant} softmax_argmax_commutes={commutes}"
        ),
    );
    assert!(identical_reports, "order-0 constructors must coincide");
    assert!(permutation_invariant);
    assert!(commutes);

    // The identity also holds at the score level before any training.
    let a = PooledScorer::neural_nb(3, 5, 2, 77).unwrap();
    let b = PooledScorer::pooled_mc(0, 3, 5, 2, 77).unwrap();
    assert_eq!(a.params().flat(), b.params().flat());
    let seq = toy_embedded_set(1, 3, 5).remove(0).sequence;
    assert_eq!(
        pooled_score(&a, &seq).unwrap(),
        pooled_score(&b, &seq).unwrap()
    );
}
