//! Implementations of the subcommands declared in `main`.

use std::fs::{self, File};
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;
use std::sync::Mutex;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use seqbayes::data::{load_dataset, split, synth_generate, DatasetFormat, SplitPlan};
use seqbayes::embeddings::{
    embed, load_embeddings, tokenize, EmbeddingTable, OovPolicy, TokenizerConfig,
};
use seqbayes::gaussian::{fit_gaussian_nb, GaussianNB};
use seqbayes::model_io::{load_model, save_model, SavedModel};
use seqbayes::neural::{self, PooledScorer};
use seqbayes::tabular::PooledJointSpec;
use seqbayes::training::{self, EpochRecord, EvalReport, TrainConfig};
use seqbayes::verify::{run_equivalence_suites, VerifyOptions, EQUIVALENCE_TOLERANCE};
use seqbayes::{EmbeddedSequence, LabelSet, Labeled, ProbVector};

use crate::config::{self, ResolvedTraining, RunManifest};
use crate::{CliError, EvaluateArgs, PredictArgs, SynthArgs, TrainArgs, VerifyArgs};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ModelKind {
    GaussianNb,
    NeuralNb,
    NeuralPooledMc,
}

fn parse_model_kind(name: &str) -> Result<ModelKind, CliError> {
    match name {
        "gaussian-nb" => Ok(ModelKind::GaussianNb),
        "neural-nb" => Ok(ModelKind::NeuralNb),
        "neural-pooled-mc" => Ok(ModelKind::NeuralPooledMc),
        other => Err(CliError::Usage(format!(
            "unknown model kind {other:?}, expected gaussian-nb, neural-nb or neural-pooled-mc"
        ))),
    }
}

fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Usage(format!(
            "{what} not found: {}",
            path.display()
        )))
    }
}

fn dataset_format(path: &Path, flag: Option<&str>) -> Result<DatasetFormat, CliError> {
    match flag {
        Some(name) => name
            .parse()
            .map_err(|err: seqbayes::Error| CliError::Usage(err.to_string())),
        None => DatasetFormat::from_path(path).ok_or_else(|| {
            CliError::Usage(format!(
                "cannot infer the dataset format of {}; pass --format jsonl, csv or tsv",
                path.display()
            ))
        }),
    }
}

fn write_file(path: &Path, body: &str) -> Result<(), CliError> {
    fs::write(path, body)
        .map_err(|err| CliError::Runtime(format!("writing {}: {err}", path.display())))
}

/// A labeled text dataset embedded into vector sequences.
struct EmbeddedDataset {
    examples: Vec<Labeled<EmbeddedSequence>>,
    labels: LabelSet,
}

/// Loads, tokenizes, and embeds a dataset. With `into_labels` the label
/// names must map into an existing label set (a trained model's); without
/// it the dataset's own label set is used.
fn load_embedded_dataset(
    path: &Path,
    format: DatasetFormat,
    text_field: &str,
    label_field: &str,
    table: &EmbeddingTable,
    into_labels: Option<&LabelSet>,
) -> Result<EmbeddedDataset, CliError> {
    let dataset = load_dataset(path, format, text_field, label_field)?;
    let labels = into_labels
        .cloned()
        .unwrap_or_else(|| dataset.labels().clone());
    let tokenizer = TokenizerConfig::default();
    let mut examples = Vec::with_capacity(dataset.len());
    for (text, label) in dataset.examples() {
        let index = labels.index_of(label).ok_or_else(|| {
            CliError::Runtime(format!(
                "label {label:?} in {} is not among the model's labels {:?}",
                path.display(),
                labels.names()
            ))
        })?;
        let tokens = tokenize(text, &tokenizer);
        let sequence = embed(&tokens, table, OovPolicy::Skip)?;
        examples.push(Labeled::new(sequence, index));
    }
    Ok(EmbeddedDataset { examples, labels })
}

pub fn train(args: &TrainArgs) -> Result<(), CliError> {
    require_file(&args.train, "training set")?;
    require_file(&args.test, "test set")?;
    require_file(&args.embeddings, "embedding table")?;
    let kind = parse_model_kind(&args.model)?;
    let order = match kind {
        ModelKind::NeuralPooledMc => args
            .order
            .ok_or_else(|| CliError::Usage("--order is required for neural-pooled-mc".into()))?,
        ModelKind::GaussianNb | ModelKind::NeuralNb => {
            if args.order.is_some() {
                return Err(CliError::Usage(format!(
                    "--order only applies to neural-pooled-mc, not {}",
                    args.model
                )));
            }
            0
        }
    };
    let file_config = match &args.config {
        Some(path) => {
            require_file(path, "config file")?;
            config::load_file_config(path)?
        }
        None => config::FileConfig::default(),
    };
    let resolved = config::resolve_training(args, &file_config);
    let train_format = dataset_format(&args.train, args.format.as_deref())?;
    let test_format = dataset_format(&args.test, args.format.as_deref())?;

    let base = TrainConfig {
        learning_rate: resolved.lr,
        batch_size: resolved.batch,
        epochs: resolved.epochs,
        seed: resolved.seed,
        runs: resolved.runs,
        ..TrainConfig::default()
    };
    base.validate()
        .map_err(|err| CliError::Usage(err.to_string()))?;
    // Validates the fraction up front; each run rebuilds its own plan.
    SplitPlan::new(resolved.val_fraction, resolved.seed)
        .map_err(|err| CliError::Usage(err.to_string()))?;
    if resolved.hidden == 0 && kind != ModelKind::GaussianNb {
        return Err(CliError::Usage("hidden width must be >= 1".into()));
    }

    fs::create_dir_all(&args.out)
        .map_err(|err| CliError::Runtime(format!("creating {}: {err}", args.out.display())))?;
    let mut manifest = RunManifest::begin(
        "train",
        serde_json::json!({
            "model": args.model,
            "order": order,
            "train": args.train.display().to_string(),
            "test": args.test.display().to_string(),
            "embeddings": args.embeddings.display().to_string(),
            "out": args.out.display().to_string(),
            "format": args.format,
            "text_field": args.text_field,
            "label_field": args.label_field,
            "val_fraction": resolved.val_fraction,
            "lr": resolved.lr,
            "batch": resolved.batch,
            "epochs": resolved.epochs,
            "runs": resolved.runs,
            "seed": resolved.seed,
            "hidden": resolved.hidden,
        }),
    );
    manifest.write(&args.out)?;

    let table = load_embeddings(&args.embeddings, None)?;
    let train_pool = load_embedded_dataset(
        &args.train,
        train_format,
        &args.text_field,
        &args.label_field,
        &table,
        None,
    )?;
    let test_set = load_embedded_dataset(
        &args.test,
        test_format,
        &args.text_field,
        &args.label_field,
        &table,
        Some(&train_pool.labels),
    )?;

    let labels = train_pool.labels.clone();
    let (saved, records, report) = match kind {
        ModelKind::GaussianNb => {
            let model = fit_gaussian_nb(&train_pool.examples, labels.len())?;
            let error = training::evaluate(&model, &test_set.examples)?;
            // The fit is closed form: no epochs, a single deterministic run.
            let report = EvalReport::from_runs(vec![error])?;
            let saved = SavedModel::GaussianNb {
                model,
                labels: labels.clone(),
            };
            (saved, Vec::new(), report)
        }
        ModelKind::NeuralNb | ModelKind::NeuralPooledMc => train_neural(
            order,
            &resolved,
            &base,
            &train_pool.examples,
            &test_set.examples,
            &labels,
            table.dim(),
        )?,
    };

    save_model(args.out.join("checkpoint.txt"), &saved)?;
    let mut log = String::new();
    for record in &records {
        log.push_str(&record.to_string());
        log.push('\n');
    }
    write_file(&args.out.join("epochs.log"), &log)?;
    write_file(&args.out.join("report.txt"), &report.to_text())?;
    manifest.finish();
    manifest.write(&args.out)?;

    print!("{}", report.to_text());
    println!("artifacts {}", args.out.display());
    Ok(())
}

/// Runs the full protocol: `runs` independent train+evaluate repetitions
/// seeded `seed + r`, each with its own validation split and
/// initialization. The checkpoint and epoch log of the base-seed run are
/// kept for the artifacts; the report aggregates all runs.
fn train_neural(
    order: usize,
    resolved: &ResolvedTraining,
    base: &TrainConfig,
    pool: &[Labeled<EmbeddedSequence>],
    test: &[Labeled<EmbeddedSequence>],
    labels: &LabelSet,
    embed_dim: usize,
) -> Result<(SavedModel, Vec<EpochRecord>, EvalReport), CliError> {
    let kept: Mutex<Option<(PooledScorer, Vec<EpochRecord>)>> = Mutex::new(None);
    let report = training::multi_run(
        |seed| {
            let plan = SplitPlan::new(resolved.val_fraction, seed)?;
            let (train_set, val_set) = split(pool, &plan)?;
            let init =
                PooledScorer::pooled_mc(order, embed_dim, resolved.hidden, labels.len(), seed)?;
            let run_config = TrainConfig { seed, ..*base };
            let (best, records) = training::train(&init, &train_set, &val_set, &run_config)?;
            let error = training::evaluate(&best, test)?;
            if seed == base.seed {
                *kept.lock().unwrap() = Some((best, records));
            }
            Ok(error)
        },
        base,
    )?;
    let (scorer, records) = kept
        .into_inner()
        .unwrap()
        .expect("the base-seed run always executes");
    let saved = SavedModel::NeuralScorer {
        scorer,
        labels: labels.clone(),
    };
    Ok((saved, records, report))
}

/// The two checkpoint kinds that classify embedded text.
enum TextClassifier<'a> {
    Neural(&'a PooledScorer, &'a LabelSet),
    Gaussian(&'a GaussianNB, &'a LabelSet),
}

impl<'a> TextClassifier<'a> {
    fn from_model(model: &'a SavedModel) -> Result<Self, CliError> {
        match model {
            SavedModel::NeuralScorer { scorer, labels } => {
                Ok(TextClassifier::Neural(scorer, labels))
            }
            SavedModel::GaussianNb { model, labels } => Ok(TextClassifier::Gaussian(model, labels)),
            other => Err(CliError::Runtime(format!(
                "checkpoint kind {} stores symbol tables, not an embedded-text classifier",
                other.kind()
            ))),
        }
    }

    fn labels(&self) -> &'a LabelSet {
        match self {
            TextClassifier::Neural(_, labels) | TextClassifier::Gaussian(_, labels) => labels,
        }
    }

    fn predict(&self, sequence: &EmbeddedSequence) -> Result<(usize, ProbVector), CliError> {
        match self {
            TextClassifier::Neural(scorer, _) => Ok(neural::predict(scorer, sequence)?),
            TextClassifier::Gaussian(model, _) => Ok(model.predict(sequence)?),
        }
    }
}

pub fn evaluate(args: &EvaluateArgs) -> Result<(), CliError> {
    require_file(&args.checkpoint, "checkpoint")?;
    require_file(&args.test, "test set")?;
    require_file(&args.embeddings, "embedding table")?;
    let format = dataset_format(&args.test, args.format.as_deref())?;
    let model = load_model(&args.checkpoint)?;
    let classifier = TextClassifier::from_model(&model)?;
    let table = load_embeddings(&args.embeddings, None)?;
    let data = load_embedded_dataset(
        &args.test,
        format,
        &args.text_field,
        &args.label_field,
        &table,
        Some(classifier.labels()),
    )?;
    let error = match &classifier {
        TextClassifier::Neural(scorer, _) => training::evaluate(*scorer, &data.examples)?,
        TextClassifier::Gaussian(model, _) => training::evaluate(*model, &data.examples)?,
    };
    println!("examples {}", data.examples.len());
    println!("error_rate {error}");
    Ok(())
}

pub fn predict(args: &PredictArgs) -> Result<(), CliError> {
    require_file(&args.checkpoint, "checkpoint")?;
    require_file(&args.embeddings, "embedding table")?;
    let model = load_model(&args.checkpoint)?;
    let classifier = TextClassifier::from_model(&model)?;
    let table = load_embeddings(&args.embeddings, None)?;
    let reader: Box<dyn BufRead> = match &args.input {
        Some(path) => {
            require_file(path, "input file")?;
            let file = File::open(path)
                .map_err(|err| CliError::Runtime(format!("opening {}: {err}", path.display())))?;
            Box::new(BufReader::new(file))
        }
        None => Box::new(BufReader::new(io::stdin())),
    };
    let tokenizer = TokenizerConfig::default();
    let stdout = io::stdout();
    let mut out = stdout.lock();
    for line in reader.lines() {
        let text = line.map_err(|err| CliError::Runtime(format!("reading input: {err}")))?;
        let tokens = tokenize(&text, &tokenizer);
        // Unknown tokens are dropped; a fully out-of-vocabulary text
        // falls back to one zero vector and still gets a prediction.
        let sequence = embed(&tokens, &table, OovPolicy::Skip)?;
        let (index, posterior) = classifier.predict(&sequence)?;
        let probs: Vec<String> = posterior.values().iter().map(f64::to_string).collect();
        writeln!(
            out,
            "{}\t{}",
            classifier.labels().name(index),
            probs.join(" ")
        )
        .map_err(|err| CliError::Runtime(format!("writing output: {err}")))?;
    }
    Ok(())
}

pub fn verify_appendix(args: &VerifyArgs) -> Result<(), CliError> {
    if args.trials == 0 {
        return Err(CliError::Usage("--trials must be >= 1".into()));
    }
    if args.max_t < 3 {
        return Err(CliError::Usage(
            "--max-t must be >= 3 so the order-2 suite has room for one window".into(),
        ));
    }
    let options = VerifyOptions {
        trials: args.trials,
        seed: args.seed,
        max_t: args.max_t,
        corrupt: args.inject_corruption,
    };
    let reports = run_equivalence_suites(&options)?;
    for report in &reports {
        println!("{report}");
    }
    let max_deviation = reports
        .iter()
        .map(|r| r.max_deviation)
        .fold(0.0f64, f64::max);
    println!("max_deviation {max_deviation:e}");
    println!("tolerance {EQUIVALENCE_TOLERANCE:e}");
    match reports.iter().filter(|r| !r.passed()).max_by(|a, b| {
        a.max_deviation
            .partial_cmp(&b.max_deviation)
            .expect("deviations are finite")
    }) {
        None => Ok(()),
        Some(report) => Err(CliError::Runtime(format!(
            "suite {} deviated {:e} on the law from trial {} of base seed {}",
            report.suite, report.max_deviation, report.worst_trial, args.seed
        ))),
    }
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    let spec = match &args.spec {
        Some(path) => {
            if args.order.is_some() || args.classes.is_some() || args.symbols.is_some() {
                return Err(CliError::Usage(
                    "--order, --classes and --symbols conflict with --spec; the file fixes the law"
                        .into(),
                ));
            }
            require_file(path, "spec file")?;
            match load_model(path)? {
                SavedModel::PooledJoint(spec) => spec,
                other => {
                    return Err(CliError::Usage(format!(
                        "spec file {} holds a {} model, expected pooled-joint",
                        path.display(),
                        other.kind()
                    )))
                }
            }
        }
        None => {
            let order = args.order.unwrap_or(1);
            let classes = args.classes.unwrap_or(2);
            let symbols = args.symbols.unwrap_or(3);
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            PooledJointSpec::random(order, classes, symbols, &mut rng)
                .map_err(|err| CliError::Usage(err.to_string()))?
        }
    };
    let t_min = args.t_min.unwrap_or(spec.order() + 1);
    // Sampling runs on a shifted seed so the law draw above stays fixed
    // no matter how many sequences are requested.
    let data = synth_generate(
        &spec,
        args.count,
        t_min..=args.t_max,
        args.seed.wrapping_add(1),
    )
    .map_err(|err| CliError::Usage(err.to_string()))?;

    fs::create_dir_all(&args.out)
        .map_err(|err| CliError::Runtime(format!("creating {}: {err}", args.out.display())))?;
    let mut manifest = RunManifest::begin(
        "synth",
        serde_json::json!({
            "order": spec.order(),
            "classes": spec.n_labels(),
            "symbols": spec.n_symbols(),
            "spec": args.spec.as_ref().map(|p| p.display().to_string()),
            "count": args.count,
            "t_min": t_min,
            "t_max": args.t_max,
            "seed": args.seed,
            "out": args.out.display().to_string(),
        }),
    );
    manifest.write(&args.out)?;
    let mut lines = String::new();
    for example in &data {
        let record = serde_json::json!({
            "label": example.label,
            "sequence": example.sequence,
        });
        lines.push_str(&record.to_string());
        lines.push('\n');
    }
    write_file(&args.out.join("data.jsonl"), &lines)?;
    save_model(args.out.join("spec.txt"), &SavedModel::PooledJoint(spec))?;
    manifest.finish();
    manifest.write(&args.out)?;
    println!("examples {}", data.len());
    println!("artifacts {}", args.out.display());
    Ok(())
}
