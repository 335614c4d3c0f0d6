//! Mini-batch training of pooled scorers with Adam, best-on-validation
//! checkpoint selection, evaluation, and multi-run reports with a 95%
//! confidence half-width.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussian::GaussianNB;
use crate::neural::{loss_and_grad, pooled_score, predict, GradientSet, MlpParams, PooledScorer};
use crate::types::{EmbeddedSequence, Labeled};

/// Optimizer and protocol hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Independent train+evaluate repetitions aggregated by [`multi_run`].
    pub runs: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            batch_size: 64,
            epochs: 5,
            seed: 0,
            runs: 5,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.batch_size == 0 || self.epochs == 0 || self.runs == 0 {
            return Err(Error::InvalidInput(
                "batch size, epochs and runs must be >= 1".into(),
            ));
        }
        for (name, beta) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::InvalidInput(format!(
                    "{name} must lie in [0, 1), got {beta}"
                )));
            }
        }
        if !self.epsilon.is_finite() || self.epsilon <= 0.0 {
            return Err(Error::InvalidInput("epsilon must be positive".into()));
        }
        Ok(())
    }
}

/// Adam moment accumulators, flat like the parameters they update.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    m: Vec<f64>,
    v: Vec<f64>,
    step: u64,
}

impl AdamState {
    pub fn for_params(params: &MlpParams) -> Self {
        let len = params.flat().len();
        Self {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }
}

/// One Adam update with bias correction:
/// `params -= lr * m_hat / (sqrt(v_hat) + epsilon)`.
pub fn adam_step(
    params: &mut MlpParams,
    grads: &GradientSet,
    state: &mut AdamState,
    config: &TrainConfig,
) -> Result<()> {
    config.validate()?;
    if grads.spec() != params.spec() {
        return Err(Error::Shape {
            what: "gradient layout",
            expected: params.flat().len(),
            actual: grads.flat().len(),
        });
    }
    if state.m.len() != params.flat().len() {
        return Err(Error::Shape {
            what: "optimizer state",
            expected: params.flat().len(),
            actual: state.m.len(),
        });
    }
    state.step += 1;
    let bias1 = 1.0 - config.beta1.powi(state.step as i32);
    let bias2 = 1.0 - config.beta2.powi(state.step as i32);
    let data = params.flat_mut();
    for (i, &g) in grads.flat().iter().enumerate() {
        state.m[i] = config.beta1 * state.m[i] + (1.0 - config.beta1) * g;
        state.v[i] = config.beta2 * state.v[i] + (1.0 - config.beta2) * g * g;
        let m_hat = state.m[i] / bias1;
        let v_hat = state.v[i] / bias2;
        data[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
    }
    Ok(())
}

/// One line of the training log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 0 is the untrained starting point; training epochs count from 1.
    pub epoch: usize,
    pub train_loss: f64,
    pub val_error: f64,
}

impl std::fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "epoch={} train_loss={:.6} val_error={:.6}",
            self.epoch, self.train_loss, self.val_error
        )
    }
}

/// Index of the record with the lowest validation error, earliest on
/// ties. `None` only for an empty log.
pub fn best_epoch(records: &[EpochRecord]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, rec) in records.iter().enumerate() {
        match best {
            Some(b) if records[b].val_error <= rec.val_error => {}
            _ => best = Some(i),
        }
    }
    best
}

/// Anything that maps an embedded sequence to a label index.
pub trait SequenceClassifier {
    fn predict_label(&self, seq: &EmbeddedSequence) -> Result<usize>;
}

impl SequenceClassifier for PooledScorer {
    fn predict_label(&self, seq: &EmbeddedSequence) -> Result<usize> {
        predict(self, seq).map(|(label, _)| label)
    }
}

impl SequenceClassifier for GaussianNB {
    fn predict_label(&self, seq: &EmbeddedSequence) -> Result<usize> {
        self.predict(seq).map(|(label, _)| label)
    }
}

/// Fraction of examples whose predicted label differs from the truth.
pub fn evaluate<C: SequenceClassifier>(
    model: &C,
    test: &[Labeled<EmbeddedSequence>],
) -> Result<f64> {
    if test.is_empty() {
        return Err(Error::EmptyData("cannot evaluate on an empty set".into()));
    }
    let mut wrong = 0usize;
    for ex in test {
        if model.predict_label(&ex.sequence)? != ex.label {
            wrong += 1;
        }
    }
    Ok(wrong as f64 / test.len() as f64)
}

/// Mean cross-entropy of a scorer over a set, without gradients.
pub fn mean_loss(scorer: &PooledScorer, set: &[Labeled<EmbeddedSequence>]) -> Result<f64> {
    if set.is_empty() {
        return Err(Error::EmptyData(
            "cannot take the loss of an empty set".into(),
        ));
    }
    let n = scorer.spec().output_dim;
    let mut total = 0.0;
    for ex in set {
        if ex.label >= n {
            return Err(Error::InvalidInput(format!(
                "label index {} out of range for {n} classes",
                ex.label
            )));
        }
        let score = pooled_score(scorer, &ex.sequence)?;
        let max = score.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + score.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
        total += lse - score[ex.label];
    }
    Ok(total / set.len() as f64)
}

/// Trains a copy of `scorer` and returns the checkpoint with the lowest
/// validation error together with the full log.
///
/// Each epoch reshuffles the training set with the seeded generator and
/// steps Adam once per batch; the final short batch is trained, not
/// dropped. The log starts with an epoch-0 row for the untrained scorer,
/// which also competes in checkpoint selection, so the returned model is
/// never worse on validation than the starting point. Ties go to the
/// earliest epoch.
pub fn train(
    scorer: &PooledScorer,
    train_set: &[Labeled<EmbeddedSequence>],
    val_set: &[Labeled<EmbeddedSequence>],
    config: &TrainConfig,
) -> Result<(PooledScorer, Vec<EpochRecord>)> {
    config.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::EmptyData(
            "training and validation sets must be non-empty".into(),
        ));
    }
    let mut current = scorer.clone();
    let mut adam = AdamState::for_params(current.params());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut records = vec![EpochRecord {
        epoch: 0,
        train_loss: mean_loss(&current, train_set)?,
        val_error: evaluate(&current, val_set)?,
    }];
    let mut best = current.clone();
    let mut best_error = records[0].val_error;

    let mut indices: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=config.epochs {
        indices.shuffle(&mut rng);
        let mut loss_sum = 0.0;
        for batch in indices.chunks(config.batch_size) {
            let examples: Vec<&Labeled<EmbeddedSequence>> =
                batch.iter().map(|&i| &train_set[i]).collect();
            let (loss, grads) = loss_and_grad(&current, &examples)?;
            adam_step(current.params_mut(), &grads, &mut adam, config)?;
            loss_sum += loss * examples.len() as f64;
        }
        let val_error = evaluate(&current, val_set)?;
        records.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            val_error,
        });
        if val_error < best_error {
            best = current.clone();
            best_error = val_error;
        }
    }
    Ok((best, records))
}

/// Aggregate of several independent runs: the per-run error rates, their
/// mean, and the normal-approximation 95% half-width
/// `1.96 * s / sqrt(runs)` with `s` the sample standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    runs: Vec<f64>,
    mean: f64,
    half_width: f64,
}

impl EvalReport {
    pub fn from_runs(runs: Vec<f64>) -> Result<Self> {
        if runs.is_empty() {
            return Err(Error::EmptyData("report needs >= 1 run".into()));
        }
        if runs.iter().any(|e| !(0.0..=1.0).contains(e)) {
            return Err(Error::InvalidInput("error rates must lie in [0, 1]".into()));
        }
        let n = runs.len() as f64;
        let mean = runs.iter().sum::<f64>() / n;
        let half_width = if runs.len() == 1 {
            0.0
        } else {
            let var = runs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
            1.96 * var.sqrt() / n.sqrt()
        };
        Ok(Self {
            runs,
            mean,
            half_width,
        })
    }

    pub fn runs(&self) -> &[f64] {
        &self.runs
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    /// Small text document carrying the full report; values use exact
    /// round-trip formatting.
    pub fn to_text(&self) -> String {
        let errors: Vec<String> = self.runs.iter().map(|e| e.to_string()).collect();
        format!(
            "runs {}\nerrors {}\nmean {}\nci95 {}\n",
            self.runs.len(),
            errors.join(" "),
            self.mean,
            self.half_width
        )
    }
}

/// Executes `run` once per seed `seed, seed+1, ..` and aggregates the
/// returned error rates. Runs may execute in parallel; results are
/// combined in run order, so the report is deterministic.
pub fn multi_run<F>(run: F, config: &TrainConfig) -> Result<EvalReport>
where
    F: Fn(u64) -> Result<f64> + Sync + Send,
{
    config.validate()?;
    let seeds: Vec<u64> = (0..config.runs as u64)
        .map(|r| config.seed.wrapping_add(r))
        .collect();
    let errors = seeds
        .into_par_iter()
        .map(run)
        .collect::<Result<Vec<f64>>>()?;
    EvalReport::from_runs(errors)
}
