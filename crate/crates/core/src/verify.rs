//! Exhaustive correctness checks that are too expensive for ordinary unit
//! tests but cheap enough to run on demand: equivalence of the telescoping
//! classifiers with exact joint posteriors across random generative laws,
//! finite-difference validation of the analytic gradients, and exact Bayes
//! error by enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::neural::{loss_and_grad, mlp_forward, windows, PooledScorer};
use crate::tabular::{
    derive_posteriors_from_joint, joint_posterior, nb_posterior_discriminative,
    pooledmc2_posterior, pooledmc_posterior, PooledJointSpec, PosteriorTables,
};
use crate::training::mean_loss;
use crate::types::{EmbeddedSequence, Labeled, ProbVector};

/// Largest joint-vs-telescoping posterior deviation tolerated by
/// [`EquivalenceReport::passed`]. The identity is exact; only float
/// round-off separates the two computations.
pub const EQUIVALENCE_TOLERANCE: f64 = 1e-10;

/// Pre-activations closer to zero than this mark a hidden unit as sitting
/// on the ReLU kink, where finite differences are meaningless.
pub const KINK_TOLERANCE: f64 = 1e-8;

/// Sequences per (spec, length) cell: all of them when the alphabet power
/// stays within this budget, a random sample of this size otherwise.
const SEQUENCES_PER_LENGTH: usize = 64;

/// Settings for [`run_equivalence_suites`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyOptions {
    /// Random generative laws per suite.
    pub trials: usize,
    pub seed: u64,
    /// Longest sequence length exercised per law.
    pub max_t: usize,
    /// Deliberately breaks one posterior table per suite so callers can
    /// confirm the failure path reports a violation.
    pub corrupt: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            trials: 100,
            seed: 0,
            max_t: 6,
            corrupt: false,
        }
    }
}

/// Outcome of one classifier suite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquivalenceReport {
    pub suite: &'static str,
    /// Random generative laws exercised.
    pub specs: usize,
    /// Posterior vectors compared against the joint law.
    pub comparisons: usize,
    pub max_deviation: f64,
    /// Trial index of the law behind `max_deviation`; with the suite name
    /// and base seed this pins down the offending spec exactly.
    pub worst_trial: usize,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.max_deviation < EQUIVALENCE_TOLERANCE
    }
}

impl std::fmt::Display for EquivalenceReport {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "suite={} specs={} comparisons={} max_deviation={:e} {}",
            self.suite,
            self.specs,
            self.comparisons,
            self.max_deviation,
            if self.passed() { "ok" } else { "VIOLATION" }
        )?;
        if !self.passed() {
            write!(f, " worst_trial={}", self.worst_trial)?;
        }
        Ok(())
    }
}

/// Checks, for each classifier family, that posteriors computed from the
/// derived window tables match the exact joint posteriors on random
/// strictly positive generative laws of the matching order. Class and
/// alphabet sizes cycle through a small grid; per law, every sequence
/// length from the classifier's minimum up to `max_t` is exercised,
/// exhaustively when the alphabet power is small and by seeded sampling
/// otherwise.
pub fn run_equivalence_suites(opts: &VerifyOptions) -> Result<Vec<EquivalenceReport>> {
    if opts.trials == 0 || opts.max_t == 0 {
        return Err(Error::InvalidInput(
            "verification needs >= 1 trial and max_t >= 1".into(),
        ));
    }
    [
        ("naive-bayes-discriminative", 0usize),
        ("pooled-markov-order-1", 1),
        ("pooled-markov-order-2", 2),
    ]
    .iter()
    .map(|&(suite, order)| run_suite(suite, order, opts))
    .collect()
}

fn run_suite(suite: &'static str, order: usize, opts: &VerifyOptions) -> Result<EquivalenceReport> {
    // Golden-ratio stride keeps per-suite streams disjoint for any seed.
    let mut rng = ChaCha8Rng::seed_from_u64(
        opts.seed
            .wrapping_add((order as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)),
    );
    let grid = [
        (2, 2),
        (2, 3),
        (2, 5),
        (3, 2),
        (3, 3),
        (3, 5),
        (4, 2),
        (4, 3),
        (4, 5),
    ];
    let t_min = order + 1;
    if opts.max_t < t_min {
        return Err(Error::InvalidInput(format!(
            "suite {suite} needs max_t >= {t_min}, got {}",
            opts.max_t
        )));
    }
    let mut max_deviation = 0.0f64;
    let mut worst_trial = 0usize;
    let mut comparisons = 0usize;
    for trial in 0..opts.trials {
        let (n, m) = grid[trial % grid.len()];
        let spec = PooledJointSpec::random(order, n, m, &mut rng)?;
        let mut tables = derive_posteriors_from_joint(&spec)?;
        if opts.corrupt && trial == 0 {
            tables = corrupt_tables(&tables)?;
        }
        let mut record = |dev: f64, comparisons: &mut usize| {
            if dev > max_deviation {
                max_deviation = dev;
                worst_trial = trial;
            }
            *comparisons += 1;
        };
        for t in t_min..=opts.max_t {
            let compare = |y: &[usize]| -> Result<f64> {
                let expected = joint_posterior(&spec, y)?;
                let got = telescoped_posterior(order, &spec, &tables, y)?;
                let mut dev = 0.0f64;
                for i in 0..n {
                    dev = dev.max((got[i] - expected[i]).abs());
                }
                Ok(dev)
            };
            match m.checked_pow(t as u32) {
                Some(total) if total <= SEQUENCES_PER_LENGTH => {
                    for_each_sequence(m, t, |y| {
                        record(compare(y)?, &mut comparisons);
                        Ok(())
                    })?;
                }
                _ => {
                    let mut y = vec![0usize; t];
                    for _ in 0..SEQUENCES_PER_LENGTH {
                        for slot in &mut y {
                            *slot = rng.gen_range(0..m);
                        }
                        record(compare(&y)?, &mut comparisons);
                    }
                }
            }
        }
    }
    Ok(EquivalenceReport {
        suite,
        specs: opts.trials,
        comparisons,
        max_deviation,
        worst_trial,
    })
}

fn telescoped_posterior(
    order: usize,
    spec: &PooledJointSpec,
    tables: &PosteriorTables,
    y: &[usize],
) -> Result<ProbVector> {
    match order {
        0 => nb_posterior_discriminative(spec.class_prior(), tables, y),
        1 => pooledmc_posterior(tables, y),
        2 => pooledmc2_posterior(tables, y),
        k => Err(Error::InvalidInput(format!(
            "unsupported chain order {k}, expected 0, 1 or 2"
        ))),
    }
}

/// Rotates the first row of each table by one entry, producing valid but
/// wrong posteriors.
fn corrupt_tables(tables: &PosteriorTables) -> Result<PosteriorTables> {
    let rotate = |row: &ProbVector| -> Result<ProbVector> {
        let mut values = row.values().to_vec();
        values.rotate_left(1);
        ProbVector::new(values)
    };
    let (l1, l2, l3) = tables.rows();
    let patch = |rows: &[ProbVector]| -> Result<Vec<ProbVector>> {
        let mut out = rows.to_vec();
        out[0] = rotate(&out[0])?;
        Ok(out)
    };
    PosteriorTables::new(tables.n_symbols(), patch(l1)?, patch(l2)?, patch(l3)?)
}

/// Calls `f` once for every sequence in `{0..m}^t`, in odometer order.
fn for_each_sequence<F>(m: usize, t: usize, mut f: F) -> Result<()>
where
    F: FnMut(&[usize]) -> Result<()>,
{
    if m == 0 || t == 0 {
        return Err(Error::InvalidInput(
            "enumeration needs m >= 1 and t >= 1".into(),
        ));
    }
    let mut y = vec![0usize; t];
    loop {
        f(&y)?;
        let mut pos = t;
        let wrapped = loop {
            if pos == 0 {
                break true;
            }
            pos -= 1;
            y[pos] += 1;
            if y[pos] < m {
                break false;
            }
            y[pos] = 0;
        };
        if wrapped {
            return Ok(());
        }
    }
}

/// Outcome of [`gradient_check`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientCheckReport {
    /// Largest `|analytic - numeric| / max(1, |analytic|, |numeric|)` over
    /// the checked coordinates.
    pub max_relative_error: f64,
    pub checked: usize,
    /// First-layer coordinates excluded because a hidden unit sat within
    /// [`KINK_TOLERANCE`] of the ReLU kink on some window of the batch.
    pub skipped: usize,
}

/// Compares the analytic batch gradient against central finite differences
/// of step `step`, coordinate by coordinate.
///
/// Coordinates feeding a hidden unit whose pre-activation touches the ReLU
/// kink on any window are skipped, since the loss is not differentiable
/// there; second-layer coordinates are always checked because the loss is
/// smooth in them.
pub fn gradient_check(
    scorer: &PooledScorer,
    batch: &[Labeled<EmbeddedSequence>],
    step: f64,
) -> Result<GradientCheckReport> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let (_, grads) = loss_and_grad(scorer, batch)?;
    let spec = scorer.spec();

    let mut near_kink = vec![false; spec.hidden_dim];
    for ex in batch {
        for window in windows(&ex.sequence, scorer.order()) {
            let (_, cache) = mlp_forward(scorer.params(), &window)?;
            for (unit, z) in cache.pre_activations().iter().enumerate() {
                if z.abs() < KINK_TOLERANCE {
                    near_kink[unit] = true;
                }
            }
        }
    }

    let mut scratch = scorer.clone();
    let mut max_relative_error = 0.0f64;
    let mut checked = 0usize;
    let mut skipped = 0usize;
    for idx in 0..spec.param_count() {
        let unit = if idx < spec.b1_offset() {
            Some(idx / spec.input_dim)
        } else if idx < spec.w2_offset() {
            Some(idx - spec.b1_offset())
        } else {
            None
        };
        if let Some(u) = unit {
            if near_kink[u] {
                skipped += 1;
                continue;
            }
        }
        let original = scratch.params().flat()[idx];
        scratch.params_mut().flat_mut()[idx] = original + step;
        let loss_plus = mean_loss(&scratch, batch)?;
        scratch.params_mut().flat_mut()[idx] = original - step;
        let loss_minus = mean_loss(&scratch, batch)?;
        scratch.params_mut().flat_mut()[idx] = original;
        let numeric = (loss_plus - loss_minus) / (2.0 * step);
        let analytic = grads.flat()[idx];
        let rel =
            (analytic - numeric).abs() / f64::max(1.0, f64::max(analytic.abs(), numeric.abs()));
        max_relative_error = max_relative_error.max(rel);
        checked += 1;
    }
    Ok(GradientCheckReport {
        max_relative_error,
        checked,
        skipped,
    })
}

/// Exact error rate of the optimal (maximum joint probability) classifier
/// under `spec` for sequences of length `t`, by full enumeration of the
/// `M^t` outcomes: the expected mass not captured by the winning class.
pub fn exact_bayes_error(spec: &PooledJointSpec, t: usize) -> Result<f64> {
    if t == 0 {
        return Err(Error::SequenceTooShort {
            required: 1,
            got: 0,
        });
    }
    let m = spec.n_symbols();
    if m.checked_pow(t as u32).is_none() {
        return Err(Error::InvalidInput(format!(
            "cannot enumerate {m}^{t} sequences"
        )));
    }
    let n = spec.n_labels();
    let mut error = 0.0f64;
    let mut total = 0.0f64;
    for_each_sequence(m, t, |y| {
        let mut best = 0.0f64;
        let mut mass = 0.0f64;
        for i in 0..n {
            let mut p = spec.class_prior()[i];
            for pos in 0..t {
                p *= spec.token_conditional(i, &y[..pos])?[y[pos]];
            }
            mass += p;
            best = best.max(p);
        }
        error += mass - best;
        total += mass;
        Ok(())
    })?;
    debug_assert!((total - 1.0).abs() < 1e-9, "joint law sums to {total}");
    Ok(error)
}
