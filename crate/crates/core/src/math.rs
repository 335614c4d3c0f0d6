//! Elementary probability-vector operations shared by every classifier.

use crate::error::{Error, Result};
use crate::types::{LabelSet, ProbVector};

/// Normalizes a nonnegative weight vector into a distribution:
/// `out_i = v_i / sum_j v_j`.
///
/// Errors with [`Error::DegenerateDistribution`] on an all-zero or
/// negative input.
pub fn norm(v: &[f64]) -> Result<ProbVector> {
    if v.is_empty() {
        return Err(Error::EmptyData("norm needs >= 1 entry".into()));
    }
    let mut sum = 0.0;
    for &x in v {
        if !x.is_finite() {
            return Err(Error::InvalidInput(format!("non-finite entry {x} in norm")));
        }
        if x < 0.0 {
            return Err(Error::DegenerateDistribution(format!(
                "negative entry {x} in norm"
            )));
        }
        sum += x;
    }
    if sum <= 0.0 {
        return Err(Error::DegenerateDistribution(
            "all-zero weight vector".into(),
        ));
    }
    ProbVector::new(v.iter().map(|x| x / sum).collect())
}

/// Numerically stable softmax: `out_i = exp(v_i) / sum_j exp(v_j)`,
/// computed after subtracting the maximum entry. Invariant under adding
/// a constant to all entries.
pub fn softmax(v: &[f64]) -> Result<ProbVector> {
    if v.is_empty() {
        return Err(Error::EmptyData("softmax needs >= 1 entry".into()));
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite entry {bad} in softmax"
        )));
    }
    posterior_from_log_weights(v.to_vec())
}

/// Exponentiates log-weights with max-subtraction and normalizes.
///
/// Entries of `-inf` denote zero weight and are allowed; the result is
/// degenerate only if every entry is `-inf`.
pub fn posterior_from_log_weights(logw: Vec<f64>) -> Result<ProbVector> {
    if logw.is_empty() {
        return Err(Error::EmptyData("posterior needs >= 1 entry".into()));
    }
    if logw.iter().any(|x| x.is_nan() || *x == f64::INFINITY) {
        return Err(Error::InvalidInput("NaN or +inf log-weight".into()));
    }
    let max = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::DegenerateDistribution(
            "all log-weights are -inf".into(),
        ));
    }
    let exp: Vec<f64> = logw.iter().map(|x| (x - max).exp()).collect();
    norm(&exp)
}

/// Index of the maximum entry; ties resolve to the smallest index so
/// evaluation is deterministic.
pub(crate) fn argmax(v: &[f64]) -> usize {
    debug_assert!(!v.is_empty());
    let mut best = 0;
    for (i, &x) in v.iter().enumerate().skip(1) {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// MAP decision over a score vector aligned with `labels`. Ties break to
/// the smallest index.
pub fn argmax_label(scores: &[f64], labels: &LabelSet) -> Result<usize> {
    if scores.len() != labels.len() {
        return Err(Error::Shape {
            what: "score vector",
            expected: labels.len(),
            actual: scores.len(),
        });
    }
    Ok(argmax(scores))
}
