//! Gaussian naive Bayes over real-valued token embeddings: each embedding
//! is collapsed to the mean of its components, and every class emits that
//! scalar from a single Gaussian. Deliberately crude, it is the baseline
//! the pooled neural models are measured against.

use crate::error::{Error, Result};
use crate::math::{argmax, posterior_from_log_weights};
use crate::types::{EmbeddedSequence, Labeled, ProbVector};

/// Lower bound on fitted standard deviations, so a zero-variance class
/// cannot produce infinite log-densities.
pub const SIGMA_FLOOR: f64 = 1e-6;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// Naive Bayes with scalar Gaussian emissions: class `i` has prior
/// `pi(i)`, mean `mu[i]` and standard deviation `sigma[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianNB {
    pi: ProbVector,
    mu: Vec<f64>,
    sigma: Vec<f64>,
}

impl GaussianNB {
    /// Builds a model from explicit parameters; standard deviations are
    /// raised to [`SIGMA_FLOOR`] if below it.
    pub fn new(pi: ProbVector, mu: Vec<f64>, sigma: Vec<f64>) -> Result<Self> {
        if pi.len() < 2 {
            return Err(Error::InvalidInput("need >= 2 classes".into()));
        }
        for (what, v) in [("mean vector", &mu), ("deviation vector", &sigma)] {
            if v.len() != pi.len() {
                return Err(Error::Shape {
                    what,
                    expected: pi.len(),
                    actual: v.len(),
                });
            }
            if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "non-finite entry {bad} in {what}"
                )));
            }
        }
        if sigma.iter().any(|&s| s < 0.0) {
            return Err(Error::InvalidInput("negative standard deviation".into()));
        }
        let sigma = sigma.into_iter().map(|s| s.max(SIGMA_FLOOR)).collect();
        Ok(Self { pi, mu, sigma })
    }

    pub fn n_labels(&self) -> usize {
        self.pi.len()
    }

    pub fn class_prior(&self) -> &ProbVector {
        &self.pi
    }

    pub fn mean(&self, label: usize) -> Option<f64> {
        self.mu.get(label).copied()
    }

    pub fn std_dev(&self, label: usize) -> Option<f64> {
        self.sigma.get(label).copied()
    }

    /// MAP prediction: the weight of class `i` is
    /// `log pi(i) + sum_t log phi(reduce_word(y_t); mu_i, sigma_i)`.
    /// Returns the argmax label (ties to the smallest index) and the
    /// posterior.
    pub fn predict(&self, seq: &EmbeddedSequence) -> Result<(usize, ProbVector)> {
        let reduced: Vec<f64> = seq
            .tokens()
            .map(reduce_word)
            .collect::<Result<Vec<f64>>>()?;
        let logw = (0..self.n_labels())
            .map(|i| {
                let mut w = self.pi[i].ln();
                for &r in &reduced {
                    w += log_normal_density(r, self.mu[i], self.sigma[i]);
                }
                w
            })
            .collect();
        let posterior = posterior_from_log_weights(logw)?;
        let label = argmax(posterior.values());
        Ok((label, posterior))
    }
}

fn log_normal_density(x: f64, mu: f64, sigma: f64) -> f64 {
    let z = (x - mu) / sigma;
    -0.5 * z * z - sigma.ln() - LN_SQRT_2PI
}

/// Collapses a token embedding to the arithmetic mean of its components.
pub fn reduce_word(v: &[f64]) -> Result<f64> {
    if v.is_empty() {
        return Err(Error::Shape {
            what: "token vector",
            expected: 1,
            actual: 0,
        });
    }
    if let Some(bad) = v.iter().find(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "non-finite component {bad} in token vector"
        )));
    }
    Ok(v.iter().sum::<f64>() / v.len() as f64)
}

/// Maximum-likelihood fit: the prior from per-class document frequencies,
/// each class's mean and population (1/n) standard deviation from the
/// reduced values of every token in its documents, deviations floored at
/// [`SIGMA_FLOOR`].
pub fn fit_gaussian_nb(data: &[Labeled<EmbeddedSequence>], n_labels: usize) -> Result<GaussianNB> {
    if data.is_empty() {
        return Err(Error::EmptyData("cannot fit on an empty dataset".into()));
    }
    if n_labels < 2 {
        return Err(Error::InvalidInput("need >= 2 classes".into()));
    }
    let mut doc_counts = vec![0usize; n_labels];
    let mut reduced: Vec<Vec<f64>> = vec![Vec::new(); n_labels];
    for ex in data {
        if ex.label >= n_labels {
            return Err(Error::InvalidInput(format!(
                "label index {} out of range for {} classes",
                ex.label, n_labels
            )));
        }
        doc_counts[ex.label] += 1;
        for token in ex.sequence.tokens() {
            reduced[ex.label].push(reduce_word(token)?);
        }
    }
    let mut mu = Vec::with_capacity(n_labels);
    let mut sigma = Vec::with_capacity(n_labels);
    for (i, values) in reduced.iter().enumerate() {
        if values.is_empty() {
            return Err(Error::EmptyClass(format!(
                "class {i} has no tokens to fit on"
            )));
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        mu.push(mean);
        sigma.push(var.sqrt());
    }
    let total = data.len() as f64;
    let pi = ProbVector::new(doc_counts.iter().map(|&c| c as f64 / total).collect())?;
    GaussianNB::new(pi, mu, sigma)
}
