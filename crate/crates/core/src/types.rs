//! Shared domain types: label alphabets, embedded observation sequences,
//! supervised pairs, and probability vectors.

use crate::error::{Error, Result};

/// Entries of a [`ProbVector`] must sum to one within this tolerance.
///
/// Double precision accumulation over sequences up to ~10^4 terms stays
/// well inside 1e-9.
pub const PROB_SUM_TOLERANCE: f64 = 1e-9;

/// The finite ordered set of class labels.
///
/// Index <-> name is a bijection; classifiers work with indices and only
/// translate back to names at the API edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSet {
    names: Vec<String>,
}

impl LabelSet {
    /// Builds a label set from distinct names. Requires at least two labels.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a label set needs at least 2 labels, got {}",
                names.len()
            )));
        }
        for (i, name) in names.iter().enumerate() {
            if names[..i].contains(name) {
                return Err(Error::InvalidInput(format!("duplicate label {name:?}")));
            }
        }
        Ok(LabelSet { names })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false // N >= 2 by construction
    }

    pub fn name(&self, index: usize) -> &str {
        &self.names[index]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// A length-T sequence of d-dimensional real observation vectors,
/// stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedSequence {
    data: Vec<f64>,
    dim: usize,
}

impl EmbeddedSequence {
    /// Builds a sequence from per-token rows. All rows must share one
    /// dimension d >= 1, every component must be finite, and T >= 1.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let first_dim = match rows.first() {
            Some(r) => r.len(),
            None => return Err(Error::EmptyData("embedded sequence needs T >= 1".into())),
        };
        if first_dim == 0 {
            return Err(Error::Shape {
                what: "embedded sequence token",
                expected: 1,
                actual: 0,
            });
        }
        let mut data = Vec::with_capacity(rows.len() * first_dim);
        for row in &rows {
            if row.len() != first_dim {
                return Err(Error::Shape {
                    what: "embedded sequence token",
                    expected: first_dim,
                    actual: row.len(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(data, first_dim)
    }

    /// Builds a sequence from a flat row-major buffer.
    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || data.is_empty() || !data.len().is_multiple_of(dim) {
            return Err(Error::Shape {
                what: "embedded sequence buffer",
                expected: dim.max(1),
                actual: data.len(),
            });
        }
        if data.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(
                "embedded sequence contains a non-finite component".into(),
            ));
        }
        Ok(EmbeddedSequence { data, dim })
    }

    /// Number of tokens T.
    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        false // T >= 1 by construction
    }

    /// Component dimension d.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The t-th observation vector.
    pub fn token(&self, t: usize) -> &[f64] {
        &self.data[t * self.dim..(t + 1) * self.dim]
    }

    pub fn tokens(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.dim)
    }
}

/// A supervised pair: an observation sequence with its class index.
///
/// `S` is [`EmbeddedSequence`] for real-valued observations or `Vec<usize>`
/// (symbol indices) in tabular mode.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeled<S> {
    pub sequence: S,
    pub label: usize,
}

impl<S> Labeled<S> {
    pub fn new(sequence: S, label: usize) -> Self {
        Labeled { sequence, label }
    }
}

/// A discrete probability vector: nonnegative entries summing to one
/// within [`PROB_SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct ProbVector {
    values: Vec<f64>,
}

impl ProbVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::EmptyData(
                "probability vector needs >= 1 entry".into(),
            ));
        }
        let mut sum = 0.0;
        for &v in &values {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "probability entry {v} is negative or non-finite"
                )));
            }
            sum += v;
        }
        if (sum - 1.0).abs() > PROB_SUM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "probability vector sums to {sum}, expected 1 within {PROB_SUM_TOLERANCE}"
            )));
        }
        Ok(ProbVector { values })
    }

    /// Uniform distribution over `n` outcomes.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyData(
                "probability vector needs >= 1 entry".into(),
            ));
        }
        Ok(ProbVector {
            values: vec![1.0 / n as f64; n],
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // >= 1 entry by construction
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    /// True if every entry is strictly positive.
    pub fn is_strictly_positive(&self) -> bool {
        self.values.iter().all(|&v| v > 0.0)
    }
}

impl std::ops::Index<usize> for ProbVector {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.values[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_set_rejects_duplicates_and_singletons() {
        assert!(LabelSet::new(["pos", "neg"]).is_ok());
        assert!(LabelSet::new(["pos"]).is_err());
        assert!(LabelSet::new(["pos", "pos"]).is_err());
    }

    #[test]
    fn label_set_round_trips_indices() {
        let labels = LabelSet::new(["anger", "joy", "optimism", "sadness"]).unwrap();
        assert_eq!(labels.len(), 4);
        assert_eq!(labels.index_of("optimism"), Some(2));
        assert_eq!(labels.name(2), "optimism");
        assert_eq!(labels.index_of("fear"), None);
    }

    #[test]
    fn embedded_sequence_validates_shape_and_finiteness() {
        assert!(EmbeddedSequence::from_rows(vec![]).is_err());
        assert!(EmbeddedSequence::from_rows(vec![vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(EmbeddedSequence::from_rows(vec![vec![1.0, f64::NAN]]).is_err());
        assert!(EmbeddedSequence::from_rows(vec![vec![1.0, f64::INFINITY]]).is_err());

        let seq = EmbeddedSequence::from_rows(vec![vec![1.0, 2.0], vec![3.0, 4.0]]).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq.dim(), 2);
        assert_eq!(seq.token(1), &[3.0, 4.0]);
    }

    #[test]
    fn prob_vector_enforces_sum_and_sign() {
        assert!(ProbVector::new(vec![0.5, 0.5]).is_ok());
        assert!(ProbVector::new(vec![0.5, 0.6]).is_err());
        assert!(ProbVector::new(vec![-0.1, 1.1]).is_err());
        assert!(ProbVector::new(vec![]).is_err());
        let u = ProbVector::uniform(4).unwrap();
        assert_eq!(u.values(), &[0.25; 4]);
    }
}
