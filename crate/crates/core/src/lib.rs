//! Sequence classifiers built on the naive Bayes factorization and its
//! pooled Markov chain generalizations.
//!
//! The crate provides three families of models over label `X` and token
//! sequence `Y_1..Y_T`:
//!
//! * tabular naive Bayes over a finite alphabet, in a generative form
//!   (prior and emission tables) and a discriminative form (per-symbol
//!   posterior tables combined multiplicatively),
//! * pooled Markov chain classifiers of order one and two, which keep
//!   the position-pooled structure of naive Bayes while conditioning
//!   each token on its predecessors,
//! * neural variants that replace the tables with a shared MLP scoring
//!   sliding windows of embedded tokens, pooled by summation before a
//!   softmax.
//!
//! A deterministic training harness ([`training`]) fits the neural
//! models with Adam, and [`verify`] cross-checks the tabular closed
//! forms against brute-force enumeration.

pub mod data;
pub mod embeddings;
pub mod error;
pub mod gaussian;
pub mod math;
pub mod model_io;
pub mod neural;
pub mod tabular;
pub mod training;
pub mod types;
pub mod verify;

pub use error::{Error, Result};
pub use types::{EmbeddedSequence, LabelSet, Labeled, ProbVector};
