//! Sum-pooled neural scorers: one shared two-layer MLP is applied to
//! every sliding window of `order + 1` consecutive token embeddings, and
//! the per-window class scores are summed over the sequence. A softmax of
//! the pooled score is the predicted posterior.
//!
//! Order 0 scores each token alone and is permutation-invariant; higher
//! orders see windows of consecutive tokens and can react to local word
//! order. Gradients are computed manually and exactly, which is what the
//! finite-difference tests in this module pin down.

use std::borrow::Borrow;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::math::{argmax, softmax};
use crate::types::{EmbeddedSequence, Labeled, ProbVector};

/// Examples per parallel reduction chunk in [`loss_and_grad`]. Fixed so
/// chunk boundaries, and therefore the floating-point reduction order,
/// do not depend on the thread count.
const REDUCE_CHUNK: usize = 16;

/// Dimensions of the two-layer scorer network.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MlpSpec {
    pub input_dim: usize,
    pub hidden_dim: usize,
    pub output_dim: usize,
}

impl MlpSpec {
    pub fn new(input_dim: usize, hidden_dim: usize, output_dim: usize) -> Result<Self> {
        if input_dim == 0 || hidden_dim == 0 || output_dim == 0 {
            return Err(Error::InvalidInput(
                "all network dimensions must be >= 1".into(),
            ));
        }
        Ok(Self {
            input_dim,
            hidden_dim,
            output_dim,
        })
    }

    /// Total number of scalar parameters across both layers.
    pub fn param_count(&self) -> usize {
        self.hidden_dim * self.input_dim
            + self.hidden_dim
            + self.output_dim * self.hidden_dim
            + self.output_dim
    }

    // Flat-layout offsets: [w1 | b1 | w2 | b2], both weight matrices
    // row-major.
    pub(crate) fn b1_offset(&self) -> usize {
        self.hidden_dim * self.input_dim
    }

    pub(crate) fn w2_offset(&self) -> usize {
        self.b1_offset() + self.hidden_dim
    }

    pub(crate) fn b2_offset(&self) -> usize {
        self.w2_offset() + self.output_dim * self.hidden_dim
    }
}

/// Weights and biases of the scorer network, stored flat in the layout
/// `[w1 | b1 | w2 | b2]` with row-major matrices.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpParams {
    spec: MlpSpec,
    data: Vec<f64>,
}

impl MlpParams {
    /// Wraps a flat parameter vector; length must equal
    /// `spec.param_count()` and every entry must be finite.
    pub fn from_flat(spec: MlpSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.param_count() {
            return Err(Error::Shape {
                what: "parameter vector",
                expected: spec.param_count(),
                actual: data.len(),
            });
        }
        if let Some(bad) = data.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("non-finite parameter {bad}")));
        }
        Ok(Self { spec, data })
    }

    pub fn spec(&self) -> MlpSpec {
        self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn flat_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn w1(&self) -> &[f64] {
        &self.data[..self.spec.b1_offset()]
    }

    fn b1(&self) -> &[f64] {
        &self.data[self.spec.b1_offset()..self.spec.w2_offset()]
    }

    fn w2(&self) -> &[f64] {
        &self.data[self.spec.w2_offset()..self.spec.b2_offset()]
    }

    fn b2(&self) -> &[f64] {
        &self.data[self.spec.b2_offset()..]
    }
}

/// Initializes weights uniformly in
/// `[-sqrt(6 / (fan_in + fan_out)), +sqrt(6 / (fan_in + fan_out))]`
/// per layer and biases at zero, deterministically from the seed.
pub fn init_params(spec: MlpSpec, seed: u64) -> MlpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; spec.param_count()];
    let bound1 = (6.0 / (spec.input_dim + spec.hidden_dim) as f64).sqrt();
    for w in &mut data[..spec.b1_offset()] {
        *w = rng.gen_range(-bound1..=bound1);
    }
    let bound2 = (6.0 / (spec.hidden_dim + spec.output_dim) as f64).sqrt();
    for w in &mut data[spec.w2_offset()..spec.b2_offset()] {
        *w = rng.gen_range(-bound2..=bound2);
    }
    MlpParams { spec, data }
}

/// Hidden-layer pre-activations retained by [`mlp_forward`] for the
/// backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    z1: Vec<f64>,
}

impl ForwardCache {
    pub fn pre_activations(&self) -> &[f64] {
        &self.z1
    }
}

/// One forward pass: `logits = w2 * relu(w1 * x + b1) + b2`.
pub fn mlp_forward(params: &MlpParams, x: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
    let spec = params.spec;
    if x.len() != spec.input_dim {
        return Err(Error::Shape {
            what: "network input",
            expected: spec.input_dim,
            actual: x.len(),
        });
    }
    let z1 = affine(params.w1(), params.b1(), x, spec.input_dim);
    let h: Vec<f64> = z1.iter().map(|&z| z.max(0.0)).collect();
    let logits = affine(params.w2(), params.b2(), &h, spec.hidden_dim);
    Ok((logits, ForwardCache { z1 }))
}

// rows(w) * x + b for a row-major matrix with `cols` columns.
fn affine(w: &[f64], b: &[f64], x: &[f64], cols: usize) -> Vec<f64> {
    b.iter()
        .enumerate()
        .map(|(r, &bias)| {
            let row = &w[r * cols..(r + 1) * cols];
            bias + row.iter().zip(x).map(|(wi, xi)| wi * xi).sum::<f64>()
        })
        .collect()
}

/// Sliding windows of `order + 1` consecutive tokens, concatenated into
/// flat vectors. A sequence shorter than the window is left-padded with
/// zero vectors and yields exactly one window, so every `T >= 1` is
/// scorable.
pub fn windows(seq: &EmbeddedSequence, order: usize) -> Vec<Vec<f64>> {
    let d = seq.dim();
    let width = order + 1;
    let t = seq.len();
    if t >= width {
        (0..=t - width)
            .map(|start| {
                let mut w = Vec::with_capacity(width * d);
                for offset in 0..width {
                    w.extend_from_slice(seq.token(start + offset));
                }
                w
            })
            .collect()
    } else {
        let mut w = vec![0.0; (width - t) * d];
        for pos in 0..t {
            w.extend_from_slice(seq.token(pos));
        }
        vec![w]
    }
}

/// A pooled scorer: the network, the window order `k`, and the embedding
/// dimension its windows are built from.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledScorer {
    order: usize,
    embed_dim: usize,
    params: MlpParams,
}

impl PooledScorer {
    /// Wraps existing parameters; the network input dimension must equal
    /// `(order + 1) * embed_dim`.
    pub fn new(order: usize, embed_dim: usize, params: MlpParams) -> Result<Self> {
        if embed_dim == 0 {
            return Err(Error::InvalidInput(
                "embedding dimension must be >= 1".into(),
            ));
        }
        let expected = (order + 1) * embed_dim;
        if params.spec().input_dim != expected {
            return Err(Error::Shape {
                what: "network input dimension",
                expected,
                actual: params.spec().input_dim,
            });
        }
        if params.spec().output_dim < 2 {
            return Err(Error::InvalidInput("need >= 2 output classes".into()));
        }
        Ok(Self {
            order,
            embed_dim,
            params,
        })
    }

    /// Fresh scorer of the given order with seeded initialization.
    pub fn pooled_mc(
        order: usize,
        embed_dim: usize,
        hidden_dim: usize,
        n_labels: usize,
        seed: u64,
    ) -> Result<Self> {
        if embed_dim == 0 {
            return Err(Error::InvalidInput(
                "embedding dimension must be >= 1".into(),
            ));
        }
        let spec = MlpSpec::new((order + 1) * embed_dim, hidden_dim, n_labels)?;
        Self::new(order, embed_dim, init_params(spec, seed))
    }

    /// The order-0 scorer: windows are single tokens, so the pooled score
    /// is a permutation-invariant sum over the sequence.
    pub fn neural_nb(
        embed_dim: usize,
        hidden_dim: usize,
        n_labels: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::pooled_mc(0, embed_dim, hidden_dim, n_labels, seed)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn embed_dim(&self) -> usize {
        self.embed_dim
    }

    pub fn spec(&self) -> MlpSpec {
        self.params.spec()
    }

    pub fn params(&self) -> &MlpParams {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut MlpParams {
        &mut self.params
    }
}

/// Pre-softmax class scores: the elementwise sum of the network's logits
/// over all windows, accumulated in window index order.
pub fn pooled_score(scorer: &PooledScorer, seq: &EmbeddedSequence) -> Result<Vec<f64>> {
    if seq.dim() != scorer.embed_dim {
        return Err(Error::Shape {
            what: "embedding dimension",
            expected: scorer.embed_dim,
            actual: seq.dim(),
        });
    }
    let mut score = vec![0.0; scorer.spec().output_dim];
    for window in windows(seq, scorer.order) {
        let (logits, _) = mlp_forward(&scorer.params, &window)?;
        for (s, l) in score.iter_mut().zip(&logits) {
            *s += l;
        }
    }
    Ok(score)
}

/// MAP prediction: softmax of the pooled score, argmax with ties to the
/// smallest index.
pub fn predict(scorer: &PooledScorer, seq: &EmbeddedSequence) -> Result<(usize, ProbVector)> {
    let score = pooled_score(scorer, seq)?;
    let posterior = softmax(&score)?;
    Ok((argmax(posterior.values()), posterior))
}

/// Parameter gradients, shaped and laid out exactly like [`MlpParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    spec: MlpSpec,
    data: Vec<f64>,
}

impl GradientSet {
    pub fn zeros(spec: MlpSpec) -> Self {
        Self {
            spec,
            data: vec![0.0; spec.param_count()],
        }
    }

    /// Wraps an externally computed gradient in the flat layout of
    /// [`MlpParams::flat`]. Lets callers drive [`crate::training::adam_step`]
    /// with their own objectives.
    pub fn from_flat(spec: MlpSpec, data: Vec<f64>) -> Result<Self> {
        if data.len() != spec.param_count() {
            return Err(Error::Shape {
                what: "flat gradient vector",
                expected: spec.param_count(),
                actual: data.len(),
            });
        }
        if data.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidInput(
                "gradient entries must be finite".into(),
            ));
        }
        Ok(Self { spec, data })
    }

    pub fn spec(&self) -> MlpSpec {
        self.spec
    }

    pub fn flat(&self) -> &[f64] {
        &self.data
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |acc, g| acc.max(g.abs()))
    }

    fn add_assign(&mut self, other: &GradientSet) {
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    fn scale(&mut self, factor: f64) {
        for g in &mut self.data {
            *g *= factor;
        }
    }
}

/// Mean cross-entropy of the batch and its exact gradient.
///
/// The loss of one example is `-log softmax(pooled_score)[label]`; window
/// gradients accumulate additively through the shared parameters. Work is
/// split into fixed-size chunks whose partial gradients are reduced in
/// chunk order, so the result is bitwise reproducible for any thread
/// count.
pub fn loss_and_grad<B>(scorer: &PooledScorer, batch: &[B]) -> Result<(f64, GradientSet)>
where
    B: Borrow<Labeled<EmbeddedSequence>> + Sync,
{
    if batch.is_empty() {
        return Err(Error::EmptyData(
            "cannot take gradients on an empty batch".into(),
        ));
    }
    let partials: Vec<Result<(f64, GradientSet)>> = batch
        .par_chunks(REDUCE_CHUNK)
        .map(|chunk| {
            let mut grad = GradientSet::zeros(scorer.spec());
            let mut loss = 0.0;
            for ex in chunk {
                loss += example_loss_grad(scorer, ex.borrow(), &mut grad)?;
            }
            Ok((loss, grad))
        })
        .collect();
    let mut total_loss = 0.0;
    let mut grad = GradientSet::zeros(scorer.spec());
    for partial in partials {
        let (loss, part) = partial?;
        total_loss += loss;
        grad.add_assign(&part);
    }
    let inv = 1.0 / batch.len() as f64;
    grad.scale(inv);
    Ok((total_loss * inv, grad))
}

// Adds the (unscaled) gradient of one example's cross-entropy into `grad`
// and returns the example's loss.
fn example_loss_grad(
    scorer: &PooledScorer,
    ex: &Labeled<EmbeddedSequence>,
    grad: &mut GradientSet,
) -> Result<f64> {
    let spec = scorer.spec();
    let (n, hd, id) = (spec.output_dim, spec.hidden_dim, spec.input_dim);
    if ex.label >= n {
        return Err(Error::InvalidInput(format!(
            "label index {} out of range for {} classes",
            ex.label, n
        )));
    }
    let wins = windows(&ex.sequence, scorer.order);

    let mut score = vec![0.0; n];
    let mut caches = Vec::with_capacity(wins.len());
    let mut h_sum = vec![0.0; hd];
    for window in &wins {
        let (logits, cache) = mlp_forward(&scorer.params, window)?;
        for (s, l) in score.iter_mut().zip(&logits) {
            *s += l;
        }
        for (acc, &z) in h_sum.iter_mut().zip(&cache.z1) {
            *acc += z.max(0.0);
        }
        caches.push(cache);
    }

    let max = score.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + score.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    let loss = lse - score[ex.label];

    // d(loss)/d(score) = softmax(score) - onehot(label); it is shared by
    // every window, so the score-level and hidden-level terms factor out.
    let mut d_score: Vec<f64> = score.iter().map(|s| (s - lse).exp()).collect();
    d_score[ex.label] -= 1.0;

    let w2 = scorer.params.w2();
    let n_windows = wins.len() as f64;
    {
        let b1_off = spec.b1_offset();
        let w2_off = spec.w2_offset();
        let b2_off = spec.b2_offset();
        let g = &mut grad.data;
        for o in 0..n {
            g[b2_off + o] += d_score[o] * n_windows;
            let row = &mut g[w2_off + o * hd..w2_off + (o + 1) * hd];
            for (gw, &hs) in row.iter_mut().zip(&h_sum) {
                *gw += d_score[o] * hs;
            }
        }
        let mut d_hidden = vec![0.0; hd];
        for o in 0..n {
            let row = &w2[o * hd..(o + 1) * hd];
            for (dh, &w) in d_hidden.iter_mut().zip(row) {
                *dh += w * d_score[o];
            }
        }
        // ReLU subgradient at exactly zero is taken as zero.
        for (window, cache) in wins.iter().zip(&caches) {
            for u in 0..hd {
                if cache.z1[u] > 0.0 {
                    let dz = d_hidden[u];
                    g[b1_off + u] += dz;
                    let row = &mut g[u * id..(u + 1) * id];
                    for (gw, &x) in row.iter_mut().zip(window) {
                        *gw += dz * x;
                    }
                }
            }
        }
    }
    Ok(loss)
}
