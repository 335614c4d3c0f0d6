//! Exact classifiers over a finite observation alphabet: naive Bayes in
//! generative and discriminative form, pooled Markov chain classifiers of
//! order one and two, and the joint-law posterior they all must agree with.
//!
//! A [`PooledJointSpec`] describes the generative law: a class prior and
//! time-homogeneous conditional tables for the observation chain given the
//! class. [`derive_posteriors_from_joint`] turns a strictly positive spec
//! into the window posterior tables the discriminative classifiers consume,
//! and [`joint_posterior`] evaluates the posterior straight from the
//! factorization, serving as the ground truth the closed forms are tested
//! against.

use rand::Rng;

use crate::error::{Error, Result};
use crate::math::posterior_from_log_weights;
use crate::types::{Labeled, ProbVector};

/// Ordered set of observation symbol names. Maps tokens to the indices the
/// tabular models work with.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteAlphabet {
    symbols: Vec<String>,
}

impl DiscreteAlphabet {
    /// Builds an alphabet from distinct symbol names, at least one.
    pub fn new<I, S>(symbols: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let symbols: Vec<String> = symbols.into_iter().map(Into::into).collect();
        if symbols.is_empty() {
            return Err(Error::EmptyData("alphabet needs >= 1 symbol".into()));
        }
        for (i, s) in symbols.iter().enumerate() {
            if symbols[..i].contains(s) {
                return Err(Error::InvalidInput(format!("duplicate symbol {s:?}")));
            }
        }
        Ok(Self { symbols })
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, index: usize) -> Option<&str> {
        self.symbols.get(index).map(String::as_str)
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    pub fn index_of(&self, symbol: &str) -> Option<usize> {
        self.symbols.iter().position(|s| s == symbol)
    }

    /// Encodes a token sequence into symbol indices; any token outside the
    /// alphabet is an error.
    pub fn encode<'a, I>(&self, tokens: I) -> Result<Vec<usize>>
    where
        I: IntoIterator<Item = &'a str>,
    {
        tokens
            .into_iter()
            .map(|tok| {
                self.index_of(tok)
                    .ok_or_else(|| Error::InvalidInput(format!("symbol {tok:?} not in alphabet")))
            })
            .collect()
    }
}

/// Naive Bayes with a class prior `pi` and one emission row per class:
/// `b[i][y] = p(Y_t = y | X = i)`, the same row for every position.
#[derive(Debug, Clone, PartialEq)]
pub struct TabularNB {
    pi: ProbVector,
    b: Vec<ProbVector>,
}

impl TabularNB {
    pub fn new(pi: ProbVector, b: Vec<ProbVector>) -> Result<Self> {
        if pi.len() < 2 {
            return Err(Error::InvalidInput("need >= 2 classes".into()));
        }
        if b.len() != pi.len() {
            return Err(Error::Shape {
                what: "emission table",
                expected: pi.len(),
                actual: b.len(),
            });
        }
        let m = b[0].len();
        for row in &b {
            if row.len() != m {
                return Err(Error::Shape {
                    what: "emission row",
                    expected: m,
                    actual: row.len(),
                });
            }
        }
        Ok(Self { pi, b })
    }

    pub fn n_labels(&self) -> usize {
        self.pi.len()
    }

    pub fn n_symbols(&self) -> usize {
        self.b[0].len()
    }

    pub fn class_prior(&self) -> &ProbVector {
        &self.pi
    }

    pub fn emission(&self, label: usize) -> Option<&ProbVector> {
        self.b.get(label)
    }

    /// Posterior `p(X | y_1..y_T)` computed in log space: the weight of
    /// class `i` is `log pi(i) + sum_t log b_i(y_t)`.
    pub fn posterior(&self, y: &[usize]) -> Result<ProbVector> {
        if y.is_empty() {
            return Err(Error::SequenceTooShort {
                required: 1,
                got: 0,
            });
        }
        check_symbols(y, self.n_symbols())?;
        let logw = (0..self.n_labels())
            .map(|i| {
                let mut w = self.pi[i].ln();
                for &sym in y {
                    w += self.b[i][sym].ln();
                }
                w
            })
            .collect();
        posterior_from_log_weights(logw)
    }

    /// The model viewed as an order-0 pooled joint law, the form the table
    /// derivation consumes.
    pub fn to_joint_spec(&self) -> PooledJointSpec {
        PooledJointSpec {
            prior: self.pi.clone(),
            chain: ChainLaw::Iid {
                emission: self.b.clone(),
            },
        }
    }
}

/// Fits a [`TabularNB`] by counting: the prior from per-class document
/// frequencies, emissions from per-class token counts with add-one
/// smoothing so every row stays strictly positive.
pub fn fit_tabular_nb(
    data: &[Labeled<Vec<usize>>],
    n_labels: usize,
    n_symbols: usize,
) -> Result<TabularNB> {
    if data.is_empty() {
        return Err(Error::EmptyData("cannot fit on an empty dataset".into()));
    }
    if n_labels < 2 {
        return Err(Error::InvalidInput("need >= 2 classes".into()));
    }
    if n_symbols == 0 {
        return Err(Error::InvalidInput("need >= 1 symbol".into()));
    }
    let mut doc_counts = vec![0usize; n_labels];
    let mut token_counts = vec![vec![0usize; n_symbols]; n_labels];
    for ex in data {
        if ex.label >= n_labels {
            return Err(Error::InvalidInput(format!(
                "label index {} out of range for {} classes",
                ex.label, n_labels
            )));
        }
        check_symbols(&ex.sequence, n_symbols)?;
        doc_counts[ex.label] += 1;
        for &sym in &ex.sequence {
            token_counts[ex.label][sym] += 1;
        }
    }
    let total = data.len() as f64;
    let pi = ProbVector::new(doc_counts.iter().map(|&c| c as f64 / total).collect())?;
    let b = token_counts
        .iter()
        .map(|counts| {
            let class_total: usize = counts.iter().sum();
            let denom = (class_total + n_symbols) as f64;
            ProbVector::new(counts.iter().map(|&c| (c + 1) as f64 / denom).collect())
        })
        .collect::<Result<Vec<_>>>()?;
    TabularNB::new(pi, b)
}

/// Generative law for a class-conditional observation chain of order 0, 1
/// or 2: a class prior plus time-homogeneous conditional tables.
///
/// Rows are validated as distributions but may contain zeros; strict
/// positivity is only demanded by [`derive_posteriors_from_joint`], since
/// sampling and the joint posterior are well defined without it.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledJointSpec {
    prior: ProbVector,
    chain: ChainLaw,
}

#[derive(Debug, Clone, PartialEq)]
enum ChainLaw {
    /// Order 0: tokens are iid given the class.
    Iid { emission: Vec<ProbVector> },
    /// Order 1: `initial[i][a] = p(Y_1=a | X=i)`,
    /// `transition[i][a][b] = p(Y_{t+1}=b | Y_t=a, X=i)`.
    Markov1 {
        initial: Vec<ProbVector>,
        transition: Vec<Vec<ProbVector>>,
    },
    /// Order 2: adds `second[i][a][b] = p(Y_2=b | Y_1=a, X=i)` and indexes
    /// `transition[i]` by the flattened pair `a * M + b`.
    Markov2 {
        initial: Vec<ProbVector>,
        second: Vec<Vec<ProbVector>>,
        transition: Vec<Vec<ProbVector>>,
    },
}

impl PooledJointSpec {
    /// Order-0 law: class prior plus one emission row per class.
    pub fn iid(prior: ProbVector, emission: Vec<ProbVector>) -> Result<Self> {
        validate_rows(&prior, &emission, "emission", None)?;
        Ok(Self {
            prior,
            chain: ChainLaw::Iid { emission },
        })
    }

    /// Order-1 law: per-class initial distribution and transition matrix.
    pub fn markov1(
        prior: ProbVector,
        initial: Vec<ProbVector>,
        transition: Vec<Vec<ProbVector>>,
    ) -> Result<Self> {
        validate_rows(&prior, &initial, "initial", None)?;
        let m = initial[0].len();
        validate_table(&prior, &transition, "transition", m, m)?;
        Ok(Self {
            prior,
            chain: ChainLaw::Markov1 {
                initial,
                transition,
            },
        })
    }

    /// Order-2 law: initial distribution, second-token conditional, and a
    /// transition table indexed by the two preceding symbols.
    pub fn markov2(
        prior: ProbVector,
        initial: Vec<ProbVector>,
        second: Vec<Vec<ProbVector>>,
        transition: Vec<Vec<ProbVector>>,
    ) -> Result<Self> {
        validate_rows(&prior, &initial, "initial", None)?;
        let m = initial[0].len();
        validate_table(&prior, &second, "second-token table", m, m)?;
        validate_table(&prior, &transition, "transition", m * m, m)?;
        Ok(Self {
            prior,
            chain: ChainLaw::Markov2 {
                initial,
                second,
                transition,
            },
        })
    }

    /// Draws a random strictly positive spec: every distribution row is an
    /// independent normalized vector of positive uniform draws.
    pub fn random<R: Rng>(
        order: usize,
        n_labels: usize,
        n_symbols: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if n_labels < 2 || n_symbols == 0 {
            return Err(Error::InvalidInput(
                "random spec needs >= 2 classes and >= 1 symbol".into(),
            ));
        }
        let prior = random_prob_vector(n_labels, rng);
        let rows = |count: usize, rng: &mut R| -> Vec<ProbVector> {
            (0..count)
                .map(|_| random_prob_vector(n_symbols, rng))
                .collect()
        };
        match order {
            0 => {
                let emission = (0..n_labels)
                    .map(|_| random_prob_vector(n_symbols, rng))
                    .collect();
                Self::iid(prior, emission)
            }
            1 => {
                let initial = (0..n_labels)
                    .map(|_| random_prob_vector(n_symbols, rng))
                    .collect();
                let transition = (0..n_labels).map(|_| rows(n_symbols, rng)).collect();
                Self::markov1(prior, initial, transition)
            }
            2 => {
                let initial = (0..n_labels)
                    .map(|_| random_prob_vector(n_symbols, rng))
                    .collect();
                let second = (0..n_labels).map(|_| rows(n_symbols, rng)).collect();
                let transition = (0..n_labels)
                    .map(|_| rows(n_symbols * n_symbols, rng))
                    .collect();
                Self::markov2(prior, initial, second, transition)
            }
            k => Err(Error::InvalidInput(format!(
                "unsupported chain order {k}, expected 0, 1 or 2"
            ))),
        }
    }

    pub fn order(&self) -> usize {
        match &self.chain {
            ChainLaw::Iid { .. } => 0,
            ChainLaw::Markov1 { .. } => 1,
            ChainLaw::Markov2 { .. } => 2,
        }
    }

    pub fn n_labels(&self) -> usize {
        self.prior.len()
    }

    pub fn n_symbols(&self) -> usize {
        match &self.chain {
            ChainLaw::Iid { emission } => emission[0].len(),
            ChainLaw::Markov1 { initial, .. } | ChainLaw::Markov2 { initial, .. } => {
                initial[0].len()
            }
        }
    }

    pub fn class_prior(&self) -> &ProbVector {
        &self.prior
    }

    /// Distribution of the next token for class `label` given the symbols
    /// emitted so far. Only the last `order` symbols of the history matter.
    pub fn token_conditional(&self, label: usize, history: &[usize]) -> Result<&ProbVector> {
        if label >= self.n_labels() {
            return Err(Error::InvalidInput(format!(
                "label index {label} out of range for {} classes",
                self.n_labels()
            )));
        }
        let m = self.n_symbols();
        check_symbols(history, m)?;
        let row = match &self.chain {
            ChainLaw::Iid { emission } => &emission[label],
            ChainLaw::Markov1 {
                initial,
                transition,
            } => match history.last() {
                None => &initial[label],
                Some(&a) => &transition[label][a],
            },
            ChainLaw::Markov2 {
                initial,
                second,
                transition,
            } => match history {
                [] => &initial[label],
                [a] => &second[label][*a],
                [.., a, b] => &transition[label][a * m + b],
            },
        };
        Ok(row)
    }

    /// `log p(y_1..y_T | X = label)` under the chain; `-inf` when the
    /// sequence has probability zero.
    pub fn log_sequence_prob(&self, label: usize, y: &[usize]) -> Result<f64> {
        if y.is_empty() {
            return Err(Error::SequenceTooShort {
                required: 1,
                got: 0,
            });
        }
        let mut logp = 0.0;
        for t in 0..y.len() {
            let row = self.token_conditional(label, &y[..t])?;
            logp += row[y[t]].ln();
        }
        Ok(logp)
    }

    /// True when the prior and every conditional row are entrywise positive.
    pub fn is_strictly_positive(&self) -> bool {
        let rows_positive = |rows: &[ProbVector]| rows.iter().all(ProbVector::is_strictly_positive);
        let tables_positive = |t: &[Vec<ProbVector>]| t.iter().all(|rows| rows_positive(rows));
        self.prior.is_strictly_positive()
            && match &self.chain {
                ChainLaw::Iid { emission } => rows_positive(emission),
                ChainLaw::Markov1 {
                    initial,
                    transition,
                } => rows_positive(initial) && tables_positive(transition),
                ChainLaw::Markov2 {
                    initial,
                    second,
                    transition,
                } => {
                    rows_positive(initial) && tables_positive(second) && tables_positive(transition)
                }
            }
    }
}

/// Posterior straight from the factorization: weight of class `i` is
/// `log prior(i) + log p(y | X=i)`, normalized over classes. This is the
/// ground truth every discriminative classifier is checked against.
pub fn joint_posterior(spec: &PooledJointSpec, y: &[usize]) -> Result<ProbVector> {
    let logw = (0..spec.n_labels())
        .map(|i| Ok(spec.class_prior()[i].ln() + spec.log_sequence_prob(i, y)?))
        .collect::<Result<Vec<f64>>>()?;
    posterior_from_log_weights(logw)
}

/// Window posterior tables `p(X | window)` for windows of one, two and
/// three consecutive observations, the parameters of the discriminative
/// classifiers. Rows are indexed by the flattened window.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorTables {
    n_symbols: usize,
    l1: Vec<ProbVector>,
    l2: Vec<ProbVector>,
    l3: Vec<ProbVector>,
}

impl PosteriorTables {
    /// Assembles tables from rows; `l1`, `l2`, `l3` must hold `M`, `M^2`
    /// and `M^3` rows of identical length.
    pub fn new(
        n_symbols: usize,
        l1: Vec<ProbVector>,
        l2: Vec<ProbVector>,
        l3: Vec<ProbVector>,
    ) -> Result<Self> {
        let m = n_symbols;
        if m == 0 {
            return Err(Error::InvalidInput("need >= 1 symbol".into()));
        }
        for (rows, expected, what) in [
            (&l1, m, "single-token table"),
            (&l2, m * m, "token-pair table"),
            (&l3, m * m * m, "token-triple table"),
        ] {
            if rows.len() != expected {
                return Err(Error::Shape {
                    what,
                    expected,
                    actual: rows.len(),
                });
            }
        }
        let n = l1[0].len();
        if n < 2 {
            return Err(Error::InvalidInput("need >= 2 classes".into()));
        }
        for rows in [&l1, &l2, &l3] {
            for row in rows.iter() {
                if row.len() != n {
                    return Err(Error::Shape {
                        what: "posterior row",
                        expected: n,
                        actual: row.len(),
                    });
                }
            }
        }
        Ok(Self {
            n_symbols,
            l1,
            l2,
            l3,
        })
    }

    pub fn n_labels(&self) -> usize {
        self.l1[0].len()
    }

    pub fn n_symbols(&self) -> usize {
        self.n_symbols
    }

    /// `p(X | Y_t = y)`.
    pub fn l1(&self, y: usize) -> Result<&ProbVector> {
        check_symbols(&[y], self.n_symbols)?;
        Ok(&self.l1[y])
    }

    /// `p(X | Y_t = y1, Y_{t+1} = y2)`.
    pub fn l2(&self, y1: usize, y2: usize) -> Result<&ProbVector> {
        check_symbols(&[y1, y2], self.n_symbols)?;
        Ok(&self.l2[y1 * self.n_symbols + y2])
    }

    /// `p(X | Y_t = y1, Y_{t+1} = y2, Y_{t+2} = y3)`.
    pub fn l3(&self, y1: usize, y2: usize, y3: usize) -> Result<&ProbVector> {
        check_symbols(&[y1, y2, y3], self.n_symbols)?;
        let m = self.n_symbols;
        Ok(&self.l3[(y1 * m + y2) * m + y3])
    }

    pub(crate) fn rows(&self) -> (&[ProbVector], &[ProbVector], &[ProbVector]) {
        (&self.l1, &self.l2, &self.l3)
    }
}

/// Derives the window posterior tables exactly from a strictly positive
/// joint law by Bayes' rule on the marginals of the first one, two and
/// three observations: the weight of class `i` for window `w` is
/// `prior(i) * p(Y_1..Y_|w| = w | X=i)`, normalized over classes.
///
/// Anchoring every window at the start of the chain keeps the tables of
/// different sizes mutually consistent, which is what makes the
/// telescoping classifiers reproduce [`joint_posterior`] exactly even for
/// specs whose marginals drift over time.
pub fn derive_posteriors_from_joint(spec: &PooledJointSpec) -> Result<PosteriorTables> {
    if !spec.is_strictly_positive() {
        return Err(Error::StrictPositivity(
            "posterior tables need a strictly positive joint law".into(),
        ));
    }
    let n = spec.n_labels();
    let m = spec.n_symbols();
    let posterior_of_window = |window: &[usize]| -> Result<ProbVector> {
        let weights = (0..n)
            .map(|i| {
                let mut w = spec.class_prior()[i];
                for t in 0..window.len() {
                    w *= spec.token_conditional(i, &window[..t])?[window[t]];
                }
                Ok(w)
            })
            .collect::<Result<Vec<f64>>>()?;
        crate::math::norm(&weights)
    };
    let mut l1 = Vec::with_capacity(m);
    let mut l2 = Vec::with_capacity(m * m);
    let mut l3 = Vec::with_capacity(m * m * m);
    for a in 0..m {
        l1.push(posterior_of_window(&[a])?);
    }
    for a in 0..m {
        for b in 0..m {
            l2.push(posterior_of_window(&[a, b])?);
        }
    }
    for a in 0..m {
        for b in 0..m {
            for c in 0..m {
                l3.push(posterior_of_window(&[a, b, c])?);
            }
        }
    }
    PosteriorTables::new(m, l1, l2, l3)
}

/// Discriminative naive Bayes posterior: the weight of class `i` is
/// `pi(i)^(1-T) * prod_t L1[y_t](i)`, evaluated in log space. Equals the
/// generative posterior when the tables come from the same model.
pub fn nb_posterior_discriminative(
    class_prior: &ProbVector,
    tables: &PosteriorTables,
    y: &[usize],
) -> Result<ProbVector> {
    if y.is_empty() {
        return Err(Error::SequenceTooShort {
            required: 1,
            got: 0,
        });
    }
    check_symbols(y, tables.n_symbols())?;
    let n = tables.n_labels();
    if class_prior.len() != n {
        return Err(Error::Shape {
            what: "class prior",
            expected: n,
            actual: class_prior.len(),
        });
    }
    let t = y.len() as f64;
    let mut logw = Vec::with_capacity(n);
    for i in 0..n {
        let pi = class_prior[i];
        if pi <= 0.0 {
            return Err(Error::StrictPositivity(format!(
                "class prior entry {i} is zero"
            )));
        }
        let mut w = (1.0 - t) * pi.ln();
        for &sym in y {
            w += positive_entry(&tables.l1[sym], i, "single-token posterior")?.ln();
        }
        logw.push(w);
    }
    posterior_from_log_weights(logw)
}

/// Pooled Markov chain posterior of order 1: the weight of class `i` is
/// `L1[y_1](i) * prod_{t=1}^{T-1} L2[y_t, y_{t+1}](i) / L1[y_t](i)`,
/// evaluated in log space. The products telescope so that the result
/// equals the joint-law posterior when the tables are exact.
pub fn pooledmc_posterior(tables: &PosteriorTables, y: &[usize]) -> Result<ProbVector> {
    if y.len() < 2 {
        return Err(Error::SequenceTooShort {
            required: 2,
            got: y.len(),
        });
    }
    check_symbols(y, tables.n_symbols())?;
    let n = tables.n_labels();
    let m = tables.n_symbols();
    let mut logw = Vec::with_capacity(n);
    for i in 0..n {
        let mut w = positive_entry(&tables.l1[y[0]], i, "single-token posterior")?.ln();
        for t in 0..y.len() - 1 {
            let pair = &tables.l2[y[t] * m + y[t + 1]];
            w += positive_entry(pair, i, "token-pair posterior")?.ln();
            w -= positive_entry(&tables.l1[y[t]], i, "single-token posterior")?.ln();
        }
        logw.push(w);
    }
    posterior_from_log_weights(logw)
}

/// Pooled Markov chain posterior of order 2: the weight of class `i` is
/// `L2[y_1, y_2](i) * prod_{t=1}^{T-2} L3[y_t..y_{t+2}](i) / L2[y_t, y_{t+1}](i)`,
/// evaluated in log space.
pub fn pooledmc2_posterior(tables: &PosteriorTables, y: &[usize]) -> Result<ProbVector> {
    if y.len() < 3 {
        return Err(Error::SequenceTooShort {
            required: 3,
            got: y.len(),
        });
    }
    check_symbols(y, tables.n_symbols())?;
    let n = tables.n_labels();
    let m = tables.n_symbols();
    let mut logw = Vec::with_capacity(n);
    for i in 0..n {
        let mut w = positive_entry(&tables.l2[y[0] * m + y[1]], i, "token-pair posterior")?.ln();
        for t in 0..y.len() - 2 {
            let triple = &tables.l3[(y[t] * m + y[t + 1]) * m + y[t + 2]];
            w += positive_entry(triple, i, "token-triple posterior")?.ln();
            w -= positive_entry(&tables.l2[y[t] * m + y[t + 1]], i, "token-pair posterior")?.ln();
        }
        logw.push(w);
    }
    posterior_from_log_weights(logw)
}

fn positive_entry(row: &ProbVector, i: usize, what: &str) -> Result<f64> {
    let v = row[i];
    if v <= 0.0 {
        return Err(Error::StrictPositivity(format!(
            "{what} has a zero entry for class {i}"
        )));
    }
    Ok(v)
}

fn check_symbols(y: &[usize], n_symbols: usize) -> Result<()> {
    for &sym in y {
        if sym >= n_symbols {
            return Err(Error::UnknownSymbol {
                index: sym,
                alphabet_size: n_symbols,
            });
        }
    }
    Ok(())
}

fn validate_rows(
    prior: &ProbVector,
    rows: &[ProbVector],
    what: &'static str,
    expect_len: Option<usize>,
) -> Result<()> {
    if prior.len() < 2 {
        return Err(Error::InvalidInput("need >= 2 classes".into()));
    }
    if rows.len() != prior.len() {
        return Err(Error::Shape {
            what,
            expected: prior.len(),
            actual: rows.len(),
        });
    }
    let m = expect_len.unwrap_or_else(|| rows[0].len());
    if m == 0 {
        return Err(Error::InvalidInput("need >= 1 symbol".into()));
    }
    for row in rows {
        if row.len() != m {
            return Err(Error::Shape {
                what,
                expected: m,
                actual: row.len(),
            });
        }
    }
    Ok(())
}

fn validate_table(
    prior: &ProbVector,
    table: &[Vec<ProbVector>],
    what: &'static str,
    rows_per_class: usize,
    row_len: usize,
) -> Result<()> {
    if table.len() != prior.len() {
        return Err(Error::Shape {
            what,
            expected: prior.len(),
            actual: table.len(),
        });
    }
    for rows in table {
        if rows.len() != rows_per_class {
            return Err(Error::Shape {
                what,
                expected: rows_per_class,
                actual: rows.len(),
            });
        }
        for row in rows {
            if row.len() != row_len {
                return Err(Error::Shape {
                    what,
                    expected: row_len,
                    actual: row.len(),
                });
            }
        }
    }
    Ok(())
}

fn random_prob_vector<R: Rng>(len: usize, rng: &mut R) -> ProbVector {
    // max guards the measure-zero exact-zero draw.
    let raw: Vec<f64> = (0..len).map(|_| rng.gen::<f64>().max(1e-12)).collect();
    crate::math::norm(&raw).expect("positive draws normalize")
}
