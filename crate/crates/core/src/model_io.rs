//! Versioned plain-text persistence for every fitted model kind.
//!
//! Files start with the header `seqbayes-model v1 <kind>`; the body is a
//! fixed sequence of keyword-prefixed lines whose float fields use Rust's
//! shortest round-trip formatting, so save followed by load reproduces the
//! model bit for bit.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gaussian::GaussianNB;
use crate::neural::{MlpParams, MlpSpec, PooledScorer};
use crate::tabular::{PooledJointSpec, PosteriorTables, TabularNB};
use crate::types::{LabelSet, ProbVector};

const MAGIC: &str = "seqbayes-model";
const VERSION: &str = "v1";

/// Any model this crate can persist.
#[derive(Debug, Clone, PartialEq)]
pub enum SavedModel {
    TabularNb(TabularNB),
    PosteriorTables(PosteriorTables),
    PooledJoint(PooledJointSpec),
    GaussianNb {
        model: GaussianNB,
        labels: LabelSet,
    },
    NeuralScorer {
        scorer: PooledScorer,
        labels: LabelSet,
    },
}

impl SavedModel {
    /// Kind tag written in the header line.
    pub fn kind(&self) -> &'static str {
        match self {
            SavedModel::TabularNb(_) => "tabular-nb",
            SavedModel::PosteriorTables(_) => "posterior-tables",
            SavedModel::PooledJoint(_) => "pooled-joint",
            SavedModel::GaussianNb { .. } => "gaussian-nb",
            SavedModel::NeuralScorer { .. } => "neural-scorer",
        }
    }
}

/// Writes `model` to `path`, creating or truncating the file.
pub fn save_model<P: AsRef<Path>>(path: P, model: &SavedModel) -> Result<()> {
    let mut writer = BufWriter::new(File::create(path)?);
    write_model(&mut writer, model)?;
    writer.flush()?;
    Ok(())
}

/// Reads any model kind back from `path`.
pub fn load_model<P: AsRef<Path>>(path: P) -> Result<SavedModel> {
    read_model(BufReader::new(File::open(path)?))
}

/// Serializes `model` to any writer; see the module docs for the format.
pub fn write_model<W: Write>(writer: &mut W, model: &SavedModel) -> Result<()> {
    writeln!(writer, "{MAGIC} {VERSION} {}", model.kind())?;
    match model {
        SavedModel::TabularNb(nb) => {
            writeln!(writer, "classes {}", nb.n_labels())?;
            writeln!(writer, "symbols {}", nb.n_symbols())?;
            write_row(writer, "pi", nb.class_prior().values())?;
            for label in 0..nb.n_labels() {
                let row = nb.emission(label).expect("label index in range");
                write_row(writer, "emission", row.values())?;
            }
        }
        SavedModel::PosteriorTables(tables) => {
            writeln!(writer, "classes {}", tables.n_labels())?;
            writeln!(writer, "symbols {}", tables.n_symbols())?;
            let (l1, l2, l3) = tables.rows();
            for (keyword, rows) in [("l1", l1), ("l2", l2), ("l3", l3)] {
                for row in rows {
                    write_row(writer, keyword, row.values())?;
                }
            }
        }
        SavedModel::PooledJoint(spec) => {
            writeln!(writer, "order {}", spec.order())?;
            writeln!(writer, "classes {}", spec.n_labels())?;
            writeln!(writer, "symbols {}", spec.n_symbols())?;
            write_row(writer, "prior", spec.class_prior().values())?;
            write_chain_rows(writer, spec)?;
        }
        SavedModel::GaussianNb { model, labels } => {
            check_labels(model.n_labels(), labels)?;
            writeln!(writer, "classes {}", model.n_labels())?;
            writeln!(writer, "labels {}", labels.names().join(" "))?;
            write_row(writer, "pi", model.class_prior().values())?;
            let mu: Vec<f64> = (0..model.n_labels())
                .map(|i| model.mean(i).expect("label index in range"))
                .collect();
            let sigma: Vec<f64> = (0..model.n_labels())
                .map(|i| model.std_dev(i).expect("label index in range"))
                .collect();
            write_row(writer, "mu", &mu)?;
            write_row(writer, "sigma", &sigma)?;
        }
        SavedModel::NeuralScorer { scorer, labels } => {
            let spec = scorer.spec();
            check_labels(spec.output_dim, labels)?;
            writeln!(writer, "order {}", scorer.order())?;
            writeln!(writer, "embed-dim {}", scorer.embed_dim())?;
            writeln!(writer, "hidden {}", spec.hidden_dim)?;
            writeln!(writer, "classes {}", spec.output_dim)?;
            writeln!(writer, "labels {}", labels.names().join(" "))?;
            let flat = scorer.params().flat();
            let mut offset = 0;
            for (keyword, rows, cols) in [
                ("w1", spec.hidden_dim, spec.input_dim),
                ("b1", 1, spec.hidden_dim),
                ("w2", spec.output_dim, spec.hidden_dim),
                ("b2", 1, spec.output_dim),
            ] {
                for _ in 0..rows {
                    write_row(writer, keyword, &flat[offset..offset + cols])?;
                    offset += cols;
                }
            }
        }
    }
    Ok(())
}

/// Parses a model from any reader, reporting 1-based line numbers on error.
pub fn read_model<R: Read>(reader: R) -> Result<SavedModel> {
    let mut lines = Lines::new(BufReader::new(reader))?;
    let header = lines.next("header")?;
    let mut parts = header.text.split_whitespace();
    let (magic, version, kind) = (parts.next(), parts.next(), parts.next());
    if magic != Some(MAGIC) {
        return Err(Error::format(
            Some(header.number),
            format!("expected a `{MAGIC}` header"),
        ));
    }
    if version != Some(VERSION) {
        return Err(Error::format(
            Some(header.number),
            format!(
                "unsupported format version {}",
                version.unwrap_or("<missing>")
            ),
        ));
    }
    let kind = kind
        .ok_or_else(|| Error::format(Some(header.number), "header is missing the model kind"))?
        .to_string();
    if parts.next().is_some() {
        return Err(Error::format(
            Some(header.number),
            "unexpected trailing fields in header",
        ));
    }
    match kind.as_str() {
        "tabular-nb" => read_tabular_nb(&mut lines),
        "posterior-tables" => read_posterior_tables(&mut lines),
        "pooled-joint" => read_pooled_joint(&mut lines),
        "gaussian-nb" => read_gaussian_nb(&mut lines),
        "neural-scorer" => read_neural_scorer(&mut lines),
        other => Err(Error::format(
            Some(header.number),
            format!("unknown model kind `{other}`"),
        )),
    }
}

fn write_row<W: Write>(writer: &mut W, keyword: &str, values: &[f64]) -> Result<()> {
    write!(writer, "{keyword}")?;
    for v in values {
        write!(writer, " {v}")?;
    }
    writeln!(writer)?;
    Ok(())
}

fn write_chain_rows<W: Write>(writer: &mut W, spec: &PooledJointSpec) -> Result<()> {
    let n = spec.n_labels();
    let m = spec.n_symbols();
    let row = |label: usize, history: &[usize]| -> &ProbVector {
        spec.token_conditional(label, history)
            .expect("indices in range")
    };
    match spec.order() {
        0 => {
            for i in 0..n {
                write_row(writer, "emission", row(i, &[]).values())?;
            }
        }
        1 => {
            for i in 0..n {
                write_row(writer, "initial", row(i, &[]).values())?;
            }
            for i in 0..n {
                for a in 0..m {
                    write_row(writer, "transition", row(i, &[a]).values())?;
                }
            }
        }
        2 => {
            for i in 0..n {
                write_row(writer, "initial", row(i, &[]).values())?;
            }
            for i in 0..n {
                for a in 0..m {
                    write_row(writer, "second", row(i, &[a]).values())?;
                }
            }
            for i in 0..n {
                for a in 0..m {
                    for b in 0..m {
                        write_row(writer, "transition", row(i, &[a, b]).values())?;
                    }
                }
            }
        }
        k => unreachable!("spec constructors admit orders 0..=2, got {k}"),
    }
    Ok(())
}

fn check_labels(n: usize, labels: &LabelSet) -> Result<()> {
    if labels.len() != n {
        return Err(Error::Shape {
            what: "label names",
            expected: n,
            actual: labels.len(),
        });
    }
    for name in labels.names() {
        if name.is_empty() || name.chars().any(char::is_whitespace) {
            return Err(Error::InvalidInput(format!(
                "label name {name:?} cannot be stored: names must be non-empty and free of whitespace"
            )));
        }
    }
    Ok(())
}

struct Line {
    number: usize,
    text: String,
}

/// Non-empty lines of the input with their 1-based numbers.
struct Lines {
    lines: std::vec::IntoIter<Line>,
    last_number: usize,
}

impl Lines {
    fn new<R: BufRead>(reader: R) -> Result<Self> {
        let mut lines = Vec::new();
        let mut last_number = 0;
        for (i, line) in reader.lines().enumerate() {
            let text = line?;
            last_number = i + 1;
            if !text.trim().is_empty() {
                lines.push(Line {
                    number: i + 1,
                    text,
                });
            }
        }
        Ok(Self {
            lines: lines.into_iter(),
            last_number,
        })
    }

    fn next(&mut self, what: &str) -> Result<Line> {
        self.lines.next().ok_or_else(|| {
            Error::format(
                Some(self.last_number),
                format!("unexpected end of file, expected {what}"),
            )
        })
    }

    /// Next line, which must start with `keyword`; returns the rest.
    fn field(&mut self, keyword: &str) -> Result<(usize, String)> {
        let line = self.next(&format!("a `{keyword}` line"))?;
        match line.text.split_once(char::is_whitespace) {
            Some((head, rest)) if head == keyword => Ok((line.number, rest.trim().to_string())),
            _ => Err(Error::format(
                Some(line.number),
                format!("expected a `{keyword}` line, got {:?}", line.text),
            )),
        }
    }

    fn usize_field(&mut self, keyword: &str) -> Result<usize> {
        let (number, rest) = self.field(keyword)?;
        rest.parse::<usize>()
            .map_err(|e| Error::format(Some(number), format!("bad `{keyword}` value: {e}")))
    }

    fn floats_field(&mut self, keyword: &str) -> Result<Vec<f64>> {
        let (number, rest) = self.field(keyword)?;
        rest.split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::format(Some(number), format!("bad float {tok:?}: {e}")))
            })
            .collect()
    }

    fn prob_field(&mut self, keyword: &str) -> Result<ProbVector> {
        let (number, rest) = self.field(keyword)?;
        let values = rest
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .map_err(|e| Error::format(Some(number), format!("bad float {tok:?}: {e}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        ProbVector::new(values)
            .map_err(|e| Error::format(Some(number), format!("bad `{keyword}` row: {e}")))
    }

    fn prob_rows(&mut self, keyword: &str, count: usize) -> Result<Vec<ProbVector>> {
        (0..count).map(|_| self.prob_field(keyword)).collect()
    }

    fn labels_field(&mut self, expected: usize) -> Result<LabelSet> {
        let (number, rest) = self.field("labels")?;
        let names: Vec<&str> = rest.split_whitespace().collect();
        if names.len() != expected {
            return Err(Error::format(
                Some(number),
                format!("expected {expected} label names, got {}", names.len()),
            ));
        }
        LabelSet::new(names).map_err(|e| Error::format(Some(number), e.to_string()))
    }

    fn expect_end(&mut self) -> Result<()> {
        match self.lines.next() {
            None => Ok(()),
            Some(line) => Err(Error::format(
                Some(line.number),
                format!("unexpected trailing content {:?}", line.text),
            )),
        }
    }
}

fn read_tabular_nb(lines: &mut Lines) -> Result<SavedModel> {
    let classes = lines.usize_field("classes")?;
    let _symbols = lines.usize_field("symbols")?;
    let pi = lines.prob_field("pi")?;
    let b = lines.prob_rows("emission", classes)?;
    lines.expect_end()?;
    Ok(SavedModel::TabularNb(TabularNB::new(pi, b)?))
}

fn read_posterior_tables(lines: &mut Lines) -> Result<SavedModel> {
    let _classes = lines.usize_field("classes")?;
    let symbols = lines.usize_field("symbols")?;
    let l1 = lines.prob_rows("l1", symbols)?;
    let l2 = lines.prob_rows("l2", symbols * symbols)?;
    let l3 = lines.prob_rows("l3", symbols * symbols * symbols)?;
    lines.expect_end()?;
    Ok(SavedModel::PosteriorTables(PosteriorTables::new(
        symbols, l1, l2, l3,
    )?))
}

fn read_pooled_joint(lines: &mut Lines) -> Result<SavedModel> {
    let order = lines.usize_field("order")?;
    let classes = lines.usize_field("classes")?;
    let symbols = lines.usize_field("symbols")?;
    let prior = lines.prob_field("prior")?;
    let table =
        |lines: &mut Lines, keyword: &str, rows_per_class: usize| -> Result<Vec<Vec<ProbVector>>> {
            (0..classes)
                .map(|_| lines.prob_rows(keyword, rows_per_class))
                .collect()
        };
    let spec = match order {
        0 => {
            let emission = lines.prob_rows("emission", classes)?;
            PooledJointSpec::iid(prior, emission)?
        }
        1 => {
            let initial = lines.prob_rows("initial", classes)?;
            let transition = table(lines, "transition", symbols)?;
            PooledJointSpec::markov1(prior, initial, transition)?
        }
        2 => {
            let initial = lines.prob_rows("initial", classes)?;
            let second = table(lines, "second", symbols)?;
            let transition = table(lines, "transition", symbols * symbols)?;
            PooledJointSpec::markov2(prior, initial, second, transition)?
        }
        k => {
            return Err(Error::format(
                None,
                format!("unsupported chain order {k}, expected 0, 1 or 2"),
            ))
        }
    };
    lines.expect_end()?;
    Ok(SavedModel::PooledJoint(spec))
}

fn read_gaussian_nb(lines: &mut Lines) -> Result<SavedModel> {
    let classes = lines.usize_field("classes")?;
    let labels = lines.labels_field(classes)?;
    let pi = lines.prob_field("pi")?;
    let mu = lines.floats_field("mu")?;
    let sigma = lines.floats_field("sigma")?;
    lines.expect_end()?;
    Ok(SavedModel::GaussianNb {
        model: GaussianNB::new(pi, mu, sigma)?,
        labels,
    })
}

fn read_neural_scorer(lines: &mut Lines) -> Result<SavedModel> {
    let order = lines.usize_field("order")?;
    let embed_dim = lines.usize_field("embed-dim")?;
    if embed_dim == 0 {
        return Err(Error::format(None, "embed-dim must be >= 1"));
    }
    let hidden = lines.usize_field("hidden")?;
    let classes = lines.usize_field("classes")?;
    let labels = lines.labels_field(classes)?;
    let spec = MlpSpec::new((order + 1) * embed_dim, hidden, classes)?;
    let mut flat = Vec::with_capacity(spec.param_count());
    for (keyword, rows, cols) in [
        ("w1", spec.hidden_dim, spec.input_dim),
        ("b1", 1, spec.hidden_dim),
        ("w2", spec.output_dim, spec.hidden_dim),
        ("b2", 1, spec.output_dim),
    ] {
        for _ in 0..rows {
            let values = lines.floats_field(keyword)?;
            if values.len() != cols {
                return Err(Error::format(
                    None,
                    format!(
                        "`{keyword}` rows must hold {cols} values, got {}",
                        values.len()
                    ),
                ));
            }
            flat.extend(values);
        }
    }
    lines.expect_end()?;
    let params = MlpParams::from_flat(spec, flat)?;
    Ok(SavedModel::NeuralScorer {
        scorer: PooledScorer::new(order, embed_dim, params)?,
        labels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_params;
    use crate::types::Labeled;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn round_trip(model: SavedModel) -> SavedModel {
        let mut buffer = Vec::new();
        write_model(&mut buffer, &model).unwrap();
        let restored = read_model(&buffer[..]).unwrap();
        assert_eq!(restored, model);
        restored
    }

    fn sample_tabular_nb() -> TabularNB {
        let data = vec![
            Labeled::new(vec![0usize, 1, 1], 0),
            Labeled::new(vec![2, 2], 1),
            Labeled::new(vec![0, 2], 0),
        ];
        crate::tabular::fit_tabular_nb(&data, 2, 3).unwrap()
    }

    #[test]
    fn tabular_nb_round_trips() {
        round_trip(SavedModel::TabularNb(sample_tabular_nb()));
    }

    #[test]
    fn posterior_tables_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let spec = PooledJointSpec::random(1, 3, 2, &mut rng).unwrap();
        let tables = crate::tabular::derive_posteriors_from_joint(&spec).unwrap();
        round_trip(SavedModel::PosteriorTables(tables));
    }

    #[test]
    fn joint_specs_of_every_order_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for order in 0..=2 {
            let spec = PooledJointSpec::random(order, 2, 3, &mut rng).unwrap();
            round_trip(SavedModel::PooledJoint(spec));
        }
    }

    #[test]
    fn gaussian_nb_round_trips() {
        let model = GaussianNB::new(
            ProbVector::new(vec![0.25, 0.75]).unwrap(),
            vec![-0.5, 1.25],
            vec![0.1, 2.0],
        )
        .unwrap();
        let labels = LabelSet::new(["neg", "pos"]).unwrap();
        round_trip(SavedModel::GaussianNb { model, labels });
    }

    #[test]
    fn neural_scorer_round_trips_bitwise() {
        let spec = MlpSpec::new(6, 4, 3).unwrap();
        let scorer = PooledScorer::new(1, 3, init_params(spec, 42)).unwrap();
        let labels = LabelSet::new(["a", "b", "c"]).unwrap();
        let model = SavedModel::NeuralScorer {
            scorer: scorer.clone(),
            labels,
        };
        let restored = round_trip(model);
        let SavedModel::NeuralScorer { scorer: back, .. } = restored else {
            panic!("kind changed across the round trip");
        };
        assert_eq!(back.params().flat(), scorer.params().flat());
        assert_eq!(back.order(), 1);
        assert_eq!(back.embed_dim(), 3);
    }

    #[test]
    fn files_round_trip_on_disk() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.txt");
        let model = SavedModel::TabularNb(sample_tabular_nb());
        save_model(&path, &model).unwrap();
        assert_eq!(load_model(&path).unwrap(), model);
    }

    #[test]
    fn header_problems_are_reported_with_line_numbers() {
        let err = read_model("not-a-model v1 tabular-nb\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(1), .. }), "{err}");

        let err = read_model("seqbayes-model v2 tabular-nb\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("version"), "{err}");

        let err = read_model("seqbayes-model v1 mystery\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("mystery"), "{err}");
    }

    #[test]
    fn body_problems_are_reported_with_line_numbers() {
        let text = "seqbayes-model v1 tabular-nb\nclasses 2\nsymbols 2\npi 0.5 x\n";
        let err = read_model(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(4), .. }), "{err}");

        let text = "seqbayes-model v1 tabular-nb\nclasses 2\n";
        let err = read_model(text.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("symbols"), "{err}");

        // A wrong keyword on an otherwise valid line.
        let text = "seqbayes-model v1 tabular-nb\nclasses 2\nsymbols 2\nprior 0.5 0.5\n";
        let err = read_model(text.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Format { line: Some(4), .. }), "{err}");
    }

    #[test]
    fn trailing_content_is_rejected() {
        let mut buffer = Vec::new();
        write_model(&mut buffer, &SavedModel::TabularNb(sample_tabular_nb())).unwrap();
        buffer.extend_from_slice(b"emission 0.5 0.5 0.0\n");
        let err = read_model(&buffer[..]).unwrap_err();
        assert!(err.to_string().contains("trailing"), "{err}");
    }

    #[test]
    fn whitespace_in_label_names_is_rejected_at_write_time() {
        let model = GaussianNB::new(
            ProbVector::new(vec![0.5, 0.5]).unwrap(),
            vec![0.0, 1.0],
            vec![1.0, 1.0],
        )
        .unwrap();
        let labels = LabelSet::new(["ok", "has space"]).unwrap();
        let mut buffer = Vec::new();
        let err = write_model(&mut buffer, &SavedModel::GaussianNb { model, labels }).unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)), "{err}");
    }
}
