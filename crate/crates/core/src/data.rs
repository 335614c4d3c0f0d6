//! Dataset ingestion, deterministic splits, and sampling of synthetic
//! discrete sequences from a joint law.

use std::fs::File;
use std::io::{BufRead, BufReader, Read};
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::tabular::PooledJointSpec;
use crate::types::{LabelSet, Labeled, ProbVector};

/// Raw text-classification examples plus the label set they draw from.
#[derive(Debug, Clone)]
pub struct TextDataset {
    examples: Vec<(String, String)>,
    labels: LabelSet,
}

impl TextDataset {
    /// Wraps `(text, label name)` pairs; the label set is the sorted list
    /// of distinct names, which must contain at least two entries.
    pub fn new(examples: Vec<(String, String)>) -> Result<Self> {
        if examples.is_empty() {
            return Err(Error::EmptyData("dataset contains no examples".into()));
        }
        let mut names: Vec<&String> = examples.iter().map(|(_, label)| label).collect();
        names.sort();
        names.dedup();
        let labels = LabelSet::new(names.iter().map(|s| s.as_str()))?;
        Ok(Self { examples, labels })
    }

    pub fn len(&self) -> usize {
        self.examples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.examples.is_empty()
    }

    pub fn examples(&self) -> &[(String, String)] {
        &self.examples
    }

    pub fn labels(&self) -> &LabelSet {
        &self.labels
    }
}

/// Supported on-disk dataset layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DatasetFormat {
    /// One JSON object per line.
    Jsonl,
    /// Comma-separated with a header row.
    Csv,
    /// Tab-separated with a header row.
    Tsv,
}

impl DatasetFormat {
    /// Guesses the format from a file extension.
    pub fn from_path(path: impl AsRef<Path>) -> Option<Self> {
        match path.as_ref().extension()?.to_str()? {
            "jsonl" | "ndjson" | "json" => Some(Self::Jsonl),
            "csv" => Some(Self::Csv),
            "tsv" | "tab" => Some(Self::Tsv),
            _ => None,
        }
    }
}

impl FromStr for DatasetFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "jsonl" => Ok(Self::Jsonl),
            "csv" => Ok(Self::Csv),
            "tsv" => Ok(Self::Tsv),
            other => Err(Error::InvalidInput(format!(
                "unknown dataset format {other:?}, expected jsonl, csv or tsv"
            ))),
        }
    }
}

/// Loads a dataset file, keeping examples in input order.
pub fn load_dataset(
    path: impl AsRef<Path>,
    format: DatasetFormat,
    text_field: &str,
    label_field: &str,
) -> Result<TextDataset> {
    let file = File::open(path.as_ref())?;
    read_dataset(BufReader::new(file), format, text_field, label_field)
}

/// [`load_dataset`] over any reader.
pub fn read_dataset<R: Read>(
    reader: BufReader<R>,
    format: DatasetFormat,
    text_field: &str,
    label_field: &str,
) -> Result<TextDataset> {
    let examples = match format {
        DatasetFormat::Jsonl => read_jsonl(reader, text_field, label_field)?,
        DatasetFormat::Csv => read_delimited(reader, b',', text_field, label_field)?,
        DatasetFormat::Tsv => read_delimited(reader, b'\t', text_field, label_field)?,
    };
    TextDataset::new(examples)
}

fn read_jsonl<R: BufRead>(
    reader: R,
    text_field: &str,
    label_field: &str,
) -> Result<Vec<(String, String)>> {
    let mut examples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(&line)
            .map_err(|e| Error::format(Some(line_no), format!("invalid JSON: {e}")))?;
        let object = value
            .as_object()
            .ok_or_else(|| Error::format(Some(line_no), "expected a JSON object".to_string()))?;
        let text = match object.get(text_field) {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(_) => {
                return Err(Error::format(
                    Some(line_no),
                    format!("field {text_field:?} is not a string"),
                ))
            }
            None => {
                return Err(Error::format(
                    Some(line_no),
                    format!("missing field {text_field:?}"),
                ))
            }
        };
        let label = match object.get(label_field) {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(v @ serde_json::Value::Number(_)) | Some(v @ serde_json::Value::Bool(_)) => {
                v.to_string()
            }
            Some(_) => {
                return Err(Error::format(
                    Some(line_no),
                    format!("field {label_field:?} is not a scalar"),
                ))
            }
            None => {
                return Err(Error::format(
                    Some(line_no),
                    format!("missing field {label_field:?}"),
                ))
            }
        };
        examples.push((text, label));
    }
    Ok(examples)
}

fn read_delimited<R: Read>(
    reader: R,
    delimiter: u8,
    text_field: &str,
    label_field: &str,
) -> Result<Vec<(String, String)>> {
    let mut csv_reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .from_reader(reader);
    let headers = csv_reader
        .headers()
        .map_err(|e| Error::format(Some(1), format!("unreadable header row: {e}")))?
        .clone();
    let column = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(Some(1), format!("column {name:?} not found in header")))
    };
    let text_col = column(text_field)?;
    let label_col = column(label_field)?;
    let mut examples = Vec::new();
    for record in csv_reader.records() {
        let record = record
            .map_err(|e| Error::format(e.position().map(|p| p.line() as usize), e.to_string()))?;
        let line = record.position().map(|p| p.line() as usize);
        let field = |col: usize, name: &str| -> Result<String> {
            record
                .get(col)
                .map(str::to_string)
                .ok_or_else(|| Error::format(line, format!("missing field {name:?}")))
        };
        examples.push((field(text_col, text_field)?, field(label_col, label_field)?));
    }
    Ok(examples)
}

/// How to carve a validation set out of training data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitPlan {
    pub val_fraction: f64,
    pub seed: u64,
}

impl SplitPlan {
    pub fn new(val_fraction: f64, seed: u64) -> Result<Self> {
        if !(val_fraction > 0.0 && val_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "validation fraction must lie in (0, 1), got {val_fraction}"
            )));
        }
        Ok(Self { val_fraction, seed })
    }
}

impl Default for SplitPlan {
    fn default() -> Self {
        Self {
            val_fraction: 0.25,
            seed: 0,
        }
    }
}

/// Splits `data` into `(train, validation)`: a seeded shuffle, then the
/// first `floor(fraction * n)` examples become the validation set. The
/// two halves partition the input exactly.
pub fn split<T: Clone>(data: &[T], plan: &SplitPlan) -> Result<(Vec<T>, Vec<T>)> {
    SplitPlan::new(plan.val_fraction, plan.seed)?;
    if data.len() < 4 {
        return Err(Error::InvalidInput(format!(
            "need >= 4 examples to split, got {}",
            data.len()
        )));
    }
    let mut indices: Vec<usize> = (0..data.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
    indices.shuffle(&mut rng);
    let val_len = (plan.val_fraction * data.len() as f64).floor() as usize;
    let validation = indices[..val_len]
        .iter()
        .map(|&i| data[i].clone())
        .collect();
    let train = indices[val_len..]
        .iter()
        .map(|&i| data[i].clone())
        .collect();
    Ok((train, validation))
}

/// Samples `n` labeled sequences from the joint law by ancestral
/// sampling: draw the class from the prior, then walk the chain. Lengths
/// are drawn uniformly from `t_range`, whose lower end must leave room
/// for the law's order.
pub fn synth_generate(
    spec: &PooledJointSpec,
    n: usize,
    t_range: RangeInclusive<usize>,
    seed: u64,
) -> Result<Vec<Labeled<Vec<usize>>>> {
    let (t_min, t_max) = (*t_range.start(), *t_range.end());
    if t_min < spec.order() + 1 {
        return Err(Error::InvalidInput(format!(
            "minimum length {t_min} is below order {} + 1",
            spec.order()
        )));
    }
    if t_min > t_max {
        return Err(Error::InvalidInput(format!(
            "empty length range {t_min}..={t_max}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let t = rng.gen_range(t_min..=t_max);
        let label = sample_index(spec.class_prior(), &mut rng);
        let mut sequence = Vec::with_capacity(t);
        for _ in 0..t {
            let row = spec.token_conditional(label, &sequence)?;
            sequence.push(sample_index(row, &mut rng));
        }
        out.push(Labeled { sequence, label });
    }
    Ok(out)
}

fn sample_index<R: Rng>(p: &ProbVector, rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut cumulative = 0.0;
    for (i, &v) in p.values().iter().enumerate() {
        cumulative += v;
        if u < cumulative {
            return i;
        }
    }
    p.len() - 1
}
