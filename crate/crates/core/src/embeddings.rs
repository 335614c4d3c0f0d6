//! Tokenization and pretrained word-vector lookup: everything needed to
//! turn raw text into an [`EmbeddedSequence`].

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::types::EmbeddedSequence;

/// Token-to-vector map with a fixed dimension. Insertion order is
/// preserved so that serialization round-trips byte for byte.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    dim: usize,
    tokens: Vec<String>,
    vectors: Vec<f64>,
    index: HashMap<String, usize>,
}

impl EmbeddingTable {
    pub fn with_dim(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput(
                "embedding dimension must be >= 1".into(),
            ));
        }
        Ok(Self {
            dim,
            tokens: Vec::new(),
            vectors: Vec::new(),
            index: HashMap::new(),
        })
    }

    /// Adds a token vector. Returns `false` without modifying the table
    /// when the token is already present (first occurrence wins).
    pub fn insert(&mut self, token: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::Shape {
                what: "embedding vector",
                expected: self.dim,
                actual: vector.len(),
            });
        }
        if let Some(bad) = vector.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "non-finite component {bad} in vector for {token:?}"
            )));
        }
        if self.index.contains_key(token) {
            return Ok(false);
        }
        self.index.insert(token.to_string(), self.tokens.len());
        self.tokens.push(token.to_string());
        self.vectors.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.vectors[i * self.dim..(i + 1) * self.dim])
    }

    /// Tokens in insertion order.
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.tokens.iter().map(String::as_str)
    }
}

/// Loads a word2vec-style text file: an optional `count dim` header line,
/// then one token per line followed by its components. Duplicate tokens
/// keep their first vector. When `expected_dim` is absent the dimension
/// is inferred from the first row.
pub fn load_embeddings(
    path: impl AsRef<Path>,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable> {
    let file = File::open(path.as_ref())?;
    read_embeddings(BufReader::new(file), expected_dim)
}

/// [`load_embeddings`] over any reader; line numbers in errors are
/// 1-based.
pub fn read_embeddings<R: BufRead>(
    reader: R,
    expected_dim: Option<usize>,
) -> Result<EmbeddingTable> {
    let mut dim = expected_dim;
    let mut table: Option<EmbeddingTable> = None;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        // A first line of exactly two integers is the conventional
        // "count dim" header.
        if idx == 0 && fields.len() == 2 {
            if let (Ok(_count), Ok(header_dim)) =
                (fields[0].parse::<usize>(), fields[1].parse::<usize>())
            {
                if let Some(expected) = dim {
                    if header_dim != expected {
                        return Err(Error::format(
                            Some(line_no),
                            format!("header dimension {header_dim}, expected {expected}"),
                        ));
                    }
                }
                dim = Some(header_dim);
                continue;
            }
        }
        if fields.len() < 2 {
            return Err(Error::format(
                Some(line_no),
                "expected a token followed by vector components".to_string(),
            ));
        }
        let token = fields[0];
        let components = &fields[1..];
        let row_dim = *dim.get_or_insert(components.len());
        if components.len() != row_dim {
            return Err(Error::format(
                Some(line_no),
                format!(
                    "token {token:?} has {} components, expected {row_dim}",
                    components.len()
                ),
            ));
        }
        let vector = components
            .iter()
            .map(|c| {
                c.parse::<f64>().map_err(|_| {
                    Error::format(Some(line_no), format!("unparseable component {c:?}"))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        if table.is_none() {
            table = Some(EmbeddingTable::with_dim(row_dim)?);
        }
        let t = table.as_mut().expect("just initialized");
        t.insert(token, &vector)?;
    }
    table.ok_or_else(|| Error::EmptyData("embedding file contains no vectors".into()))
}

/// Writes a table back in the same text format, with a `count dim`
/// header. Component formatting round-trips `f64` values exactly.
pub fn write_embeddings(table: &EmbeddingTable, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    let mut w = BufWriter::new(file);
    writeln!(w, "{} {}", table.len(), table.dim())?;
    for token in table.tokens() {
        write!(w, "{token}")?;
        for c in table.get(token).expect("listed token is present") {
            write!(w, " {c}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Tokenizer behavior switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub split_punctuation: bool,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        Self {
            lowercase: true,
            split_punctuation: true,
        }
    }
}

/// Rule-based tokenizer: splits on whitespace, optionally lowercases, and
/// optionally separates every non-alphanumeric character into its own
/// token.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let text = if config.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    let mut tokens = Vec::new();
    for chunk in text.split_whitespace() {
        if !config.split_punctuation {
            tokens.push(chunk.to_string());
            continue;
        }
        let mut word = String::new();
        for ch in chunk.chars() {
            if ch.is_alphanumeric() {
                word.push(ch);
            } else {
                if !word.is_empty() {
                    tokens.push(std::mem::take(&mut word));
                }
                tokens.push(ch.to_string());
            }
        }
        if !word.is_empty() {
            tokens.push(word);
        }
    }
    tokens
}

/// What to do with a token absent from the table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OovPolicy {
    /// Drop the token. Zero rows would bias pooled sums, so this is the
    /// default.
    #[default]
    Skip,
    /// Keep the position, embedded as the zero vector.
    Zero,
}

/// Embeds tokens via table lookup. If every token is dropped the result
/// is a single zero vector, so the output always has `T >= 1`.
pub fn embed(
    tokens: &[String],
    table: &EmbeddingTable,
    policy: OovPolicy,
) -> Result<EmbeddedSequence> {
    if table.is_empty() {
        return Err(Error::EmptyData("embedding table is empty".into()));
    }
    let mut rows: Vec<Vec<f64>> = Vec::with_capacity(tokens.len());
    for token in tokens {
        match (table.get(token), policy) {
            (Some(v), _) => rows.push(v.to_vec()),
            (None, OovPolicy::Zero) => rows.push(vec![0.0; table.dim()]),
            (None, OovPolicy::Skip) => {}
        }
    }
    if rows.is_empty() {
        rows.push(vec![0.0; table.dim()]);
    }
    EmbeddedSequence::from_rows(rows)
}
