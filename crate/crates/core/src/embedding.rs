//! Reading and writing plain-text embedding files.
//!
//! Two layouts are understood: GloVe text (one `token c1 ... cD` row per
//! line) and word2vec / fastText `.vec` text, which is the same thing with a
//! leading `count dim` header. Rows are assumed to be in frequency order, so
//! keeping the first `max_words` rows keeps the most frequent words.

use std::collections::HashMap;
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use log::warn;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    GloveText,
    W2vText,
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Format::GloveText => f.write_str("glove_text"),
            Format::W2vText => f.write_str("w2v_text"),
        }
    }
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "glove_text" | "glove" => Ok(Format::GloveText),
            "w2v_text" | "w2v" | "vec" => Ok(Format::W2vText),
            other => Err(Error::invalid(format!("unknown embedding format `{other}`"))),
        }
    }
}

/// A vocabulary in frequency order together with an `N x D` coordinate matrix.
///
/// Rows are stored contiguously; `row(i)` is the vector of `words()[i]`.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSpace {
    words: Vec<String>,
    data: Vec<f64>,
    dim: usize,
    index: HashMap<String, usize>,
}

impl EmbeddingSpace {
    /// Builds a space from parallel token and row lists.
    ///
    /// Tokens must be unique and every row must have the same, positive,
    /// finite length.
    pub fn new(words: Vec<String>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyInput);
        }
        if words.len() != rows.len() {
            return Err(Error::invalid(format!(
                "{} tokens but {} rows",
                words.len(),
                rows.len()
            )));
        }
        let dim = rows[0].len();
        if dim == 0 {
            return Err(Error::invalid("vectors must have at least one coordinate"));
        }
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::DimensionMismatch {
                    line: i + 1,
                    expected: dim,
                    found: row.len(),
                });
            }
            if row.iter().any(|x| !x.is_finite()) {
                return Err(Error::Parse {
                    line: i + 1,
                    msg: "non-finite coordinate".into(),
                });
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(words, data, dim)
    }

    /// Builds a space from a row-major coordinate buffer.
    pub fn from_flat(words: Vec<String>, data: Vec<f64>, dim: usize) -> Result<Self> {
        if words.is_empty() {
            return Err(Error::EmptyInput);
        }
        if dim == 0 || data.len() != words.len() * dim {
            return Err(Error::invalid(format!(
                "buffer of {} values does not hold {} rows of dimension {dim}",
                data.len(),
                words.len()
            )));
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate token `{w}`")));
            }
        }
        Ok(EmbeddingSpace {
            words,
            data,
            dim,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word(&self, i: usize) -> &str {
        &self.words[i]
    }

    pub fn lookup(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    /// Row-major coordinate buffer.
    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Copy with every nonzero row scaled to unit length. Zero rows stay zero.
    pub fn normalized(&self) -> Self {
        let mut data = self.data.clone();
        for row in data.chunks_exact_mut(self.dim) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
        EmbeddingSpace {
            words: self.words.clone(),
            data,
            dim: self.dim,
            index: self.index.clone(),
        }
    }

    /// Writes the space as GloVe text. Coordinates use the shortest decimal
    /// form that parses back to the same `f64`.
    pub fn write_glove<W: Write>(&self, mut out: W) -> Result<()> {
        for (word, row) in self.words.iter().zip(self.rows()) {
            out.write_all(word.as_bytes())?;
            for x in row {
                write!(out, " {x}")?;
            }
            out.write_all(b"\n")?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Guesses the file layout from its first line.
pub fn detect_format(first_line: &str) -> Result<Format> {
    let line = first_line.trim_end_matches(['\n', '\r']);
    if line.trim().is_empty() {
        return Err(Error::MalformedInput("empty first line".into()));
    }
    let fields: Vec<&str> = line.split_ascii_whitespace().collect();
    let positive_int = |s: &str| s.parse::<u64>().map(|v| v > 0).unwrap_or(false);
    if fields.len() == 2 && fields.iter().all(|f| positive_int(f)) {
        Ok(Format::W2vText)
    } else {
        Ok(Format::GloveText)
    }
}

/// Parses an embedding stream, keeping the first `max_words` distinct tokens.
///
/// With no format hint the layout is detected from the first line. Reading
/// stops as soon as `max_words` rows have been collected. A repeated token
/// keeps its first vector and does not use up a slot.
pub fn parse_embeddings<R: BufRead>(
    mut source: R,
    format: Option<Format>,
    max_words: usize,
) -> Result<EmbeddingSpace> {
    if max_words == 0 {
        return Err(Error::invalid("max_words must be positive"));
    }

    let mut line = String::new();
    let mut line_no = 0usize;
    let mut read_line = |buf: &mut String, line_no: &mut usize| -> Result<bool> {
        buf.clear();
        let n = source.read_line(buf)?;
        *line_no += 1;
        Ok(n > 0)
    };

    if !read_line(&mut line, &mut line_no)? {
        return Err(Error::EmptyInput);
    }
    let format = match format {
        Some(f) => f,
        None => detect_format(&line)?,
    };

    let mut dim = None;
    let mut pending_first = true;
    if format == Format::W2vText {
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        let header_dim = match fields.as_slice() {
            [_, d] => d.parse::<usize>().ok().filter(|d| *d > 0),
            _ => None,
        };
        match header_dim {
            Some(d) => dim = Some(d),
            None => {
                return Err(Error::Parse {
                    line: 1,
                    msg: format!("expected `count dim` header, found `{}`", line.trim_end()),
                })
            }
        }
        pending_first = false;
    }

    let mut words: Vec<String> = Vec::new();
    let mut data: Vec<f64> = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    let mut duplicates = 0usize;

    loop {
        if !pending_first && !read_line(&mut line, &mut line_no)? {
            break;
        }
        pending_first = false;

        let row = line.trim_end();
        if row.is_empty() {
            continue;
        }
        let (token, rest) = match row.split_once(' ') {
            Some((t, r)) => (t, r),
            None => (row, ""),
        };
        if token.is_empty() {
            return Err(Error::Parse {
                line: line_no,
                msg: "row starts with a separator".into(),
            });
        }

        let start = data.len();
        for field in rest.split_ascii_whitespace() {
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                msg: format!("`{field}` is not a number"),
            })?;
            if !value.is_finite() {
                data.truncate(start);
                return Err(Error::Parse {
                    line: line_no,
                    msg: format!("non-finite coordinate `{field}`"),
                });
            }
            data.push(value);
        }
        let found = data.len() - start;
        let expected = *dim.get_or_insert(found);
        if found != expected || found == 0 {
            return Err(Error::DimensionMismatch {
                line: line_no,
                expected,
                found,
            });
        }

        if seen.contains_key(token) {
            data.truncate(start);
            duplicates += 1;
            continue;
        }
        seen.insert(token.to_owned(), words.len());
        words.push(token.to_owned());
        if words.len() == max_words {
            break;
        }
    }

    if duplicates > 0 {
        warn!("dropped {duplicates} duplicate token row(s); first occurrence kept");
    }
    if words.is_empty() {
        return Err(Error::EmptyInput);
    }
    let dim = dim.unwrap_or_default();
    Ok(EmbeddingSpace {
        words,
        data,
        dim,
        index: seen,
    })
}
