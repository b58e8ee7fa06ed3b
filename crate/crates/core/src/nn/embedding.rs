//! Embedding tables and the plain-text pretrained vector format.

use rand::Rng;

use super::linalg::Matrix;
use crate::error::Error;

/// Dense lookup table: one row per token.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    pub weights: Matrix,
}

impl EmbeddingTable {
    pub fn zeros(rows: usize, dim: usize) -> EmbeddingTable {
        EmbeddingTable {
            weights: Matrix::zeros(rows, dim),
        }
    }

    /// Uniform init in [-sqrt(3/d), sqrt(3/d)].
    pub fn init<R: Rng>(rows: usize, dim: usize, rng: &mut R) -> EmbeddingTable {
        let mut t = EmbeddingTable::zeros(rows, dim);
        let bound = (3.0 / dim as f64).sqrt();
        for v in t.weights.as_mut_slice() {
            *v = rng.gen_range(-bound..=bound);
        }
        t
    }

    pub fn rows(&self) -> usize {
        self.weights.rows()
    }

    pub fn dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn lookup(&self, index: usize) -> &[f64] {
        assert!(index < self.rows(), "embedding index {index} out of range");
        self.weights.row(index)
    }
}

/// Parses the text embedding format: first line `<count> <dim>`, then
/// `<token> <f1> ... <fdim>` per line.
pub fn parse_embedding_text(text: &str) -> Result<(Vec<(String, Vec<f64>)>, usize), Error> {
    let mut lines = text.lines().enumerate();
    let (_, header) = match lines.next() {
        Some(h) => h,
        None => return Ok((Vec::new(), 0)),
    };
    let mut parts = header.split_whitespace();
    let parse_usize = |s: Option<&str>| -> Result<usize, Error> {
        s.and_then(|v| v.parse().ok()).ok_or_else(|| Error::Embedding {
            line: 1,
            message: format!("bad header {header:?}"),
        })
    };
    let count = parse_usize(parts.next())?;
    let dim = parse_usize(parts.next())?;
    let mut out = Vec::with_capacity(count);
    for (i, line) in lines {
        let line_no = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split_whitespace();
        let token = fields.next().unwrap().to_string();
        let values: Result<Vec<f64>, _> = fields.map(|f| f.parse::<f64>()).collect();
        let values = values.map_err(|e| Error::Embedding {
            line: line_no,
            message: format!("bad number: {e}"),
        })?;
        if values.len() != dim {
            return Err(Error::Embedding {
                line: line_no,
                message: format!("expected {dim} components, found {}", values.len()),
            });
        }
        out.push((token, values));
    }
    if out.len() != count {
        return Err(Error::Embedding {
            line: 1,
            message: format!("header declares {count} vectors, file holds {}", out.len()),
        });
    }
    Ok((out, dim))
}
