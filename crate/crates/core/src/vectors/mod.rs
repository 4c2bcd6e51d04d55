//! Dense vector tables and per-modality dimensionality reduction.

mod autoencoder;

pub use autoencoder::{
    encode_all, init_autoencoder, loss, loss_and_gradients, train_autoencoder, AutoencoderConfig,
    AutoencoderGradients, AutoencoderParams, LossTrace,
};

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Token → vector map with a uniform dimensionality. Rows keep insertion
/// order, which is also the order they are written in.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorTable {
    dim: usize,
    tokens: Vec<String>,
    data: Vec<f64>,
    index: HashMap<String, usize>,
}

impl VectorTable {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            tokens: Vec::new(),
            data: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn from_rows<I, S>(dim: usize, rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, Vec<f64>)>,
        S: Into<String>,
    {
        let mut table = Self::new(dim);
        for (token, v) in rows {
            table.insert(token, &v)?;
        }
        Ok(table)
    }

    pub fn insert(&mut self, token: impl Into<String>, vector: &[f64]) -> Result<()> {
        let token = token.into();
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if vector.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidToken {
                token,
                message: "non-finite component".into(),
            });
        }
        if token.is_empty() || token.chars().any(char::is_whitespace) {
            return Err(Error::InvalidToken {
                token,
                message: "tokens must be non-empty and contain no whitespace".into(),
            });
        }
        if self.index.contains_key(&token) {
            return Err(Error::DuplicateToken(token));
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(vector);
        Ok(())
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

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index.get(token).map(|&i| self.row(i))
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.as_str(), self.row(i)))
    }

    /// Rows as an `n × dim` matrix.
    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.len(), self.dim, &self.data)
    }

    /// Rows as owned vectors, in table order.
    pub fn to_points(&self) -> Vec<Vec<f64>> {
        (0..self.len()).map(|i| self.row(i).to_vec()).collect()
    }

    /// Serializes in the textual interchange format: a `<count> <dim>` header
    /// followed by `<token> <c1> ... <c_dim>` rows. Components use Rust's
    /// shortest round-trip decimal form, so output is byte-stable.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity(self.data.len() * 12);
        let _ = writeln!(out, "{} {}", self.len(), self.dim);
        for (token, v) in self.iter() {
            out.push_str(token);
            for c in v {
                let _ = write!(out, " {c}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, expected_dim: Option<usize>) -> Result<Self> {
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (header_no, header) = lines.next().ok_or(Error::Empty("vector table header"))?;
        let header_err = || Error::Parse {
            line: header_no + 1,
            message: "header must be `<count> <dim>`".into(),
        };
        let mut fields = header.split_whitespace();
        let count: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .ok_or_else(header_err)?;
        let dim: usize = fields
            .next()
            .and_then(|f| f.parse().ok())
            .filter(|&d| d > 0)
            .ok_or_else(header_err)?;
        if fields.next().is_some() {
            return Err(header_err());
        }
        if let Some(expected) = expected_dim.filter(|&e| e != dim) {
            return Err(Error::DimensionMismatch {
                expected,
                found: dim,
            });
        }

        let mut table = Self::new(dim);
        let mut row = Vec::with_capacity(dim);
        for (i, line) in lines {
            let line_no = i + 1;
            let mut fields = line.split_whitespace();
            let token = fields.next().unwrap_or_default();
            row.clear();
            for f in fields {
                let c: f64 = f.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("non-numeric component `{f}`"),
                })?;
                row.push(c);
            }
            if row.len() != dim {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("expected {dim} components, found {}", row.len()),
                });
            }
            table.insert(token, &row).map_err(|e| match e {
                Error::DuplicateToken(_) => e,
                other => Error::Parse {
                    line: line_no,
                    message: other.to_string(),
                },
            })?;
        }
        if table.len() != count {
            return Err(Error::Parse {
                line: header_no + 1,
                message: format!(
                    "row count mismatch: header declares {count}, found {}",
                    table.len()
                ),
            });
        }
        Ok(table)
    }
}

pub fn load_vectors(path: &Path, expected_dim: Option<usize>) -> Result<VectorTable> {
    VectorTable::parse(&crate::io::read_to_string(path)?, expected_dim)
}

pub fn write_vectors(table: &VectorTable, path: &Path) -> Result<()> {
    crate::io::write_atomic(path, table.render().as_bytes())
}

/// Union of the reduced text and image tables. Dimensions must agree unless
/// one side is empty, and token sets must be disjoint.
pub fn stack_reduced(text: &VectorTable, image: &VectorTable) -> Result<VectorTable> {
    if image.is_empty() {
        return Ok(text.clone());
    }
    if text.is_empty() {
        return Ok(image.clone());
    }
    if text.dim() != image.dim() {
        return Err(Error::DimensionMismatch {
            expected: text.dim(),
            found: image.dim(),
        });
    }
    let mut out = text.clone();
    for (token, v) in image.iter() {
        out.insert(token, v)?;
    }
    Ok(out)
}
