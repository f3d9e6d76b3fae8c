//! System file format.
//!
//! A system file is one JSON document:
//!
//! ```json
//! {
//!   "n": 2,
//!   "constraints": [
//!     { "name": "shifted_disk", "A": [[1, 0], [0, 1]], "linear": [2, 0], "c": -3 }
//!   ]
//! }
//! ```
//!
//! Each constraint reads `xᵀAx + linearᵀx + c < 0` (`≤` with
//! `"strict": false`). `linear` is the full coefficient of x, so the entry
//! above is `x₁² + x₂² + 2x₁ − 3 < 0`, the disk of radius 2 around (−1, 0).
//! Internally the vector is halved into `b`. `A` may be given in full or as
//! its upper triangle (row i holding columns i..n).

use std::fmt;

use aggrahull_core::{Matrix, QuadraticFunction, QuadraticSystem};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemFile {
    pub n: usize,
    pub constraints: Vec<ConstraintSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(rename = "A")]
    pub a: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub linear: Option<Vec<f64>>,
    #[serde(default)]
    pub c: f64,
    #[serde(default = "strict_default")]
    pub strict: bool,
}

fn strict_default() -> bool {
    true
}

/// Input rejection with the JSON path of the offending field and, for
/// syntax errors, its line and column.
#[derive(Debug, Clone, PartialEq)]
pub struct InputError {
    pub path: String,
    pub line: Option<usize>,
    pub column: Option<usize>,
    pub message: String,
}

impl InputError {
    fn at(path: impl Into<String>, message: impl Into<String>) -> Self {
        Self { path: path.into(), line: None, column: None, message: message.into() }
    }
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(l), Some(c)) = (self.line, self.column) {
            write!(f, "line {l}, column {c}: ")?;
        }
        if !self.path.is_empty() && self.path != "." {
            write!(f, "{}: ", self.path)?;
        }
        f.write_str(&self.message)
    }
}

impl std::error::Error for InputError {}

pub fn parse(text: &str) -> Result<SystemFile, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let file: SystemFile = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        InputError {
            path,
            line: Some(inner.line()),
            column: Some(inner.column()),
            message: inner.to_string().split(" at line").next().unwrap_or_default().to_string(),
        }
    })?;
    file.validate()?;
    Ok(file)
}

impl SystemFile {
    fn validate(&self) -> Result<(), InputError> {
        if self.n == 0 {
            return Err(InputError::at("n", "dimension must be at least 1"));
        }
        if self.constraints.is_empty() {
            return Err(InputError::at("constraints", "at least one constraint is required"));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            c.matrix(self.n).map_err(|m| InputError::at(format!("constraints[{i}].A"), m))?;
            if let Some(l) = &c.linear {
                if l.len() != self.n {
                    return Err(InputError::at(
                        format!("constraints[{i}].linear"),
                        format!("expected {} entries, found {}", self.n, l.len()),
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn to_system(&self) -> Result<QuadraticSystem, InputError> {
        self.validate()?;
        let mut fs = Vec::with_capacity(self.constraints.len());
        let mut labels = Vec::with_capacity(self.constraints.len());
        for (i, c) in self.constraints.iter().enumerate() {
            let a = c.matrix(self.n).map_err(|m| InputError::at(format!("constraints[{i}].A"), m))?;
            let linear = c.linear.clone().unwrap_or_else(|| vec![0.0; self.n]);
            let f = QuadraticFunction::with_linear(a, &linear, c.c, c.strict)
                .map_err(|e| InputError::at(format!("constraints[{i}]"), e.to_string()))?;
            fs.push(f);
            labels.push(c.name.clone().unwrap_or_else(|| format!("f{}", i + 1)));
        }
        QuadraticSystem::with_labels(fs, labels).map_err(|e| InputError::at("constraints", e.to_string()))
    }

    pub fn from_system(sys: &QuadraticSystem) -> Self {
        let n = sys.n();
        let constraints = sys
            .constraints()
            .iter()
            .zip(sys.labels())
            .map(|(f, name)| ConstraintSpec {
                name: Some(name.clone()),
                a: (0..n).map(|i| f.a().row(i).to_vec()).collect(),
                linear: Some(f.linear()),
                c: f.c(),
                strict: f.is_strict(),
            })
            .collect();
        Self { n, constraints }
    }
}

impl ConstraintSpec {
    /// Full or upper-triangular rows, mirrored into a symmetric matrix.
    fn matrix(&self, n: usize) -> Result<Matrix, String> {
        if self.a.len() != n {
            return Err(format!("expected {n} rows, found {}", self.a.len()));
        }
        let full = self.a.iter().all(|r| r.len() == n);
        let upper = self.a.iter().enumerate().all(|(i, r)| r.len() == n - i);
        if !full && !upper {
            let (i, r) = self.a.iter().enumerate().find(|(i, r)| r.len() != n && r.len() != n - i).unwrap();
            return Err(format!("row {i} has {} entries, expected {n} (full) or {} (upper triangle)", r.len(), n - i));
        }
        if let Some((i, j)) = self
            .a
            .iter()
            .enumerate()
            .find_map(|(i, r)| r.iter().position(|v| !v.is_finite()).map(|j| (i, j)))
        {
            return Err(format!("entry ({i}, {j}) is not finite"));
        }
        if full && n > 1 {
            Ok(Matrix::from_fn(n, n, |i, j| self.a[i][j]))
        } else {
            Ok(Matrix::from_fn(n, n, |i, j| {
                let (r, c) = if i <= j { (i, j) } else { (j, i) };
                self.a[r][c - r]
            }))
        }
    }
}
