//! Random assignments (doubly stochastic matrices) and discrete assignments.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::preference::{AgentId, ObjectId};
use crate::rational::{ParseRationalError, Rational};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignmentError {
    #[error("matrix is not square: row {row} has {len} entries, expected {n}")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("matrix is empty")]
    Empty,
    #[error("entry ({row}, {col}) = {value} is negative")]
    Negative { row: usize, col: usize, value: Rational },
    #[error("entry ({row}, {col}) = {value} exceeds 1")]
    ExceedsOne { row: usize, col: usize, value: Rational },
    #[error("row {row} sums to {sum}, not 1")]
    RowSum { row: usize, sum: Rational },
    #[error("column {col} sums to {sum}, not 1")]
    ColumnSum { col: usize, sum: Rational },
    #[error("not a permutation: object {0} assigned twice or out of range")]
    NotPermutation(usize),
    #[error("line {line}: {source}")]
    Parse { line: usize, source: ParseRationalError },
    #[error("invalid JSON matrix: {0}")]
    Json(String),
}

/// An `n×n` doubly stochastic matrix; entry `(i, j)` is the probability that
/// agent `i` receives object `j`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize)]
#[serde(transparent)]
pub struct Assignment {
    entries: Vec<Vec<Rational>>,
}

impl Assignment {
    pub fn n(&self) -> usize {
        self.entries.len()
    }

    pub fn rows(&self) -> &[Vec<Rational>] {
        &self.entries
    }

    pub fn row(&self, agent: AgentId) -> &[Rational] {
        &self.entries[agent.0]
    }

    pub fn get(&self, agent: AgentId, object: ObjectId) -> &Rational {
        &self.entries[agent.0][object.0]
    }

    pub fn into_rows(self) -> Vec<Vec<Rational>> {
        self.entries
    }

    pub fn identity(n: usize) -> Self {
        DiscreteAssignment::identity(n).to_assignment()
    }

    /// `Σ weight_k · M_k`. Callers are responsible for the weights summing to 1;
    /// the result is validated.
    pub fn convex_combination(
        parts: &[(Rational, DiscreteAssignment)],
    ) -> Result<Self, AssignmentError> {
        let n = parts.first().map(|(_, m)| m.n()).ok_or(AssignmentError::Empty)?;
        let mut entries = vec![vec![Rational::zero(); n]; n];
        for (weight, matching) in parts {
            for (agent, &object) in matching.objects().iter().enumerate() {
                entries[agent][object] += weight;
            }
        }
        validate_assignment(entries)
    }

    /// Restricts to the leading `k×k` block (no validation of the block).
    pub fn leading_block(&self, k: usize) -> Vec<Vec<Rational>> {
        self.entries[..k].iter().map(|r| r[..k].to_vec()).collect()
    }

    /// Reorders rows: new row `k` is old row `order[k]`.
    pub fn permute_rows(&self, order: &[usize]) -> Self {
        Assignment { entries: order.iter().map(|&i| self.entries[i].clone()).collect() }
    }

    /// Moves column `o` to `mapping[o]`.
    pub fn permute_columns(&self, mapping: &[usize]) -> Self {
        let n = self.n();
        let entries = self
            .entries
            .iter()
            .map(|row| {
                let mut out = vec![Rational::zero(); n];
                for (o, v) in row.iter().enumerate() {
                    out[mapping[o]] = v.clone();
                }
                out
            })
            .collect();
        Assignment { entries }
    }

    /// `Some` when every entry is 0 or 1.
    pub fn as_discrete(&self) -> Option<DiscreteAssignment> {
        let mut objects = Vec::with_capacity(self.n());
        for row in &self.entries {
            if row.iter().any(|v| !v.is_zero() && !v.is_one()) {
                return None;
            }
            objects.push(row.iter().position(Rational::is_one)?);
        }
        DiscreteAssignment::new(objects).ok()
    }

    /// Whitespace-separated `num/den` tokens, one row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for row in &self.entries {
            let tokens: Vec<String> = row.iter().map(Rational::to_string).collect();
            writeln!(out, "{}", tokens.join(" ")).expect("string write");
        }
        out
    }
}

impl<'de> Deserialize<'de> for Assignment {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let entries = Vec::<Vec<Rational>>::deserialize(deserializer)?;
        validate_assignment(entries).map_err(serde::de::Error::custom)
    }
}

/// Checks bounds and exact unit row and column sums.
pub fn validate_assignment(entries: Vec<Vec<Rational>>) -> Result<Assignment, AssignmentError> {
    let n = entries.len();
    if n == 0 {
        return Err(AssignmentError::Empty);
    }
    for (row, r) in entries.iter().enumerate() {
        if r.len() != n {
            return Err(AssignmentError::NotSquare { row, len: r.len(), n });
        }
    }
    for (row, r) in entries.iter().enumerate() {
        for (col, value) in r.iter().enumerate() {
            if value.is_negative() {
                return Err(AssignmentError::Negative { row, col, value: value.clone() });
            }
            if *value > 1 {
                return Err(AssignmentError::ExceedsOne { row, col, value: value.clone() });
            }
        }
    }
    for (row, r) in entries.iter().enumerate() {
        let sum: Rational = r.iter().sum();
        if !sum.is_one() {
            return Err(AssignmentError::RowSum { row, sum });
        }
    }
    for col in 0..n {
        let sum: Rational = entries.iter().map(|r| &r[col]).sum();
        if !sum.is_one() {
            return Err(AssignmentError::ColumnSum { col, sum });
        }
    }
    Ok(Assignment { entries })
}

/// Reads the text matrix format: rows of rational tokens (`1/3`, `0.99`, `0`),
/// separated by whitespace or commas; `#` starts a comment.
pub fn parse_matrix_text(text: &str) -> Result<Vec<Vec<Rational>>, AssignmentError> {
    let mut rows = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let content = raw.split('#').next().unwrap_or("");
        let tokens: Vec<&str> =
            content.split(|c: char| c.is_whitespace() || c == ',').filter(|t| !t.is_empty()).collect();
        if tokens.is_empty() {
            continue;
        }
        let row = tokens
            .iter()
            .map(|t| t.parse::<Rational>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| AssignmentError::Parse { line: idx + 1, source })?;
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a JSON matrix: either a bare array of rows or `{"matrix": [...]}`.
pub fn parse_matrix_json(text: &str) -> Result<Vec<Vec<Rational>>, AssignmentError> {
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Shape {
        Bare(Vec<Vec<Rational>>),
        Wrapped { matrix: Vec<Vec<Rational>> },
    }
    match serde_json::from_str::<Shape>(text).map_err(|e| AssignmentError::Json(e.to_string()))? {
        Shape::Bare(rows) | Shape::Wrapped { matrix: rows } => Ok(rows),
    }
}

pub fn parse_assignment_any(text: &str) -> Result<Assignment, AssignmentError> {
    let trimmed = text.trim_start();
    let rows = if trimmed.starts_with('[') || trimmed.starts_with('{') {
        parse_matrix_json(text)?
    } else {
        parse_matrix_text(text)?
    };
    validate_assignment(rows)
}

/// A perfect matching: agent `i` receives object `objects[i]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DiscreteAssignment {
    objects: Vec<usize>,
}

impl DiscreteAssignment {
    pub fn new(objects: Vec<usize>) -> Result<Self, AssignmentError> {
        let n = objects.len();
        let mut used = vec![false; n];
        for &o in &objects {
            if o >= n || used[o] {
                return Err(AssignmentError::NotPermutation(o));
            }
            used[o] = true;
        }
        Ok(DiscreteAssignment { objects })
    }

    pub fn identity(n: usize) -> Self {
        DiscreteAssignment { objects: (0..n).collect() }
    }

    pub fn n(&self) -> usize {
        self.objects.len()
    }

    pub fn objects(&self) -> &[usize] {
        &self.objects
    }

    pub fn object_of(&self, agent: AgentId) -> ObjectId {
        ObjectId(self.objects[agent.0])
    }

    pub fn to_assignment(&self) -> Assignment {
        let n = self.n();
        let entries = self
            .objects
            .iter()
            .map(|&o| (0..n).map(|j| if j == o { Rational::one() } else { Rational::zero() }).collect())
            .collect();
        Assignment { entries }
    }
}
