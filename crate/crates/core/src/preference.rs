//! Pairwise preference matrices.
//!
//! A [`PreferenceMatrix`] holds `P(i, j)`, the probability that arm `i` wins a
//! duel against arm `j`. Arms are 0-indexed here; everything user facing
//! (files, CLI, reports) shifts to 1-indexed.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Absolute tolerance used for the complement and diagonal checks.
pub const MATRIX_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreferenceError {
    #[error("matrix is not square (row {row} has {len} entries, expected {expected})")]
    NotSquare { row: usize, len: usize, expected: usize },
    #[error("need at least 2 arms, got {0}")]
    TooFewArms(usize),
    #[error("entry ({0}, {1}) is outside [0, 1]")]
    EntryOutOfRange(usize, usize),
    #[error("entries ({0}, {1}) and ({1}, {0}) do not sum to 1")]
    ComplementViolation(usize, usize),
    #[error("diagonal entry ({0}, {0}) is not 1/2")]
    DiagonalViolation(usize),
    #[error("utility {0} is not strictly positive")]
    NonPositiveUtility(usize),
    #[error("unknown instance name '{0}' (expected trivial, easy, medium or hard)")]
    UnknownInstance(String),
    #[error("named instances need K >= 3, got {0}")]
    KTooSmall(usize),
    #[error("arm index {index} out of range for {k} arms")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("malformed matrix file at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

/// Validated `K x K` preference matrix stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct PreferenceMatrix {
    k: usize,
    entries: Vec<f64>,
}

impl PreferenceMatrix {
    /// Validates a raw table. Nothing is repaired: the first violated
    /// constraint is reported.
    pub fn validate(raw: &[Vec<f64>]) -> Result<Self, PreferenceError> {
        let k = raw.len();
        for (row, r) in raw.iter().enumerate() {
            if r.len() != k {
                return Err(PreferenceError::NotSquare { row, len: r.len(), expected: k });
            }
        }
        if k < 2 {
            return Err(PreferenceError::TooFewArms(k));
        }
        for (i, r) in raw.iter().enumerate() {
            for (j, &v) in r.iter().enumerate() {
                if !v.is_finite() || !(0.0..=1.0).contains(&v) {
                    return Err(PreferenceError::EntryOutOfRange(i, j));
                }
            }
        }
        for i in 0..k {
            if (raw[i][i] - 0.5).abs() > MATRIX_TOLERANCE {
                return Err(PreferenceError::DiagonalViolation(i));
            }
        }
        for i in 0..k {
            for j in (i + 1)..k {
                if (raw[i][j] + raw[j][i] - 1.0).abs() > MATRIX_TOLERANCE {
                    return Err(PreferenceError::ComplementViolation(i, j));
                }
            }
        }
        Ok(Self { k, entries: raw.iter().flatten().copied().collect() })
    }

    /// Plackett-Luce (Bradley-Terry) matrix `P(i, j) = θ_i / (θ_i + θ_j)`.
    pub fn plackett_luce(theta: &[f64]) -> Result<Self, PreferenceError> {
        if theta.len() < 2 {
            return Err(PreferenceError::TooFewArms(theta.len()));
        }
        if let Some(i) = theta.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(PreferenceError::NonPositiveUtility(i));
        }
        let k = theta.len();
        let mut entries = vec![0.5; k * k];
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    entries[i * k + j] = theta[i] / (theta[i] + theta[j]);
                }
            }
        }
        Ok(Self { k, entries })
    }

    pub fn num_arms(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.k + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.k..(i + 1) * self.k]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.k).map(<[f64]>::to_vec).collect()
    }

    /// The arm beating every other arm with probability strictly above 1/2.
    pub fn condorcet_winner(&self) -> Option<usize> {
        (0..self.k).find(|&i| (0..self.k).all(|j| j == i || self.get(i, j) > 0.5))
    }

    /// Gaps `P(reference, k) - 1/2` for every arm `k`.
    pub fn gaps(&self, reference: usize) -> Result<GapVector, PreferenceError> {
        if reference >= self.k {
            return Err(PreferenceError::IndexOutOfRange { index: reference, k: self.k });
        }
        let gaps = self.row(reference).iter().map(|&p| p - 0.5).collect();
        Ok(GapVector { reference, gaps })
    }

    /// Parses the plain CSV format: one row per line, comma separated, no
    /// header. Blank lines are ignored.
    pub fn from_csv_str(text: &str) -> Result<Self, PreferenceError> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record.map_err(|e| PreferenceError::Parse {
                line: e.position().map_or(0, |p| p.line() as usize),
                message: e.to_string(),
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let row = record
                .iter()
                .map(|cell| {
                    cell.parse::<f64>()
                        .map_err(|e| PreferenceError::Parse { line, message: format!("'{cell}': {e}") })
                })
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
        }
        Self::validate(&rows)
    }

    /// CSV text using the shortest representation that round-trips exactly.
    pub fn to_csv_string(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        for row in self.entries.chunks(self.k) {
            writer
                .write_record(row.iter().map(|v| format!("{v:?}")))
                .expect("writing to memory cannot fail");
        }
        String::from_utf8(writer.into_inner().expect("flush to memory")).expect("ASCII output")
    }

    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self, PreferenceError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| io_error(path, e))?;
        Self::from_csv_str(&text)
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<(), PreferenceError> {
        let path = path.as_ref();
        fs::write(path, self.to_csv_string()).map_err(|e| io_error(path, e))
    }
}

fn io_error(path: &Path, e: std::io::Error) -> PreferenceError {
    PreferenceError::Io { path: path.display().to_string(), message: e.to_string() }
}

impl TryFrom<Vec<Vec<f64>>> for PreferenceMatrix {
    type Error = PreferenceError;

    fn try_from(raw: Vec<Vec<f64>>) -> Result<Self, Self::Error> {
        Self::validate(&raw)
    }
}

impl From<PreferenceMatrix> for Vec<Vec<f64>> {
    fn from(m: PreferenceMatrix) -> Self {
        m.to_rows()
    }
}

/// Suboptimality gaps relative to a reference arm.
#[derive(Debug, Clone, PartialEq)]
pub struct GapVector {
    pub reference: usize,
    pub gaps: Vec<f64>,
}

impl GapVector {
    /// Smallest gap over arms other than the reference.
    pub fn min_gap(&self) -> f64 {
        self.gaps
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != self.reference)
            .map(|(_, &g)| g)
            .fold(f64::INFINITY, f64::min)
    }

    /// Gaps of the non-reference arms in ascending order.
    pub fn sorted_others(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self
            .gaps
            .iter()
            .enumerate()
            .filter(|&(k, _)| k != self.reference)
            .map(|(_, &g)| g)
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// The four synthetic utility profiles used in the experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InstanceName {
    Trivial,
    Easy,
    Medium,
    Hard,
}

impl InstanceName {
    pub const ALL: [InstanceName; 4] =
        [InstanceName::Trivial, InstanceName::Easy, InstanceName::Medium, InstanceName::Hard];

    /// Utility vector for `k` arms. Group boundaries use floor division.
    pub fn utilities(self, k: usize) -> Result<Vec<f64>, PreferenceError> {
        if k < 3 {
            return Err(PreferenceError::KTooSmall(k));
        }
        let theta = match self {
            InstanceName::Trivial => (0..k).map(|i| if i == 0 { 1.0 } else { 0.5 }).collect(),
            InstanceName::Easy => (0..k).map(|i| if i < k / 2 { 1.0 } else { 0.5 }).collect(),
            InstanceName::Medium => (0..k)
                .map(|i| {
                    if i < k / 3 {
                        1.0
                    } else if i < 2 * k / 3 {
                        0.7
                    } else {
                        0.4
                    }
                })
                .collect(),
            InstanceName::Hard => (0..k).map(|i| 1.0 - i as f64 / k as f64).collect(),
        };
        Ok(theta)
    }

    pub fn matrix(self, k: usize) -> Result<PreferenceMatrix, PreferenceError> {
        PreferenceMatrix::plackett_luce(&self.utilities(k)?)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            InstanceName::Trivial => "trivial",
            InstanceName::Easy => "easy",
            InstanceName::Medium => "medium",
            InstanceName::Hard => "hard",
        }
    }
}

impl fmt::Display for InstanceName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InstanceName {
    type Err = PreferenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "trivial" => Ok(InstanceName::Trivial),
            "easy" => Ok(InstanceName::Easy),
            "medium" => Ok(InstanceName::Medium),
            "hard" => Ok(InstanceName::Hard),
            _ => Err(PreferenceError::UnknownInstance(s.to_string())),
        }
    }
}

/// Builds a named instance from its string name.
pub fn named_instance(name: &str, k: usize) -> Result<PreferenceMatrix, PreferenceError> {
    name.parse::<InstanceName>()?.matrix(k)
}
