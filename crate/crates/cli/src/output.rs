//! Artifact writers and the machine-readable failure record.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum FailureKind {
    Config,
    Numerical,
    Io,
}

/// Printed as JSON on stderr (and to `error.json` when possible) before a
/// nonzero exit.
#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub kind: FailureKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub field: Option<String>,
    pub message: String,
}

impl Failure {
    pub fn config(field: Option<String>, message: impl Into<String>) -> Self {
        Failure { kind: FailureKind::Config, field, message: message.into() }
    }

    pub fn exit_code(&self) -> i32 {
        match self.kind {
            FailureKind::Config => 2,
            FailureKind::Numerical | FailureKind::Io => 1,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": self }).to_string()
    }
}

impl From<deltalab::Error> for Failure {
    fn from(e: deltalab::Error) -> Self {
        Failure { kind: FailureKind::Numerical, field: None, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure { kind: FailureKind::Io, field: None, message: e.to_string() }
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure { kind: FailureKind::Io, field: None, message: e.to_string() }
    }
}

/// `(realization_id, eigenvalue, multiplicity)` rows.
pub fn write_eigenvalues(path: &Path, rows: &[(u64, f64, usize)]) -> std::io::Result<()> {
    let mut s = String::from("realization_id,eigenvalue,multiplicity\n");
    for (r, e, m) in rows {
        writeln!(s, "{r},{e:e},{m}").expect("string write");
    }
    fs::write(path, s)
}

/// `(realization_id, x)` rows.
pub fn write_rescaled(path: &Path, rows: &[(u64, f64)]) -> std::io::Result<()> {
    let mut s = String::from("realization_id,x\n");
    for (r, x) in rows {
        writeln!(s, "{r},{x:e}").expect("string write");
    }
    fs::write(path, s)
}

/// Whitespace-separated two-column file with a `#` header line.
pub fn write_dat(dir: &Path, name: &str, header: (&str, &str), rows: impl IntoIterator<Item = (f64, f64)>) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut s = format!("# {} {}\n", header.0, header.1);
    for (x, y) in rows {
        writeln!(s, "{x:e} {y:e}").expect("string write");
    }
    fs::write(dir.join(name), s)
}

/// Groups a sorted list of energies repeated by multiplicity.
pub fn group_equal(energies: &[f64]) -> Vec<(f64, usize)> {
    let mut out: Vec<(f64, usize)> = Vec::new();
    for &e in energies {
        match out.last_mut() {
            Some((v, m)) if *v == e => *m += 1,
            _ => out.push((e, 1)),
        }
    }
    out
}

/// Normalized histogram on `bins` equal bins over `[0, hi)`: bin centres and densities.
pub fn density_histogram(values: &[f64], hi: f64, bins: usize) -> Vec<(f64, f64)> {
    let width = hi / bins as f64;
    let mut h = vec![0usize; bins];
    for &v in values {
        if v >= 0.0 && v < hi {
            h[((v / width) as usize).min(bins - 1)] += 1;
        }
    }
    let total = values.len().max(1) as f64;
    h.iter().enumerate().map(|(i, &c)| ((i as f64 + 0.5) * width, c as f64 / (total * width))).collect()
}

/// Empirical frequencies of `0..=max(counts)`.
pub fn count_histogram(counts: &[usize]) -> Vec<(f64, f64)> {
    let top = counts.iter().copied().max().unwrap_or(0);
    let mut h = vec![0usize; top + 1];
    for &c in counts {
        h[c] += 1;
    }
    let total = counts.len().max(1) as f64;
    h.iter().enumerate().map(|(k, &c)| (k as f64, c as f64 / total)).collect()
}
