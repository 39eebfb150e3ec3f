//! Named residuals produced by the validation routines.

use std::fmt;

use serde::{Deserialize, Serialize};

/// A list of `(constraint id, residual)` pairs.
///
/// Residuals are absolute violations, so `0.0` means the constraint holds
/// exactly. `max_residual` is kept in sync by [`ConstraintReport::push`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConstraintReport {
    pub entries: Vec<(String, f64)>,
    pub max_residual: f64,
}

impl ConstraintReport {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, id: impl Into<String>, residual: f64) {
        let residual = residual.abs();
        // NaN must never look like a pass.
        if residual.is_nan() || residual > self.max_residual {
            self.max_residual = if residual.is_nan() { f64::INFINITY } else { residual };
        }
        self.entries.push((id.into(), residual));
    }

    /// Appends every entry of `other`, prefixing ids with `prefix/`.
    pub fn extend_prefixed(&mut self, prefix: &str, other: &ConstraintReport) {
        for (id, r) in &other.entries {
            self.push(format!("{prefix}/{id}"), *r);
        }
    }

    pub fn get(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|(k, _)| k == id).map(|(_, r)| *r)
    }

    /// Entries whose id starts with `prefix`.
    pub fn matching<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, f64)> + 'a {
        self.entries
            .iter()
            .filter(move |(k, _)| k.starts_with(prefix))
            .map(|(k, r)| (k.as_str(), *r))
    }

    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual < tol
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.entries.iter().map(|(_, r)| r * r).sum()
    }

    /// The `k` largest entries, largest first.
    pub fn worst(&self, k: usize) -> Vec<(&str, f64)> {
        let mut v: Vec<_> = self.entries.iter().map(|(k, r)| (k.as_str(), *r)).collect();
        v.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        v.truncate(k);
        v
    }
}

impl fmt::Display for ConstraintReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "max_residual = {:e} ({} entries)", self.max_residual, self.entries.len())?;
        for (id, r) in self.worst(10) {
            writeln!(f, "  {id:<32} {r:e}")?;
        }
        Ok(())
    }
}
