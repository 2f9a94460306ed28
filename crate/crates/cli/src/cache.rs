//! Persistent store of cell-problem summaries keyed by everything that determines them.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use aqc_core::envelope::{minimize_cell, EnvelopeQuery};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// What the reports need from an envelope solve. Floats are kept as bit patterns
/// on disk so a cache hit reproduces them exactly.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeSummary {
    pub value: f64,
    pub unrelaxed: f64,
    pub laminate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Stored {
    value: u64,
    unrelaxed: u64,
    laminate: u64,
    converged: bool,
}

impl From<EnvelopeSummary> for Stored {
    fn from(s: EnvelopeSummary) -> Self {
        Self {
            value: s.value.to_bits(),
            unrelaxed: s.unrelaxed.to_bits(),
            laminate: s.laminate.to_bits(),
            converged: s.converged,
        }
    }
}

impl From<&Stored> for EnvelopeSummary {
    fn from(s: &Stored) -> Self {
        Self {
            value: f64::from_bits(s.value),
            unrelaxed: f64::from_bits(s.unrelaxed),
            laminate: f64::from_bits(s.laminate),
            converged: s.converged,
        }
    }
}

fn bits(v: &[f64]) -> String {
    v.iter().map(|x| format!("{:016x}", x.to_bits())).collect::<Vec<_>>().join(",")
}

/// `(operator, density, x0 to 1e-9, u0, ξ, solver fingerprint)`; the fingerprint covers the grid ladder.
pub fn cache_key(operator: &str, query: &EnvelopeQuery) -> String {
    let x0: Vec<String> = query.x0().iter().map(|x| format!("{}", (x * 1e9).round() as i64)).collect();
    format!(
        "{operator}|{}|{}|{}|{}|{}",
        query.density.label(),
        x0.join(","),
        bits(&query.u0),
        bits(&query.xi),
        query.options.fingerprint()
    )
}

#[derive(Debug, Default)]
pub struct EnvelopeCache {
    path: Option<PathBuf>,
    entries: BTreeMap<String, Stored>,
    pub hits: usize,
    pub misses: usize,
}

impl EnvelopeCache {
    /// Cache backed by `path`; a missing file starts empty.
    pub fn open(path: Option<&Path>) -> Result<Self, CliError> {
        let mut cache = Self {
            path: path.map(Path::to_path_buf),
            ..Default::default()
        };
        if let Some(p) = path.filter(|p| p.exists()) {
            let text = fs::read_to_string(p)?;
            cache.entries = serde_json::from_str(&text)
                .map_err(|e| CliError::Io(std::io::Error::other(format!("corrupt cache {}: {e}", p.display()))))?;
        }
        Ok(cache)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get_or_solve(&mut self, operator: &str, query: &EnvelopeQuery) -> Result<EnvelopeSummary, CliError> {
        let key = cache_key(operator, query);
        if let Some(s) = self.entries.get(&key) {
            self.hits += 1;
            return Ok(s.into());
        }
        self.misses += 1;
        let r = minimize_cell(query)?;
        let summary = EnvelopeSummary {
            value: r.value,
            unrelaxed: r.unrelaxed,
            laminate: r.laminate.value,
            converged: r.converged,
        };
        self.entries.insert(key, summary.into());
        Ok(summary)
    }

    pub fn save(&self) -> Result<(), CliError> {
        if let Some(p) = &self.path {
            if let Some(dir) = p.parent() {
                fs::create_dir_all(dir)?;
            }
            let text = serde_json::to_string_pretty(&self.entries).map_err(|e| CliError::Io(std::io::Error::other(e)))?;
            fs::write(p, text)?;
        }
        Ok(())
    }
}
