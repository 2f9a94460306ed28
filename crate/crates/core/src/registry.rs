//! Name-keyed registries of strategy constructors.
//!
//! Labels have the form `name` or `name(p1, p2, ...)` with numeric parameters.

use std::collections::BTreeMap;

use crate::error::{Error, Result};

/// A parsed catalog label.
#[derive(Debug, Clone, PartialEq)]
pub struct Label {
    pub name: String,
    pub params: Vec<f64>,
}

impl Label {
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        let Some(open) = text.find('(') else {
            if text.is_empty() || text.contains(')') {
                return Err(Error::Config(format!("malformed label `{text}`")));
            }
            return Ok(Self {
                name: text.to_string(),
                params: Vec::new(),
            });
        };
        if !text.ends_with(')') {
            return Err(Error::Config(format!("malformed label `{text}`")));
        }
        let name = text[..open].trim().to_string();
        let inner = &text[open + 1..text.len() - 1];
        let params = inner
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| Error::Config(format!("bad parameter `{s}` in label `{text}`")))
            })
            .collect::<Result<Vec<_>>>()?;
        if name.is_empty() {
            return Err(Error::Config(format!("malformed label `{text}`")));
        }
        Ok(Self { name, params })
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        if self.params.is_empty() {
            write!(f, "{}", self.name)
        } else {
            let p: Vec<String> = self.params.iter().map(|p| p.to_string()).collect();
            write!(f, "{}({})", self.name, p.join(","))
        }
    }
}

pub type Constructor<T> = fn(&[f64]) -> Result<Box<T>>;

struct Entry<T: ?Sized> {
    summary: &'static str,
    build: Constructor<T>,
}

/// Registry of boxed trait objects constructed from a label.
pub struct Registry<T: ?Sized> {
    family: &'static str,
    entries: BTreeMap<&'static str, Entry<T>>,
}

impl<T: ?Sized> Registry<T> {
    pub fn new(family: &'static str) -> Self {
        Self {
            family,
            entries: BTreeMap::new(),
        }
    }

    pub fn register(&mut self, name: &'static str, summary: &'static str, build: Constructor<T>) {
        self.entries.insert(name, Entry { summary, build });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn describe(&self) -> Vec<(&'static str, &'static str)> {
        self.entries.iter().map(|(k, e)| (*k, e.summary)).collect()
    }

    pub fn contains(&self, label: &str) -> bool {
        Label::parse(label)
            .map(|l| self.entries.contains_key(l.name.as_str()))
            .unwrap_or(false)
    }

    pub fn build(&self, label: &str) -> Result<Box<T>> {
        let parsed = Label::parse(label)?;
        let entry = self
            .entries
            .get(parsed.name.as_str())
            .ok_or_else(|| Error::UnknownLabel {
                family: self.family,
                label: label.to_string(),
                known: self.names().collect::<Vec<_>>().join(", "),
            })?;
        (entry.build)(&parsed.params)
    }
}

/// Fetch an optional parameter, falling back to `default`.
pub(crate) fn param(params: &[f64], index: usize, default: f64) -> f64 {
    params.get(index).copied().unwrap_or(default)
}

pub(crate) fn expect_at_most(params: &[f64], n: usize, what: &str) -> Result<()> {
    if params.len() > n {
        return Err(Error::Config(format!(
            "{what} takes at most {n} parameter(s), got {}",
            params.len()
        )));
    }
    Ok(())
}
