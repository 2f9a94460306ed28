//! `[section]` / `key = value` run configuration.
//!
//! Every key has a schema entry with a default (or none, for required keys).
//! Parsing collects all problems with their line numbers instead of stopping at
//! the first one. Overrides from the command line are applied after the file and
//! reported as `--set` lines.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;

use aqc_core::envelope::{Axis, SolverOptions};
use aqc_core::pseudodiff::cutoff;
use aqc_core::registry::Label;
use aqc_core::relaxation::CubeCutoff;
use aqc_core::{densities, symbols};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Int,
    Float,
    OptFloat,
    IntList,
    FloatList,
    /// `;`-separated points, each a `,`-separated vector.
    Points,
    /// `;`-separated `lo:hi:count` axes.
    Axes,
    Operator,
    Density,
    Cutoff,
    CutoffList,
    Text,
}

struct Key {
    section: &'static str,
    name: &'static str,
    default: Option<&'static str>,
    kind: Kind,
}

const fn key(section: &'static str, name: &'static str, default: Option<&'static str>, kind: Kind) -> Key {
    Key {
        section,
        name,
        default,
        kind,
    }
}

pub const COMMANDS: [&str; 6] = ["check-rank", "envelope", "relax", "verify-prop22", "decompose", "oracle-compare"];

#[rustfmt::skip]
const SCHEMA: &[Key] = &[
    key("run", "command", None, Kind::Text),
    key("run", "seed", None, Kind::Int),
    key("operator", "label", Some("div2d"), Kind::Operator),
    key("density", "label", Some("dwell"), Kind::Density),
    key("solver", "ladder", Some("8, 16, 32"), Kind::IntList),
    key("solver", "random_starts", Some("4"), Kind::Int),
    key("solver", "random_amplitude", Some("0.5"), Kind::Float),
    key("solver", "max_iterations", Some("2000"), Kind::Int),
    key("solver", "relative_tolerance", Some("1e-8"), Kind::Float),
    key("solver", "laminate_amplitude", Some("4"), Kind::Float),
    key("solver", "laminate_points", Some("41"), Kind::Int),
    key("check-rank", "x_per_axis", Some("5"), Kind::Int),
    key("check-rank", "x_random", Some("8"), Kind::Int),
    key("check-rank", "directions", Some("32"), Kind::Int),
    key("check-rank", "random_directions", Some("16"), Kind::Int),
    key("check-rank", "gap", Some("1e6"), Kind::Float),
    key("envelope", "x0", Some("0, 0"), Kind::FloatList),
    key("envelope", "u0", Some(""), Kind::FloatList),
    key("envelope", "points", Some(""), Kind::Points),
    key("envelope", "slice", Some(""), Kind::Axes),
    key("relax", "grid", Some("64"), Kind::Int),
    key("relax", "r", Some("0.5, 0.25"), Kind::FloatList),
    key("relax", "m", Some("2, 4, 8"), Kind::IntList),
    key("relax", "cutoff", Some("full"), Kind::Text),
    key("relax", "u", Some("zero"), Kind::Text),
    key("relax", "v", Some("zero"), Kind::Text),
    key("relax", "residual_exponent", Some(""), Kind::OptFloat),
    key("relax", "tol_lower", Some("1e-3"), Kind::Float),
    key("relax", "tol_relative", Some("0.05"), Kind::Float),
    key("relax", "tol_absolute", Some("5e-3"), Kind::Float),
    key("relax", "residual_r", Some(""), Kind::FloatList),
    key("relax", "residual_m", Some("32"), Kind::Int),
    key("relax", "residual_grid", Some("1024"), Kind::Int),
    key("relax", "residual_mu", Some("0.2"), Kind::Float),
    key("relax", "residual_direction", Some("1, 1"), Kind::IntList),
    key("relax", "residual_slack", Some("0.5"), Kind::Float),
    key("prop22", "cutoffs", Some("one, bump"), Kind::CutoffList),
    key("prop22", "exponents", Some("1.5, 2, 3"), Kind::FloatList),
    key("prop22", "ensemble_size", Some("8"), Kind::Int),
    key("prop22", "ladder", Some("8, 16, 32"), Kind::IntList),
    key("prop22", "growth_limit", Some("2"), Kind::Float),
    key("decompose", "grid", Some("128"), Kind::Int),
    key("decompose", "members", Some("4, 8, 16, 32"), Kind::IntList),
    key("decompose", "q", Some("2"), Kind::Float),
    key("decompose", "cutoff", Some("one"), Kind::Cutoff),
    key("decompose", "tail_factor", Some("8"), Kind::Float),
    key("decompose", "min_tail_reduction", Some("10"), Kind::Float),
    key("oracle", "points", Some("-1.5:1.5:3; -1.5:1.5:3"), Kind::Axes),
    key("oracle", "range", Some("2"), Kind::Float),
    key("oracle", "resolution", Some("81"), Kind::Int),
    key("oracle", "lower_tolerance", Some("1e-3"), Kind::Float),
    key("oracle", "upper_tolerance", Some("1e-8"), Kind::Float),
    key("oracle", "match_tolerance", Some(""), Kind::OptFloat),
    key("output", "dir", Some("aqc-out"), Kind::Text),
    key("output", "cache", Some("envelope_cache.json"), Kind::Text),
];

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigIssue {
    /// 1-based line in the file, or `None` for command-line overrides and missing keys.
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for ConfigIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Resolved configuration: every schema key has a value.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    values: BTreeMap<(String, String), String>,
    pub command: String,
    pub seed: u64,
}

impl RunConfig {
    fn raw(&self, section: &str, name: &str) -> &str {
        &self.values[&(section.to_string(), name.to_string())]
    }

    pub fn text(&self, section: &str, name: &str) -> String {
        self.raw(section, name).to_string()
    }

    pub fn int(&self, section: &str, name: &str) -> usize {
        parse_int(self.raw(section, name)).expect("validated") as usize
    }

    pub fn float(&self, section: &str, name: &str) -> f64 {
        parse_float(self.raw(section, name)).expect("validated")
    }

    pub fn opt_float(&self, section: &str, name: &str) -> Option<f64> {
        let raw = self.raw(section, name);
        (!raw.is_empty()).then(|| parse_float(raw).expect("validated"))
    }

    pub fn floats(&self, section: &str, name: &str) -> Vec<f64> {
        parse_list(self.raw(section, name), parse_float).expect("validated")
    }

    pub fn ints(&self, section: &str, name: &str) -> Vec<i64> {
        parse_list(self.raw(section, name), parse_int).expect("validated")
    }

    pub fn sizes(&self, section: &str, name: &str) -> Vec<usize> {
        self.ints(section, name).into_iter().map(|v| v as usize).collect()
    }

    pub fn points(&self, section: &str, name: &str) -> Vec<Vec<f64>> {
        parse_points(self.raw(section, name)).expect("validated")
    }

    pub fn axes(&self, section: &str, name: &str) -> Vec<Axis> {
        parse_axes(self.raw(section, name)).expect("validated")
    }

    pub fn labels(&self, section: &str, name: &str) -> Vec<String> {
        split_labels(self.raw(section, name))
    }

    pub fn solver(&self) -> SolverOptions {
        SolverOptions {
            ladder: self.sizes("solver", "ladder"),
            random_starts: self.int("solver", "random_starts"),
            random_amplitude: self.float("solver", "random_amplitude"),
            max_iterations: self.int("solver", "max_iterations"),
            relative_tolerance: self.float("solver", "relative_tolerance"),
            laminate_amplitude: self.float("solver", "laminate_amplitude"),
            laminate_points: self.int("solver", "laminate_points"),
            seed: self.seed,
            ..Default::default()
        }
    }

    pub fn relax_cutoff(&self) -> CubeCutoff {
        parse_cube_cutoff(self.raw("relax", "cutoff")).expect("validated")
    }

    pub fn output_dir(&self) -> PathBuf {
        PathBuf::from(self.raw("output", "dir"))
    }

    /// Cache file, or `None` when caching is disabled.
    pub fn cache_path(&self) -> Option<PathBuf> {
        match self.raw("output", "cache") {
            "" | "none" => None,
            p => Some(self.output_dir().join(p)),
        }
    }

    /// Canonical text of the resolved configuration, one `key = value` per line.
    ///
    /// The output directory is omitted so that artifacts do not depend on where they are written.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut section = "";
        for k in SCHEMA {
            if k.section == "output" && k.name == "dir" {
                continue;
            }
            if k.section != section {
                out.push_str(&format!("[{}]\n", k.section));
                section = k.section;
            }
            out.push_str(&format!("{} = {}\n", k.name, self.raw(k.section, k.name)));
        }
        out
    }
}

fn parse_int(s: &str) -> Option<i64> {
    s.trim().parse().ok()
}

fn parse_float(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_list<T>(s: &str, item: fn(&str) -> Option<T>) -> Option<Vec<T>> {
    if s.trim().is_empty() {
        return Some(Vec::new());
    }
    s.split(',').map(item).collect()
}

fn parse_points(s: &str) -> Option<Vec<Vec<f64>>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_list(p, parse_float))
        .collect()
}

fn parse_axes(s: &str) -> Option<Vec<Axis>> {
    s.split(';')
        .filter(|p| !p.trim().is_empty())
        .map(|p| {
            let parts: Vec<&str> = p.split(':').collect();
            let [lo, hi, n] = parts[..] else { return None };
            let (lo, hi, n) = (parse_float(lo)?, parse_float(hi)?, parse_int(n)?);
            (lo <= hi && n >= 1 && (n > 1 || lo == hi)).then(|| Axis::new(lo, hi, n as usize))
        })
        .collect()
}

/// Splits a comma-separated list of labels, keeping commas inside parentheses.
fn split_labels(s: &str) -> Vec<String> {
    let mut out = Vec::new();
    let (mut depth, mut cur) = (0i32, String::new());
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(cur.trim().to_string());
                cur.clear();
                continue;
            }
            _ => {}
        }
        cur.push(ch);
    }
    if !cur.trim().is_empty() {
        out.push(cur.trim().to_string());
    }
    out
}

pub fn parse_cube_cutoff(s: &str) -> Result<CubeCutoff, String> {
    let label = Label::parse(s).map_err(|e| e.to_string())?;
    match (label.name.as_str(), label.params.as_slice()) {
        ("full", []) => Ok(CubeCutoff::Full),
        ("plateau", []) => Ok(CubeCutoff::Plateau { mu: 0.05 }),
        ("plateau", [mu]) if *mu > 0.0 && *mu < 1.0 => Ok(CubeCutoff::Plateau { mu: *mu }),
        _ => Err(format!("unknown cube cutoff `{s}` (known: full, plateau(mu) with 0 < mu < 1)")),
    }
}

fn check_value(kind: Kind, value: &str) -> Result<(), String> {
    let bad = |what: &str| Err(format!("`{value}` is not {what}"));
    match kind {
        Kind::Int => match parse_int(value) {
            Some(v) if v >= 0 => Ok(()),
            _ => bad("a nonnegative integer"),
        },
        Kind::Float => parse_float(value).map(|_| ()).ok_or(()).or_else(|_| bad("a finite number")),
        Kind::OptFloat if value.is_empty() => Ok(()),
        Kind::OptFloat => parse_float(value).map(|_| ()).ok_or(()).or_else(|_| bad("a finite number")),
        Kind::IntList => parse_list(value, parse_int).map(|_| ()).ok_or(()).or_else(|_| bad("a list of integers")),
        Kind::FloatList => parse_list(value, parse_float).map(|_| ()).ok_or(()).or_else(|_| bad("a list of numbers")),
        Kind::Points => parse_points(value).map(|_| ()).ok_or(()).or_else(|_| bad("a `;`-separated list of points")),
        Kind::Axes => parse_axes(value).map(|_| ()).ok_or(()).or_else(|_| bad("a `;`-separated list of lo:hi:count axes")),
        Kind::Operator => symbols::catalog::registry().build(value).map(|_| ()).map_err(|e| e.to_string()),
        Kind::Density => densities::registry().build(value).map(|_| ()).map_err(|e| e.to_string()),
        Kind::Cutoff => cutoff::registry().build(value).map(|_| ()).map_err(|e| e.to_string()),
        Kind::CutoffList => {
            let labels = split_labels(value);
            if labels.is_empty() {
                return bad("a nonempty list of cutoffs");
            }
            labels
                .iter()
                .try_for_each(|l| cutoff::registry().build(l).map(|_| ()).map_err(|e| e.to_string()))
        }
        Kind::Text => Ok(()),
    }
}

/// Parses `text` and the `section.key=value` overrides into a validated configuration.
pub fn parse_config(text: &str, overrides: &[String]) -> Result<RunConfig, Vec<ConfigIssue>> {
    let mut issues = Vec::new();
    let mut given: BTreeMap<(String, String), (String, Option<usize>)> = BTreeMap::new();
    let mut section: Option<String> = None;
    let mut accept = |section: &str, name: &str, value: &str, line: Option<usize>, issues: &mut Vec<ConfigIssue>| {
        if SCHEMA.iter().any(|k| k.section == section && k.name == name) {
            given.insert((section.to_string(), name.to_string()), (value.to_string(), line));
        } else if SCHEMA.iter().any(|k| k.section == section) {
            issues.push(ConfigIssue {
                line,
                message: format!("unknown key `{name}` in section [{section}]"),
            });
        } else {
            issues.push(ConfigIssue {
                line,
                message: format!("unknown section [{section}]"),
            });
        }
    };
    for (i, raw) in text.lines().enumerate() {
        let line = Some(i + 1);
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        if let Some(rest) = content.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) => {
                    let name = name.trim();
                    if !SCHEMA.iter().any(|k| k.section == name) {
                        issues.push(ConfigIssue {
                            line,
                            message: format!("unknown section [{name}]"),
                        });
                    }
                    section = Some(name.to_string());
                }
                None => issues.push(ConfigIssue {
                    line,
                    message: format!("malformed section header `{content}`"),
                }),
            }
            continue;
        }
        let Some((k, v)) = content.split_once('=') else {
            issues.push(ConfigIssue {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
            continue;
        };
        let Some(sec) = section.as_deref() else {
            issues.push(ConfigIssue {
                line,
                message: format!("key `{}` appears before any section", k.trim()),
            });
            continue;
        };
        if !SCHEMA.iter().any(|s| s.section == sec) {
            // already reported at the section header
            continue;
        }
        accept(sec, k.trim(), v.trim(), line, &mut issues);
    }
    for o in overrides {
        let parsed = o
            .split_once('=')
            .and_then(|(k, v)| k.trim().split_once('.').map(|(s, n)| (s.trim(), n.trim(), v.trim())));
        match parsed {
            Some((s, n, v)) => accept(s, n, v, None, &mut issues),
            None => issues.push(ConfigIssue {
                line: None,
                message: format!("override `{o}` must look like section.key=value"),
            }),
        }
    }
    let mut values = BTreeMap::new();
    for k in SCHEMA {
        let id = (k.section.to_string(), k.name.to_string());
        match (given.get(&id), k.default) {
            (Some((v, line)), _) => {
                if let Err(message) = check_value(k.kind, v) {
                    issues.push(ConfigIssue {
                        line: *line,
                        message: format!("[{}] {}: {message}", k.section, k.name),
                    });
                }
                values.insert(id, v.clone());
            }
            (None, Some(d)) => {
                values.insert(id, d.to_string());
            }
            (None, None) => issues.push(ConfigIssue {
                line: None,
                message: format!("missing required key `{}` in section [{}]", k.name, k.section),
            }),
        }
    }
    let cutoff_key = ("relax".to_string(), "cutoff".to_string());
    if let Some(v) = values.get(&cutoff_key) {
        if let Err(message) = parse_cube_cutoff(v) {
            issues.push(ConfigIssue {
                line: given.get(&cutoff_key).and_then(|g| g.1),
                message: format!("[relax] cutoff: {message}"),
            });
        }
    }
    let command = values.get(&("run".to_string(), "command".to_string())).cloned();
    if let Some(c) = &command {
        if !COMMANDS.contains(&c.as_str()) {
            issues.push(ConfigIssue {
                line: given.get(&("run".to_string(), "command".to_string())).and_then(|g| g.1),
                message: format!("unknown command `{c}` (known: {})", COMMANDS.join(", ")),
            });
        }
    }
    if !issues.is_empty() {
        issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
        return Err(issues);
    }
    let seed = parse_int(&values[&("run".to_string(), "seed".to_string())]).expect("validated") as u64;
    Ok(RunConfig {
        command: command.expect("validated"),
        seed,
        values,
    })
}
