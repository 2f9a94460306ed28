//! Report and CSV emission with a reproducibility header.

use std::fs;
use std::path::{Path, PathBuf};

use crate::config::RunConfig;
use crate::CliError;

/// Shortest text that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:e}")
}

pub fn nums(xs: &[f64]) -> Vec<String> {
    xs.iter().map(|&x| num(x)).collect()
}

pub struct Artifacts {
    dir: PathBuf,
    header: String,
    written: Vec<PathBuf>,
}

impl Artifacts {
    pub fn new(dir: &Path, config: &RunConfig) -> Result<Self, CliError> {
        fs::create_dir_all(dir)?;
        let mut header = format!("# aqc {}\n# seed = {}\n", config.command, config.seed);
        for line in config.render().lines() {
            header.push_str("# ");
            header.push_str(line);
            header.push('\n');
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            header,
            written: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    fn write(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, format!("{}{body}", self.header))?;
        self.written.push(path);
        Ok(())
    }

    /// Plain-text report `name`.
    pub fn text(&mut self, name: &str, body: &str) -> Result<(), CliError> {
        self.write(name, body)
    }

    pub fn csv(&mut self, name: &str, columns: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut body = columns.join(",");
        body.push('\n');
        for row in rows {
            body.push_str(&row.join(","));
            body.push('\n');
        }
        self.write(name, &body)
    }
}
