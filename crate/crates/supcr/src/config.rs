//! Flat `section.key = value` run configuration.
//!
//! The format is a plain text file: one assignment per line, `#` starts a
//! comment, keys are dotted. Every key must be consumed by the command that
//! reads the file; unknown keys are hard errors (with line numbers) so
//! experiment configs never silently drift.

use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct FlatConfig {
    path: String,
    entries: BTreeMap<String, (String, usize)>,
    consumed: BTreeSet<String>,
}

impl FlatConfig {
    pub fn parse_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::parse_str(&text, &path.display().to_string())
    }

    pub fn parse_str(text: &str, path: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("{path}: line {lineno}: expected `section.key = value`"))
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !key.contains('.') {
                return Err(Error::Config(format!(
                    "{path}: line {lineno}: key `{key}` needs a `section.` prefix"
                )));
            }
            if entries.insert(key.clone(), (value, lineno)).is_some() {
                return Err(Error::Config(format!(
                    "{path}: line {lineno}: duplicate key `{key}`"
                )));
            }
        }
        Ok(Self { path: path.to_string(), entries, consumed: BTreeSet::new() })
    }

    /// Empty config for commands run without a file.
    pub fn empty() -> Self {
        Self { path: "<defaults>".into(), entries: BTreeMap::new(), consumed: BTreeSet::new() }
    }

    fn raw(&mut self, key: &str) -> Option<&(String, usize)> {
        if self.entries.contains_key(key) {
            self.consumed.insert(key.to_string());
        }
        self.entries.get(key)
    }

    fn parse_error(&self, key: &str, lineno: usize, what: &str, value: &str) -> Error {
        Error::Config(format!(
            "{}: line {lineno}: key `{key}`: `{value}` is not a valid {what}",
            self.path
        ))
    }

    pub fn str_or(&mut self, key: &str, default: &str) -> String {
        self.raw(key).map_or_else(|| default.to_string(), |(v, _)| v.clone())
    }

    pub fn require_str(&mut self, key: &str) -> Result<String> {
        match self.raw(key) {
            Some((v, _)) => Ok(v.clone()),
            None => Err(Error::Config(format!("{}: missing required key `{key}`", self.path))),
        }
    }

    pub fn require_path(&mut self, key: &str) -> Result<PathBuf> {
        self.require_str(key).map(PathBuf::from)
    }

    pub fn path_opt(&mut self, key: &str) -> Option<PathBuf> {
        self.raw(key).map(|(v, _)| PathBuf::from(v.clone()))
    }

    pub fn f64_or(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => {
                let (v, line) = (v.clone(), *line);
                v.parse().map_err(|_| self.parse_error(key, line, "float", &v))
            }
        }
    }

    pub fn usize_or(&mut self, key: &str, default: usize) -> Result<usize> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => {
                let (v, line) = (v.clone(), *line);
                v.parse().map_err(|_| self.parse_error(key, line, "integer", &v))
            }
        }
    }

    pub fn u64_or(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => {
                let (v, line) = (v.clone(), *line);
                v.parse().map_err(|_| self.parse_error(key, line, "integer", &v))
            }
        }
    }

    pub fn bool_or(&mut self, key: &str, default: bool) -> Result<bool> {
        match self.raw(key) {
            None => Ok(default),
            Some((v, line)) => {
                let (v, line) = (v.clone(), *line);
                match v.as_str() {
                    "true" => Ok(true),
                    "false" => Ok(false),
                    _ => Err(self.parse_error(key, line, "bool (true/false)", &v)),
                }
            }
        }
    }

    /// Comma-separated positive integers.
    pub fn usize_list_or(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        match self.raw(key) {
            None => Ok(default.to_vec()),
            Some((v, line)) => {
                let (v, line) = (v.clone(), *line);
                v.split(',')
                    .map(|s| s.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| self.parse_error(key, line, "comma-separated integers", &v))
            }
        }
    }

    /// Errors if any key in the file was never consumed.
    pub fn finish(&self) -> Result<()> {
        let unknown: Vec<String> = self
            .entries
            .iter()
            .filter(|(k, _)| !self.consumed.contains(*k))
            .map(|(k, (_, line))| format!("`{k}` (line {line})"))
            .collect();
        if unknown.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "{}: unknown key(s): {}",
                self.path,
                unknown.join(", ")
            )))
        }
    }
}
