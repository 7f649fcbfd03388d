//! Line-oriented `key = value` config files.
//!
//! Format: one `key = value` pair per line, `#` starts a comment, blank lines
//! ignored. Keys may repeat; order is preserved. Lists are comma-separated
//! inside a single value.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

/// Parsed key/value pairs with their source location for error reporting.
#[derive(Debug, Clone)]
pub struct KvFile {
    path: PathBuf,
    entries: Vec<(String, String, usize)>,
}

impl KvFile {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = match raw.find('#') {
                Some(pos) => &raw[..pos],
                None => raw,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Config {
                path: path.to_path_buf(),
                line: idx + 1,
                reason: format!("expected `key = value`, got `{line}`"),
            })?;
            entries.push((key.trim().to_string(), value.trim().to_string(), idx + 1));
        }
        Ok(KvFile {
            path: path.to_path_buf(),
            entries,
        })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Last value for `key`, if present.
    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .rev()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
    }

    /// All values for `key`, in file order.
    pub fn get_all(&self, key: &str) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|(k, _, _)| k == key)
            .map(|(_, v, _)| v.as_str())
            .collect()
    }

    pub fn require(&self, key: &str) -> Result<&str> {
        self.get(key).ok_or_else(|| self.error(key, "missing key"))
    }

    /// Parse the value for `key`, or return `default` when absent.
    pub fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        match self.get(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| self.error(key, &format!("cannot parse `{v}`"))),
        }
    }

    /// Comma-separated list of `T` under `key`; empty when absent.
    pub fn parse_list<T: std::str::FromStr>(&self, key: &str) -> Result<Vec<T>> {
        let Some(v) = self.get(key) else {
            return Ok(Vec::new());
        };
        v.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| self.error(key, &format!("cannot parse list item `{}`", item.trim())))
            })
            .collect()
    }

    pub fn error(&self, key: &str, reason: &str) -> Error {
        let line = self
            .entries
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, _, l)| *l)
            .unwrap_or(0);
        Error::Config {
            path: self.path.clone(),
            line,
            reason: format!("{key}: {reason}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_pairs_comments_and_lists() {
        let text = "\n# header comment\nalpha = 1.5\nnames = a, b ,c # trailing\nalpha=2.5\n";
        let kv = KvFile::parse(Path::new("test.cfg"), text).unwrap();
        assert_eq!(kv.get("alpha"), Some("2.5"));
        assert_eq!(kv.get_all("alpha"), vec!["1.5", "2.5"]);
        let names: Vec<String> = kv.parse_list("names").unwrap();
        assert_eq!(names, vec!["a", "b", "c"]);
        assert_eq!(kv.parse_or("missing", 7usize).unwrap(), 7);
    }

    #[test]
    fn reports_line_numbers() {
        let text = "ok = 1\nbroken line\n";
        let err = KvFile::parse(Path::new("test.cfg"), text).unwrap_err();
        match err {
            Error::Config { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error {other}"),
        }
    }
}
