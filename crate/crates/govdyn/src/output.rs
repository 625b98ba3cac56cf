//! In-memory output sets, committed to disk only once a command has succeeded.

use std::io::Write;
use std::path::{Path, PathBuf};

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Shortest text that parses back to the same double.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:?}")
}

/// Files produced by a command, kept in memory until [`OutputSet::commit`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputSet {
    files: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_csv<I, R, S>(&mut self, name: &str, header: &[&str], rows: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = R>,
        R: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(header).map_err(CliError::runtime)?;
        for r in rows {
            w.write_record(r).map_err(CliError::runtime)?;
        }
        let bytes = w.into_inner().map_err(CliError::runtime)?;
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(CliError::runtime)?;
        bytes.push(b'\n');
        self.files.push((name.to_string(), bytes));
        Ok(())
    }

    pub fn add_text(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text.into_bytes()));
    }

    pub fn get(&self, name: &str) -> Option<&[u8]> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    pub fn get_str(&self, name: &str) -> Option<&str> {
        self.get(name).and_then(|b| std::str::from_utf8(b).ok())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.iter().map(|(n, _)| n.as_str())
    }

    /// Writes every file through a temporary file and an atomic rename.
    pub fn commit(&self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        let mut written = Vec::new();
        for (name, bytes) in &self.files {
            let target = dir.join(name);
            let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(CliError::runtime)?;
            tmp.write_all(bytes).map_err(CliError::runtime)?;
            tmp.as_file().sync_all().map_err(CliError::runtime)?;
            tmp.persist(&target).map_err(|e| CliError::Runtime(format!("{}: {e}", target.display())))?;
            written.push(target);
        }
        Ok(written)
    }
}

/// Record of one command invocation, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub seed: u64,
    pub threads: Option<usize>,
    pub model: String,
    pub params: govdyn_core::GovernanceParams,
    pub started: DateTime<Utc>,
    pub finished: DateTime<Utc>,
    pub outputs: Vec<String>,
    pub engine_version: String,
}

pub const MANIFEST_NAME: &str = "manifest.json";

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_text_round_trips() {
        for x in [0.1, 1.0 / 3.0, 1e-300, -2.5e17, 0.0625] {
            assert_eq!(fmt_f64(x).parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(1.0), "1.0");
    }

    #[test]
    fn csv_uses_lf() {
        let mut o = OutputSet::new();
        o.add_csv("a.csv", &["x", "y"], [["1", "2"], ["3", "4"]]).unwrap();
        assert_eq!(o.get_str("a.csv").unwrap(), "x,y\n1,2\n3,4\n");
    }

    #[test]
    fn commit_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = OutputSet::new();
        o.add_json("a.json", &[1, 2]).unwrap();
        let paths = o.commit(&dir.path().join("sub")).unwrap();
        assert_eq!(std::fs::read_to_string(&paths[0]).unwrap(), "[\n  1,\n  2\n]\n");
        assert_eq!(std::fs::read_dir(dir.path().join("sub")).unwrap().count(), 1);
    }
}
