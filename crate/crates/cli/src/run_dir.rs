//! A run directory owns every artifact of one command and ends with a
//! `manifest.txt` of `sha256  relative/path` lines sorted by path.

use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const MANIFEST: &str = "manifest.txt";

pub struct RunDir {
    root: PathBuf,
    files: BTreeSet<String>,
}

/// Renders rows as CSV text with a header line.
pub fn csv_text<I, R>(header: &[&str], rows: I) -> String
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory CSV");
    for row in rows {
        w.write_record(row.into_iter().collect::<Vec<_>>()).expect("in-memory CSV");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV")).expect("CSV fields are UTF-8")
}

/// Writes `contents` to `path`, creating parent directories.
pub fn write_file(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

impl RunDir {
    pub fn create(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| CliError::io(&root, e))?;
        Ok(RunDir {
            root,
            files: BTreeSet::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    /// Absolute path for `rel`, with its parent directory created. The file
    /// is registered for the manifest.
    pub fn path(&mut self, rel: &str) -> Result<PathBuf> {
        let path = self.root.join(rel);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        self.files.insert(rel.to_string());
        Ok(path)
    }

    /// Registers a file written by someone else under the root.
    pub fn track(&mut self, rel: impl Into<String>) {
        self.files.insert(rel.into());
    }

    pub fn write_text(&mut self, rel: &str, text: &str) -> Result<()> {
        let path = self.path(rel)?;
        write_file(&path, text.as_bytes())
    }

    pub fn write_json(&mut self, rel: &str, value: &impl Serialize) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::config(e.to_string()))?;
        text.push('\n');
        self.write_text(rel, &text)
    }

    /// Writes the manifest and returns its path.
    pub fn finish(self) -> Result<PathBuf> {
        let mut text = String::new();
        for rel in &self.files {
            let path = self.root.join(rel);
            let bytes = fs::read(&path).map_err(|e| CliError::io(&path, e))?;
            text.push_str(&format!("{}  {}\n", hex::encode(Sha256::digest(&bytes)), rel));
        }
        let path = self.root.join(MANIFEST);
        write_file(&path, text.as_bytes())?;
        Ok(path)
    }
}
