use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

/// Files written into one output directory, in creation order.
#[derive(Debug, Clone)]
pub struct Artifacts {
    dir: PathBuf,
    files: Vec<String>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Self {
        Self { dir: dir.to_path_buf(), files: Vec::new() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn files(&self) -> &[String] {
        &self.files
    }

    pub fn push(&mut self, name: impl Into<String>) {
        self.files.push(name.into());
    }

    pub fn extend(&mut self, prefix: &str, other: &Artifacts) {
        self.files.extend(other.files.iter().map(|f| format!("{prefix}/{f}")));
    }

    pub fn extend_flat(&mut self, other: &Artifacts) {
        self.files.extend(other.files.iter().cloned());
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        self.push(name);
        Ok(())
    }
}

pub fn write_csv(art: &mut Artifacts, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
    let path = art.path(name);
    let mut w = csv::Writer::from_path(&path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    w.write_record(header).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    for r in rows {
        w.write_record(&r).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| CliError::io(&path, e))?;
    art.push(name);
    Ok(())
}

pub fn write_json<T: Serialize + ?Sized>(art: &mut Artifacts, name: &str, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::Io(format!("{name}: {e}")))?;
    text.push('\n');
    art.write_text(name, &text)
}
