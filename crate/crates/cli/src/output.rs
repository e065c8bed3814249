//! Atomic file output and run manifests.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{CliError, CliResult};

/// Collects the files and warnings of one run.
#[derive(Debug)]
pub struct OutputDir {
    root: PathBuf,
    written: Vec<PathBuf>,
    warnings: Vec<String>,
    notes: Vec<String>,
}

impl OutputDir {
    pub fn create(root: &Path) -> CliResult<Self> {
        std::fs::create_dir_all(root).map_err(|e| CliError::io(root, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            written: Vec::new(),
            warnings: Vec::new(),
            notes: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `name` through a temporary file in the same directory, then
    /// renames it into place.
    pub fn write_with<F>(&mut self, name: &str, fill: F) -> CliResult<PathBuf>
    where
        F: FnOnce(&mut dyn Write) -> CliResult<()>,
    {
        let target = self.path(name);
        write_atomic(&target, fill)?;
        self.written.push(target.clone());
        Ok(target)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        self.write_with(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value)
                .map_err(|e| CliError::Config(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| CliError::io(name, e))
        })
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> CliResult<PathBuf> {
        self.write_with(name, |w| {
            w.write_all(text.as_bytes())
                .map_err(|e| CliError::io(name, e))
        })
    }

    pub fn warn(&mut self, message: impl Into<String>) {
        self.warnings.push(message.into());
    }

    /// Informational line recorded in the manifest; never a warning.
    pub fn note(&mut self, message: impl Into<String>) {
        self.notes.push(message.into());
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    /// Writes `manifest.json` echoing the resolved configuration.
    pub fn finish<C: Serialize>(mut self, command: &str, config: &C) -> CliResult<Manifest> {
        let files = self
            .written
            .iter()
            .filter_map(|p| p.file_name().map(|n| n.to_string_lossy().into_owned()))
            .collect();
        let manifest = Manifest {
            tool: "dropfit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: serde_json::to_value(config).map_err(|e| CliError::Config(e.to_string()))?,
            files,
            warnings: std::mem::take(&mut self.warnings),
            notes: std::mem::take(&mut self.notes),
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(manifest)
    }
}

#[derive(Debug, Clone, Serialize, serde::Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: serde_json::Value,
    pub files: Vec<String>,
    pub warnings: Vec<String>,
    #[serde(default)]
    pub notes: Vec<String>,
}

pub fn write_atomic<F>(target: &Path, fill: F) -> CliResult<()>
where
    F: FnOnce(&mut dyn Write) -> CliResult<()>,
{
    let dir = match target.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(dir).map_err(|e| CliError::io(dir, e))?;
    {
        let mut buf = std::io::BufWriter::new(tmp.as_file_mut());
        fill(&mut buf)?;
        buf.flush().map_err(|e| CliError::io(target, e))?;
    }
    tmp.persist(target)
        .map_err(|e| CliError::io(target, e.error))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manifest_lists_files_and_warnings() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write_text("a.txt", "hello").unwrap();
        out.warn("careful");
        let m = out.finish("test", &serde_json::json!({"seed": 3})).unwrap();
        assert_eq!(m.files, vec!["a.txt"]);
        assert_eq!(m.warnings, vec!["careful"]);
        let text = std::fs::read_to_string(dir.path().join("manifest.json")).unwrap();
        let back: Manifest = serde_json::from_str(&text).unwrap();
        assert_eq!(back.config["seed"], 3);
        assert_eq!(
            std::fs::read_to_string(dir.path().join("a.txt")).unwrap(),
            "hello"
        );
    }

    #[test]
    fn failed_write_leaves_no_file() {
        let dir = tempfile::tempdir().unwrap();
        let target = dir.path().join("x.csv");
        let err = write_atomic(&target, |_| Err(CliError::Config("boom".into())));
        assert!(err.is_err());
        assert!(!target.exists());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 0);
    }
}
