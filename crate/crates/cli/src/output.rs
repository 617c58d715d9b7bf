use std::cell::RefCell;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, Kind};
use crate::{HarnessError, Result};

/// Output directory of one subcommand run.
#[derive(Debug)]
pub struct Output {
    dir: PathBuf,
    kind: Kind,
    hash: String,
    written: RefCell<Vec<PathBuf>>,
}

/// SHA-256 (hex) of the effective configuration for `kind`.
pub fn config_hash(cfg: &ExperimentConfig, kind: Kind) -> String {
    let canonical = serde_json::to_string(&cfg.effective(kind)).expect("config serialises");
    Sha256::digest(canonical.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> HarnessError + '_ {
    move |source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    }
}

impl Output {
    pub fn create(dir: PathBuf, kind: Kind, cfg: &ExperimentConfig) -> Result<Self> {
        std::fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        Ok(Output {
            hash: config_hash(cfg, kind),
            dir,
            kind,
            written: RefCell::new(Vec::new()),
        })
    }

    pub fn hash(&self) -> &str {
        &self.hash
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> Vec<PathBuf> {
        self.written.borrow().clone()
    }

    /// Header comment lines (without the leading `# `).
    pub fn comments(&self) -> Vec<String> {
        vec![format!(
            "mixopt {} config_sha256={}",
            self.kind.name(),
            self.hash
        )]
    }

    /// Registers and returns `dir/name`.
    pub fn path(&self, name: &str) -> PathBuf {
        let p = self.dir.join(name);
        self.written.borrow_mut().push(p.clone());
        p
    }

    /// Writes a table with the header comment.
    pub fn write_csv<I>(&self, name: &str, header: &[&str], rows: I) -> Result<PathBuf>
    where
        I: IntoIterator<Item = Vec<String>>,
    {
        let path = self.path(name);
        let mut file = std::fs::File::create(&path).map_err(io_err(&path))?;
        for c in self.comments() {
            writeln!(file, "# {c}").map_err(io_err(&path))?;
        }
        let mut w = csv::Writer::from_writer(file);
        let csv_err = |e: csv::Error| HarnessError::Io {
            path: path.clone(),
            source: std::io::Error::other(e.to_string()),
        };
        w.write_record(header).map_err(csv_err)?;
        for row in rows {
            w.write_record(&row).map_err(csv_err)?;
        }
        w.flush().map_err(io_err(&path))?;
        Ok(path)
    }

    /// Pretty JSON with `config_sha256` and `kind` merged into the object.
    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf> {
        let path = self.path(name);
        let mut v = serde_json::to_value(value).map_err(|e| HarnessError::Io {
            path: path.clone(),
            source: std::io::Error::other(e.to_string()),
        })?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("config_sha256".into(), self.hash.clone().into());
            map.insert("kind".into(), self.kind.name().into());
        }
        let mut text = serde_json::to_string_pretty(&v).expect("json value serialises");
        text.push('\n');
        std::fs::write(&path, text).map_err(io_err(&path))?;
        Ok(path)
    }
}

/// Shortest round-trip decimal form.
pub fn fmt(x: f64) -> String {
    format!("{x}")
}
