//! CSV and JSON-lines writers. Floats are written with 17 significant digits
//! so identical runs give byte-identical files.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::{CliError, CliResult};

pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sites(region: &spinbell::Region) -> String {
    region.sites().iter().map(|s| s.to_string()).collect::<Vec<_>>().join(" ")
}

/// Writes every output of one run into a single directory.
pub struct RunOutput {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl RunOutput {
    pub fn create(dir: &Path) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|source| CliError::Write { path: dir.to_path_buf(), source })?;
        Ok(Self { dir: dir.to_path_buf(), written: Vec::new() })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let err = |e: csv::Error| CliError::Write {
            path: path.clone(),
            source: std::io::Error::other(e),
        };
        let mut w = csv::Writer::from_path(&path).map_err(err)?;
        w.write_record(header).map_err(err)?;
        for row in rows {
            w.write_record(row).map_err(err)?;
        }
        w.flush().map_err(|source| CliError::Write { path: path.clone(), source })?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_jsonl<T: Serialize>(&mut self, name: &str, records: &[T]) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let io = |source| CliError::Write { path: path.clone(), source };
        let mut w = BufWriter::new(File::create(&path).map_err(io)?);
        for record in records {
            let line = serde_json::to_string(record).map_err(|e| io(std::io::Error::other(e)))?;
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)?;
        self.written.push(path.clone());
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> CliResult<PathBuf> {
        let path = self.dir.join(name);
        let io = |source| CliError::Write { path: path.clone(), source };
        let text = serde_json::to_string_pretty(value).map_err(|e| io(std::io::Error::other(e)))?;
        fs::write(&path, text + "\n").map_err(io)?;
        self.written.push(path.clone());
        Ok(path)
    }
}
