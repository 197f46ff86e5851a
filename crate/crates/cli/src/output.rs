//! Files produced by a command, written together with the manifest.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

pub const OUTPUT_DIR_ENV: &str = "GFF4_OUTPUT_DIR";

#[derive(Debug, Default)]
pub struct Outputs {
    pub files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn csv<S: Serialize>(&mut self, name: &str, rows: &[S]) -> Result<(), CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Io { path: name.into(), source: e.into_error() })?;
        self.files.push((name.into(), bytes));
        Ok(())
    }

    pub fn json<S: Serialize + ?Sized>(&mut self, name: &str, value: &S) -> Result<(), CliError> {
        let mut bytes = serde_json::to_vec_pretty(value).expect("report serializes");
        bytes.push(b'\n');
        self.files.push((name.into(), bytes));
        Ok(())
    }

    pub fn raw(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.into(), bytes));
    }

    pub fn names(&self) -> Vec<String> {
        self.files.iter().map(|(n, _)| n.clone()).collect()
    }

    pub fn write_all(&self, dir: &Path) -> Result<(), CliError> {
        std::fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
        for (name, bytes) in &self.files {
            let p = dir.join(name);
            std::fs::write(&p, bytes).map_err(|e| io_err(&p, e))?;
        }
        Ok(())
    }
}

pub fn io_err(path: &Path, source: std::io::Error) -> CliError {
    CliError::Io { path: path.display().to_string(), source }
}

#[derive(Debug, Serialize)]
pub struct Versions {
    pub gff4: &'static str,
    pub gff4_cli: &'static str,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub seed: u64,
    pub threads: usize,
    pub versions: Versions,
    pub output_dir: PathBuf,
    pub outputs: Vec<String>,
    /// Effective configuration after file, `--set`, environment and flags.
    pub config: String,
    pub started_unix_seconds: u64,
    pub wall_clock_seconds: f64,
    pub exit_code: i32,
}
