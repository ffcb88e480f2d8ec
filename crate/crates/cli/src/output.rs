use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::CliError;

pub const OUT_DIR_ENV: &str = "GRIDLAW_OUT_DIR";
const FALLBACK_OUT_DIR: &str = "gridlaw-out";

/// `--out`, then the config's `run.output_dir`, then `$GRIDLAW_OUT_DIR`, then `./gridlaw-out`.
pub fn output_dir(flag: Option<&Path>, config: Option<&Path>) -> PathBuf {
    flag.or(config)
        .map(Path::to_path_buf)
        .or_else(|| std::env::var_os(OUT_DIR_ENV).map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from(FALLBACK_OUT_DIR))
}

/// Artifacts of one run. Each file appears under its final name only once
/// fully written.
pub struct Artifacts {
    dir: PathBuf,
}

impl Artifacts {
    pub fn create(dir: PathBuf) -> Result<Self, CliError> {
        fs::create_dir_all(&dir).map_err(|source| CliError::Io {
            path: dir.display().to_string(),
            source,
        })?;
        Ok(Self { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn write_with<F>(&self, name: &str, fill: F) -> Result<PathBuf, CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let path = self.dir.join(name);
        let io_err = |source| CliError::Io {
            path: path.display().to_string(),
            source,
        };
        let tmp = NamedTempFile::new_in(&self.dir).map_err(io_err)?;
        {
            let mut w = BufWriter::new(tmp.as_file());
            fill(&mut w).map_err(io_err)?;
            w.flush().map_err(io_err)?;
        }
        tmp.as_file().sync_all().map_err(io_err)?;
        tmp.persist(&path).map_err(|e| io_err(e.error))?;
        Ok(path)
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf, CliError> {
        self.write_with(name, |w| w.write_all(text.as_bytes()))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> Result<PathBuf, CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("outputs always serialize");
        text.push('\n');
        self.write_text(name, &text)
    }
}
