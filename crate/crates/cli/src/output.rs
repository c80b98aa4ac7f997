//! Output files, each tagged with the hash of the configuration that made it.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

#[derive(Serialize)]
struct Resolved<'a, T> {
    command: &'a str,
    seed: u64,
    config: &'a T,
}

/// SHA-256 of the resolved configuration re-serialized as TOML.
pub fn config_hash<T: Serialize>(command: &str, seed: u64, section: &T) -> String {
    let text = toml::to_string(&Resolved {
        command,
        seed,
        config: section,
    })
    .expect("config sections serialize");
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub struct OutputDir {
    dir: PathBuf,
    header: String,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &str, hash: &str) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            header: format!("retromark {command} config_sha256={hash}"),
        })
    }

    fn open(&mut self, name: &str) -> Result<(PathBuf, BufWriter<File>), CliError> {
        let path = self.dir.join(name);
        let file = File::create(&path).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        Ok((path, BufWriter::new(file)))
    }

    /// Text file whose first line is `# <header>`.
    pub fn text<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let header = format!("# {}\n", self.header);
        self.write(name, header.as_bytes(), body)
    }

    /// File with a caller-placed header: `body` receives the header text.
    pub fn with_header<F>(&mut self, name: &str, body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write, &str) -> std::io::Result<()>,
    {
        let (path, mut w) = self.open(name)?;
        let header = self.header.clone();
        body(&mut w, &header)
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }

    fn write<F>(&mut self, name: &str, prefix: &[u8], body: F) -> Result<(), CliError>
    where
        F: FnOnce(&mut dyn Write) -> std::io::Result<()>,
    {
        let (path, mut w) = self.open(name)?;
        w.write_all(prefix)
            .and_then(|_| body(&mut w))
            .and_then(|_| w.flush())
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }
}
