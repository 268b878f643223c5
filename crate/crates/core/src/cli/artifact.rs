use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::config::RunConfig;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub config: RunConfig,
}

impl Provenance {
    pub fn new(config: &RunConfig) -> Self {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        Provenance {
            tool: "srb",
            version: VERSION,
            config_sha256: hex::encode(Sha256::digest(&canonical)),
            config: config.clone(),
        }
    }
}

/// Writes artifacts into one directory, stamping each with the provenance.
pub struct ArtifactWriter {
    dir: PathBuf,
    provenance: Provenance,
    written: Vec<PathBuf>,
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    provenance: &'a Provenance,
    result: &'a T,
}

impl ArtifactWriter {
    pub fn new(dir: &Path, config: &RunConfig) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(ArtifactWriter {
            dir: dir.to_path_buf(),
            provenance: Provenance::new(config),
            written: Vec::new(),
        })
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    pub fn written(&self) -> &[PathBuf] {
        &self.written
    }

    pub fn json<T: Serialize>(&mut self, name: &str, result: &T) -> std::io::Result<()> {
        let body = serde_json::to_string_pretty(&Stamped {
            provenance: &self.provenance,
            result,
        })
        .map_err(std::io::Error::other)?;
        self.write(name, body + "\n")
    }

    /// CSV (or edge list) prefixed by a `#` provenance line.
    pub fn text(&mut self, name: &str, body: &str) -> std::io::Result<()> {
        let header = format!(
            "# srb {} config_sha256={}\n",
            self.provenance.version, self.provenance.config_sha256
        );
        self.write(name, header + body)
    }

    fn write(&mut self, name: &str, body: String) -> std::io::Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, body)?;
        self.written.push(path);
        Ok(())
    }
}
