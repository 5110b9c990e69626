//! Run directories and provenance.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub config_sha256: String,
    pub seed: u64,
}

impl Provenance {
    pub fn new(command: &'static str, config_text: &str, seed: u64) -> Self {
        let config_sha256 = hex::encode(Sha256::digest(config_text.as_bytes()));
        Self { tool: "gradcomp", version: VERSION, command, config_sha256, seed }
    }

    pub fn header(&self) -> String {
        format!(
            "# {} {} {} config-sha256={} seed={}",
            self.tool, self.version, self.command, self.config_sha256, self.seed
        )
    }
}

/// One directory per run holding the config echo, provenance and results.
pub struct RunDir {
    root: PathBuf,
    pub provenance: Provenance,
}

impl RunDir {
    pub fn create(root: &Path, provenance: Provenance, config_text: &str) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        let dir = Self { root: root.to_path_buf(), provenance };
        dir.write("config.toml", config_text)?;
        dir.write_json("provenance.json", &dir.provenance)?;
        Ok(dir)
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    pub fn write(&self, name: &str, contents: &str) -> anyhow::Result<()> {
        let path = self.path(name);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, &text)
    }

    /// summary.json: the provenance alongside command-specific fields.
    pub fn write_summary<T: Serialize>(&self, summary: &T) -> anyhow::Result<()> {
        #[derive(Serialize)]
        struct Wrapped<'a, T> {
            provenance: &'a Provenance,
            #[serde(flatten)]
            summary: &'a T,
        }
        self.write_json("summary.json", &Wrapped { provenance: &self.provenance, summary })
    }
}
