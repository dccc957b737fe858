//! Atomic artifact writing with reproducibility manifests.
//!
//! Outputs go through a temp file in the destination directory and a final
//! rename, so interrupted runs never leave partial files. Each output `p`
//! gets a sibling `p.manifest.json` recording the tool, version, command,
//! explicit thread count, the fully resolved config and its SHA-256
//! digest, the SHA-256 of every input file, and the output's own SHA-256.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::context::Context;

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    threads: usize,
    config: &'a C,
    config_digest: String,
    inputs: &'a BTreeMap<String, String>,
    output: String,
    output_sha256: String,
}

/// Collects input hashes while a command loads its files, then writes the
/// command's outputs with their manifests.
pub struct Emitter {
    command: &'static str,
    threads: usize,
    inputs: BTreeMap<String, String>,
}

impl Emitter {
    pub fn new(command: &'static str, ctx: &Context) -> Self {
        Self {
            command,
            threads: ctx.threads,
            inputs: BTreeMap::new(),
        }
    }

    /// Record an input file's hash. Call once per file actually read.
    pub fn record_input(&mut self, path: &Path) -> anyhow::Result<()> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("cannot read input {}", path.display()))?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(())
    }

    /// Atomically write `bytes` to `path` plus `path.manifest.json`.
    pub fn write_output<C: Serialize>(
        &self,
        path: &Path,
        bytes: &[u8],
        config: &C,
    ) -> anyhow::Result<()> {
        let config_json = serde_json::to_string(config).context("config serialises")?;
        let manifest = Manifest {
            tool: "hiersample",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            threads: self.threads,
            config,
            config_digest: sha256_hex(config_json.as_bytes()),
            inputs: &self.inputs,
            output: path.display().to_string(),
            output_sha256: sha256_hex(bytes),
        };
        let mut manifest_json =
            serde_json::to_string_pretty(&manifest).context("manifest serialises")?;
        manifest_json.push('\n');

        write_atomic(path, bytes)?;
        write_atomic(&manifest_path(path), manifest_json.as_bytes())
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output
        .file_name()
        .map(|n| n.to_os_string())
        .unwrap_or_default();
    name.push(".manifest.json");
    output.with_file_name(name)
}

fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("cannot create temp file in {}", dir.display()))?;
    tmp.write_all(bytes)
        .with_context(|| format!("cannot write {}", path.display()))?;
    tmp.persist(path)
        .with_context(|| format!("cannot finalise {}", path.display()))?;
    Ok(())
}
