//! Run manifests: config snapshot, input digests, seed, tool version and
//! wall-clock per phase, written as `manifest.json` in the output directory.
//! The manifest also lists every file the run produced, tying outputs to the
//! manifest that made them.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::errors::{CliError, CliResult};

#[derive(Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Phase {
    pub name: String,
    pub wall_ms: u64,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: ToolInfo,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub config: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub outputs: Vec<String>,
    pub phases: Vec<Phase>,
}

/// Collects outputs and phase timings for one command run.
pub struct RunRecorder {
    out_dir: PathBuf,
    command: String,
    seed: Option<u64>,
    config: serde_json::Value,
    inputs: Vec<InputDigest>,
    outputs: Vec<String>,
    phases: Vec<Phase>,
    phase_started: Option<(String, Instant)>,
}

impl RunRecorder {
    pub fn new(out_dir: &Path, command: &str, config: serde_json::Value, seed: Option<u64>) -> Self {
        RunRecorder {
            out_dir: out_dir.to_path_buf(),
            command: command.to_string(),
            seed,
            config,
            inputs: Vec::new(),
            outputs: Vec::new(),
            phases: Vec::new(),
            phase_started: None,
        }
    }

    pub fn out_dir(&self) -> &Path {
        &self.out_dir
    }

    /// Registers an input file by content digest.
    pub fn add_input(&mut self, path: &Path) -> CliResult<()> {
        let bytes = std::fs::read(path)
            .map_err(|e| CliError::io(format!("cannot read {}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(digest),
        });
        Ok(())
    }

    pub fn start_phase(&mut self, name: &str) {
        self.end_phase();
        self.phase_started = Some((name.to_string(), Instant::now()));
    }

    pub fn end_phase(&mut self) {
        if let Some((name, started)) = self.phase_started.take() {
            self.phases.push(Phase {
                name,
                wall_ms: started.elapsed().as_millis() as u64,
            });
        }
    }

    /// Writes a text file under the output directory and records it.
    pub fn write_text(&mut self, rel: &str, content: &str) -> CliResult<()> {
        let path = self.out_dir.join(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::io(format!("cannot create {}: {e}", parent.display())))?;
        }
        std::fs::write(&path, content)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        self.outputs.push(rel.to_string());
        Ok(())
    }

    /// Records a file some other writer already produced under the out dir.
    pub fn note_output(&mut self, rel: &str) {
        self.outputs.push(rel.to_string());
    }

    /// Finalizes `manifest.json`.
    pub fn finish(mut self) -> CliResult<()> {
        self.end_phase();
        self.outputs.push("manifest.json".to_string());
        let manifest = RunManifest {
            schema_version: 1,
            tool: ToolInfo {
                name: "windcast",
                version: env!("CARGO_PKG_VERSION"),
            },
            command: self.command,
            seed: self.seed,
            config: self.config,
            inputs: self.inputs,
            outputs: self.outputs,
            phases: self.phases,
        };
        let mut body = serde_json::to_string_pretty(&manifest)?;
        body.push('\n');
        let path = self.out_dir.join("manifest.json");
        std::fs::write(&path, body)
            .map_err(|e| CliError::io(format!("cannot write {}: {e}", path.display())))?;
        Ok(())
    }
}
