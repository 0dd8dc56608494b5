use std::fmt::Debug;
use std::path::{Path, PathBuf};
use std::time::Duration;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// What a successful command hands back for the run report.
#[derive(Debug, Default)]
pub struct Outcome {
    pub digest: String,
    pub seed: Option<u64>,
    pub outputs: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

/// SHA-256 over the parsed flags and the bytes of every input file.
pub struct ConfigDigest(Sha256);

impl ConfigDigest {
    pub fn new(args: &impl Debug) -> Self {
        let mut h = Sha256::new();
        h.update(format!("{args:?}").as_bytes());
        ConfigDigest(h)
    }

    pub fn input(&mut self, bytes: &[u8]) {
        self.0.update((bytes.len() as u64).to_le_bytes());
        self.0.update(bytes);
    }

    pub fn finish(self) -> String {
        self.0
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Serialize)]
pub struct RunReport {
    command: Vec<String>,
    config_digest: String,
    seed: Option<u64>,
    outputs: Vec<String>,
    duration_secs: f64,
    warnings: Vec<String>,
}

impl RunReport {
    pub fn new(command: Vec<String>, outcome: Outcome, elapsed: Duration) -> Self {
        RunReport {
            command,
            config_digest: outcome.digest,
            seed: outcome.seed,
            outputs: outcome.outputs.iter().map(|p| display(p)).collect(),
            duration_secs: elapsed.as_secs_f64(),
            warnings: outcome.warnings,
        }
    }

    pub fn emit(&self) {
        for w in &self.warnings {
            eprintln!("warning: {w}");
        }
        match serde_json::to_string(self) {
            Ok(json) => eprintln!("{json}"),
            Err(e) => eprintln!("could not serialize run report: {e}"),
        }
    }
}

fn display(p: &Path) -> String {
    p.display().to_string()
}
