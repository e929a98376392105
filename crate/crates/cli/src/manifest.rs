use std::path::Path;
use std::time::Instant;

use interbound::Diagnostic;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const FORCED_DISCLAIMER: &str =
    "force mode: some job produces no event, so exactness of the abstraction now depends on the requirement";

#[derive(Debug, Clone, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub name: String,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub states: Option<usize>,
}

/// Record of one `abstract` or `bound` run.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub inputs: Vec<InputDigest>,
    pub stages: Vec<Stage>,
    pub warnings: Vec<Diagnostic>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub disclaimer: Option<String>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        RunManifest {
            tool: "interbound",
            version: env!("CARGO_PKG_VERSION"),
            command: command.into(),
            inputs: Vec::new(),
            stages: Vec::new(),
            warnings: Vec::new(),
            disclaimer: None,
        }
    }

    pub fn input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(InputDigest {
            path: path.display().to_string(),
            sha256: hex::encode(Sha256::digest(bytes)),
        });
    }

    pub fn stage(&mut self, name: &str, started: Instant, states: Option<usize>) {
        self.stages.push(Stage {
            name: name.into(),
            seconds: started.elapsed().as_secs_f64(),
            states,
        });
    }

    pub fn warn(&mut self, warnings: &[Diagnostic], forced: bool) {
        self.warnings.extend(warnings.iter().cloned());
        if forced && warnings.iter().any(|w| w.message.contains("produces no event")) {
            self.disclaimer = Some(FORCED_DISCLAIMER.into());
        }
    }
}
