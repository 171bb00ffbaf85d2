//! Run manifests: what was run, with which inputs and parameters.
//!
//! Written atomically (temp file + rename) at the end of a run. Numeric
//! outputs of a rerun with the same manifest are byte-identical; the
//! manifest's own wall-clock field is the only thing that varies.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub inputs: Vec<String>,
    pub params: BTreeMap<String, String>,
    pub output_dir: String,
    pub tool_version: String,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn new(command: &str, output_dir: &Path) -> RunManifest {
        RunManifest {
            command: command.to_string(),
            inputs: Vec::new(),
            params: BTreeMap::new(),
            output_dir: output_dir.display().to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            wall_clock_seconds: 0.0,
        }
    }

    pub fn input(&mut self, path: impl AsRef<Path>) -> &mut Self {
        self.inputs.push(path.as_ref().display().to_string());
        self
    }

    pub fn param(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn write_atomic(&self, dir: &Path) -> io::Result<()> {
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        let tmp = dir.join("manifest.json.tmp");
        let target = dir.join("manifest.json");
        fs::write(&tmp, body)?;
        fs::rename(&tmp, &target)
    }
}
