//! Artifact writing and the per-run manifest.

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use serde_json::{json, Value};

use crate::config::Settings;
use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

pub struct Run {
    pub command: String,
    pub settings: Settings,
    artifacts: Vec<String>,
    experiment: Option<Value>,
}

impl Run {
    pub fn new(command: String, settings: Settings) -> Result<Self, CliError> {
        fs::create_dir_all(&settings.out_dir).map_err(|e| {
            CliError::Io(format!(
                "cannot create output directory {}: {e}",
                settings.out_dir.display()
            ))
        })?;
        Ok(Self {
            command,
            settings,
            artifacts: Vec::new(),
            experiment: None,
        })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.settings.out_dir.join(name)
    }

    pub fn write_text(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.path(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
        self.write_text(name, &(text + "\n"))
    }

    /// Echoed in the manifest next to the resolved flags.
    pub fn set_experiment(&mut self, value: Value) {
        self.experiment = Some(value);
    }

    pub fn write_manifest(&self, wall: Duration, exit_code: u8, error: Option<String>) -> Result<(), CliError> {
        let manifest = json!({
            "tool": "dctc",
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "settings": self.settings.to_json(),
            "experiment": self.experiment,
            "artifacts": self.artifacts,
            "exit_code": exit_code,
            "error": error,
            "wall_time_s": wall.as_secs_f64(),
        });
        let path = self.path(MANIFEST);
        let text = serde_json::to_string_pretty(&manifest).expect("JSON values always serialize");
        fs::write(&path, text + "\n").map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
    }
}
