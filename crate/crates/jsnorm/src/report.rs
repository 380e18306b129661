//! Self-contained JSON run reports: inputs echoed, tolerances recorded,
//! one pass/fail line per check. Identical runs produce identical bytes
//! except for the timestamp field.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::{Map, Value};

#[derive(Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: Value,
}

#[derive(Serialize)]
pub struct Report {
    pub schema_version: u32,
    pub command: String,
    pub inputs: Map<String, Value>,
    pub tolerances: Map<String, Value>,
    pub outputs: Map<String, Value>,
    pub checks: Vec<Check>,
    pub pass: bool,
    pub timestamp_unix: u64,
}

impl Report {
    pub fn new(command: &str) -> Report {
        let timestamp_unix =
            SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
        Report {
            schema_version: 1,
            command: command.to_string(),
            inputs: Map::new(),
            tolerances: Map::new(),
            outputs: Map::new(),
            checks: Vec::new(),
            pass: false,
            timestamp_unix,
        }
    }

    pub fn echo<T: Serialize>(&mut self, key: &str, value: &T) {
        self.inputs.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or_else(|e| Value::String(format!("unserializable: {e}"))),
        );
    }

    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.insert(name.to_string(), value.into());
    }

    pub fn output<T: Serialize>(&mut self, key: &str, value: &T) {
        self.outputs.insert(
            key.to_string(),
            serde_json::to_value(value).unwrap_or_else(|e| Value::String(format!("unserializable: {e}"))),
        );
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: Value) -> bool {
        self.checks.push(Check { name: name.to_string(), pass, detail });
        pass
    }

    /// Fold the per-check verdicts into the overall one.
    pub fn seal(mut self) -> Report {
        self.pass = !self.checks.is_empty() && self.checks.iter().all(|c| c.pass);
        self
    }

    pub fn render(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serialization");
        text.push('\n');
        text
    }

    pub fn write_to(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}
