use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::CliError;

/// Shortest representation that parses back to the same `f64`.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_path(path)?;
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `<out>.<suffix>`, keeping the full output file name.
pub fn sidecar(out: &Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".");
    name.push(suffix);
    PathBuf::from(name)
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Everything needed to repeat a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub parameters: Map<String, Value>,
    pub output_path: String,
    pub seed: Option<u64>,
}

impl RunManifest {
    pub fn new(subcommand: &str, params: &impl Serialize, out: &Path) -> Result<Self, CliError> {
        let parameters = match serde_json::to_value(params)? {
            Value::Object(m) => m,
            other => return Err(CliError::Usage(format!("parameters must serialize to an object, got {other}"))),
        };
        let seed = parameters.get("seed").and_then(Value::as_u64);
        Ok(Self { subcommand: subcommand.to_string(), parameters, output_path: out.display().to_string(), seed })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))
    }

    pub fn parameters<T: for<'de> Deserialize<'de>>(&self) -> Result<T, CliError> {
        serde_json::from_value(Value::Object(self.parameters.clone()))
            .map_err(|e| CliError::Usage(format!("manifest parameters for {}: {e}", self.subcommand)))
    }
}
