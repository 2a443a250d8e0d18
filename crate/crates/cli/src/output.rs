//! Run artifacts and their hash-stable serialization.

use std::fs;
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

/// Environment variable naming the root for relative output directories.
pub const OUTPUT_ROOT_ENV: &str = "LINREP_OUTPUT_ROOT";

/// Seventeen significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(format!("{x:.16e}").parse().expect("formatted float parses"))
    } else {
        Value::Null
    }
}

pub fn nums(xs: &[f64]) -> Value {
    Value::Array(xs.iter().map(|x| num(*x)).collect())
}

pub fn fmt_cell(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Column-labelled numeric table written as CSV.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> CliResult<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let ser = |e: csv::Error| CliError::Serialize(e.to_string());
        w.write_record(&self.header).map_err(ser)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|x| fmt_cell(*x))).map_err(ser)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Serialize(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| CliError::Serialize(e.to_string()))
    }
}

/// Everything a run produces before it is written to disk.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    /// Body of `result.json` without the config and hashes.
    pub result: Map<String, Value>,
    pub trace: Option<Table>,
    pub density: Option<Table>,
    /// Extra text files, by name.
    pub files: Vec<(String, String)>,
}

/// Serialized files, ready to write.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub files: Vec<(String, String)>,
    pub content_hash: String,
}

impl Rendered {
    pub fn get(&self, name: &str) -> Option<&str> {
        self.files.iter().find(|(n, _)| n == name).map(|(_, c)| c.as_str())
    }
}

/// Attach the resolved config and hashes, then serialize every artifact.
pub fn render(config: &RunConfig, artifacts: Artifacts) -> CliResult<Rendered> {
    let mut files = Vec::new();
    if let Some(t) = &artifacts.trace {
        files.push(("trace.csv".to_string(), t.to_csv()?));
    }
    if let Some(t) = &artifacts.density {
        files.push(("density.csv".to_string(), t.to_csv()?));
    }
    files.extend(artifacts.files);

    let config_toml = config.to_toml()?;
    let mut body = Map::new();
    body.insert("config".into(), serde_json::to_value(config).map_err(|e| CliError::Serialize(e.to_string()))?);
    body.insert("config_sha256".into(), Value::String(sha256_hex(config_toml.as_bytes())));
    body.extend(artifacts.result);
    let companions: Map<String, Value> = files
        .iter()
        .map(|(name, content)| (name.clone(), Value::String(sha256_hex(content.as_bytes()))))
        .collect();
    body.insert("artifact_sha256".into(), Value::Object(companions));

    let hashed = serde_json::to_string(&Value::Object(body.clone())).map_err(|e| CliError::Serialize(e.to_string()))?;
    let content_hash = sha256_hex(hashed.as_bytes());
    body.insert("content_sha256".into(), Value::String(content_hash.clone()));
    let mut json = serde_json::to_string_pretty(&Value::Object(body)).map_err(|e| CliError::Serialize(e.to_string()))?;
    json.push('\n');
    files.insert(0, ("result.json".to_string(), json));
    Ok(Rendered { files, content_hash })
}

/// Output directory: explicit path, else the config's, else one named by
/// the config hash; relative paths resolve against the output root.
pub fn resolve_output_dir(explicit: Option<&Path>, config: &RunConfig) -> CliResult<PathBuf> {
    let chosen = match (explicit, &config.output) {
        (Some(p), _) => p.to_path_buf(),
        (None, Some(p)) => PathBuf::from(p),
        (None, None) => {
            let hash = sha256_hex(config.to_toml()?.as_bytes());
            PathBuf::from(format!("{}-{}", config.subcommand, &hash[..12]))
        }
    };
    if chosen.is_absolute() {
        return Ok(chosen);
    }
    Ok(match std::env::var_os(OUTPUT_ROOT_ENV) {
        Some(root) => PathBuf::from(root).join(chosen),
        None => chosen,
    })
}

pub fn write(dir: &Path, rendered: &Rendered) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    for (name, content) in &rendered.files {
        let path = dir.join(name);
        fs::write(&path, content).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
