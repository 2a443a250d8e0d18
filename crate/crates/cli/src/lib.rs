//! Config-driven runner for the `linrep` solvers.
//!
//! A run is described by a [`config::RunConfig`] (TOML), executed by
//! [`run::run`], and written as hash-stamped artifacts by [`output`].

pub mod config;
pub mod error;
pub mod output;
pub mod problems;
pub mod run;

use std::path::{Path, PathBuf};

pub use config::{RunConfig, Subcommand};
pub use error::{CliError, CliResult};

/// Execute `config` and write its artifacts, returning the output directory
/// and the content hash of `result.json`.
pub fn execute(config: &RunConfig, out: Option<&Path>) -> CliResult<(PathBuf, String)> {
    let artifacts = run::run(config)?;
    let rendered = output::render(config, artifacts)?;
    let dir = output::resolve_output_dir(out, config)?;
    output::write(&dir, &rendered)?;
    Ok((dir, rendered.content_hash))
}

/// Human-readable listing of the problem registry.
pub fn list_problems() -> String {
    let mut s = String::new();
    for p in problems::registry() {
        s.push_str(&format!("{:<24} {:<16} d={}  {}\n", p.name, p.family.label(), p.dim, p.description));
        let params: Vec<String> = p.params.iter().map(|(k, v)| format!("{k}={v}")).collect();
        s.push_str(&format!("{:<24} params: {}\n", "", params.join(", ")));
        if let Some(a) = p.anchor {
            s.push_str(&format!("{:<24} anchor: {a}\n", ""));
        }
    }
    s
}
