//! Artifact writers. Every file carries the same metadata block: the crate
//! version, the JSON schema version, the subcommand, its configuration and
//! the master seed.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::{json, Value};

pub const SCHEMA_VERSION: u32 = 1;

pub struct Meta {
    value: Value,
}

impl Meta {
    pub fn new<C: Serialize>(command: &str, seed: Option<u64>, config: &C) -> Result<Self> {
        Ok(Meta {
            value: json!({
                "schema_version": SCHEMA_VERSION,
                "version": env!("CARGO_PKG_VERSION"),
                "command": command,
                "seed": seed,
                "config": serde_json::to_value(config)?,
            }),
        })
    }
}

/// CSV with a leading `# {metadata}` comment line and a fixed header.
pub fn write_csv<I>(path: &Path, meta: &Meta, header: &str, rows: I) -> Result<()>
where
    I: IntoIterator<Item = String>,
{
    let mut buf = String::new();
    buf.push_str("# ");
    buf.push_str(&serde_json::to_string(&meta.value)?);
    buf.push('\n');
    buf.push_str(header);
    buf.push('\n');
    for row in rows {
        buf.push_str(&row);
        buf.push('\n');
    }
    write_file(path, buf.as_bytes())
}

/// JSON object: the metadata fields plus `results`.
pub fn write_json(path: &Path, meta: &Meta, results: Value) -> Result<()> {
    let mut doc = meta.value.clone();
    doc["results"] = results;
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = fs::File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    f.write_all(bytes).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// `dir/name.csv` → `dir/name.<suffix>`.
pub fn sibling(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}
