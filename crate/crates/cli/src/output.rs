//! Deterministic file writers. Every artifact opens with a commented
//! key=value block describing the run, so bundles are self-describing.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};

/// Ordered key=value pairs describing one invocation.
#[derive(Debug, Clone, Default)]
pub struct RunInfo {
    pairs: Vec<(String, String)>,
}

impl RunInfo {
    pub fn new(command: &str) -> Self {
        let mut info = RunInfo::default();
        info.push("tool", "privcube");
        info.push("version", env!("CARGO_PKG_VERSION"));
        info.push("command", command);
        info
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.pairs.push((key.into(), value.to_string()));
    }

    /// The flat key=value block.
    pub fn as_block(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            let _ = writeln!(out, "{k}={v}");
        }
        out
    }

    /// The same block with each line commented, for CSV headers.
    pub fn as_comment(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.pairs {
            let _ = writeln!(out, "# {k}={v}");
        }
        out
    }
}

pub fn write_file(dir: &Path, name: &str, contents: &str) -> Result<()> {
    fs::create_dir_all(dir)
        .with_context(|| format!("creating output directory {}", dir.display()))?;
    let path = dir.join(name);
    fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// A CSV artifact: commented run info, a fixed header, then rows.
pub fn csv_table(info: &RunInfo, header: &str, rows: &[String]) -> String {
    let mut out = info.as_comment();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    out
}
