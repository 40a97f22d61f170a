use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context};
use serde::Serialize;
use tracegap_core::pipoly::{bundled_table, VolumeTable};

use crate::{Cli, Format};

/// Input and output locations are checked before any work starts.
pub fn validate_paths(cli: &Cli) -> anyhow::Result<()> {
    if let Some(t) = &cli.table {
        if !t.is_file() {
            bail!("table {} does not exist or is not a file", t.display());
        }
    }
    if let Some(o) = &cli.out {
        if o.is_dir() {
            bail!("output {} is a directory", o.display());
        }
        if let Some(parent) = o.parent().filter(|p| !p.as_os_str().is_empty()) {
            if !parent.is_dir() {
                bail!("output directory {} does not exist", parent.display());
            }
        }
    }
    Ok(())
}

pub fn require_file(path: &Path, what: &str) -> anyhow::Result<String> {
    if !path.is_file() {
        bail!("{what} {} does not exist or is not a file", path.display());
    }
    fs::read_to_string(path).with_context(|| format!("reading {what} {}", path.display()))
}

pub enum Table {
    Bundled,
    Loaded(Box<VolumeTable>),
}

impl Table {
    pub fn get(&self) -> &VolumeTable {
        match self {
            Table::Bundled => bundled_table(),
            Table::Loaded(t) => t,
        }
    }
}

pub fn load_table(cli: &Cli) -> anyhow::Result<Table> {
    match &cli.table {
        None => Ok(Table::Bundled),
        Some(p) => {
            let text = require_file(p, "table")?;
            let t = VolumeTable::from_json(&text).with_context(|| format!("loading {}", p.display()))?;
            Ok(Table::Loaded(Box::new(t)))
        }
    }
}

/// Resolves `--format` against what the command can emit.
pub fn format(cli: &Cli, default: Format, csv_ok: bool) -> anyhow::Result<Format> {
    let f = cli.format.unwrap_or(default);
    if f == Format::Csv && !csv_ok {
        bail!("this command only writes JSON");
    }
    Ok(f)
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> anyhow::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

pub fn emit(cli: &Cli, text: &str) -> anyhow::Result<()> {
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
            Ok(())
        }
    }
}

pub fn emit_json<T: Serialize + ?Sized>(cli: &Cli, value: &T) -> anyhow::Result<()> {
    emit(cli, &to_json(value)?)
}
