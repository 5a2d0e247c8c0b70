//! Report files: `<prefix>.json` (config echo plus results) and
//! `<prefix>.tsv` (tables for spreadsheets and plotting).

use std::ffi::OsString;
use std::fmt::Display;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Serialize, Serializer};
use serde_json::{json, Value};

/// Resolved settings of a run. The thread count is deliberately absent so
/// that reports do not depend on it.
#[derive(Debug, Serialize)]
pub struct RunConfig<'a, A: Serialize> {
    pub subcommand: &'static str,
    pub seed: u64,
    pub args: &'a A,
}

pub fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = OsString::from(prefix.as_os_str());
    s.push(suffix);
    PathBuf::from(s)
}

/// Writes both report files and returns their paths.
pub fn write<A: Serialize>(
    prefix: &Path,
    config: &RunConfig<'_, A>,
    results: Value,
    tsv: &str,
) -> Result<(PathBuf, PathBuf)> {
    let doc = json!({
        "tool": "tokeval",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "results": results,
    });
    let json_path = with_suffix(prefix, ".json");
    let tsv_path = with_suffix(prefix, ".tsv");
    if let Some(dir) = json_path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)
            .with_context(|| format!("creating report directory {}", dir.display()))?;
    }
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(&json_path, text).with_context(|| format!("writing {}", json_path.display()))?;
    std::fs::write(&tsv_path, tsv).with_context(|| format!("writing {}", tsv_path.display()))?;
    Ok((json_path, tsv_path))
}

/// Tab-separated table with a header row.
pub struct Table {
    out: String,
    width: usize,
}

impl Table {
    pub fn new<S: AsRef<str>>(header: &[S]) -> Self {
        let mut t = Table {
            out: String::new(),
            width: header.len(),
        };
        t.push_row(header.iter().map(|h| h.as_ref().to_owned()).collect());
        t
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.width, "row width matches header");
        self.push_row(cells);
    }

    fn push_row(&mut self, cells: Vec<String>) {
        let cells: Vec<String> = cells.iter().map(|c| cell(c)).collect();
        self.out.push_str(&cells.join("\t"));
        self.out.push('\n');
    }

    pub fn finish(self) -> String {
        self.out
    }
}

/// Keeps a value on one TSV cell.
pub fn cell(s: &str) -> String {
    s.replace('\\', "\\\\")
        .replace('\t', "\\t")
        .replace('\n', "\\n")
        .replace('\r', "\\r")
}

pub fn num(v: f64) -> String {
    v.to_string()
}

pub fn display<T: Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

pub fn display_opt<T: Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cells_stay_on_one_line() {
        assert_eq!(cell("a\tb\nc\\"), "a\\tb\\nc\\\\");
    }

    #[test]
    fn suffix_is_appended() {
        assert_eq!(
            with_suffix(Path::new("out/run.v1"), ".json"),
            Path::new("out/run.v1.json")
        );
    }

    #[test]
    fn table_layout() {
        let mut t = Table::new(&["x", "y"]);
        t.row(vec!["1".into(), num(0.5)]);
        assert_eq!(t.finish(), "x\ty\n1\t0.5\n");
    }
}
