use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use tokeval::stats::pearson;

use super::{announce, read_lines};
use crate::report::{self, num, RunConfig, Table};

#[derive(Args, Debug, Serialize)]
pub struct CorrelateArgs {
    /// Tab-separated table with a header row
    #[arg(long)]
    pub input: PathBuf,

    /// Column correlated against every --y column
    #[arg(long)]
    pub x: String,

    /// Column to correlate with --x; repeat for several
    #[arg(long, required = true)]
    pub y: Vec<String>,

    /// Report files are PREFIX.json and PREFIX.tsv
    #[arg(long, value_name = "PREFIX", default_value = "correlate")]
    pub report: PathBuf,
}

fn column(rows: &[Vec<&str>], header: &[&str], name: &str) -> Result<Vec<f64>> {
    let idx = header
        .iter()
        .position(|h| *h == name)
        .with_context(|| format!("no column named {name:?}"))?;
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            let cell = row.get(idx).copied().unwrap_or("");
            cell.trim().parse::<f64>().with_context(|| {
                format!(
                    "row {}: column {name:?} holds {cell:?}, not a number",
                    r + 2
                )
            })
        })
        .collect()
}

pub fn run(args: &CorrelateArgs, seed: u64) -> Result<()> {
    let lines = read_lines(&args.input)?;
    let mut lines = lines.iter().filter(|l| !l.trim().is_empty());
    let Some(header) = lines.next() else {
        bail!("{} is empty", args.input.display());
    };
    let header: Vec<&str> = header.split('\t').map(str::trim).collect();
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split('\t').collect()).collect();

    let x = column(&rows, &header, &args.x)?;
    let mut table = Table::new(&["x", "y", "n", "r"]);
    let mut results = Vec::with_capacity(args.y.len());
    for name in &args.y {
        let y = column(&rows, &header, name)?;
        let r = pearson(&x, &y).with_context(|| format!("correlating {} with {name}", args.x))?;
        table.row(vec![
            args.x.clone(),
            name.clone(),
            x.len().to_string(),
            num(r),
        ]);
        results.push(json!({"x": args.x, "y": name, "n": x.len(), "r": r}));
    }
    let config = RunConfig {
        subcommand: "correlate",
        seed,
        args,
    };
    let (j, t) = report::write(
        &args.report,
        &config,
        json!({ "correlations": results }),
        &table.finish(),
    )?;
    announce(&[&j, &t]);
    Ok(())
}
