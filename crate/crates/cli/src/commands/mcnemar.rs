use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::json;
use tokeval::stats::{
    mcnemar, McNemarMethod, MethodChoice, PairedPredictions, DEFAULT_EXACT_THRESHOLD,
    SIGNIFICANCE_LEVEL,
};

use super::{announce, read_lines};
use crate::report::{self, num, RunConfig, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    /// Exact binomial below --exact-threshold discordant pairs, chi-square above
    Auto,
    /// Continuity-corrected chi-square
    Chi2,
    /// Exact two-sided binomial
    Exact,
}

#[derive(Args, Debug, Serialize)]
pub struct McNemarArgs {
    /// Gold labels, one per line (comma-separated for multilabel items)
    #[arg(long)]
    pub gold: PathBuf,

    /// System predictions as NAME=PATH, aligned with --gold; at least two
    #[arg(long = "pred", value_name = "NAME=PATH", required = true, value_parser = parse_pred)]
    pub preds: Vec<(String, PathBuf)>,

    /// Ordering score as NAME=VALUE, highest first; defaults to accuracy on --gold
    #[arg(long = "score", value_name = "NAME=VALUE", value_parser = parse_score)]
    pub scores: Vec<(String, f64)>,

    /// Number of tests for the Bonferroni correction [default: number of pairs]
    #[arg(long)]
    pub bonferroni_m: Option<u64>,

    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,

    /// Discordant-pair count from which `auto` switches to chi-square
    #[arg(long, default_value_t = DEFAULT_EXACT_THRESHOLD)]
    pub exact_threshold: u64,

    /// Report files are PREFIX.json and PREFIX.tsv
    #[arg(long, value_name = "PREFIX", default_value = "mcnemar")]
    pub report: PathBuf,
}

fn split_assignment(s: &str) -> std::result::Result<(&str, &str), String> {
    match s.split_once('=') {
        Some((name, value)) if !name.is_empty() && !value.is_empty() => Ok((name, value)),
        _ => Err(format!("expected NAME=VALUE, got {s:?}")),
    }
}

fn parse_pred(s: &str) -> std::result::Result<(String, PathBuf), String> {
    let (name, path) = split_assignment(s)?;
    Ok((name.to_owned(), PathBuf::from(path)))
}

fn parse_score(s: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = split_assignment(s)?;
    let v: f64 = value
        .parse()
        .map_err(|_| format!("score for {name:?} is not a number: {value:?}"))?;
    if !v.is_finite() {
        return Err(format!("score for {name:?} must be finite"));
    }
    Ok((name.to_owned(), v))
}

/// Canonical form of a label line: labels sorted so that the order inside a
/// multilabel item does not matter.
fn normalize(line: &str) -> String {
    let mut labels: Vec<&str> = line
        .split(',')
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    labels.sort_unstable();
    labels.dedup();
    labels.join(",")
}

struct System {
    name: String,
    path: PathBuf,
    preds: Vec<String>,
    accuracy: f64,
    score: Option<f64>,
}

pub fn run(args: &McNemarArgs, seed: u64) -> Result<()> {
    if args.preds.len() < 2 {
        bail!("need at least two --pred systems, got {}", args.preds.len());
    }
    let gold: Vec<String> = read_lines(&args.gold)?
        .iter()
        .map(|l| normalize(l))
        .collect();
    if gold.is_empty() {
        bail!("{} has no labels", args.gold.display());
    }

    let mut systems = Vec::with_capacity(args.preds.len());
    for (name, path) in &args.preds {
        if systems.iter().any(|s: &System| &s.name == name) {
            bail!("system {name:?} given twice");
        }
        let preds: Vec<String> = read_lines(path)?.iter().map(|l| normalize(l)).collect();
        if preds.len() != gold.len() {
            bail!(
                "{} has {} lines but {} has {}",
                path.display(),
                preds.len(),
                args.gold.display(),
                gold.len()
            );
        }
        let hits = preds.iter().zip(&gold).filter(|(p, g)| p == g).count();
        systems.push(System {
            name: name.clone(),
            path: path.clone(),
            accuracy: hits as f64 / gold.len() as f64,
            preds,
            score: None,
        });
    }
    for (name, value) in &args.scores {
        let sys = systems
            .iter_mut()
            .find(|s| &s.name == name)
            .with_context(|| format!("--score names unknown system {name:?}"))?;
        sys.score = Some(*value);
    }
    let order_by = if args.scores.is_empty() {
        "accuracy"
    } else {
        if let Some(s) = systems.iter().find(|s| s.score.is_none()) {
            bail!("no --score given for system {:?}", s.name);
        }
        "score"
    };
    // Stable sort: equal keys keep command-line order.
    systems.sort_by(|a, b| {
        let key = |s: &System| s.score.unwrap_or(s.accuracy);
        key(b).total_cmp(&key(a))
    });

    let k = systems.len();
    let n_pairs = (k * (k - 1) / 2) as u64;
    let m = args.bonferroni_m.unwrap_or(n_pairs);
    if m == 0 {
        bail!("--bonferroni-m must be at least 1");
    }
    let choice = match args.method {
        MethodArg::Auto => MethodChoice::Auto {
            threshold: args.exact_threshold,
        },
        MethodArg::Chi2 => MethodChoice::Fixed(McNemarMethod::Chi2Corrected),
        MethodArg::Exact => MethodChoice::Fixed(McNemarMethod::ExactBinomial),
    };

    let mut raw = vec![vec![None; k]; k];
    let mut adjusted = vec![vec![None; k]; k];
    let mut pairs = Vec::with_capacity(n_pairs as usize);
    for i in 0..k {
        for j in i + 1..k {
            let pp = PairedPredictions::new(
                gold.clone(),
                systems[i].preds.clone(),
                systems[j].preds.clone(),
            )?;
            let r = mcnemar(&pp, choice, m)?;
            raw[i][j] = Some(r.p_raw);
            raw[j][i] = Some(r.p_raw);
            adjusted[i][j] = Some(r.p_adjusted);
            adjusted[j][i] = Some(r.p_adjusted);
            pairs.push(json!({
                "a": systems[i].name,
                "b": systems[j].name,
                "b_count": r.b,
                "c_count": r.c,
                "statistic": r.statistic,
                "method": r.method.name(),
                "p_raw": r.p_raw,
                "p_adjusted": r.p_adjusted,
                "significant": r.significant(),
            }));
        }
    }

    let names: Vec<&str> = systems.iter().map(|s| s.name.as_str()).collect();
    let mut tsv = String::new();
    for (title, matrix) in [("p_raw", &raw), ("p_adjusted", &adjusted)] {
        if !tsv.is_empty() {
            tsv.push('\n');
        }
        let mut header = vec![title];
        header.extend(&names);
        let mut table = Table::new(&header);
        for (name, row) in names.iter().zip(matrix) {
            let mut cells = vec![name.to_string()];
            cells.extend(row.iter().map(|p| p.map_or_else(|| "-".to_owned(), num)));
            table.row(cells);
        }
        tsv.push_str(&table.finish());
    }

    let results = json!({
        "n_items": gold.len(),
        "order_by": order_by,
        "bonferroni_m": m,
        "significance_level": SIGNIFICANCE_LEVEL,
        "systems": systems.iter().map(|s| json!({
            "name": s.name,
            "path": s.path.display().to_string(),
            "accuracy": s.accuracy,
            "score": s.score,
        })).collect::<Vec<_>>(),
        "pairs": pairs,
    });
    let config = RunConfig {
        subcommand: "mcnemar",
        seed,
        args,
    };
    let (j, t) = report::write(&args.report, &config, results, &tsv)?;
    announce(&[&j, &t]);
    Ok(())
}
