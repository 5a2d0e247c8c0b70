use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use tokeval::proxy::logreg::{DEFAULT_C, DEFAULT_MAX_ITER, DEFAULT_TOL};
use tokeval::proxy::{
    evaluate_proxy, train_proxy, F1Average, LogRegOptions, PairMode, ProxyOptions, TaskDataset,
    TaskKind, DEFAULT_FEATURE_CAP,
};

use super::{announce, load_model, write_output};
use crate::report::{self, display, display_opt, num, RunConfig, Table};

#[derive(Args, Debug, Serialize)]
pub struct ProxyArgs {
    /// Tokenizer model written by `fit`
    #[arg(long)]
    pub model: PathBuf,

    /// Training split (text_a, text_b, labels TSV)
    #[arg(long)]
    pub train: PathBuf,

    /// Evaluation split, same layout
    #[arg(long)]
    pub eval: PathBuf,

    /// Features for two-text tasks: none, cartesian or shared_disjoint
    #[arg(long, default_value = "none")]
    #[serde(serialize_with = "display")]
    pub pair_mode: PairMode,

    /// binary, multiclass or multilabel [default: inferred from the labels]
    #[arg(long)]
    #[serde(serialize_with = "display_opt")]
    pub task_kind: Option<TaskKind>,

    /// Inverse regularization strength
    #[arg(long, default_value_t = DEFAULT_C)]
    pub c: f64,

    /// Relative objective decrease that ends optimization
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,

    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    pub max_iter: usize,

    /// Refuse training splits with more distinct features than this
    #[arg(long, default_value_t = DEFAULT_FEATURE_CAP)]
    pub feature_cap: usize,

    /// Averaging for multilabel F1: macro or micro
    #[arg(long = "f1", default_value = "macro")]
    pub f1: F1Average,

    /// Write predicted labels, one line per evaluation instance
    #[arg(long)]
    pub predictions: Option<PathBuf>,

    /// Report files are PREFIX.json and PREFIX.tsv
    #[arg(long, value_name = "PREFIX", default_value = "proxy")]
    pub report: PathBuf,
}

pub fn run(args: &ProxyArgs, seed: u64) -> Result<()> {
    if !(args.c.is_finite() && args.c > 0.0) {
        anyhow::bail!("--c must be a positive number, got {}", args.c);
    }
    let tokenizer = load_model(&args.model)?;
    let train = TaskDataset::load(&args.train, args.task_kind, args.pair_mode)
        .with_context(|| format!("loading {}", args.train.display()))?;
    let eval = TaskDataset::load(&args.eval, Some(train.task_kind()), args.pair_mode)
        .with_context(|| format!("loading {}", args.eval.display()))?;
    let opts = ProxyOptions {
        solver: LogRegOptions {
            c: args.c,
            tol: args.tol,
            max_iter: args.max_iter,
        },
        feature_cap: args.feature_cap,
    };
    let proxy = train_proxy(&tokenizer, &train, &opts).context("training proxy")?;
    let ev = evaluate_proxy(&proxy, &tokenizer, &eval, args.f1).context("evaluating proxy")?;

    let unconverged = proxy.classifiers.iter().filter(|c| !c.converged).count();
    if unconverged > 0 {
        eprintln!("warning: {unconverged} classifier(s) hit --max-iter before converging");
    }
    eprintln!("{} = {}", ev.metric, ev.value);

    if let Some(path) = &args.predictions {
        let mut text = String::new();
        for p in &ev.predictions {
            text.push_str(&p.join(","));
            text.push('\n');
        }
        write_output(path, text)?;
        announce(&[path]);
    }

    let classifiers: Vec<_> = proxy
        .classifiers
        .iter()
        .map(|c| {
            json!({
                "label": c.label,
                "intercept": c.intercept,
                "nonzero_weights": c.nonzero_weights(),
                "objective": c.objective,
                "iterations": c.iterations,
                "converged": c.converged,
                "constant": c.constant,
            })
        })
        .collect();
    let results = json!({
        "pretokenizer": tokenizer.pretokenizer().name(),
        "vocab_size": tokenizer.vocab_size(),
        "task_kind": proxy.task_kind.name(),
        "pair_mode": proxy.pair_mode.name(),
        "label_space": proxy.label_space,
        "n_train": train.len(),
        "n_eval": ev.n_instances,
        "n_features": proxy.n_features(),
        "metric": ev.metric,
        "value": ev.value,
        "correct": ev.correct.iter().filter(|&&c| c).count(),
        "classifiers": classifiers,
    });
    let mut table = Table::new(&[
        "model",
        "pretokenizer",
        "vocab_size",
        "task_kind",
        "pair_mode",
        "n_train",
        "n_eval",
        "n_features",
        "metric",
        "value",
    ]);
    table.row(vec![
        args.model.display().to_string(),
        tokenizer.pretokenizer().name().into(),
        tokenizer.vocab_size().to_string(),
        proxy.task_kind.name().into(),
        proxy.pair_mode.name().into(),
        train.len().to_string(),
        ev.n_instances.to_string(),
        proxy.n_features().to_string(),
        ev.metric.into(),
        num(ev.value),
    ]);
    let config = RunConfig {
        subcommand: "proxy",
        seed,
        args,
    };
    let (j, t) = report::write(&args.report, &config, results, &table.finish())?;
    announce(&[&j, &t]);
    Ok(())
}
