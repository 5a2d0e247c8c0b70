use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::{json, Value};
use tokeval::metrics::{token_distribution, MetricReport, Normalizer, DEFAULT_ALPHA};
use tokeval::CorpusFormat;

use super::{announce, load_corpus, load_model};
use crate::report::{self, display, num, RunConfig, Table};

#[derive(Args, Debug, Serialize)]
pub struct StatsArgs {
    /// Model file; repeat to compare several tokenizers on the same corpus
    #[arg(long, required = true)]
    pub model: Vec<PathBuf>,

    /// Reference corpus file; repeat to concatenate several
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,

    /// Corpus layout: `lines` or `records`
    #[arg(long, default_value = "lines")]
    #[serde(serialize_with = "display")]
    pub format: CorpusFormat,

    /// Replace invalid UTF-8 instead of failing
    #[arg(long)]
    pub lossy: bool,

    /// Order of the Rényi entropy
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,

    /// Vocabulary size used to normalize efficiency: `full_vocab` or `observed_vocab`
    #[arg(long, default_value = "full_vocab")]
    #[serde(serialize_with = "display")]
    pub normalizer: Normalizer,

    /// Report files are PREFIX.json and PREFIX.tsv
    #[arg(long, value_name = "PREFIX", default_value = "stats")]
    pub report: PathBuf,
}

const COLUMNS: &[&str] = &[
    "model",
    "pretokenizer",
    "vocab_size",
    "corpus_token_count",
    "shannon_entropy",
    "renyi_entropy",
    "renyi_efficiency",
    "renyi_efficiency_full_vocab",
    "renyi_efficiency_observed_vocab",
    "vocabulary_coverage",
    "observed_types",
    "alpha",
    "normalizer",
];

pub fn run(args: &StatsArgs, seed: u64) -> Result<()> {
    let corpus = load_corpus(&args.corpus, args.format, args.lossy)?;
    let mut table = Table::new(COLUMNS);
    let mut rows = Vec::new();
    for path in &args.model {
        let model = load_model(path)?;
        let dist = token_distribution(&model, &corpus);
        let m = MetricReport::compute(&dist, args.alpha, args.normalizer)
            .with_context(|| format!("measuring {}", path.display()))?;
        table.row(vec![
            path.display().to_string(),
            model.pretokenizer().name().into(),
            m.vocab_size.to_string(),
            m.corpus_token_count.to_string(),
            num(m.shannon_entropy),
            num(m.renyi_entropy),
            num(m.renyi_efficiency),
            num(m.renyi_efficiency_full_vocab),
            m.renyi_efficiency_observed_vocab
                .map_or_else(String::new, num),
            num(m.vocabulary_coverage),
            m.observed_types.to_string(),
            num(m.alpha),
            m.normalizer.name().into(),
        ]);
        let mut row = json!({
            "model": path.display().to_string(),
            "pretokenizer": model.pretokenizer().name(),
        });
        if let (Value::Object(dst), Value::Object(src)) = (&mut row, serde_json::to_value(&m)?) {
            dst.extend(src);
        }
        rows.push(row);
    }
    let results = json!({
        "corpus": {
            "documents": corpus.len(),
            "words": corpus.word_count(),
            "bytes": corpus.total_bytes(),
        },
        "models": rows,
    });
    let config = RunConfig {
        subcommand: "stats",
        seed,
        args,
    };
    let (j, t) = report::write(&args.report, &config, results, &table.finish())?;
    announce(&[&j, &t]);
    Ok(())
}
