use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::Args;
use serde::Serialize;
use serde_json::json;
use tokeval::bpe::train;
use tokeval::{CorpusFormat, PreTokenizer};

use super::{announce, create_parent, load_corpus};
use crate::report::{self, display, RunConfig, Table};

#[derive(Args, Debug, Serialize)]
pub struct FitArgs {
    /// Corpus file; repeat to concatenate several
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,

    /// Corpus layout: `lines` (one document per line) or `records`
    #[arg(long, default_value = "lines")]
    #[serde(serialize_with = "display")]
    pub format: CorpusFormat,

    /// Replace invalid UTF-8 instead of failing
    #[arg(long)]
    pub lossy: bool,

    /// One of no, ws, _ws, gpt2, llama3
    #[arg(long, default_value = "gpt2")]
    #[serde(serialize_with = "display")]
    pub pretokenizer: PreTokenizer,

    /// Total vocabulary size including the 256 byte tokens
    #[arg(long, default_value_t = 32_000)]
    pub vocab_size: usize,

    /// Where to write the model
    #[arg(long)]
    pub out: PathBuf,

    /// Also write a training report to PREFIX.json and PREFIX.tsv
    #[arg(long, value_name = "PREFIX")]
    pub report: Option<PathBuf>,
}

pub fn run(args: &FitArgs, seed: u64) -> Result<()> {
    let corpus = load_corpus(&args.corpus, args.format, args.lossy)?;
    let model = train(&corpus, args.pretokenizer, args.vocab_size).context("training")?;
    create_parent(&args.out)?;
    model
        .save(&args.out)
        .with_context(|| format!("writing model {}", args.out.display()))?;
    eprintln!(
        "{} merges, vocabulary {} of {} requested",
        model.merges().len(),
        model.vocab_size(),
        args.vocab_size
    );
    announce(&[&args.out]);

    if let Some(prefix) = &args.report {
        let results = json!({
            "pretokenizer": model.pretokenizer().name(),
            "requested_vocab_size": model.requested_vocab_size(),
            "achieved_vocab_size": model.vocab_size(),
            "merges": model.merges().len(),
            "documents": corpus.len(),
            "words": corpus.word_count(),
            "bytes": corpus.total_bytes(),
        });
        let mut table = Table::new(&[
            "pretokenizer",
            "requested_vocab_size",
            "achieved_vocab_size",
            "merges",
            "documents",
            "words",
            "bytes",
        ]);
        table.row(vec![
            model.pretokenizer().name().into(),
            model.requested_vocab_size().to_string(),
            model.vocab_size().to_string(),
            model.merges().len().to_string(),
            corpus.len().to_string(),
            corpus.word_count().to_string(),
            corpus.total_bytes().to_string(),
        ]);
        let config = RunConfig {
            subcommand: "fit",
            seed,
            args,
        };
        let (j, t) = report::write(prefix, &config, results, &table.finish())?;
        announce(&[&j, &t]);
    }
    Ok(())
}
