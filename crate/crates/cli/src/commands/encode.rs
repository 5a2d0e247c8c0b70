use std::fmt::Write as _;
use std::path::PathBuf;

use anyhow::Result;
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use tokeval::CorpusFormat;

use super::{announce, load_corpus, load_model, write_output};
use crate::report::{self, display, num, RunConfig, Table};

#[derive(Args, Debug, Serialize)]
pub struct EncodeArgs {
    /// Model file written by `fit`
    #[arg(long)]
    pub model: PathBuf,

    /// Corpus file; repeat to concatenate several
    #[arg(long, required = true)]
    pub corpus: Vec<PathBuf>,

    /// Corpus layout: `lines` or `records`
    #[arg(long, default_value = "lines")]
    #[serde(serialize_with = "display")]
    pub format: CorpusFormat,

    /// Replace invalid UTF-8 instead of failing
    #[arg(long)]
    pub lossy: bool,

    /// Output file: one line of space-separated ids per document
    #[arg(long)]
    pub out: PathBuf,

    /// Write readable token strings (spaces shown as `_`) instead of ids
    #[arg(long)]
    pub tokens: bool,

    /// Also write a summary report to PREFIX.json and PREFIX.tsv
    #[arg(long, value_name = "PREFIX")]
    pub report: Option<PathBuf>,
}

pub fn run(args: &EncodeArgs, seed: u64) -> Result<()> {
    let model = load_model(&args.model)?;
    let corpus = load_corpus(&args.corpus, args.format, args.lossy)?;
    let lines: Vec<(String, usize)> = corpus
        .documents()
        .par_iter()
        .map(|doc| {
            let ids = model.encode(doc).ids;
            let mut line = String::new();
            for (k, &id) in ids.iter().enumerate() {
                if k > 0 {
                    line.push(' ');
                }
                if args.tokens {
                    line.push_str(&model.display_token(id).expect("encoded ids are in range"));
                } else {
                    let _ = write!(line, "{id}");
                }
            }
            line.push('\n');
            (line, ids.len())
        })
        .collect();
    let tokens: usize = lines.iter().map(|(_, n)| n).sum();
    let text: String = lines.into_iter().map(|(l, _)| l).collect();
    write_output(&args.out, text)?;
    announce(&[&args.out]);

    if let Some(prefix) = &args.report {
        let words = corpus.word_count();
        let per_word = if words == 0 {
            0.0
        } else {
            tokens as f64 / words as f64
        };
        let results = json!({
            "documents": corpus.len(),
            "tokens": tokens,
            "words": words,
            "bytes": corpus.total_bytes(),
            "tokens_per_word": per_word,
        });
        let mut table = Table::new(&["documents", "tokens", "words", "bytes", "tokens_per_word"]);
        table.row(vec![
            corpus.len().to_string(),
            tokens.to_string(),
            words.to_string(),
            corpus.total_bytes().to_string(),
            num(per_word),
        ]);
        let config = RunConfig {
            subcommand: "encode",
            seed,
            args,
        };
        let (j, t) = report::write(prefix, &config, results, &table.finish())?;
        announce(&[&j, &t]);
    }
    Ok(())
}
