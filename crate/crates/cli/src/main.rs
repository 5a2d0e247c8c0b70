use std::num::NonZeroUsize;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};

mod commands;
mod report;

use commands::{correlate, encode, fit, mcnemar, proxy, stats};

/// Train byte-level BPE tokenizers and measure how they behave.
#[derive(Parser, Debug)]
#[command(name = "tokeval", version, about, propagate_version = true)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct GlobalArgs {
    /// Worker threads [default: available parallelism]
    #[arg(long, global = true, env = "TOKEVAL_THREADS")]
    threads: Option<NonZeroUsize>,

    /// Seed echoed into reports; every current step is deterministic
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train a BPE tokenizer on a corpus
    Fit(fit::FitArgs),
    /// Encode a corpus into token ids
    Encode(encode::EncodeArgs),
    /// Intrinsic measures of one or more tokenizers on a corpus
    Stats(stats::StatsArgs),
    /// Train and evaluate the logistic-regression proxy on a task
    Proxy(proxy::ProxyArgs),
    /// Pairwise McNemar tests between systems' predictions
    Mcnemar(mcnemar::McNemarArgs),
    /// Pearson correlation between columns of a TSV table
    Correlate(correlate::CorrelateArgs),
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let threads = cli
        .global
        .threads
        .or_else(|| std::thread::available_parallelism().ok())
        .map_or(1, NonZeroUsize::get);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .context("starting worker threads")?;
    let seed = cli.global.seed;
    pool.install(|| match &cli.command {
        Command::Fit(a) => fit::run(a, seed),
        Command::Encode(a) => encode::run(a, seed),
        Command::Stats(a) => stats::run(a, seed),
        Command::Proxy(a) => proxy::run(a, seed),
        Command::Mcnemar(a) => mcnemar::run(a, seed),
        Command::Correlate(a) => correlate::run(a, seed),
    })
}

fn main() -> ExitCode {
    // Usage errors exit with status 2 inside `parse`.
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
