pub mod correlate;
pub mod encode;
pub mod fit;
pub mod mcnemar;
pub mod proxy;
pub mod stats;

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use tokeval::{Corpus, CorpusFormat, TokenizerModel};

/// Loads and concatenates corpus files in the order given.
pub fn load_corpus(paths: &[PathBuf], format: CorpusFormat, lossy: bool) -> Result<Corpus> {
    let mut corpus = Corpus::default();
    for path in paths {
        let part = Corpus::load(path, format, lossy)
            .with_context(|| format!("loading corpus {}", path.display()))?;
        corpus = corpus.concat(&part);
    }
    Ok(corpus)
}

pub fn load_model(path: &Path) -> Result<TokenizerModel> {
    TokenizerModel::load(path).with_context(|| format!("loading model {}", path.display()))
}

/// Reads a file of one entry per line; a trailing newline ends the last line.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(text
        .lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l).to_owned())
        .collect())
}

/// Writes an output file, creating its directory first.
pub fn write_output(path: &Path, contents: impl AsRef<[u8]>) -> Result<()> {
    create_parent(path)?;
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

pub fn create_parent(path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    Ok(())
}

pub fn announce(paths: &[&Path]) {
    for p in paths {
        eprintln!("wrote {}", p.display());
    }
}
