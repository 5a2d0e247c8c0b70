//! Intrinsic, task-agnostic measures over a tokenizer's unigram distribution.
//!
//! All entropies are in nats. Zero-probability types contribute nothing
//! (`0 · ln 0 = 0`). Rényi entropy of order α is
//!
//! ```text
//! H_α(p) = ln(Σ p_i^α) / (1 − α)
//! ```
//!
//! and Rényi efficiency divides it by `ln V`, where `V` is either the full
//! vocabulary size or the number of token types actually observed.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::bpe::{EncodeCache, TokenId, TokenizerModel};
use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const DEFAULT_ALPHA: f64 = 2.5;

/// Empirical unigram counts of token ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenDistribution {
    counts: Vec<u64>,
    total: u64,
}

impl TokenDistribution {
    /// Builds a distribution from dense per-id counts; `counts.len()` is the
    /// reference vocabulary size.
    pub fn from_counts(counts: Vec<u64>) -> Self {
        let total = counts.iter().sum();
        TokenDistribution { counts, total }
    }

    pub fn from_ids(ids: &[TokenId], vocab_size: usize) -> Result<Self> {
        let mut counts = vec![0u64; vocab_size];
        for &id in ids {
            *counts
                .get_mut(id as usize)
                .ok_or(Error::TokenOutOfRange { id, vocab_size })? += 1;
        }
        Ok(Self::from_counts(counts))
    }

    pub fn count(&self, id: TokenId) -> u64 {
        self.counts.get(id as usize).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn vocab_size(&self) -> usize {
        self.counts.len()
    }

    /// Number of ids with a nonzero count.
    pub fn observed_types(&self) -> usize {
        self.counts.iter().filter(|&&c| c > 0).count()
    }

    /// Sums two distributions over the same vocabulary.
    pub fn merge(mut self, other: &TokenDistribution) -> Self {
        assert_eq!(self.counts.len(), other.counts.len(), "vocabulary mismatch");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
        self
    }

    fn probabilities(&self) -> Result<impl Iterator<Item = f64> + '_> {
        if self.total == 0 {
            return Err(Error::EmptyDistribution);
        }
        let total = self.total as f64;
        Ok(self
            .counts
            .iter()
            .filter(|&&c| c > 0)
            .map(move |&c| c as f64 / total))
    }
}

/// Encodes every document of `corpus` and counts the resulting ids.
pub fn token_distribution(model: &TokenizerModel, corpus: &Corpus) -> TokenDistribution {
    token_distribution_of(model, corpus.iter())
}

/// Like [`token_distribution`] for any collection of texts.
pub fn token_distribution_of<'a, I>(model: &TokenizerModel, texts: I) -> TokenDistribution
where
    I: IntoIterator<Item = &'a str>,
{
    let texts: Vec<&str> = texts.into_iter().collect();
    let vocab_size = model.vocab_size();
    let counts = texts
        .par_iter()
        .fold(
            || (vec![0u64; vocab_size], EncodeCache::default(), Vec::new()),
            |(mut counts, mut cache, mut ids), text| {
                ids.clear();
                model.encode_cached(text, &mut cache, &mut ids);
                for &id in &ids {
                    counts[id as usize] += 1;
                }
                (counts, cache, ids)
            },
        )
        .map(|(counts, _, _)| counts)
        .reduce(
            || vec![0u64; vocab_size],
            |mut a, b| {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
                a
            },
        );
    TokenDistribution::from_counts(counts)
}

pub fn corpus_token_count(dist: &TokenDistribution) -> u64 {
    dist.total()
}

pub fn shannon_entropy(dist: &TokenDistribution) -> Result<f64> {
    Ok(-dist.probabilities()?.map(|p| p * p.ln()).sum::<f64>())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha.is_finite() && alpha > 0.0 && alpha != 1.0) {
        return Err(Error::InvalidAlpha(alpha));
    }
    Ok(())
}

pub fn renyi_entropy(dist: &TokenDistribution, alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    // ln Σ p^α via log-sum-exp for stability at large α
    let logs: Vec<f64> = dist.probabilities()?.map(|p| alpha * p.ln()).collect();
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = max + logs.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
    let h = log_sum / (1.0 - alpha);
    // rounding can leave -0.0 or a hair below zero for one-type distributions
    Ok(h.max(0.0))
}

/// Which vocabulary size normalizes Rényi efficiency.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalizer {
    /// Size of the full tokenizer vocabulary.
    #[default]
    FullVocab,
    /// Number of token types that occur in the distribution.
    ObservedVocab,
}

impl Normalizer {
    pub fn name(self) -> &'static str {
        match self {
            Normalizer::FullVocab => "full_vocab",
            Normalizer::ObservedVocab => "observed_vocab",
        }
    }

    pub fn size(self, dist: &TokenDistribution) -> usize {
        match self {
            Normalizer::FullVocab => dist.vocab_size(),
            Normalizer::ObservedVocab => dist.observed_types(),
        }
    }
}

impl fmt::Display for Normalizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Normalizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" | "full_vocab" => Ok(Normalizer::FullVocab),
            "observed" | "observed_vocab" => Ok(Normalizer::ObservedVocab),
            other => Err(Error::InvalidInput(format!(
                "unknown normalizer {other:?} (expected full_vocab or observed_vocab)"
            ))),
        }
    }
}

pub fn renyi_efficiency(
    dist: &TokenDistribution,
    alpha: f64,
    normalizer: Normalizer,
) -> Result<f64> {
    let v = normalizer.size(dist);
    if v < 2 {
        return Err(Error::NormalizerTooSmall(v));
    }
    let h = renyi_entropy(dist, alpha)?;
    Ok((h / (v as f64).ln()).clamp(0.0, 1.0))
}

/// Fraction of the model's vocabulary that occurs when encoding `corpus`.
pub fn vocabulary_coverage(model: &TokenizerModel, corpus: &Corpus) -> f64 {
    coverage(&token_distribution(model, corpus))
}

pub fn coverage(dist: &TokenDistribution) -> f64 {
    if dist.vocab_size() == 0 {
        return 0.0;
    }
    dist.observed_types() as f64 / dist.vocab_size() as f64
}

/// All intrinsic measures for one tokenizer on one reference corpus.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub corpus_token_count: u64,
    pub shannon_entropy: f64,
    pub renyi_entropy: f64,
    /// Efficiency under the configured normalizer.
    pub renyi_efficiency: f64,
    pub renyi_efficiency_full_vocab: f64,
    /// `None` when fewer than two types were observed.
    pub renyi_efficiency_observed_vocab: Option<f64>,
    pub alpha: f64,
    pub normalizer: Normalizer,
    pub vocabulary_coverage: f64,
    pub vocab_size: usize,
    pub observed_types: usize,
}

impl MetricReport {
    pub fn compute(dist: &TokenDistribution, alpha: f64, normalizer: Normalizer) -> Result<Self> {
        let full = renyi_efficiency(dist, alpha, Normalizer::FullVocab)?;
        let observed = match renyi_efficiency(dist, alpha, Normalizer::ObservedVocab) {
            Ok(v) => Some(v),
            Err(Error::NormalizerTooSmall(_)) => None,
            Err(e) => return Err(e),
        };
        let renyi_efficiency = match normalizer {
            Normalizer::FullVocab => full,
            Normalizer::ObservedVocab => {
                observed.ok_or(Error::NormalizerTooSmall(dist.observed_types()))?
            }
        };
        Ok(MetricReport {
            corpus_token_count: corpus_token_count(dist),
            shannon_entropy: shannon_entropy(dist)?,
            renyi_entropy: renyi_entropy(dist, alpha)?,
            renyi_efficiency,
            renyi_efficiency_full_vocab: full,
            renyi_efficiency_observed_vocab: observed,
            alpha,
            normalizer,
            vocabulary_coverage: coverage(dist),
            vocab_size: dist.vocab_size(),
            observed_types: dist.observed_types(),
        })
    }
}
