//! Byte-level BPE tokenizer training and pre-evaluation.
//!
//! The crate covers the whole offline loop for comparing tokenizer settings
//! before committing to expensive model training:
//!
//! * [`corpus`] loads text corpora (plain lines or length-framed records).
//! * [`pretokenize`] splits text with one of five fixed segmentation rules.
//! * [`bpe`] trains, applies, and serializes byte-level BPE models.
//! * [`metrics`] computes intrinsic measures (corpus token count, Shannon and
//!   Rényi entropy, Rényi efficiency, vocabulary coverage).
//! * [`proxy`] trains L1-regularized one-vs-rest logistic regressions over
//!   bag-of-token features as a task-aware quality estimate.
//! * [`stats`] provides McNemar's test, Bonferroni adjustment and Pearson
//!   correlation for comparing tokenizers.

pub mod bpe;
pub mod corpus;
mod error;
pub mod metrics;
pub mod pretokenize;
pub mod proxy;
pub mod stats;

pub use bpe::{TokenId, TokenSequence, TokenizerModel};
pub use corpus::{Corpus, CorpusFormat};
pub use error::{Error, Result};
pub use pretokenize::{PreToken, PreTokenizer};
