use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::rc::Rc;

use rayon::prelude::*;
use rustc_hash::{FxHashMap, FxHashSet};

use super::{TokenId, TokenizerModel, BASE_VOCAB_SIZE};
use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::pretokenize::PreTokenizer;

type Pair = (TokenId, TokenId);

struct Word {
    ids: Vec<TokenId>,
    count: u64,
}

impl Word {
    fn pairs(&self) -> impl Iterator<Item = Pair> + '_ {
        self.ids.windows(2).map(|w| (w[0], w[1]))
    }

    /// Replaces non-overlapping occurrences of `pair`, scanning left to right.
    fn merge(&mut self, pair: Pair, new_id: TokenId) {
        let mut out = Vec::with_capacity(self.ids.len());
        let mut i = 0;
        while i < self.ids.len() {
            if i + 1 < self.ids.len() && (self.ids[i], self.ids[i + 1]) == pair {
                out.push(new_id);
                i += 2;
            } else {
                out.push(self.ids[i]);
                i += 1;
            }
        }
        self.ids = out;
    }
}

/// Heap entry. Higher count wins; on equal counts the pair whose left token
/// bytes sort first wins, then right token bytes, then ids.
struct Candidate {
    count: u64,
    pair: Pair,
    left: Rc<[u8]>,
    right: Rc<[u8]>,
}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.count
            .cmp(&other.count)
            .then_with(|| other.left.cmp(&self.left))
            .then_with(|| other.right.cmp(&self.right))
            .then_with(|| other.pair.cmp(&self.pair))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl PartialEq for Candidate {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Candidate {}

/// Counts pre-token types over the corpus, in parallel, and returns them
/// sorted by bytes so training order does not depend on thread scheduling.
fn count_pretokens(corpus: &Corpus, pretokenizer: PreTokenizer) -> Vec<(Vec<u8>, u64)> {
    let counts = corpus
        .documents()
        .par_iter()
        .fold(FxHashMap::<&str, u64>::default, |mut acc, doc| {
            for piece in pretokenizer.split(doc) {
                *acc.entry(piece.text).or_default() += 1;
            }
            acc
        })
        .reduce(FxHashMap::default, |mut a, b| {
            if a.len() < b.len() {
                return merge_counts(b, a);
            }
            merge_counts(std::mem::take(&mut a), b)
        });
    let mut words: Vec<(Vec<u8>, u64)> = counts
        .into_iter()
        .map(|(k, v)| (k.as_bytes().to_vec(), v))
        .collect();
    words.sort_unstable();
    words
}

fn merge_counts<'a>(
    mut into: FxHashMap<&'a str, u64>,
    from: FxHashMap<&'a str, u64>,
) -> FxHashMap<&'a str, u64> {
    for (k, v) in from {
        *into.entry(k).or_default() += v;
    }
    into
}

fn count_pairs(words: &[Word]) -> (FxHashMap<Pair, u64>, FxHashMap<Pair, FxHashSet<usize>>) {
    words
        .par_iter()
        .enumerate()
        .fold(
            || (FxHashMap::default(), FxHashMap::default()),
            |(mut counts, mut occurs): (
                FxHashMap<Pair, u64>,
                FxHashMap<Pair, FxHashSet<usize>>,
            ),
             (idx, word)| {
                for pair in word.pairs() {
                    *counts.entry(pair).or_default() += word.count;
                    occurs.entry(pair).or_default().insert(idx);
                }
                (counts, occurs)
            },
        )
        .reduce(
            || (FxHashMap::default(), FxHashMap::default()),
            |(mut c1, mut o1), (c2, o2)| {
                for (k, v) in c2 {
                    *c1.entry(k).or_default() += v;
                }
                for (k, v) in o2 {
                    o1.entry(k).or_default().extend(v);
                }
                (c1, o1)
            },
        )
}

/// Trains a byte-level BPE model with `vocab_size` total tokens (256 base
/// bytes included).
///
/// Each step merges the most frequent adjacent pair over the pre-tokenized
/// corpus. Pairs seen fewer than twice are never merged, so training can stop
/// short of `vocab_size`; the achieved size is what the model reports.
pub fn train(
    corpus: &Corpus,
    pretokenizer: PreTokenizer,
    vocab_size: usize,
) -> Result<TokenizerModel> {
    if vocab_size < BASE_VOCAB_SIZE {
        return Err(Error::VocabTooSmall(vocab_size));
    }
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }

    let mut words: Vec<Word> = count_pretokens(corpus, pretokenizer)
        .into_iter()
        .map(|(bytes, count)| Word {
            ids: bytes.into_iter().map(TokenId::from).collect(),
            count,
        })
        .collect();

    let mut vocab: Vec<Rc<[u8]>> = (0..=255u8).map(|b| Rc::from(&[b][..])).collect();
    let mut merges: Vec<Pair> = Vec::with_capacity(vocab_size - BASE_VOCAB_SIZE);
    if vocab_size == BASE_VOCAB_SIZE {
        return TokenizerModel::from_merges(pretokenizer, merges, vocab_size);
    }

    let (mut pair_counts, mut occurs) = count_pairs(&words);
    let candidate = |pair: Pair, count: u64, vocab: &[Rc<[u8]>]| Candidate {
        count,
        pair,
        left: vocab[pair.0 as usize].clone(),
        right: vocab[pair.1 as usize].clone(),
    };
    let mut heap: BinaryHeap<Candidate> = pair_counts
        .iter()
        .map(|(&pair, &count)| candidate(pair, count, &vocab))
        .collect();

    while vocab.len() < vocab_size {
        let Some(top) = heap.pop() else { break };
        if pair_counts.get(&top.pair) != Some(&top.count) {
            continue; // stale entry
        }
        if top.count < 2 {
            break;
        }

        let pair = top.pair;
        let new_id = vocab.len() as TokenId;
        let mut bytes = top.left.to_vec();
        bytes.extend_from_slice(&top.right);
        vocab.push(Rc::from(bytes));
        merges.push(pair);

        let mut affected: Vec<usize> = occurs
            .remove(&pair)
            .map(|s| s.into_iter().collect())
            .unwrap_or_default();
        affected.sort_unstable();

        let mut delta: FxHashMap<Pair, i64> = FxHashMap::default();
        for idx in affected {
            let word = &mut words[idx];
            if !word.pairs().any(|p| p == pair) {
                continue;
            }
            let count = word.count as i64;
            for p in word.pairs() {
                *delta.entry(p).or_default() -= count;
            }
            word.merge(pair, new_id);
            for p in word.pairs() {
                *delta.entry(p).or_default() += count;
                if p.0 == new_id || p.1 == new_id {
                    occurs.entry(p).or_default().insert(idx);
                }
            }
        }

        let mut changed: Vec<(Pair, i64)> = delta.into_iter().filter(|&(_, d)| d != 0).collect();
        changed.sort_unstable();
        for (p, d) in changed {
            let slot = pair_counts.entry(p).or_default();
            let updated = *slot as i64 + d;
            debug_assert!(updated >= 0, "pair count went negative");
            if updated <= 0 {
                pair_counts.remove(&p);
            } else {
                *slot = updated as u64;
                heap.push(candidate(p, updated as u64, &vocab));
            }
        }
        debug_assert!(!pair_counts.contains_key(&pair));
    }

    TokenizerModel::from_merges(pretokenizer, merges, vocab_size)
}
