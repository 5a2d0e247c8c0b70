//! Byte-level BPE models.
//!
//! Ids `0..256` are the single bytes in byte order. Merge `i` creates id
//! `256 + i` from an ordered pair of earlier ids, so the merge list alone
//! determines the vocabulary. No special tokens are reserved; callers that
//! need them can use ids at or above [`TokenizerModel::vocab_size`].

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::pretokenize::PreTokenizer;

mod io;
mod train;

pub use io::MODEL_FORMAT_VERSION;
pub use train::train;

pub type TokenId = u32;

/// Size of the byte-level base vocabulary.
pub const BASE_VOCAB_SIZE: usize = 256;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizerModel {
    pretokenizer: PreTokenizer,
    vocab: Vec<Vec<u8>>,
    merges: Vec<(TokenId, TokenId)>,
    requested_vocab_size: usize,
    ranks: FxHashMap<(TokenId, TokenId), u32>,
}

/// Token ids produced by a model with `vocab_size` entries.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    pub ids: Vec<TokenId>,
    pub vocab_size: usize,
}

impl TokenSequence {
    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

impl TokenizerModel {
    /// A model with only the 256 byte tokens.
    pub fn base(pretokenizer: PreTokenizer) -> Self {
        Self::from_merges(pretokenizer, Vec::new(), BASE_VOCAB_SIZE)
            .expect("empty merge list is always valid")
    }

    /// Builds a model from an ordered merge list, checking that every merge
    /// only references ids that exist before it.
    pub fn from_merges(
        pretokenizer: PreTokenizer,
        merges: Vec<(TokenId, TokenId)>,
        requested_vocab_size: usize,
    ) -> Result<Self> {
        let mut vocab: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
        let mut ranks = FxHashMap::default();
        for (rank, &(left, right)) in merges.iter().enumerate() {
            let born = vocab.len() as TokenId;
            if left >= born || right >= born {
                return Err(Error::InvalidModel(format!(
                    "merge {rank} ({left}, {right}) references an id not yet created (next id is {born})"
                )));
            }
            if ranks.insert((left, right), rank as u32).is_some() {
                return Err(Error::InvalidModel(format!(
                    "merge {rank} ({left}, {right}) duplicates an earlier merge"
                )));
            }
            let mut bytes = vocab[left as usize].clone();
            bytes.extend_from_slice(&vocab[right as usize]);
            vocab.push(bytes);
        }
        Ok(TokenizerModel {
            pretokenizer,
            vocab,
            merges,
            requested_vocab_size,
            ranks,
        })
    }

    pub fn pretokenizer(&self) -> PreTokenizer {
        self.pretokenizer
    }

    /// Number of tokens, base bytes included.
    pub fn vocab_size(&self) -> usize {
        self.vocab.len()
    }

    /// The size asked for at training time; may exceed [`vocab_size`](Self::vocab_size)
    /// when training ran out of repeated pairs.
    pub fn requested_vocab_size(&self) -> usize {
        self.requested_vocab_size
    }

    pub fn merges(&self) -> &[(TokenId, TokenId)] {
        &self.merges
    }

    pub fn vocab(&self) -> &[Vec<u8>] {
        &self.vocab
    }

    pub fn token_bytes(&self, id: TokenId) -> Option<&[u8]> {
        self.vocab.get(id as usize).map(Vec::as_slice)
    }

    pub fn merge_rank(&self, left: TokenId, right: TokenId) -> Option<u32> {
        self.ranks.get(&(left, right)).copied()
    }

    /// Model made of the first `n` merges of this one.
    pub fn truncated(&self, n: usize) -> TokenizerModel {
        let n = n.min(self.merges.len());
        Self::from_merges(
            self.pretokenizer,
            self.merges[..n].to_vec(),
            BASE_VOCAB_SIZE + n,
        )
        .expect("prefix of a valid merge list is valid")
    }

    pub fn encode(&self, text: &str) -> TokenSequence {
        let mut ids = Vec::new();
        self.encode_into(text, &mut ids);
        TokenSequence {
            ids,
            vocab_size: self.vocab_size(),
        }
    }

    /// Appends the ids for `text` to `out`.
    pub fn encode_into(&self, text: &str, out: &mut Vec<TokenId>) {
        for piece in self.pretokenizer.split(text) {
            self.encode_piece_into(piece.bytes(), out);
        }
    }

    /// Encodes with a memo of already-seen pre-tokens.
    pub fn encode_cached(&self, text: &str, cache: &mut EncodeCache, out: &mut Vec<TokenId>) {
        for piece in self.pretokenizer.split(text) {
            if let Some(ids) = cache.map.get(piece.text) {
                out.extend_from_slice(ids);
                continue;
            }
            let start = out.len();
            self.encode_piece_into(piece.bytes(), out);
            if cache.map.len() < cache.capacity {
                cache
                    .map
                    .insert(piece.text.to_owned(), out[start..].to_vec());
            }
        }
    }

    /// Encodes a single pre-token: start from bytes and apply merges in
    /// ascending rank order, leftmost occurrence first.
    pub fn encode_piece(&self, bytes: &[u8]) -> Vec<TokenId> {
        let mut out = Vec::with_capacity(bytes.len());
        self.encode_piece_into(bytes, &mut out);
        out
    }

    fn encode_piece_into(&self, bytes: &[u8], out: &mut Vec<TokenId>) {
        match bytes.len() {
            0 => return,
            1 => {
                out.push(bytes[0] as TokenId);
                return;
            }
            _ => {}
        }
        if self.merges.is_empty() {
            out.extend(bytes.iter().map(|&b| b as TokenId));
            return;
        }

        // Doubly linked list over symbol slots; a merged symbol keeps the
        // slot of its left part, so slot order is text order.
        let n = bytes.len();
        let mut id: Vec<TokenId> = bytes.iter().map(|&b| b as TokenId).collect();
        let mut prev: Vec<usize> = (0..n).map(|i| i.wrapping_sub(1)).collect();
        let mut next: Vec<usize> = (1..=n).collect();
        let mut alive = vec![true; n];

        let mut heap = BinaryHeap::new();
        for i in 0..n - 1 {
            if let Some(rank) = self.merge_rank(id[i], id[i + 1]) {
                heap.push(Reverse((rank, i)));
            }
        }

        while let Some(Reverse((rank, i))) = heap.pop() {
            let j = next[i];
            if !alive[i] || j >= n {
                continue;
            }
            let (left, right) = self.merges[rank as usize];
            if id[i] != left || id[j] != right {
                continue;
            }
            id[i] = BASE_VOCAB_SIZE as TokenId + rank;
            alive[j] = false;
            let after = next[j];
            next[i] = after;
            if after < n {
                prev[after] = i;
            }
            let before = prev[i];
            if before < n {
                if let Some(r) = self.merge_rank(id[before], id[i]) {
                    heap.push(Reverse((r, before)));
                }
            }
            if after < n {
                if let Some(r) = self.merge_rank(id[i], id[after]) {
                    heap.push(Reverse((r, i)));
                }
            }
        }

        let mut i = 0;
        while i < n {
            out.push(id[i]);
            i = next[i];
        }
    }

    /// Concatenated bytes of `ids`.
    pub fn decode(&self, ids: &[TokenId]) -> Result<Vec<u8>> {
        let mut out = Vec::new();
        for &id in ids {
            let bytes = self.token_bytes(id).ok_or(Error::TokenOutOfRange {
                id,
                vocab_size: self.vocab_size(),
            })?;
            out.extend_from_slice(bytes);
        }
        Ok(out)
    }

    pub fn decode_sequence(&self, seq: &TokenSequence) -> Result<Vec<u8>> {
        self.decode(&seq.ids)
    }

    /// Human-readable rendering of a token (spaces as `_`).
    pub fn display_token(&self, id: TokenId) -> Option<String> {
        self.token_bytes(id).map(display_bytes)
    }
}

/// Renders token bytes for dumps: space becomes `_`, tab/newline/CR are
/// escaped, other control bytes and invalid UTF-8 appear as `<0xNN>`.
pub fn display_bytes(bytes: &[u8]) -> String {
    let mut out = String::new();
    for chunk in bytes.utf8_chunks() {
        for c in chunk.valid().chars() {
            match c {
                ' ' => out.push('_'),
                '\n' => out.push_str("\\n"),
                '\t' => out.push_str("\\t"),
                '\r' => out.push_str("\\r"),
                c if c.is_control() => {
                    let mut buf = [0u8; 4];
                    for b in c.encode_utf8(&mut buf).bytes() {
                        out.push_str(&format!("<0x{b:02X}>"));
                    }
                }
                c => out.push(c),
            }
        }
        for b in chunk.invalid() {
            out.push_str(&format!("<0x{b:02X}>"));
        }
    }
    out
}

/// Memo of pre-token encodings, bounded by entry count.
#[derive(Debug, Clone)]
pub struct EncodeCache {
    map: FxHashMap<String, Vec<TokenId>>,
    capacity: usize,
}

impl EncodeCache {
    pub fn new(capacity: usize) -> Self {
        EncodeCache {
            map: FxHashMap::default(),
            capacity,
        }
    }
}

impl Default for EncodeCache {
    fn default() -> Self {
        EncodeCache::new(1 << 18)
    }
}
