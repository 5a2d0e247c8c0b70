//! Slow, direct reference implementations for differential testing of the
//! `tokeval` crate, plus seeded random input generators.
//!
//! Nothing here shares code with the implementations under test beyond the
//! public data types.

use std::collections::HashMap;
use std::sync::OnceLock;

use rand::seq::SliceRandom;
use rand::Rng;
use tokeval::proxy::{Instance, PairMode, SparseBinaryMatrix, TaskDataset};
use tokeval::{PreTokenizer, TokenId};

/// The example sentence used for the segmentation fixtures. The apostrophe in
/// "isn’t" is U+2019 RIGHT SINGLE QUOTATION MARK.
pub const FIXTURE_TEXT: &str =
    "well... $3000 for a tokenizer isn\u{2019}t cheapz #lol :)\n\nhttps://en.wikipedia.org/wiki/Sarcasm";

/// The same sentence with an ASCII apostrophe.
pub const FIXTURE_TEXT_ASCII: &str =
    "well... $3000 for a tokenizer isn't cheapz #lol :)\n\nhttps://en.wikipedia.org/wiki/Sarcasm";

// ---------------------------------------------------------------------------
// Pre-tokenization through a backtracking regex engine.

fn reference_regex(pt: PreTokenizer) -> &'static fancy_regex::Regex {
    static CACHE: OnceLock<Vec<fancy_regex::Regex>> = OnceLock::new();
    let all = CACHE.get_or_init(|| {
        PreTokenizer::ALL
            .iter()
            .map(|p| fancy_regex::Regex::new(p.pattern()).expect("pattern compiles"))
            .collect()
    });
    let idx = PreTokenizer::ALL
        .iter()
        .position(|&p| p == pt)
        .expect("listed");
    &all[idx]
}

/// Splits `text` with a backtracking engine that supports lookahead natively.
pub fn reference_pretokenize(pt: PreTokenizer, text: &str) -> Vec<String> {
    if text.is_empty() {
        return Vec::new();
    }
    if pt == PreTokenizer::No {
        return vec![text.to_owned()];
    }
    let re = reference_regex(pt);
    let mut pieces: Vec<(usize, usize, bool)> = Vec::new();
    let mut last = 0;
    for m in re.find_iter(text) {
        let m = m.expect("no backtrack limit on short inputs");
        if m.start() > last {
            pieces.push((last, m.start(), false));
        }
        if m.end() > m.start() {
            pieces.push((m.start(), m.end(), true));
        }
        last = m.end();
    }
    if last < text.len() {
        pieces.push((last, text.len(), false));
    }
    let spans: Vec<(usize, usize)> = if pt == PreTokenizer::LeadingWs {
        // A delimiter glues onto the piece after it unless that piece is
        // itself a delimiter.
        let mut out: Vec<(usize, usize)> = Vec::new();
        let mut next_is_match = false;
        for &(s, e, is_match) in pieces.iter().rev() {
            if is_match && !next_is_match {
                if let Some((_, end)) = out.pop() {
                    out.push((s, end));
                } else {
                    out.push((s, e));
                }
            } else {
                out.push((s, e));
            }
            next_is_match = is_match;
        }
        out.reverse();
        out
    } else {
        pieces.iter().map(|&(s, e, _)| (s, e)).collect()
    };
    spans.iter().map(|&(s, e)| text[s..e].to_owned()).collect()
}

// ---------------------------------------------------------------------------
// BPE.

/// Trains by recounting every adjacent pair of every pre-token occurrence on
/// each iteration. Ties go to the smaller left bytes, then smaller right
/// bytes, then smaller ids.
pub fn naive_train<S: AsRef<str>>(
    texts: &[S],
    pt: PreTokenizer,
    vocab_size: usize,
) -> Vec<(TokenId, TokenId)> {
    let mut vocab: Vec<Vec<u8>> = (0..=255u8).map(|b| vec![b]).collect();
    let mut words: Vec<Vec<TokenId>> = texts
        .iter()
        .flat_map(|t| reference_pretokenize(pt, t.as_ref()))
        .map(|w| w.bytes().map(TokenId::from).collect())
        .collect();
    let mut merges = Vec::new();
    while vocab.len() < vocab_size {
        let mut counts: HashMap<(TokenId, TokenId), u64> = HashMap::new();
        for w in &words {
            for p in w.windows(2) {
                *counts.entry((p[0], p[1])).or_default() += 1;
            }
        }
        let best = counts.into_iter().max_by(|(pa, ca), (pb, cb)| {
            ca.cmp(cb)
                .then_with(|| vocab[pb.0 as usize].cmp(&vocab[pa.0 as usize]))
                .then_with(|| vocab[pb.1 as usize].cmp(&vocab[pa.1 as usize]))
                .then_with(|| pb.cmp(pa))
        });
        let Some((pair, count)) = best else { break };
        if count < 2 {
            break;
        }
        let id = vocab.len() as TokenId;
        let mut bytes = vocab[pair.0 as usize].clone();
        bytes.extend_from_slice(&vocab[pair.1 as usize]);
        vocab.push(bytes);
        merges.push(pair);
        for w in &mut words {
            *w = apply_merge(w, pair, id);
        }
    }
    merges
}

fn apply_merge(word: &[TokenId], pair: (TokenId, TokenId), id: TokenId) -> Vec<TokenId> {
    let mut out = Vec::with_capacity(word.len());
    let mut i = 0;
    while i < word.len() {
        if i + 1 < word.len() && (word[i], word[i + 1]) == pair {
            out.push(id);
            i += 2;
        } else {
            out.push(word[i]);
            i += 1;
        }
    }
    out
}

/// Encodes by replaying every merge, in order, over each pre-token.
pub fn replay_encode(merges: &[(TokenId, TokenId)], pt: PreTokenizer, text: &str) -> Vec<TokenId> {
    let mut out = Vec::new();
    for piece in reference_pretokenize(pt, text) {
        let mut w: Vec<TokenId> = piece.bytes().map(TokenId::from).collect();
        for (rank, &pair) in merges.iter().enumerate() {
            w = apply_merge(&w, pair, 256 + rank as TokenId);
        }
        out.extend(w);
    }
    out
}

// ---------------------------------------------------------------------------
// L1 logistic regression.

/// `C * sum softplus(-y m) + |w|_1`, evaluated directly.
pub fn l1_logreg_objective(x: &SparseBinaryMatrix, y: &[bool], w: &[f64], b: f64, c: f64) -> f64 {
    let mut loss = 0.0;
    for (i, row) in x.rows().enumerate() {
        let m = b + row.iter().map(|&j| w[j as usize]).sum::<f64>();
        let z = if y[i] { -m } else { m };
        loss += (1.0 + z.exp()).ln();
    }
    c * loss + w.iter().map(|v| v.abs()).sum::<f64>()
}

fn dense_rows(x: &SparseBinaryMatrix) -> Vec<Vec<f64>> {
    x.rows()
        .map(|row| {
            let mut d = vec![0.0; x.n_cols()];
            for &j in row {
                d[j as usize] = 1.0;
            }
            d
        })
        .collect()
}

/// Solves a symmetric positive-definite system by Cholesky; `None` if the
/// matrix is not numerically positive definite.
fn cholesky_solve(a: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = (0..j).map(|k| l[i][k] * l[j][k]).sum();
            if i == j {
                let d = a[i][i] - s;
                if d <= 1e-14 {
                    return None;
                }
                l[i][i] = d.sqrt();
            } else {
                l[i][j] = (a[i][j] - s) / l[j][j];
            }
        }
    }
    let mut z = vec![0.0; n];
    for i in 0..n {
        z[i] = (rhs[i] - (0..i).map(|k| l[i][k] * z[k]).sum::<f64>()) / l[i][i];
    }
    let mut out = vec![0.0; n];
    for i in (0..n).rev() {
        out[i] = (z[i] - (i + 1..n).map(|k| l[k][i] * out[k]).sum::<f64>()) / l[i][i];
    }
    Some(out)
}

/// Exact minimizer for small problems by enumerating sign patterns.
///
/// For each assignment of {-1, 0, +1} to the weights, the weights marked 0
/// are fixed and the smooth surrogate `C * loss + sum s_j w_j` is minimized
/// with damped Newton over the free weights and intercept. The surrogate is
/// a lower bound on the objective that is tight at the optimum's own sign
/// pattern, so the best true objective over all candidates is the minimum.
/// Returns `(objective, weights, intercept)`.
pub fn sign_enumeration_oracle(x: &SparseBinaryMatrix, y: &[bool], c: f64) -> (f64, Vec<f64>, f64) {
    let p = x.n_cols();
    assert!(p <= 8, "enumeration is exponential in the feature count");
    let rows = dense_rows(x);
    let mut best = (f64::INFINITY, vec![0.0; p], 0.0);
    for code in 0..3usize.pow(p as u32) {
        let mut signs = vec![0.0; p];
        let mut k = code;
        for s in signs.iter_mut() {
            *s = [0.0, 1.0, -1.0][k % 3];
            k /= 3;
        }
        let free: Vec<usize> = (0..p).filter(|&j| signs[j] != 0.0).collect();
        let Some((w, b)) = newton_surrogate(&rows, y, c, &signs, &free) else {
            continue;
        };
        let obj = l1_logreg_objective(x, y, &w, b, c);
        if obj < best.0 {
            best = (obj, w, b);
        }
    }
    best
}

fn newton_surrogate(
    rows: &[Vec<f64>],
    y: &[bool],
    c: f64,
    signs: &[f64],
    free: &[usize],
) -> Option<(Vec<f64>, f64)> {
    let p = signs.len();
    let dim = free.len() + 1;
    let surrogate = |w: &[f64], b: f64| -> f64 {
        let mut v = 0.0;
        for (i, r) in rows.iter().enumerate() {
            let m = b + (0..p).map(|j| r[j] * w[j]).sum::<f64>();
            let z = if y[i] { -m } else { m };
            v += if z > 0.0 {
                z + (-z).exp().ln_1p()
            } else {
                z.exp().ln_1p()
            };
        }
        c * v + (0..p).map(|j| signs[j] * w[j]).sum::<f64>()
    };
    let mut w = vec![0.0; p];
    let mut b = 0.0;
    let mut f = surrogate(&w, b);
    for _ in 0..200 {
        let mut g = vec![0.0; dim];
        let mut h = vec![vec![0.0; dim]; dim];
        for (i, r) in rows.iter().enumerate() {
            let m = b + (0..p).map(|j| r[j] * w[j]).sum::<f64>();
            let prob = 1.0 / (1.0 + (-m).exp());
            let resid = prob - if y[i] { 1.0 } else { 0.0 };
            let curv = prob * (1.0 - prob);
            let feat: Vec<f64> = free.iter().map(|&j| r[j]).chain([1.0]).collect();
            for a in 0..dim {
                g[a] += c * resid * feat[a];
                for bb in 0..dim {
                    h[a][bb] += c * curv * feat[a] * feat[bb];
                }
            }
        }
        for (a, &j) in free.iter().enumerate() {
            g[a] += signs[j];
        }
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-12 {
            break;
        }
        for (a, row) in h.iter_mut().enumerate() {
            row[a] += 1e-12;
        }
        let step = cholesky_solve(&h, &g)?;
        let mut t = 1.0;
        loop {
            let mut w2 = w.clone();
            for (a, &j) in free.iter().enumerate() {
                w2[j] -= t * step[a];
            }
            let b2 = b - t * step[dim - 1];
            let f2 = surrogate(&w2, b2);
            if f2 <= f - 1e-4 * t * g.iter().zip(&step).map(|(a, s)| a * s).sum::<f64>() {
                w = w2;
                b = b2;
                f = f2;
                break;
            }
            t *= 0.5;
            if t < 1e-20 {
                return Some((w, b));
            }
        }
        if !f.is_finite() || f < -1e12 {
            return None;
        }
    }
    Some((w, b))
}

// ---------------------------------------------------------------------------
// Generators.

const ALPHABET: &[&str] = &[
    "a", "b", "e", "s", "t", "Z", "Q", "0", "4", "9", " ", " ", " ", "  ", "\t", "\n", "\r\n",
    "\u{a0}", "\u{3000}", "'", "'s", "'T", "'LL", "'ve", "\u{2019}", ".", ",", "!", "#", "$", ":)",
    "-", "_", "/", "é", "ß", "ж", "Ω", "中", "文", "ſ", "\u{17f}", "٣", "²", "Ⅻ", "😀", "🎉",
    "\u{200d}", "\u{301}", "İ", "K",
];

/// Random valid UTF-8 built from fragments that exercise every
/// pre-tokenizer alternative.
pub fn random_text<R: Rng>(rng: &mut R, max_fragments: usize) -> String {
    let n = rng.gen_range(0..=max_fragments);
    (0..n)
        .map(|_| *ALPHABET.choose(rng).expect("alphabet is not empty"))
        .collect()
}

/// Random ASCII text of printable characters and whitespace.
pub fn random_ascii<R: Rng>(rng: &mut R, max_len: usize) -> String {
    let n = rng.gen_range(0..=max_len);
    (0..n)
        .map(|_| match rng.gen_range(0..10) {
            0 => ' ',
            1 => '\n',
            _ => rng.gen_range(0x21u8..0x7f) as char,
        })
        .collect()
}

/// Word-like documents over a small alphabet so that pairs repeat and
/// training produces a useful number of merges.
pub fn random_corpus<R: Rng>(rng: &mut R, max_bytes: usize) -> Vec<String> {
    const WORDS: &[&str] = &[
        "the", "then", "them", "a", "an", "ab", "abab", "token", "tokens", "b4", "l8r", "x2",
        "2024", "isn't", "can't", "é", "éé", "naïve", "ok!", "ok?", "...", "\n", "  ",
    ];
    let mut docs = Vec::new();
    let mut size = 0;
    let target = rng.gen_range(1..=max_bytes);
    while size < target {
        let n = rng.gen_range(1..12);
        let mut doc = String::new();
        for k in 0..n {
            if k > 0 {
                doc.push(' ');
            }
            if rng.gen_bool(0.2) {
                doc.push_str(&random_text(rng, 3));
            } else {
                doc.push_str(WORDS.choose(rng).expect("word list is not empty"));
            }
        }
        if size + doc.len() > max_bytes {
            break;
        }
        size += doc.len();
        docs.push(doc);
    }
    docs
}

/// Random design matrix with the given shape and density.
pub fn random_matrix<R: Rng>(
    rng: &mut R,
    rows: usize,
    cols: usize,
    density: f64,
) -> SparseBinaryMatrix {
    let data = (0..rows)
        .map(|_| (0..cols as u32).filter(|_| rng.gen_bool(density)).collect())
        .collect();
    SparseBinaryMatrix::from_rows(data, cols).expect("columns are in range")
}

/// Random labels with both classes present.
pub fn random_labels<R: Rng>(rng: &mut R, n: usize) -> Vec<bool> {
    assert!(n >= 2);
    loop {
        let y: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        if y.iter().any(|&v| v) && y.iter().any(|&v| !v) {
            return y;
        }
    }
}

const FILLER: &[&str] = &[
    "we",
    "students",
    "the",
    "lesson",
    "quickly",
    "yesterday",
    "maths",
    "history",
    "have",
    "had",
    "many",
    "things",
    "from",
    "books",
    "today",
    "teacher",
    "slowly",
];

/// Binary task over filler sentences: even-indexed instances contain the word
/// `marker` and are labelled `yes`, the rest `no`.
pub fn presence_task<R: Rng>(rng: &mut R, n: usize, marker: &str) -> TaskDataset {
    let instances = (0..n)
        .map(|i| {
            let positive = i % 2 == 0;
            let mut words: Vec<&str> = (0..rng.gen_range(3..9))
                .map(|_| *FILLER.choose(rng).expect("filler is not empty"))
                .collect();
            if positive {
                let at = rng.gen_range(0..=words.len());
                words.insert(at, marker);
            }
            Instance::single(words.join(" "), if positive { "yes" } else { "no" })
        })
        .collect();
    TaskDataset::new(instances, None, PairMode::None).expect("both labels present")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn naive_trainer_small_case() {
        let merges = naive_train(&["abab abab"], PreTokenizer::Ws, 258);
        assert_eq!(merges, vec![(97, 98), (256, 256)]);
    }

    #[test]
    fn replay_applies_merges_in_order() {
        let merges = [(97, 98), (256, 256)];
        assert_eq!(
            replay_encode(&merges, PreTokenizer::Ws, "ababab"),
            vec![257, 256]
        );
    }

    #[test]
    fn merged_with_next_reference() {
        assert_eq!(
            reference_pretokenize(PreTokenizer::LeadingWs, "a  b"),
            ["a", " ", " b"]
        );
    }
}
