//! Pre-tokenization: splitting text into the word-like units that BPE merges
//! may not cross.
//!
//! Five rules are supported, each defined by a regular expression and a
//! match behavior:
//!
//! | name     | pattern                                                        | behavior              |
//! |----------|----------------------------------------------------------------|-----------------------|
//! | `no`     | (none)                                                         | whole text            |
//! | `ws`     | `\s+`                                                          | isolated matches      |
//! | `_ws`    | `\s+(?!\S)\|\s+`                                               | merged with next      |
//! | `gpt2`   | `'s\|'t\|'re\|'ve\|'m\|'ll\|'d\| ?\p{L}+\| ?\p{N}+\| ?[^\s\p{L}\p{N}]+\|\s+(?!\S)\|\s+` | isolated matches |
//! | `llama3` | see [`LLAMA3_PATTERN`]                                         | isolated matches      |
//!
//! The patterns need negative lookahead, which the `regex` crate does not
//! support, so each one is implemented as a hand-written scanner that follows
//! backtracking leftmost-first semantics. Character classes (`\s`, `\p{L}`,
//! `\p{N}` and case folds) are taken from `regex-syntax` tables so they agree
//! with the regex engines to the codepoint.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;
use std::sync::OnceLock;

use regex_syntax::hir::{Class, HirKind};

use crate::error::{Error, Result};

pub const WS_PATTERN: &str = r"\s+";
pub const LEADING_WS_PATTERN: &str = r"\s+(?!\S)|\s+";
pub const GPT2_PATTERN: &str =
    r"'s|'t|'re|'ve|'m|'ll|'d| ?\p{L}+| ?\p{N}+| ?[^\s\p{L}\p{N}]+|\s+(?!\S)|\s+";
pub const LLAMA3_PATTERN: &str = r"(?i:'s|'t|'re|'ve|'m|'ll|'d)|[^\r\n\p{L}\p{N}]?\p{L}+|\p{N}{1,3}| ?[^\s\p{L}\p{N}]+[\r\n]*|\s*[\r\n]+|\s+(?!\S)|\s+";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PreTokenizer {
    /// The whole text is a single pre-token.
    No,
    /// Whitespace runs are isolated from everything else.
    Ws,
    /// Whitespace runs act as delimiters glued onto the following segment.
    LeadingWs,
    Gpt2,
    Llama3,
}

/// How regex matches are turned into pre-tokens.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitBehavior {
    WholeText,
    /// Matches and the gaps between them are each their own pre-token.
    IsolatedMatches,
    /// A match followed by a non-matching gap is merged into that gap.
    DelimiterMergedWithNext,
}

/// One pre-token: a slice of the source text and its byte offset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PreToken<'a> {
    pub text: &'a str,
    pub start: usize,
}

impl PreToken<'_> {
    pub fn bytes(&self) -> &[u8] {
        self.text.as_bytes()
    }

    pub fn span(&self) -> Range<usize> {
        self.start..self.start + self.text.len()
    }
}

impl PreTokenizer {
    pub const ALL: [PreTokenizer; 5] = [
        PreTokenizer::No,
        PreTokenizer::Ws,
        PreTokenizer::LeadingWs,
        PreTokenizer::Gpt2,
        PreTokenizer::Llama3,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PreTokenizer::No => "no",
            PreTokenizer::Ws => "ws",
            PreTokenizer::LeadingWs => "_ws",
            PreTokenizer::Gpt2 => "gpt2",
            PreTokenizer::Llama3 => "llama3",
        }
    }

    /// The defining regular expression; empty for [`PreTokenizer::No`].
    pub fn pattern(self) -> &'static str {
        match self {
            PreTokenizer::No => "",
            PreTokenizer::Ws => WS_PATTERN,
            PreTokenizer::LeadingWs => LEADING_WS_PATTERN,
            PreTokenizer::Gpt2 => GPT2_PATTERN,
            PreTokenizer::Llama3 => LLAMA3_PATTERN,
        }
    }

    pub fn behavior(self) -> SplitBehavior {
        match self {
            PreTokenizer::No => SplitBehavior::WholeText,
            PreTokenizer::LeadingWs => SplitBehavior::DelimiterMergedWithNext,
            PreTokenizer::Ws | PreTokenizer::Gpt2 | PreTokenizer::Llama3 => {
                SplitBehavior::IsolatedMatches
            }
        }
    }

    /// Splits `text` into pre-tokens that tile it exactly. Empty input gives
    /// no pre-tokens.
    pub fn split<'a>(self, text: &'a str) -> Vec<PreToken<'a>> {
        self.spans(text)
            .into_iter()
            .map(|r| PreToken {
                text: &text[r.clone()],
                start: r.start,
            })
            .collect()
    }

    /// Like [`split`](Self::split) but only returns the byte ranges.
    pub fn spans(self, text: &str) -> Vec<Range<usize>> {
        if text.is_empty() {
            return Vec::new();
        }
        match self {
            #[allow(clippy::single_range_in_vec_init)]
            PreTokenizer::No => vec![0..text.len()],
            PreTokenizer::Ws => isolate(text, find_ws_run),
            PreTokenizer::LeadingWs => merge_with_next(text, find_leading_ws),
            PreTokenizer::Gpt2 => tile(text, gpt2_match),
            PreTokenizer::Llama3 => tile(text, llama3_match),
        }
    }

    /// Splits raw bytes, failing on invalid UTF-8.
    pub fn split_bytes(self, bytes: &[u8]) -> Result<Vec<PreToken<'_>>> {
        let text = std::str::from_utf8(bytes).map_err(|e| Error::InvalidUtf8 {
            context: "pre-tokenizer input".into(),
            offset: e.valid_up_to(),
        })?;
        Ok(self.split(text))
    }
}

impl fmt::Display for PreTokenizer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PreTokenizer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PreTokenizer::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::UnknownPreTokenizer(s.to_owned()))
    }
}

/// Pre-tokenizes and returns owned strings; convenient for fixtures.
pub fn pretokenize(spec: PreTokenizer, text: &str) -> Vec<String> {
    spec.split(text)
        .into_iter()
        .map(|p| p.text.to_owned())
        .collect()
}

// ---------------------------------------------------------------------------
// Character classes

struct CharClass {
    ascii: [bool; 128],
    ranges: Vec<(u32, u32)>,
}

impl CharClass {
    fn from_pattern(pattern: &str) -> CharClass {
        let hir = regex_syntax::Parser::new()
            .parse(pattern)
            .expect("built-in class pattern must parse");
        let ranges: Vec<(u32, u32)> = match hir.kind() {
            HirKind::Class(Class::Unicode(cls)) => cls
                .ranges()
                .iter()
                .map(|r| (r.start() as u32, r.end() as u32))
                .collect(),
            HirKind::Literal(lit) => {
                let c = std::str::from_utf8(&lit.0)
                    .ok()
                    .and_then(|s| s.chars().next())
                    .expect("literal class");
                vec![(c as u32, c as u32)]
            }
            other => panic!("unexpected HIR for {pattern:?}: {other:?}"),
        };
        let mut ascii = [false; 128];
        for (i, slot) in ascii.iter_mut().enumerate() {
            let cp = i as u32;
            *slot = ranges.iter().any(|&(lo, hi)| lo <= cp && cp <= hi);
        }
        CharClass { ascii, ranges }
    }

    #[inline]
    fn contains(&self, c: char) -> bool {
        let cp = c as u32;
        if cp < 128 {
            return self.ascii[cp as usize];
        }
        self.ranges
            .binary_search_by(|&(lo, hi)| {
                if hi < cp {
                    std::cmp::Ordering::Less
                } else if lo > cp {
                    std::cmp::Ordering::Greater
                } else {
                    std::cmp::Ordering::Equal
                }
            })
            .is_ok()
    }
}

struct Classes {
    space: CharClass,
    letter: CharClass,
    number: CharClass,
    // case folds of the contraction letters, for llama3's (?i:...) group
    folds: [(char, CharClass); 8],
}

fn classes() -> &'static Classes {
    static CLASSES: OnceLock<Classes> = OnceLock::new();
    CLASSES.get_or_init(|| {
        let fold = |c: char| (c, CharClass::from_pattern(&format!("(?i:{c})")));
        Classes {
            space: CharClass::from_pattern(r"\s"),
            letter: CharClass::from_pattern(r"\p{L}"),
            number: CharClass::from_pattern(r"\p{N}"),
            folds: ['s', 't', 'r', 'e', 'v', 'm', 'l', 'd'].map(fold),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Space,
    Letter,
    Number,
    Other,
}

#[inline]
fn kind(c: char) -> Kind {
    let cls = classes();
    if cls.space.contains(c) {
        Kind::Space
    } else if cls.letter.contains(c) {
        Kind::Letter
    } else if cls.number.contains(c) {
        Kind::Number
    } else {
        Kind::Other
    }
}

#[inline]
fn char_at(text: &str, i: usize) -> Option<char> {
    text[i..].chars().next()
}

/// End of the run of `k`-kind characters starting at `i`.
fn run_end(text: &str, i: usize, k: Kind) -> usize {
    text[i..]
        .char_indices()
        .find(|&(_, c)| kind(c) != k)
        .map_or(text.len(), |(j, _)| i + j)
}

/// Like [`run_end`] but stops after at most `max` characters.
fn bounded_run_end(text: &str, i: usize, k: Kind, max: usize) -> usize {
    let mut end = i;
    for c in text[i..].chars().take(max) {
        if kind(c) != k {
            break;
        }
        end += c.len_utf8();
    }
    end
}

/// End of a `\s+(?!\S)|\s+` match at the start of a whitespace run `[i, run)`.
fn whitespace_tail(text: &str, i: usize, run: usize) -> usize {
    if run == text.len() {
        return run;
    }
    let last = text[i..run].chars().next_back().map_or(0, char::len_utf8);
    if run - i > last {
        // backtrack one character so the lookahead sees whitespace
        run - last
    } else {
        run
    }
}

// ---------------------------------------------------------------------------
// Match drivers

/// Every position starts a match (the gpt2 and llama3 patterns tile).
fn tile(text: &str, matcher: fn(&str, usize) -> usize) -> Vec<Range<usize>> {
    let mut spans = Vec::new();
    let mut pos = 0;
    while pos < text.len() {
        let end = matcher(text, pos);
        debug_assert!(end > pos, "matcher must consume input");
        spans.push(pos..end);
        pos = end;
    }
    spans
}

type Finder = fn(&str, usize) -> Option<Range<usize>>;

/// Non-overlapping leftmost matches plus the gaps between them, as separate
/// pieces, tagged with whether each piece is a match.
fn pieces(text: &str, find: Finder) -> Vec<(Range<usize>, bool)> {
    let mut out = Vec::new();
    let mut pos = 0;
    while let Some(m) = find(text, pos) {
        if m.start > pos {
            out.push((pos..m.start, false));
        }
        pos = m.end;
        out.push((m, true));
    }
    if pos < text.len() {
        out.push((pos..text.len(), false));
    }
    out
}

fn isolate(text: &str, find: Finder) -> Vec<Range<usize>> {
    pieces(text, find).into_iter().map(|(r, _)| r).collect()
}

fn merge_with_next(text: &str, find: Finder) -> Vec<Range<usize>> {
    let pieces = pieces(text, find);
    let mut out = Vec::with_capacity(pieces.len());
    let mut iter = pieces.into_iter().peekable();
    while let Some((range, is_match)) = iter.next() {
        match iter.peek() {
            Some((next, false)) if is_match => {
                out.push(range.start..next.end);
                iter.next();
            }
            _ => out.push(range),
        }
    }
    out
}

fn next_ws(text: &str, from: usize) -> Option<usize> {
    text[from..]
        .char_indices()
        .find(|&(_, c)| kind(c) == Kind::Space)
        .map(|(j, _)| from + j)
}

/// `\s+`
fn find_ws_run(text: &str, from: usize) -> Option<Range<usize>> {
    let start = next_ws(text, from)?;
    Some(start..run_end(text, start, Kind::Space))
}

/// `\s+(?!\S)|\s+`
fn find_leading_ws(text: &str, from: usize) -> Option<Range<usize>> {
    let start = next_ws(text, from)?;
    let run = run_end(text, start, Kind::Space);
    Some(start..whitespace_tail(text, start, run))
}

fn gpt2_contraction(rest: &str) -> Option<usize> {
    ["s", "t", "re", "ve", "m", "ll", "d"]
        .iter()
        .find(|suffix| rest.starts_with(*suffix))
        .map(|suffix| suffix.len())
}

fn gpt2_match(text: &str, i: usize) -> usize {
    let c0 = char_at(text, i).expect("position inside text");
    let after = i + c0.len_utf8();
    if c0 == '\'' {
        if let Some(n) = gpt2_contraction(&text[after..]) {
            return after + n;
        }
    }
    let k0 = kind(c0);
    // ` ?\p{L}+`, ` ?\p{N}+`, ` ?[^\s\p{L}\p{N}]+`, in that order
    for k in [Kind::Letter, Kind::Number, Kind::Other] {
        if c0 == ' ' {
            if let Some(c1) = char_at(text, after) {
                if kind(c1) == k {
                    return run_end(text, after, k);
                }
            }
        }
        if k0 == k {
            return run_end(text, i, k);
        }
    }
    let run = run_end(text, i, Kind::Space);
    whitespace_tail(text, i, run)
}

/// `(?i:'s|'t|'re|'ve|'m|'ll|'d)` after the apostrophe.
fn llama3_contraction(rest: &str) -> Option<usize> {
    let folds = &classes().folds;
    let folded = |c: char, base: char| {
        folds
            .iter()
            .find(|(b, _)| *b == base)
            .is_some_and(|(_, cls)| cls.contains(c))
    };
    let mut chars = rest.chars();
    let c1 = chars.next()?;
    let c2 = chars.next();
    for alt in ["s", "t", "re", "ve", "m", "ll", "d"] {
        let mut want = alt.chars();
        let first = want.next().unwrap();
        if !folded(c1, first) {
            continue;
        }
        match want.next() {
            None => return Some(c1.len_utf8()),
            Some(second) => {
                if let Some(c2) = c2 {
                    if folded(c2, second) {
                        return Some(c1.len_utf8() + c2.len_utf8());
                    }
                }
            }
        }
    }
    None
}

fn newline_run_end(text: &str, i: usize) -> usize {
    text[i..]
        .char_indices()
        .find(|&(_, c)| c != '\r' && c != '\n')
        .map_or(text.len(), |(j, _)| i + j)
}

fn llama3_match(text: &str, i: usize) -> usize {
    let c0 = char_at(text, i).expect("position inside text");
    let after = i + c0.len_utf8();
    let c1 = char_at(text, after);
    let k0 = kind(c0);
    if c0 == '\'' {
        if let Some(n) = llama3_contraction(&text[after..]) {
            return after + n;
        }
    }
    // `[^\r\n\p{L}\p{N}]?\p{L}+`
    let prefixable = c0 != '\r' && c0 != '\n' && k0 != Kind::Letter && k0 != Kind::Number;
    if prefixable && c1.is_some_and(|c| kind(c) == Kind::Letter) {
        return run_end(text, after, Kind::Letter);
    }
    if k0 == Kind::Letter {
        return run_end(text, i, Kind::Letter);
    }
    // `\p{N}{1,3}`
    if k0 == Kind::Number {
        return bounded_run_end(text, i, Kind::Number, 3);
    }
    // ` ?[^\s\p{L}\p{N}]+[\r\n]*`
    if c0 == ' ' && c1.is_some_and(|c| kind(c) == Kind::Other) {
        return newline_run_end(text, run_end(text, after, Kind::Other));
    }
    if k0 == Kind::Other {
        return newline_run_end(text, run_end(text, i, Kind::Other));
    }
    // whitespace from here on
    let run = run_end(text, i, Kind::Space);
    // `\s*[\r\n]+`: greedy \s* backs off to the last line break in the run
    if let Some(j) = text[i..run].rfind(['\r', '\n']) {
        return i + j + 1;
    }
    whitespace_tail(text, i, run)
}
