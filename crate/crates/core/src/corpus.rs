//! Text corpora used for fitting tokenizers and as metric references.
//!
//! Two on-disk layouts are supported:
//!
//! * **plain lines**: one document per `\n`-terminated line. A missing final
//!   newline is tolerated on read; writing always terminates every line.
//! * **records**: each document is framed as `<decimal byte length>\n<payload>\n`,
//!   so documents may contain newlines.
//!
//! Text is kept byte-exact. No Unicode normalization or line-ending
//! translation is applied.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum CorpusFormat {
    #[default]
    PlainLines,
    Records,
}

impl CorpusFormat {
    pub fn name(self) -> &'static str {
        match self {
            CorpusFormat::PlainLines => "lines",
            CorpusFormat::Records => "records",
        }
    }
}

impl fmt::Display for CorpusFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CorpusFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lines" | "plain-lines" => Ok(CorpusFormat::PlainLines),
            "records" | "one-doc-per-record" => Ok(CorpusFormat::Records),
            other => Err(Error::InvalidInput(format!(
                "unknown corpus format {other:?} (expected lines or records)"
            ))),
        }
    }
}

/// An ordered, immutable collection of UTF-8 documents.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    documents: Vec<String>,
    source_name: String,
}

impl Corpus {
    pub fn new(source_name: impl Into<String>, documents: Vec<String>) -> Self {
        Corpus {
            documents,
            source_name: source_name.into(),
        }
    }

    /// Builds an anonymous in-memory corpus.
    pub fn from_texts<I, S>(texts: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Corpus::new("<memory>", texts.into_iter().map(Into::into).collect())
    }

    /// Reads a corpus file. Invalid UTF-8 is an error unless `lossy` is set,
    /// in which case invalid sequences become U+FFFD.
    pub fn load(path: impl AsRef<Path>, format: CorpusFormat, lossy: bool) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Corpus::parse(&bytes, format, lossy, path.display().to_string())
    }

    pub fn parse(
        bytes: &[u8],
        format: CorpusFormat,
        lossy: bool,
        source_name: impl Into<String>,
    ) -> Result<Self> {
        let source_name = source_name.into();
        let raw = match format {
            CorpusFormat::PlainLines => split_lines(bytes),
            CorpusFormat::Records => split_records(bytes)?,
        };
        let documents = raw
            .into_iter()
            .map(|(offset, doc)| decode(doc, offset, lossy, &source_name))
            .collect::<Result<Vec<_>>>()?;
        Ok(Corpus {
            documents,
            source_name,
        })
    }

    /// Serializes the corpus in `format`. For well-formed inputs this
    /// reproduces the loaded file byte for byte.
    pub fn to_bytes(&self, format: CorpusFormat) -> Vec<u8> {
        let mut out = Vec::new();
        for doc in &self.documents {
            if format == CorpusFormat::Records {
                out.extend_from_slice(doc.len().to_string().as_bytes());
                out.push(b'\n');
            }
            out.extend_from_slice(doc.as_bytes());
            out.push(b'\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>, format: CorpusFormat) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_bytes(format)).map_err(|e| Error::io(path, e))
    }

    pub fn documents(&self) -> &[String] {
        &self.documents
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.documents.iter().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn source_name(&self) -> &str {
        &self.source_name
    }

    pub fn total_bytes(&self) -> usize {
        self.documents.iter().map(String::len).sum()
    }

    /// Number of maximal non-whitespace runs over all documents.
    pub fn word_count(&self) -> u64 {
        self.documents.iter().map(|d| word_count(d)).sum()
    }

    /// Appends the documents of `other`, keeping this corpus' name.
    pub fn concat(mut self, other: &Corpus) -> Corpus {
        self.documents.extend(other.documents.iter().cloned());
        self
    }
}

/// Whitespace-split word count of a single text.
pub fn word_count(text: &str) -> u64 {
    text.split_whitespace().count() as u64
}

fn split_lines(bytes: &[u8]) -> Vec<(usize, &[u8])> {
    let mut docs = Vec::new();
    let mut start = 0;
    for (i, &b) in bytes.iter().enumerate() {
        if b == b'\n' {
            docs.push((start, &bytes[start..i]));
            start = i + 1;
        }
    }
    if start < bytes.len() {
        docs.push((start, &bytes[start..]));
    }
    docs
}

fn split_records(bytes: &[u8]) -> Result<Vec<(usize, &[u8])>> {
    let mut docs = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let header_end = bytes[pos..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|i| pos + i)
            .ok_or_else(|| Error::Framing {
                offset: pos,
                reason: "length header is not newline-terminated".into(),
            })?;
        let header = &bytes[pos..header_end];
        if header.is_empty() || !header.iter().all(u8::is_ascii_digit) {
            return Err(Error::Framing {
                offset: pos,
                reason: format!(
                    "expected a decimal byte length, found {:?}",
                    String::from_utf8_lossy(header)
                ),
            });
        }
        let len: usize = std::str::from_utf8(header)
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::Framing {
                offset: pos,
                reason: "record length does not fit in usize".into(),
            })?;
        let start = header_end + 1;
        let end = start
            .checked_add(len)
            .filter(|&end| end < bytes.len())
            .ok_or_else(|| Error::Framing {
                offset: pos,
                reason: format!("record of {len} bytes runs past end of input"),
            })?;
        if bytes[end] != b'\n' {
            return Err(Error::Framing {
                offset: end,
                reason: "record payload is not followed by a newline".into(),
            });
        }
        docs.push((start, &bytes[start..end]));
        pos = end + 1;
    }
    Ok(docs)
}

fn decode(bytes: &[u8], offset: usize, lossy: bool, source: &str) -> Result<String> {
    match std::str::from_utf8(bytes) {
        Ok(s) => Ok(s.to_owned()),
        Err(_) if lossy => Ok(String::from_utf8_lossy(bytes).into_owned()),
        Err(e) => Err(Error::InvalidUtf8 {
            context: source.to_owned(),
            offset: offset + e.valid_up_to(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(bytes: &[u8], format: CorpusFormat) -> Result<Corpus> {
        Corpus::parse(bytes, format, false, "test")
    }

    #[test]
    fn plain_lines_one_document_per_line() {
        let c = parse(b"a\nb\n", CorpusFormat::PlainLines).unwrap();
        assert_eq!(c.documents(), ["a", "b"]);
    }

    #[test]
    fn empty_file_has_no_documents() {
        for format in [CorpusFormat::PlainLines, CorpusFormat::Records] {
            let c = parse(b"", format).unwrap();
            assert!(c.is_empty());
            assert_eq!(c.word_count(), 0);
        }
    }

    #[test]
    fn missing_final_newline_is_tolerated() {
        let c = parse(b"a\nb", CorpusFormat::PlainLines).unwrap();
        assert_eq!(c.documents(), ["a", "b"]);
    }

    #[test]
    fn blank_lines_are_documents() {
        let c = parse(b"a\n\nb\n", CorpusFormat::PlainLines).unwrap();
        assert_eq!(c.documents(), ["a", "", "b"]);
    }

    #[test]
    fn carriage_returns_are_kept() {
        let c = parse(b"a\r\nb\r\n", CorpusFormat::PlainLines).unwrap();
        assert_eq!(c.documents(), ["a\r", "b\r"]);
    }

    #[test]
    fn records_may_span_lines() {
        let c = parse(b"5\nab\ncd\n0\n\n", CorpusFormat::Records).unwrap();
        assert_eq!(c.documents(), ["ab\ncd", ""]);
    }

    #[test]
    fn malformed_records_are_rejected() {
        let cases: [&[u8]; 5] = [
            b"x\nabc\n", // non-numeric header
            b"5\nabc\n", // payload runs past end
            b"2\nabc\n", // payload not newline-terminated
            b"3",        // header without newline
            b"\nabc\n",  // empty header
        ];
        for case in cases {
            let err = parse(case, CorpusFormat::Records).unwrap_err();
            assert!(matches!(err, Error::Framing { .. }), "{case:?}: {err}");
        }
    }

    #[test]
    fn invalid_utf8_requires_lossy_flag() {
        let bytes = b"ok\nbad \xff here\n";
        let err = parse(bytes, CorpusFormat::PlainLines).unwrap_err();
        match err {
            Error::InvalidUtf8 { offset, .. } => assert_eq!(offset, 7),
            other => panic!("unexpected error {other}"),
        }
        let c = Corpus::parse(bytes, CorpusFormat::PlainLines, true, "t").unwrap();
        assert_eq!(c.documents()[1], "bad \u{fffd} here");
    }

    #[test]
    fn word_count_whitespace_runs() {
        assert_eq!(Corpus::from_texts(["a b  c"]).word_count(), 3);
        assert_eq!(Corpus::from_texts([""]).word_count(), 0);
        assert_eq!(Corpus::from_texts([" x ", "y z"]).word_count(), 3);
        assert_eq!(
            Corpus::from_texts(["tab\tsep\nnew\u{3000}line"]).word_count(),
            4
        );
    }

    #[test]
    fn abstract_record_counts_as_one_document() {
        let abstract_text =
            "Myoelectrical activity of the gut has been studied in the postoperative \
period in order to characterize the recovery of motility after abdominal surgery.\n\
Twenty patients undergoing elective colectomy were enrolled and electrodes were \
placed on the serosal surface of the stomach, the small bowel and the colon at the \
end of the operation.\nRecordings were obtained daily until the first passage of \
flatus and compared with clinical signs of recovery.\nGastric activity returned \
within twenty four hours whereas colonic activity remained disorganized for up to \
three days, suggesting that the colon is the main determinant of postoperative \
ileus.\nEarly feeding did not modify the pattern of recovery in this small cohort, \
but larger trials are needed to confirm whether nutritional or pharmacological \
interventions can shorten the duration of postoperative ileus after surgery.";
        let framed = format!("{}\n{}\n", abstract_text.len(), abstract_text);
        let c = parse(framed.as_bytes(), CorpusFormat::Records).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.word_count(), 132);
    }

    #[test]
    fn reserialization_is_byte_identical() {
        let lines = b"first\n\nthird line\n";
        let c = parse(lines, CorpusFormat::PlainLines).unwrap();
        assert_eq!(c.to_bytes(CorpusFormat::PlainLines), lines);

        let records = b"3\na\nb\n0\n\n4\n\xc3\xa9\xc3\xa9\n";
        let c = parse(records, CorpusFormat::Records).unwrap();
        assert_eq!(c.to_bytes(CorpusFormat::Records), records);
    }
}
