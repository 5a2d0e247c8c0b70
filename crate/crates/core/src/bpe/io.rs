//! JSON model files.
//!
//! ```json
//! {
//!   "version": 1,
//!   "pretokenizer": "gpt2",
//!   "requested_vocab_size": 32000,
//!   "achieved_vocab_size": 258,
//!   "merges": [
//!     [97, 98],
//!     [256, 256]
//!   ]
//! }
//! ```
//!
//! Token bytes are not stored; they are rebuilt from the merge list.

use std::fmt::Write as _;
use std::path::Path;

use serde::Deserialize;

use super::{TokenId, TokenizerModel, BASE_VOCAB_SIZE};
use crate::error::{Error, Result};
use crate::pretokenize::PreTokenizer;

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    version: u32,
    pretokenizer: String,
    #[serde(default)]
    requested_vocab_size: Option<usize>,
    achieved_vocab_size: usize,
    merges: Vec<(TokenId, TokenId)>,
}

impl TokenizerModel {
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push_str("{\n");
        let _ = writeln!(out, "  \"version\": {MODEL_FORMAT_VERSION},");
        let _ = writeln!(
            out,
            "  \"pretokenizer\": {},",
            serde_json::to_string(self.pretokenizer.name()).expect("string serializes")
        );
        let _ = writeln!(
            out,
            "  \"requested_vocab_size\": {},",
            self.requested_vocab_size
        );
        let _ = writeln!(out, "  \"achieved_vocab_size\": {},", self.vocab_size());
        if self.merges.is_empty() {
            out.push_str("  \"merges\": []\n");
        } else {
            out.push_str("  \"merges\": [\n");
            for (i, (l, r)) in self.merges.iter().enumerate() {
                let sep = if i + 1 == self.merges.len() { "" } else { "," };
                let _ = writeln!(out, "    [{l}, {r}]{sep}");
            }
            out.push_str("  ]\n");
        }
        out.push_str("}\n");
        out
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| Error::InvalidModel(e.to_string()))?;
        if file.version != MODEL_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: file.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let pretokenizer: PreTokenizer = file.pretokenizer.parse()?;
        let expected = BASE_VOCAB_SIZE + file.merges.len();
        if file.achieved_vocab_size != expected {
            return Err(Error::InvalidModel(format!(
                "achieved_vocab_size is {} but {} merges imply {expected}",
                file.achieved_vocab_size,
                file.merges.len()
            )));
        }
        let requested = file.requested_vocab_size.unwrap_or(expected);
        if requested < expected {
            return Err(Error::InvalidModel(format!(
                "requested_vocab_size {requested} is smaller than achieved size {expected}"
            )));
        }
        TokenizerModel::from_merges(pretokenizer, file.merges, requested)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TokenizerModel::from_json(&text)
    }
}
