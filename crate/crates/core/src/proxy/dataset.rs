use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;

use crate::error::{Error, Result};

pub const TSV_HEADER: &str = "text_a\ttext_b\tlabels";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    Binary,
    Multiclass,
    Multilabel,
}

impl TaskKind {
    pub fn name(self) -> &'static str {
        match self {
            TaskKind::Binary => "binary",
            TaskKind::Multiclass => "multiclass",
            TaskKind::Multilabel => "multilabel",
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TaskKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "binary" => Ok(TaskKind::Binary),
            "multiclass" => Ok(TaskKind::Multiclass),
            "multilabel" => Ok(TaskKind::Multilabel),
            other => Err(Error::InvalidInput(format!(
                "unknown task kind {other:?} (expected binary, multiclass or multilabel)"
            ))),
        }
    }
}

/// How tokens from the two texts of a pair task become features.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PairMode {
    /// Single-text task.
    #[default]
    None,
    /// Every (token from text a, token from text b) combination.
    Cartesian,
    /// Tokens present in both texts, and tokens present in exactly one.
    SharedDisjoint,
}

impl PairMode {
    pub fn name(self) -> &'static str {
        match self {
            PairMode::None => "none",
            PairMode::Cartesian => "cartesian",
            PairMode::SharedDisjoint => "shared_disjoint",
        }
    }
}

impl fmt::Display for PairMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for PairMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(PairMode::None),
            "cartesian" => Ok(PairMode::Cartesian),
            "shared_disjoint" | "shared-disjoint" => Ok(PairMode::SharedDisjoint),
            other => Err(Error::InvalidInput(format!(
                "unknown pair mode {other:?} (expected none, cartesian or shared_disjoint)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    pub text_a: String,
    pub text_b: Option<String>,
    pub labels: Vec<String>,
}

impl Instance {
    pub fn single(text: impl Into<String>, label: impl Into<String>) -> Self {
        Instance {
            text_a: text.into(),
            text_b: None,
            labels: vec![label.into()],
        }
    }

    pub fn pair(a: impl Into<String>, b: impl Into<String>, label: impl Into<String>) -> Self {
        Instance {
            text_a: a.into(),
            text_b: Some(b.into()),
            labels: vec![label.into()],
        }
    }
}

/// Labeled instances for the proxy classifier.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TaskDataset {
    instances: Vec<Instance>,
    label_space: Vec<String>,
    task_kind: TaskKind,
    pair_mode: PairMode,
}

impl TaskDataset {
    /// Validates the instances. When `task_kind` is `None` it is inferred:
    /// any instance without exactly one label makes the task multilabel,
    /// otherwise two distinct labels mean binary and more mean multiclass.
    /// The label space is the sorted set of labels seen.
    pub fn new(
        instances: Vec<Instance>,
        task_kind: Option<TaskKind>,
        pair_mode: PairMode,
    ) -> Result<Self> {
        let label_space: Vec<String> = instances
            .iter()
            .flat_map(|i| i.labels.iter().cloned())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let task_kind = task_kind.unwrap_or_else(|| {
            if instances.iter().any(|i| i.labels.len() != 1) {
                TaskKind::Multilabel
            } else if label_space.len() <= 2 {
                TaskKind::Binary
            } else {
                TaskKind::Multiclass
            }
        });
        for (n, inst) in instances.iter().enumerate() {
            if task_kind != TaskKind::Multilabel && inst.labels.len() != 1 {
                return Err(Error::Dataset(format!(
                    "instance {n} has {} labels but a {task_kind} task needs exactly one",
                    inst.labels.len()
                )));
            }
            let has_b = inst.text_b.as_deref().is_some_and(|b| !b.is_empty());
            match (pair_mode, has_b) {
                (PairMode::None, true) => {
                    return Err(Error::Dataset(format!(
                        "instance {n} has a second text but pair mode is none"
                    )))
                }
                (PairMode::Cartesian | PairMode::SharedDisjoint, false) => {
                    return Err(Error::Dataset(format!(
                        "pair mode {pair_mode} needs text_b on every instance; instance {n} has none"
                    )))
                }
                _ => {}
            }
        }
        if task_kind == TaskKind::Binary && label_space.len() > 2 {
            return Err(Error::Dataset(format!(
                "binary task has {} distinct labels",
                label_space.len()
            )));
        }
        Ok(TaskDataset {
            instances,
            label_space,
            task_kind,
            pair_mode,
        })
    }

    /// Parses the tab-separated format: header `text_a<TAB>text_b<TAB>labels`,
    /// `text_b` empty for single-text tasks, labels comma-separated, and
    /// `\n`, `\t`, `\r`, `\\` escapes inside texts.
    pub fn from_tsv(text: &str, task_kind: Option<TaskKind>, pair_mode: PairMode) -> Result<Self> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim_end_matches('\r') == TSV_HEADER => {}
            Some(h) => {
                return Err(Error::Dataset(format!(
                    "expected header {TSV_HEADER:?}, found {h:?}"
                )))
            }
            None => return Err(Error::Dataset("missing header line".into())),
        }
        let mut instances = Vec::new();
        for (n, line) in lines.enumerate() {
            let line = line.strip_suffix('\r').unwrap_or(line);
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 3 {
                return Err(Error::Dataset(format!(
                    "line {}: expected 3 tab-separated fields, found {}",
                    n + 2,
                    fields.len()
                )));
            }
            let text_b = unescape(fields[1]);
            let labels = if fields[2].is_empty() {
                Vec::new()
            } else {
                fields[2].split(',').map(|l| l.trim().to_owned()).collect()
            };
            instances.push(Instance {
                text_a: unescape(fields[0]),
                text_b: (!text_b.is_empty()).then_some(text_b),
                labels,
            });
        }
        TaskDataset::new(instances, task_kind, pair_mode)
    }

    pub fn load(
        path: impl AsRef<Path>,
        task_kind: Option<TaskKind>,
        pair_mode: PairMode,
    ) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        TaskDataset::from_tsv(&text, task_kind, pair_mode)
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::from(TSV_HEADER);
        out.push('\n');
        for inst in &self.instances {
            out.push_str(&escape(&inst.text_a));
            out.push('\t');
            out.push_str(&escape(inst.text_b.as_deref().unwrap_or("")));
            out.push('\t');
            out.push_str(&inst.labels.join(","));
            out.push('\n');
        }
        out
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn label_space(&self) -> &[String] {
        &self.label_space
    }

    pub fn task_kind(&self) -> TaskKind {
        self.task_kind
    }

    pub fn pair_mode(&self) -> PairMode {
        self.pair_mode
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    /// Every text field, in instance order (`text_a` before `text_b`).
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.instances
            .iter()
            .flat_map(|i| std::iter::once(i.text_a.as_str()).chain(i.text_b.as_deref()))
    }
}

fn unescape(field: &str) -> String {
    let mut out = String::with_capacity(field.len());
    let mut chars = field.chars();
    while let Some(c) = chars.next() {
        if c != '\\' {
            out.push(c);
            continue;
        }
        match chars.next() {
            Some('n') => out.push('\n'),
            Some('t') => out.push('\t'),
            Some('r') => out.push('\r'),
            Some('\\') => out.push('\\'),
            Some(other) => {
                out.push('\\');
                out.push(other);
            }
            None => out.push('\\'),
        }
    }
    out
}

fn escape(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\n' => out.push_str("\\n"),
            '\t' => out.push_str("\\t"),
            '\r' => out.push_str("\\r"),
            '\\' => out.push_str("\\\\"),
            c => out.push(c),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_single_text_binary() {
        let tsv = "text_a\ttext_b\tlabels\nhello\\nworld\t\tpos\nbye\t\tneg\n";
        let ds = TaskDataset::from_tsv(tsv, None, PairMode::None).unwrap();
        assert_eq!(ds.task_kind(), TaskKind::Binary);
        assert_eq!(ds.label_space(), ["neg", "pos"]);
        assert_eq!(ds.instances()[0].text_a, "hello\nworld");
        assert_eq!(ds.instances()[0].text_b, None);
        assert_eq!(ds.to_tsv(), tsv);
    }

    #[test]
    fn infers_multilabel_and_multiclass() {
        let tsv = "text_a\ttext_b\tlabels\na\t\tx,y\nb\t\t\nc\t\tz\n";
        let ds = TaskDataset::from_tsv(tsv, None, PairMode::None).unwrap();
        assert_eq!(ds.task_kind(), TaskKind::Multilabel);
        assert_eq!(ds.label_space(), ["x", "y", "z"]);
        assert!(ds.instances()[1].labels.is_empty());

        let tsv = "text_a\ttext_b\tlabels\na\t\tx\nb\t\ty\nc\t\tz\n";
        let ds = TaskDataset::from_tsv(tsv, None, PairMode::None).unwrap();
        assert_eq!(ds.task_kind(), TaskKind::Multiclass);
    }

    #[test]
    fn pair_mode_must_match_data() {
        let single = "text_a\ttext_b\tlabels\na\t\tx\n";
        let err = TaskDataset::from_tsv(single, None, PairMode::Cartesian).unwrap_err();
        assert!(matches!(err, Error::Dataset(_)));
        let pair = "text_a\ttext_b\tlabels\na\tb\tx\n";
        assert!(TaskDataset::from_tsv(pair, None, PairMode::None).is_err());
        let ds = TaskDataset::from_tsv(pair, None, PairMode::SharedDisjoint).unwrap();
        assert_eq!(ds.texts().collect::<Vec<_>>(), ["a", "b"]);
    }

    #[test]
    fn rejects_bad_rows() {
        assert!(TaskDataset::from_tsv("text\tlabels\n", None, PairMode::None).is_err());
        assert!(TaskDataset::from_tsv("", None, PairMode::None).is_err());
        let tsv = "text_a\ttext_b\tlabels\nonly two\tfields\n";
        assert!(TaskDataset::from_tsv(tsv, None, PairMode::None).is_err());
        let tsv = "text_a\ttext_b\tlabels\na\t\tx,y\n";
        assert!(TaskDataset::from_tsv(tsv, Some(TaskKind::Multiclass), PairMode::None).is_err());
    }

    #[test]
    fn escapes_roundtrip() {
        let raw = "tab\there\\back\r\nnew";
        assert_eq!(unescape(&escape(raw)), raw);
        assert_eq!(unescape("trailing\\"), "trailing\\");
        assert_eq!(unescape("\\q"), "\\q");
    }
}
