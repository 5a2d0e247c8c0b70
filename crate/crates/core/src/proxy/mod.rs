//! Downstream proxy: one-vs-rest L1 logistic regression over token-presence
//! features.

mod dataset;
mod features;
pub mod logreg;

use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

pub use dataset::{Instance, PairMode, TaskDataset, TaskKind, TSV_HEADER};
pub use features::{
    featurize, transform, Feature, FeatureSpace, SparseBinaryMatrix, DEFAULT_FEATURE_CAP,
};
pub use logreg::{train_logreg, LogRegFit, LogRegOptions};

use crate::bpe::TokenizerModel;
use crate::error::{Error, Result};
use crate::pretokenize::PreTokenizer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProxyOptions {
    pub solver: LogRegOptions,
    pub feature_cap: usize,
}

impl Default for ProxyOptions {
    fn default() -> Self {
        ProxyOptions {
            solver: LogRegOptions::default(),
            feature_cap: DEFAULT_FEATURE_CAP,
        }
    }
}

/// One binary scorer. Weights are stored sparsely; absent columns are zero.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classifier {
    /// Label scored as the positive class.
    pub label: String,
    pub intercept: f64,
    pub weights: Vec<(u32, f64)>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Set when the training column had a single class and no solve was run.
    pub constant: bool,
}

impl Classifier {
    fn from_fit(label: String, fit: LogRegFit) -> Self {
        let weights = fit
            .weights
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(j, &v)| (j as u32, v))
            .collect();
        Classifier {
            label,
            intercept: fit.intercept,
            weights,
            objective: fit.objective,
            iterations: fit.iterations,
            converged: fit.converged,
            constant: false,
        }
    }

    /// Intercept-only scorer for a column whose labels are all equal, set to
    /// the smoothed log-odds of the column.
    fn constant(label: String, positives: usize, negatives: usize) -> Self {
        let intercept = ((positives as f64 + 0.5) / (negatives as f64 + 0.5)).ln();
        Classifier {
            label,
            intercept,
            weights: Vec::new(),
            objective: 0.0,
            iterations: 0,
            converged: true,
            constant: true,
        }
    }

    pub fn dense_weights(&self, n_features: usize) -> Vec<f64> {
        let mut w = vec![0.0; n_features];
        for &(j, v) in &self.weights {
            w[j as usize] = v;
        }
        w
    }

    pub fn nonzero_weights(&self) -> usize {
        self.weights.len()
    }

    fn scores(&self, x: &SparseBinaryMatrix) -> Vec<f64> {
        let w = self.dense_weights(x.n_cols());
        x.rows()
            .map(|row| self.intercept + row.iter().map(|&j| w[j as usize]).sum::<f64>())
            .collect()
    }
}

/// A trained proxy: the feature space of its training split plus one
/// classifier per label (a single one for binary tasks).
#[derive(Debug, Clone, PartialEq)]
pub struct ProxyModel {
    pub feature_space: FeatureSpace,
    pub label_space: Vec<String>,
    pub task_kind: TaskKind,
    pub pair_mode: PairMode,
    pub classifiers: Vec<Classifier>,
    pub options: ProxyOptions,
    pretokenizer: PreTokenizer,
    vocab_size: usize,
}

impl ProxyModel {
    pub fn n_features(&self) -> usize {
        self.feature_space.len()
    }

    /// Scores per instance, one column per label. Binary tasks score the
    /// negative label as a constant 0.
    pub fn scores(&self, x: &SparseBinaryMatrix) -> Vec<Vec<f64>> {
        let columns: Vec<Vec<f64>> = self.classifiers.par_iter().map(|c| c.scores(x)).collect();
        (0..x.n_rows())
            .map(|i| match self.task_kind {
                TaskKind::Binary => vec![0.0, columns[0][i]],
                _ => columns.iter().map(|col| col[i]).collect(),
            })
            .collect()
    }

    /// Predicted label indices per instance.
    pub fn predict(&self, x: &SparseBinaryMatrix) -> Vec<Vec<usize>> {
        self.scores(x)
            .into_iter()
            .map(|s| match self.task_kind {
                TaskKind::Multilabel => (0..s.len()).filter(|&k| s[k] > 0.0).collect(),
                _ => vec![argmax(&s)],
            })
            .collect()
    }
}

/// First index of the largest score.
fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (k, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = k;
        }
    }
    best
}

fn label_indices(labels: &[String], space: &[String]) -> Vec<usize> {
    labels
        .iter()
        .filter_map(|l| space.binary_search(l).ok())
        .collect()
}

/// Trains the proxy on `train` using tokens from `tokenizer`.
pub fn train_proxy(
    tokenizer: &TokenizerModel,
    train: &TaskDataset,
    opts: &ProxyOptions,
) -> Result<ProxyModel> {
    let labels = train.label_space();
    if labels.len() < 2 {
        return Err(Error::Dataset(format!(
            "training split needs at least 2 distinct labels, found {}",
            labels.len()
        )));
    }
    let (feature_space, x) = featurize(tokenizer, train, opts.feature_cap)?;
    let gold: Vec<Vec<usize>> = train
        .instances()
        .iter()
        .map(|inst| label_indices(&inst.labels, labels))
        .collect();
    let targets: Vec<usize> = match train.task_kind() {
        TaskKind::Binary => vec![1],
        _ => (0..labels.len()).collect(),
    };
    let classifiers = targets
        .into_par_iter()
        .map(|k| {
            let y: Vec<bool> = gold.iter().map(|g| g.contains(&k)).collect();
            let positives = y.iter().filter(|&&v| v).count();
            let label = labels[k].clone();
            if positives == 0 || positives == y.len() {
                return Ok(Classifier::constant(label, positives, y.len() - positives));
            }
            Ok(Classifier::from_fit(
                label,
                train_logreg(&x, &y, &opts.solver)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ProxyModel {
        feature_space,
        label_space: labels.to_vec(),
        task_kind: train.task_kind(),
        pair_mode: train.pair_mode(),
        classifiers,
        options: *opts,
        pretokenizer: tokenizer.pretokenizer(),
        vocab_size: tokenizer.vocab_size(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Average {
    #[default]
    Macro,
    Micro,
}

impl FromStr for F1Average {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "macro" => Ok(F1Average::Macro),
            "micro" => Ok(F1Average::Micro),
            other => Err(Error::InvalidInput(format!(
                "unknown F1 average {other:?} (expected macro or micro)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    /// `accuracy`, `macro_f1` or `micro_f1`.
    pub metric: &'static str,
    pub value: f64,
    pub n_instances: usize,
    /// Per-instance correctness (exact label-set match for multilabel tasks).
    pub correct: Vec<bool>,
    /// Predicted labels per instance.
    pub predictions: Vec<Vec<String>>,
}

/// Scores `eval` with accuracy (binary, multiclass) or F1 (multilabel).
pub fn evaluate_proxy(
    proxy: &ProxyModel,
    tokenizer: &TokenizerModel,
    eval: &TaskDataset,
    average: F1Average,
) -> Result<EvalReport> {
    if tokenizer.pretokenizer() != proxy.pretokenizer || tokenizer.vocab_size() != proxy.vocab_size
    {
        return Err(Error::InvalidInput(
            "evaluation tokenizer differs from the one the proxy was trained with".into(),
        ));
    }
    if eval.pair_mode() != proxy.pair_mode {
        return Err(Error::Dataset(format!(
            "evaluation split uses pair mode {} but the proxy expects {}",
            eval.pair_mode(),
            proxy.pair_mode
        )));
    }
    if eval.is_empty() {
        return Err(Error::Dataset("evaluation split is empty".into()));
    }
    let x = transform(tokenizer, eval, &proxy.feature_space)?;
    let predicted = proxy.predict(&x);
    let gold: Vec<Vec<usize>> = eval
        .instances()
        .iter()
        .map(|inst| {
            let mut g = label_indices(&inst.labels, &proxy.label_space);
            g.sort_unstable();
            g
        })
        .collect();
    let known_gold = |i: usize| gold[i].len() == eval.instances()[i].labels.len();
    let correct: Vec<bool> = (0..gold.len())
        .map(|i| known_gold(i) && predicted[i] == gold[i])
        .collect();

    let (metric, value) = match proxy.task_kind {
        TaskKind::Binary | TaskKind::Multiclass => {
            let hits = correct.iter().filter(|&&c| c).count();
            ("accuracy", hits as f64 / correct.len() as f64)
        }
        TaskKind::Multilabel => {
            let k = proxy.label_space.len();
            let mut tp = vec![0usize; k];
            let mut fp = vec![0usize; k];
            let mut fn_ = vec![0usize; k];
            for (p, g) in predicted.iter().zip(&gold) {
                for l in 0..k {
                    match (p.contains(&l), g.contains(&l)) {
                        (true, true) => tp[l] += 1,
                        (true, false) => fp[l] += 1,
                        (false, true) => fn_[l] += 1,
                        (false, false) => {}
                    }
                }
            }
            match average {
                F1Average::Macro => {
                    let sum: f64 = (0..k).map(|l| f1(tp[l], fp[l], fn_[l])).sum();
                    ("macro_f1", sum / k as f64)
                }
                F1Average::Micro => (
                    "micro_f1",
                    f1(tp.iter().sum(), fp.iter().sum(), fn_.iter().sum()),
                ),
            }
        }
    };
    let predictions = predicted
        .iter()
        .map(|p| p.iter().map(|&k| proxy.label_space[k].clone()).collect())
        .collect();
    Ok(EvalReport {
        metric,
        value,
        n_instances: eval.len(),
        correct,
        predictions,
    })
}

/// F1 from counts; 0 when precision and recall are both undefined or zero.
pub fn f1(tp: usize, fp: usize, fn_: usize) -> f64 {
    let denom = 2 * tp + fp + fn_;
    if denom == 0 {
        0.0
    } else {
        2.0 * tp as f64 / denom as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pretokenize::PreTokenizer;

    fn base() -> TokenizerModel {
        TokenizerModel::base(PreTokenizer::Ws)
    }

    fn single(rows: &[(&str, &str)]) -> TaskDataset {
        TaskDataset::new(
            rows.iter().map(|(t, l)| Instance::single(*t, *l)).collect(),
            None,
            PairMode::None,
        )
        .unwrap()
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0, 0.0]), 0);
    }

    #[test]
    fn f1_edge_cases() {
        assert_eq!(f1(0, 0, 0), 0.0);
        assert_eq!(f1(1, 0, 0), 1.0);
        assert!((f1(1, 1, 0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn learns_a_single_indicator() {
        let train = single(&[("xq", "yes"), ("qq", "no"), ("xz", "yes"), ("zz", "no")]);
        let opts = ProxyOptions {
            solver: LogRegOptions {
                c: 10.0,
                ..Default::default()
            },
            ..Default::default()
        };
        let proxy = train_proxy(&base(), &train, &opts).unwrap();
        assert_eq!(proxy.classifiers.len(), 1);
        assert_eq!(proxy.classifiers[0].label, "yes");
        let report = evaluate_proxy(&proxy, &base(), &train, F1Average::Macro).unwrap();
        assert_eq!(report.metric, "accuracy");
        assert_eq!(report.value, 1.0);
    }

    #[test]
    fn multiclass_has_one_classifier_per_label() {
        let train = single(&[("a", "A"), ("b", "B"), ("c", "C"), ("a", "A")]);
        let proxy = train_proxy(&base(), &train, &ProxyOptions::default()).unwrap();
        assert_eq!(proxy.classifiers.len(), 3);
        assert_eq!(proxy.task_kind, TaskKind::Multiclass);
    }

    #[test]
    fn constant_column_gets_intercept_only_classifier() {
        let instances = vec![
            Instance {
                text_a: "a".into(),
                text_b: None,
                labels: vec!["all".into(), "x".into()],
            },
            Instance {
                text_a: "b".into(),
                text_b: None,
                labels: vec!["all".into()],
            },
        ];
        let train = TaskDataset::new(instances, None, PairMode::None).unwrap();
        let proxy = train_proxy(&base(), &train, &ProxyOptions::default()).unwrap();
        let all = &proxy.classifiers[0];
        assert!(all.constant);
        assert!((all.intercept - (2.5f64 / 0.5).ln()).abs() < 1e-12);
        let report = evaluate_proxy(&proxy, &base(), &train, F1Average::Micro).unwrap();
        assert_eq!(report.metric, "micro_f1");
        assert!(report
            .predictions
            .iter()
            .all(|p| p.contains(&"all".to_string())));
    }

    #[test]
    fn single_label_training_split_is_rejected() {
        let train = single(&[("a", "A"), ("b", "A")]);
        assert!(matches!(
            train_proxy(&base(), &train, &ProxyOptions::default()),
            Err(Error::Dataset(_))
        ));
    }

    #[test]
    fn tokenizer_mismatch_is_rejected() {
        let train = single(&[("a", "A"), ("b", "B")]);
        let proxy = train_proxy(&base(), &train, &ProxyOptions::default()).unwrap();
        let other = TokenizerModel::base(PreTokenizer::Gpt2);
        assert!(evaluate_proxy(&proxy, &other, &train, F1Average::Macro).is_err());
    }
}
