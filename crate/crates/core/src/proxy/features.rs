use std::collections::BTreeSet;
use std::fmt;

use rayon::prelude::*;
use rustc_hash::FxHashMap;

use super::dataset::{Instance, PairMode, TaskDataset};
use crate::bpe::{TokenId, TokenizerModel};
use crate::error::{Error, Result};

pub const DEFAULT_FEATURE_CAP: usize = 5_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Feature {
    Unigram(TokenId),
    /// (token of text a, token of text b)
    Pair(TokenId, TokenId),
    /// Token present in both texts.
    Both(TokenId),
    /// Token present in exactly one of the two texts.
    Xor(TokenId),
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Feature::Unigram(t) => write!(f, "u:{t}"),
            Feature::Pair(a, b) => write!(f, "p:{a},{b}"),
            Feature::Both(t) => write!(f, "both:{t}"),
            Feature::Xor(t) => write!(f, "xor:{t}"),
        }
    }
}

/// Dense column indices for the features seen in a training split.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct FeatureSpace {
    features: Vec<Feature>,
    index: FxHashMap<Feature, u32>,
}

impl FeatureSpace {
    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn get(&self, feature: &Feature) -> Option<u32> {
        self.index.get(feature).copied()
    }

    pub fn feature(&self, column: u32) -> Option<Feature> {
        self.features.get(column as usize).copied()
    }

    pub fn features(&self) -> &[Feature] {
        &self.features
    }

    fn intern(&mut self, feature: Feature) -> u32 {
        let next = self.features.len() as u32;
        *self.index.entry(feature).or_insert_with(|| {
            self.features.push(feature);
            next
        })
    }
}

/// Row-compressed binary matrix: each row lists the sorted, distinct columns
/// holding a 1.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseBinaryMatrix {
    indptr: Vec<usize>,
    indices: Vec<u32>,
    n_cols: usize,
}

impl SparseBinaryMatrix {
    /// Builds from per-row column lists; rows are sorted and deduplicated.
    pub fn from_rows(rows: Vec<Vec<u32>>, n_cols: usize) -> Result<Self> {
        let mut indptr = Vec::with_capacity(rows.len() + 1);
        let mut indices = Vec::new();
        indptr.push(0);
        for mut row in rows {
            row.sort_unstable();
            row.dedup();
            if let Some(&last) = row.last() {
                if last as usize >= n_cols {
                    return Err(Error::InvalidInput(format!(
                        "column {last} out of range for {n_cols} columns"
                    )));
                }
            }
            indices.extend_from_slice(&row);
            indptr.push(indices.len());
        }
        Ok(SparseBinaryMatrix {
            indptr,
            indices,
            n_cols,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.indptr.len() - 1
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.indices[self.indptr[i]..self.indptr[i + 1]]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        (0..self.n_rows()).map(move |i| self.row(i))
    }
}

fn token_set(model: &TokenizerModel, text: &str) -> BTreeSet<TokenId> {
    model.encode(text).ids.into_iter().collect()
}

/// Features of one instance, sorted and distinct.
fn instance_features(
    model: &TokenizerModel,
    inst: &Instance,
    mode: PairMode,
    cap: usize,
) -> Result<Vec<Feature>> {
    let a = token_set(model, &inst.text_a);
    let b = inst.text_b.as_deref().map(|t| token_set(model, t));
    let features = match (mode, b) {
        (PairMode::None, _) => a.into_iter().map(Feature::Unigram).collect(),
        (PairMode::Cartesian, Some(b)) => {
            if a.len().saturating_mul(b.len()) > cap {
                return Err(Error::FeatureCap { cap });
            }
            let mut out = Vec::with_capacity(a.len() * b.len());
            for &x in &a {
                out.extend(b.iter().map(|&y| Feature::Pair(x, y)));
            }
            out
        }
        (PairMode::SharedDisjoint, Some(b)) => {
            let mut out: Vec<Feature> = a.intersection(&b).map(|&t| Feature::Both(t)).collect();
            out.extend(a.symmetric_difference(&b).map(|&t| Feature::Xor(t)));
            out.sort_unstable();
            out
        }
        (_, None) => {
            return Err(Error::Dataset(format!(
                "pair mode {mode} needs a second text"
            )))
        }
    };
    Ok(features)
}

fn all_instance_features(
    model: &TokenizerModel,
    dataset: &TaskDataset,
    cap: usize,
) -> Result<Vec<Vec<Feature>>> {
    dataset
        .instances()
        .par_iter()
        .map(|inst| instance_features(model, inst, dataset.pair_mode(), cap))
        .collect()
}

/// Builds the feature space from `dataset` (a training split) and its
/// binary design matrix. Column ids are assigned in instance order, then in
/// sorted feature order within an instance.
pub fn featurize(
    model: &TokenizerModel,
    dataset: &TaskDataset,
    cap: usize,
) -> Result<(FeatureSpace, SparseBinaryMatrix)> {
    let per_instance = all_instance_features(model, dataset, cap)?;
    let mut space = FeatureSpace::default();
    let mut rows = Vec::with_capacity(per_instance.len());
    for feats in per_instance {
        let row: Vec<u32> = feats.into_iter().map(|f| space.intern(f)).collect();
        if space.len() > cap {
            return Err(Error::FeatureCap { cap });
        }
        rows.push(row);
    }
    let n_cols = space.len();
    Ok((space, SparseBinaryMatrix::from_rows(rows, n_cols)?))
}

/// Maps `dataset` into an existing feature space; unseen features are dropped.
pub fn transform(
    model: &TokenizerModel,
    dataset: &TaskDataset,
    space: &FeatureSpace,
) -> Result<SparseBinaryMatrix> {
    let per_instance = all_instance_features(model, dataset, usize::MAX)?;
    let rows = per_instance
        .into_iter()
        .map(|feats| feats.iter().filter_map(|f| space.get(f)).collect())
        .collect();
    SparseBinaryMatrix::from_rows(rows, space.len())
}
