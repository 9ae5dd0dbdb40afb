//! Random forests over binary-labeled data: a removal-enabled variant
//! whose cached node statistics support exact single-row deletion, and
//! a plain baseline that only fits and predicts.
//!
//! The removal-enabled forest trains every tree on the full training
//! set (no bootstrap), with per-tree feature subsampling driven by
//! deterministic sub-seeds. Dropping the bootstrap is what makes
//! `fit(D).delete(x)` reproduce `fit(D \ {x})` exactly, tree for tree,
//! which is the property the whole crate is built around and the one
//! the oracle tests assert.

mod checkpoint;
mod naive;
mod split;
mod tree;

use std::collections::{BTreeSet, HashMap};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::hash::mix_seed;

pub use naive::{NaiveForest, PlainNode};
pub use split::{
    best_candidate, gini_gain, ClassCounts, FeatureHistogram, NodeEval, SplitCandidate, ValueBin,
};
pub use tree::{DareNode, NodeStats};

pub(crate) use checkpoint::{
    put_params as checkpoint_put_params, read_dare as checkpoint_read_dare,
    read_naive as checkpoint_read_naive, read_params as checkpoint_read_params,
    write_dare as checkpoint_write_dare, write_naive as checkpoint_write_naive,
};

use tree::TreeContext;

/// Forest hyperparameters, shared by both forest kinds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_depth: usize,
    /// Candidate thresholds cached per sampled feature per node.
    pub thresholds_per_feature: usize,
    /// Feature columns sampled per tree; `None` means `ceil(sqrt(d))`.
    pub max_features_per_tree: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 10,
            max_depth: 10,
            thresholds_per_feature: 8,
            max_features_per_tree: None,
            min_samples_leaf: 1,
        }
    }
}

impl ForestParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::invalid("n_trees must be at least 1"));
        }
        if self.thresholds_per_feature == 0 {
            return Err(Error::invalid("thresholds_per_feature must be at least 1"));
        }
        if self.min_samples_leaf == 0 {
            return Err(Error::invalid("min_samples_leaf must be at least 1"));
        }
        if self.max_features_per_tree == Some(0) {
            return Err(Error::invalid("max_features_per_tree must be at least 1"));
        }
        Ok(())
    }

    pub fn resolved_max_features(&self, d: usize) -> usize {
        match self.max_features_per_tree {
            Some(k) => k.min(d).max(1),
            None => ((d as f64).sqrt().ceil() as usize).clamp(1, d),
        }
    }
}

/// Counters describing how much work one deletion did.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct DeletionReport {
    /// Nodes whose cached statistics were updated in place.
    pub nodes_updated: usize,
    /// Subtrees rebuilt from their surviving rows.
    pub subtrees_retrained: usize,
    /// Rows participating in those rebuilds.
    pub rows_touched: usize,
}

impl DeletionReport {
    pub fn absorb(&mut self, other: DeletionReport) {
        self.nodes_updated += other.nodes_updated;
        self.subtrees_retrained += other.subtrees_retrained;
        self.rows_touched += other.rows_touched;
    }
}

/// One tree of the removal-enabled forest: its sampled feature columns
/// and its root.
#[derive(Debug, Clone, PartialEq)]
pub struct DareTree {
    pub features: Vec<usize>,
    pub root: DareNode,
}

/// Removal-enabled forest. Retains its training data (live rows) so
/// that invalidated subtrees can be rebuilt during deletion.
#[derive(Debug, Clone)]
pub struct DareForest {
    params: ForestParams,
    seed: u64,
    trees: Vec<DareTree>,
    train: Dataset,
    index: HashMap<u64, usize>,
    live: BTreeSet<u64>,
}

impl DareForest {
    /// Train on all rows of `train`. Deterministic per seed: tree `t`
    /// samples its feature columns from sub-seed `mix_seed(seed, t)`.
    pub fn fit(train: &Dataset, params: &ForestParams, seed: u64) -> Result<Self> {
        params.validate()?;
        if train.is_empty() {
            return Err(Error::invalid("cannot fit a forest on an empty dataset"));
        }
        let d = train.n_cols();
        let k = params.resolved_max_features(d);
        let index: HashMap<u64, usize> =
            (0..train.n_rows()).map(|i| (train.row_id(i), i)).collect();
        let mut trees = Vec::with_capacity(params.n_trees);
        for t in 0..params.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, t as u64));
            let mut features = rand::seq::index::sample(&mut rng, d, k).into_vec();
            features.sort_unstable();
            let ctx = TreeContext {
                data: train,
                index: &index,
                features: &features,
                params,
            };
            let root = tree::build_node(&ctx, (0..train.n_rows()).collect(), 0);
            trees.push(DareTree { features, root });
        }
        Ok(DareForest {
            params: *params,
            seed,
            trees,
            train: train.clone(),
            live: train.row_ids().iter().copied().collect(),
            index,
        })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn trees(&self) -> &[DareTree] {
        &self.trees
    }

    pub fn n_cols(&self) -> usize {
        self.train.n_cols()
    }

    /// Rows still contributing to the model.
    pub fn n_live_rows(&self) -> usize {
        self.live.len()
    }

    pub fn live_row_ids(&self) -> impl Iterator<Item = u64> + '_ {
        self.live.iter().copied()
    }

    pub fn contains_row(&self, row_id: u64) -> bool {
        self.live.contains(&row_id)
    }

    /// The surviving training rows, in their original row order.
    pub fn live_dataset(&self) -> Dataset {
        let keep: Vec<usize> = (0..self.train.n_rows())
            .filter(|&i| self.live.contains(&self.train.row_id(i)))
            .collect();
        self.train.subset(&keep)
    }

    /// Per-row mean over trees of the leaf positive-class fraction.
    pub fn predict_proba(&self, x: &Dataset) -> Result<Vec<f64>> {
        if self.live.is_empty() {
            return Err(Error::state(
                "the model's training set has been fully deleted",
            ));
        }
        if x.n_cols() != self.train.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: self.train.n_cols(),
                found: x.n_cols(),
            });
        }
        let n_trees = self.trees.len() as f64;
        Ok((0..x.n_rows())
            .map(|i| {
                let row = x.row(i);
                let sum: f64 = self
                    .trees
                    .iter()
                    .map(|t| tree::leaf_fraction(&t.root, row))
                    .sum();
                sum / n_trees
            })
            .collect())
    }

    /// Class predictions; probability ties at exactly 0.5 go to class 1.
    pub fn predict(&self, x: &Dataset) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }

    /// Remove one training row exactly. Afterwards the forest is
    /// structurally identical to a fresh fit (same seed) on the
    /// remaining rows. Unknown ids — including rows already deleted —
    /// are rejected.
    pub fn delete(&mut self, row_id: u64) -> Result<DeletionReport> {
        if !self.live.contains(&row_id) {
            return Err(Error::UnknownRow(row_id));
        }
        let pos = self.index[&row_id];
        let label = self.train.label(pos);
        let mut report = DeletionReport::default();
        for t in &mut self.trees {
            let ctx = TreeContext {
                data: &self.train,
                index: &self.index,
                features: &t.features,
                params: &self.params,
            };
            tree::delete_row(&ctx, &mut t.root, 0, pos, row_id, label, &mut report);
        }
        self.live.remove(&row_id);
        Ok(report)
    }

    /// Validate every cached statistic against the leaf contents:
    /// candidate and histogram sums, argmax choices, leaf partitions.
    pub fn check_invariants(&self) -> Result<()> {
        for (i, t) in self.trees.iter().enumerate() {
            let ctx = TreeContext {
                data: &self.train,
                index: &self.index,
                features: &t.features,
                params: &self.params,
            };
            let mut ids = tree::check_node(&ctx, &t.root, 0)
                .map_err(|msg| Error::state(format!("tree {i}: {msg}")))?;
            ids.sort_unstable();
            let live: Vec<u64> = self.live.iter().copied().collect();
            if ids != live {
                return Err(Error::state(format!(
                    "tree {i}: leaves do not partition the live training rows"
                )));
            }
        }
        Ok(())
    }

    /// Test hook: damage one cached candidate count so the invariant
    /// checker has something to catch.
    #[doc(hidden)]
    pub fn corrupt_first_candidate(&mut self) -> bool {
        for t in &mut self.trees {
            if let DareNode::Internal { stats, .. } = &mut t.root {
                if let Some(c) = stats.candidates.first_mut() {
                    c.left.n0 += 1;
                    return true;
                }
            }
        }
        false
    }
}

impl PartialEq for DareForest {
    /// Structural equality: parameters, seed, every tree, and the
    /// surviving training rows.
    fn eq(&self, other: &Self) -> bool {
        self.params == other.params
            && self.seed == other.seed
            && self.trees == other.trees
            && self.live_dataset() == other.live_dataset()
    }
}

/// Retrain-from-scratch baseline: a plain forest fit on `train` minus
/// `deleted_ids`.
pub fn naive_retrain(
    train: &Dataset,
    deleted_ids: &[u64],
    params: &ForestParams,
    seed: u64,
) -> Result<NaiveForest> {
    let known: BTreeSet<u64> = train.row_ids().iter().copied().collect();
    let mut gone = BTreeSet::new();
    for &id in deleted_ids {
        if !known.contains(&id) {
            return Err(Error::UnknownRow(id));
        }
        gone.insert(id);
    }
    let reduced = train.without_row_ids(&gone);
    NaiveForest::fit(&reduced, params, seed)
}
