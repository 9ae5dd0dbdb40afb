//! The retrain-from-scratch baseline: a plain greedy forest with no
//! cached statistics and no leaf membership. Supports only fit and
//! predict; "deleting" from it means fitting a new one.
//!
//! Built with the same splitter and the same per-tree sub-seeds as the
//! removal-enabled forest, so for equal seeds the two produce identical
//! structures and identical predictions.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::split::{best_candidate, evaluate_rows, ClassCounts};
use crate::forest::ForestParams;
use crate::hash::mix_seed;

#[derive(Debug, Clone, PartialEq)]
pub enum PlainNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<PlainNode>,
        right: Box<PlainNode>,
    },
    Leaf {
        counts: ClassCounts,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct NaiveForest {
    params: ForestParams,
    seed: u64,
    n_cols: usize,
    trees: Vec<PlainNode>,
}

fn build_plain(
    data: &Dataset,
    rows: Vec<usize>,
    features: &[usize],
    params: &ForestParams,
    depth: usize,
) -> PlainNode {
    let mut counts = ClassCounts::default();
    for &r in &rows {
        counts.add(data.label(r));
    }
    if depth >= params.max_depth || counts.total() < 2 * params.min_samples_leaf as u64 {
        return PlainNode::Leaf { counts };
    }
    let eval = evaluate_rows(data, &rows, features, params.thresholds_per_feature);
    let Some((chosen, _)) =
        best_candidate(&eval.candidates, counts, params.min_samples_leaf as u64)
    else {
        return PlainNode::Leaf { counts };
    };
    let cand = eval.candidates[chosen];
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| data.value(r, cand.feature) <= cand.threshold);
    PlainNode::Split {
        feature: cand.feature,
        threshold: cand.threshold,
        left: Box::new(build_plain(data, left_rows, features, params, depth + 1)),
        right: Box::new(build_plain(data, right_rows, features, params, depth + 1)),
    }
}

fn plain_leaf_fraction(node: &PlainNode, row: &[f64]) -> f64 {
    let mut cur = node;
    loop {
        match cur {
            PlainNode::Split {
                feature,
                threshold,
                left,
                right,
            } => {
                cur = if row[*feature] <= *threshold {
                    left
                } else {
                    right
                };
            }
            PlainNode::Leaf { counts } => {
                return counts.n1 as f64 / counts.total() as f64;
            }
        }
    }
}

impl NaiveForest {
    pub fn fit(train: &Dataset, params: &ForestParams, seed: u64) -> Result<Self> {
        params.validate()?;
        if train.is_empty() {
            return Err(Error::invalid("cannot fit a forest on an empty dataset"));
        }
        let d = train.n_cols();
        let k = params.resolved_max_features(d);
        let mut trees = Vec::with_capacity(params.n_trees);
        for t in 0..params.n_trees {
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(seed, t as u64));
            let mut features = rand::seq::index::sample(&mut rng, d, k).into_vec();
            features.sort_unstable();
            trees.push(build_plain(
                train,
                (0..train.n_rows()).collect(),
                &features,
                params,
                0,
            ));
        }
        Ok(NaiveForest {
            params: *params,
            seed,
            n_cols: d,
            trees,
        })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub(crate) fn trees(&self) -> &[PlainNode] {
        &self.trees
    }

    pub(crate) fn from_parts(
        params: ForestParams,
        seed: u64,
        n_cols: usize,
        trees: Vec<PlainNode>,
    ) -> Self {
        NaiveForest {
            params,
            seed,
            n_cols,
            trees,
        }
    }

    pub fn predict_proba(&self, x: &Dataset) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: x.n_cols(),
            });
        }
        let n_trees = self.trees.len() as f64;
        Ok((0..x.n_rows())
            .map(|i| {
                let row = x.row(i);
                let sum: f64 = self.trees.iter().map(|t| plain_leaf_fraction(t, row)).sum();
                sum / n_trees
            })
            .collect())
    }

    pub fn predict(&self, x: &Dataset) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }
}
