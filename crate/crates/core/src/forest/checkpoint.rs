//! Versioned binary checkpoints for both forest kinds.
//!
//! A removal-enabled checkpoint carries the hyperparameters, the seed,
//! every node with its cached statistics and leaf membership, and the
//! surviving training rows (without which later deletions could not
//! rebuild subtrees). Serialization is canonical: equal models produce
//! equal bytes, and a load/save round trip is bit-exact.

use std::collections::{BTreeSet, HashMap};
use std::fs;
use std::path::Path;

use crate::dataset::container::{read_dataset, write_dataset};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::naive::{NaiveForest, PlainNode};
use crate::forest::split::{ClassCounts, FeatureHistogram, SplitCandidate, ValueBin};
use crate::forest::tree::{DareNode, NodeStats};
use crate::forest::{DareForest, DareTree, ForestParams};
use crate::wire::{put_f64, put_u32, put_u64, put_u8, Reader};

const DARE_MAGIC: &[u8; 8] = b"ULRNDRF1";
const NAIVE_MAGIC: &[u8; 8] = b"ULRNNRF1";
const VERSION: u32 = 1;

const TAG_LEAF: u8 = 0;
const TAG_INTERNAL: u8 = 1;

// Guards against absurd allocations from corrupted length fields.
const MAX_LEN: usize = 1 << 33;

pub(crate) fn put_params(buf: &mut Vec<u8>, p: &ForestParams) {
    put_u64(buf, p.n_trees as u64);
    put_u64(buf, p.max_depth as u64);
    put_u64(buf, p.thresholds_per_feature as u64);
    match p.max_features_per_tree {
        None => put_u8(buf, 0),
        Some(k) => {
            put_u8(buf, 1);
            put_u64(buf, k as u64);
        }
    }
    put_u64(buf, p.min_samples_leaf as u64);
}

pub(crate) fn read_params(r: &mut Reader<'_>) -> Result<ForestParams> {
    let n_trees = r.len(MAX_LEN, "n_trees")?;
    let max_depth = r.len(MAX_LEN, "max_depth")?;
    let thresholds_per_feature = r.len(MAX_LEN, "thresholds_per_feature")?;
    let at = r.pos();
    let max_features_per_tree = match r.u8("max_features tag")? {
        0 => None,
        1 => Some(r.len(MAX_LEN, "max_features")?),
        t => return Err(Error::format(at, format!("bad max_features tag {t}"))),
    };
    let min_samples_leaf = r.len(MAX_LEN, "min_samples_leaf")?;
    Ok(ForestParams {
        n_trees,
        max_depth,
        thresholds_per_feature,
        max_features_per_tree,
        min_samples_leaf,
    })
}

fn put_counts(buf: &mut Vec<u8>, c: ClassCounts) {
    put_u64(buf, c.n0);
    put_u64(buf, c.n1);
}

fn read_counts(r: &mut Reader<'_>) -> Result<ClassCounts> {
    Ok(ClassCounts {
        n0: r.u64("count n0")?,
        n1: r.u64("count n1")?,
    })
}

fn put_dare_node(buf: &mut Vec<u8>, node: &DareNode) {
    match node {
        DareNode::Leaf { counts, row_ids } => {
            put_u8(buf, TAG_LEAF);
            put_counts(buf, *counts);
            put_u64(buf, row_ids.len() as u64);
            for &id in row_ids {
                put_u64(buf, id);
            }
        }
        DareNode::Internal {
            stats,
            chosen,
            left,
            right,
        } => {
            put_u8(buf, TAG_INTERNAL);
            put_counts(buf, stats.counts);
            put_u64(buf, stats.candidates.len() as u64);
            for c in &stats.candidates {
                put_u64(buf, c.feature as u64);
                put_f64(buf, c.threshold);
                put_counts(buf, c.left);
                put_counts(buf, c.right);
            }
            put_u64(buf, stats.hists.len() as u64);
            for h in &stats.hists {
                put_u64(buf, h.feature as u64);
                put_u64(buf, h.bins.len() as u64);
                for bin in &h.bins {
                    put_f64(buf, bin.value);
                    put_counts(buf, bin.counts);
                }
            }
            put_u64(buf, *chosen as u64);
            put_dare_node(buf, left);
            put_dare_node(buf, right);
        }
    }
}

fn read_dare_node(r: &mut Reader<'_>) -> Result<DareNode> {
    let at = r.pos();
    match r.u8("node tag")? {
        TAG_LEAF => {
            let counts = read_counts(r)?;
            let n = r.len(MAX_LEN, "leaf row id count")?;
            let mut row_ids = Vec::with_capacity(n);
            for _ in 0..n {
                row_ids.push(r.u64("leaf row id")?);
            }
            Ok(DareNode::Leaf { counts, row_ids })
        }
        TAG_INTERNAL => {
            let counts = read_counts(r)?;
            let n_cands = r.len(MAX_LEN, "candidate count")?;
            let mut candidates = Vec::with_capacity(n_cands);
            for _ in 0..n_cands {
                candidates.push(SplitCandidate {
                    feature: r.len(MAX_LEN, "candidate feature")?,
                    threshold: r.f64("candidate threshold")?,
                    left: read_counts(r)?,
                    right: read_counts(r)?,
                });
            }
            let n_hists = r.len(MAX_LEN, "histogram count")?;
            let mut hists = Vec::with_capacity(n_hists);
            for _ in 0..n_hists {
                let feature = r.len(MAX_LEN, "histogram feature")?;
                let n_bins = r.len(MAX_LEN, "bin count")?;
                let mut bins = Vec::with_capacity(n_bins);
                for _ in 0..n_bins {
                    bins.push(ValueBin {
                        value: r.f64("bin value")?,
                        counts: read_counts(r)?,
                    });
                }
                hists.push(FeatureHistogram { feature, bins });
            }
            let chosen_at = r.pos();
            let chosen = r.len(MAX_LEN, "chosen index")?;
            if chosen >= candidates.len() {
                return Err(Error::format(
                    chosen_at,
                    format!("chosen index {chosen} out of range"),
                ));
            }
            let left = Box::new(read_dare_node(r)?);
            let right = Box::new(read_dare_node(r)?);
            Ok(DareNode::Internal {
                stats: NodeStats {
                    counts,
                    candidates,
                    hists,
                },
                chosen,
                left,
                right,
            })
        }
        t => Err(Error::format(at, format!("bad node tag {t}"))),
    }
}

impl DareForest {
    /// Canonical checkpoint bytes: params, seed, all trees with nodes,
    /// and the surviving training rows.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(DARE_MAGIC);
        put_u32(&mut buf, VERSION);
        put_params(&mut buf, self.params());
        put_u64(&mut buf, self.seed());
        put_u64(&mut buf, self.trees().len() as u64);
        for t in self.trees() {
            put_u64(&mut buf, t.features.len() as u64);
            for &f in &t.features {
                put_u64(&mut buf, f as u64);
            }
            put_dare_node(&mut buf, &t.root);
        }
        write_dataset(&mut buf, &self.live_dataset());
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let forest = read_dare(&mut r)?;
        r.expect_eof()?;
        Ok(forest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub(crate) fn read_dare(r: &mut Reader<'_>) -> Result<DareForest> {
    r.expect_magic(DARE_MAGIC, "forest checkpoint")?;
    let at = r.pos();
    let version = r.u32("checkpoint version")?;
    if version != VERSION {
        return Err(Error::format(
            at,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    let params = read_params(r)?;
    let seed = r.u64("seed")?;
    let n_at = r.pos();
    let n_trees = r.len(MAX_LEN, "tree count")?;
    if n_trees != params.n_trees {
        return Err(Error::format(
            n_at,
            format!(
                "tree count {n_trees} disagrees with params ({})",
                params.n_trees
            ),
        ));
    }
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        let n_feats = r.len(MAX_LEN, "feature count")?;
        let mut features = Vec::with_capacity(n_feats);
        for _ in 0..n_feats {
            features.push(r.len(MAX_LEN, "feature index")?);
        }
        let root = read_dare_node(r)?;
        trees.push(DareTree { features, root });
    }
    let data_at = r.pos();
    let train = read_dataset(r)?;
    DareForest::from_parts(params, seed, trees, train)
        .map_err(|e| Error::format(data_at, format!("inconsistent checkpoint: {e}")))
}

pub(crate) fn write_dare(buf: &mut Vec<u8>, forest: &DareForest) {
    buf.extend_from_slice(&forest.to_bytes());
}

impl DareForest {
    /// Reassemble a forest from checkpoint parts; `train` holds exactly
    /// the live rows.
    pub(crate) fn from_parts(
        params: ForestParams,
        seed: u64,
        trees: Vec<DareTree>,
        train: Dataset,
    ) -> Result<Self> {
        params.validate()?;
        let index: HashMap<u64, usize> =
            (0..train.n_rows()).map(|i| (train.row_id(i), i)).collect();
        let live: BTreeSet<u64> = train.row_ids().iter().copied().collect();
        let forest = DareForest {
            params,
            seed,
            trees,
            train,
            index,
            live,
        };
        Ok(forest)
    }
}

fn put_plain_node(buf: &mut Vec<u8>, node: &PlainNode) {
    match node {
        PlainNode::Leaf { counts } => {
            put_u8(buf, TAG_LEAF);
            put_counts(buf, *counts);
        }
        PlainNode::Split {
            feature,
            threshold,
            left,
            right,
        } => {
            put_u8(buf, TAG_INTERNAL);
            put_u64(buf, *feature as u64);
            put_f64(buf, *threshold);
            put_plain_node(buf, left);
            put_plain_node(buf, right);
        }
    }
}

fn read_plain_node(r: &mut Reader<'_>) -> Result<PlainNode> {
    let at = r.pos();
    match r.u8("node tag")? {
        TAG_LEAF => Ok(PlainNode::Leaf {
            counts: read_counts(r)?,
        }),
        TAG_INTERNAL => Ok(PlainNode::Split {
            feature: r.len(MAX_LEN, "split feature")?,
            threshold: r.f64("split threshold")?,
            left: Box::new(read_plain_node(r)?),
            right: Box::new(read_plain_node(r)?),
        }),
        t => Err(Error::format(at, format!("bad node tag {t}"))),
    }
}

impl NaiveForest {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(NAIVE_MAGIC);
        put_u32(&mut buf, VERSION);
        put_params(&mut buf, self.params());
        put_u64(&mut buf, self.seed());
        put_u64(&mut buf, self.n_cols() as u64);
        put_u64(&mut buf, self.trees().len() as u64);
        for t in self.trees() {
            put_plain_node(&mut buf, t);
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        let forest = read_naive(&mut r)?;
        r.expect_eof()?;
        Ok(forest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

pub(crate) fn read_naive(r: &mut Reader<'_>) -> Result<NaiveForest> {
    r.expect_magic(NAIVE_MAGIC, "forest checkpoint")?;
    let at = r.pos();
    let version = r.u32("checkpoint version")?;
    if version != VERSION {
        return Err(Error::format(
            at,
            format!("unsupported checkpoint version {version}"),
        ));
    }
    let params = read_params(r)?;
    let seed = r.u64("seed")?;
    let n_cols = r.len(MAX_LEN, "column count")?;
    let n_at = r.pos();
    let n_trees = r.len(MAX_LEN, "tree count")?;
    if n_trees != params.n_trees {
        return Err(Error::format(
            n_at,
            format!(
                "tree count {n_trees} disagrees with params ({})",
                params.n_trees
            ),
        ));
    }
    let mut trees = Vec::with_capacity(n_trees);
    for _ in 0..n_trees {
        trees.push(read_plain_node(r)?);
    }
    Ok(NaiveForest::from_parts(params, seed, n_cols, trees))
}

pub(crate) fn write_naive(buf: &mut Vec<u8>, forest: &NaiveForest) {
    buf.extend_from_slice(&forest.to_bytes());
}
