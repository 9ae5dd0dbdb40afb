//! Removal-enabled tree nodes: greedy construction, prediction walks,
//! and the root-to-leaf deletion update.
//!
//! Deletion contract: after `delete(row)`, every tree is structurally
//! identical to what a fresh fit on the remaining rows (same seed)
//! would build. The walk decrements cached statistics along the row's
//! path; a subtree is rebuilt from its surviving rows whenever the
//! fresh fit would have decided that node differently — the candidate
//! thresholds drifted, the best split moved, or the node would now
//! stop splitting. Leaves are also re-checked in the other direction,
//! because removing a row can create gain where there was none.

use std::collections::HashMap;

use crate::dataset::Dataset;
use crate::forest::split::{
    best_candidate, candidates_from_histograms, evaluate_rows, ClassCounts, NodeEval,
};
use crate::forest::{DeletionReport, ForestParams};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeStats {
    pub counts: ClassCounts,
    pub candidates: Vec<crate::forest::split::SplitCandidate>,
    pub hists: Vec<crate::forest::split::FeatureHistogram>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DareNode {
    Internal {
        stats: NodeStats,
        /// Index into `stats.candidates` of the split in force; always
        /// the best eligible candidate under the tie-break.
        chosen: usize,
        left: Box<DareNode>,
        right: Box<DareNode>,
    },
    Leaf {
        counts: ClassCounts,
        /// Training rows resident in this leaf, sorted ascending.
        row_ids: Vec<u64>,
    },
}

/// Shared context for building and updating one tree.
pub(crate) struct TreeContext<'a> {
    pub data: &'a Dataset,
    pub index: &'a HashMap<u64, usize>,
    pub features: &'a [usize],
    pub params: &'a ForestParams,
}

impl TreeContext<'_> {
    fn positions(&self, ids: &[u64]) -> Vec<usize> {
        ids.iter().map(|id| self.index[id]).collect()
    }
}

fn make_leaf(ctx: &TreeContext<'_>, rows: &[usize], counts: ClassCounts) -> DareNode {
    let mut row_ids: Vec<u64> = rows.iter().map(|&r| ctx.data.row_id(r)).collect();
    row_ids.sort_unstable();
    DareNode::Leaf { counts, row_ids }
}

/// Greedy construction over `rows`; pure in the row multiset, so any
/// row order produces the identical tree.
pub(crate) fn build_node(ctx: &TreeContext<'_>, rows: Vec<usize>, depth: usize) -> DareNode {
    let mut counts = ClassCounts::default();
    for &r in &rows {
        counts.add(ctx.data.label(r));
    }
    let p = ctx.params;
    if depth >= p.max_depth || counts.total() < 2 * p.min_samples_leaf as u64 {
        return make_leaf(ctx, &rows, counts);
    }
    let eval: NodeEval = evaluate_rows(ctx.data, &rows, ctx.features, p.thresholds_per_feature);
    let Some((chosen, _)) = best_candidate(&eval.candidates, counts, p.min_samples_leaf as u64)
    else {
        return make_leaf(ctx, &rows, counts);
    };
    let cand = eval.candidates[chosen];
    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
        .into_iter()
        .partition(|&r| ctx.data.value(r, cand.feature) <= cand.threshold);
    DareNode::Internal {
        stats: NodeStats {
            counts: eval.counts,
            candidates: eval.candidates,
            hists: eval.hists,
        },
        chosen,
        left: Box::new(build_node(ctx, left_rows, depth + 1)),
        right: Box::new(build_node(ctx, right_rows, depth + 1)),
    }
}

/// All training row ids in the subtree, in leaf order.
pub(crate) fn collect_row_ids(node: &DareNode, out: &mut Vec<u64>) {
    match node {
        DareNode::Internal { left, right, .. } => {
            collect_row_ids(left, out);
            collect_row_ids(right, out);
        }
        DareNode::Leaf { row_ids, .. } => out.extend_from_slice(row_ids),
    }
}

/// Positive-class fraction of the leaf this feature row lands in.
pub(crate) fn leaf_fraction(node: &DareNode, row: &[f64]) -> f64 {
    let mut cur = node;
    loop {
        match cur {
            DareNode::Internal {
                stats,
                chosen,
                left,
                right,
            } => {
                let cand = &stats.candidates[*chosen];
                cur = if row[cand.feature] <= cand.threshold {
                    left
                } else {
                    right
                };
            }
            DareNode::Leaf { counts, .. } => {
                return counts.n1 as f64 / counts.total() as f64;
            }
        }
    }
}

fn rebuild(
    ctx: &TreeContext<'_>,
    node: &mut DareNode,
    depth: usize,
    skip_id: u64,
    report: &mut DeletionReport,
) {
    let mut ids = Vec::new();
    collect_row_ids(node, &mut ids);
    ids.retain(|&id| id != skip_id);
    let rows = ctx.positions(&ids);
    report.subtrees_retrained += 1;
    report.rows_touched += rows.len();
    *node = build_node(ctx, rows, depth);
}

/// Remove one training row from this tree; `pos` is its position in
/// `ctx.data` and `label` its class.
pub(crate) fn delete_row(
    ctx: &TreeContext<'_>,
    node: &mut DareNode,
    depth: usize,
    pos: usize,
    row_id: u64,
    label: u8,
    report: &mut DeletionReport,
) {
    match node {
        DareNode::Internal {
            stats,
            chosen,
            left,
            right,
        } => {
            report.nodes_updated += 1;

            // Pull the row out of every cached histogram on this node.
            let mut value_vanished = false;
            for hist in &mut stats.hists {
                let v = ctx.data.value(pos, hist.feature);
                if hist.remove(v, label) {
                    value_vanished = true;
                }
            }
            stats.counts.remove(label);

            if value_vanished {
                // A distinct value disappeared, so a fresh fit may pick
                // different thresholds here. Recompute and compare.
                let fresh = candidates_from_histograms(
                    &stats.hists,
                    stats.counts,
                    ctx.params.thresholds_per_feature,
                );
                let same_thresholds = fresh.len() == stats.candidates.len()
                    && fresh
                        .iter()
                        .zip(&stats.candidates)
                        .all(|(a, b)| a.feature == b.feature && a.threshold == b.threshold);
                if !same_thresholds {
                    rebuild(ctx, node, depth, row_id, report);
                    return;
                }
                stats.candidates = fresh;
            } else {
                // Thresholds are untouched; only side counts move.
                for cand in &mut stats.candidates {
                    let v = ctx.data.value(pos, cand.feature);
                    if v <= cand.threshold {
                        cand.left.remove(label);
                    } else {
                        cand.right.remove(label);
                    }
                }
            }

            // Re-pick the split the fresh fit would choose now.
            match best_candidate(
                &stats.candidates,
                stats.counts,
                ctx.params.min_samples_leaf as u64,
            ) {
                None => {
                    // The node would no longer split at all.
                    rebuild(ctx, node, depth, row_id, report);
                }
                Some((best, _)) if best != *chosen => {
                    rebuild(ctx, node, depth, row_id, report);
                }
                Some(_) => {
                    let cand = &stats.candidates[*chosen];
                    let side = if ctx.data.value(pos, cand.feature) <= cand.threshold {
                        left
                    } else {
                        right
                    };
                    delete_row(ctx, side, depth + 1, pos, row_id, label, report);
                }
            }
        }
        DareNode::Leaf { counts, row_ids } => {
            report.nodes_updated += 1;
            let idx = row_ids
                .binary_search(&row_id)
                .expect("deleted row must be resident in its leaf");
            row_ids.remove(idx);
            counts.remove(label);

            // Removing a row can make a previously gainless leaf
            // splittable; grow it the way a fresh fit would.
            if !row_ids.is_empty()
                && depth < ctx.params.max_depth
                && counts.total() >= 2 * ctx.params.min_samples_leaf as u64
            {
                let rows = ctx.positions(row_ids);
                let eval = evaluate_rows(
                    ctx.data,
                    &rows,
                    ctx.features,
                    ctx.params.thresholds_per_feature,
                );
                if best_candidate(
                    &eval.candidates,
                    *counts,
                    ctx.params.min_samples_leaf as u64,
                )
                .is_some()
                {
                    report.subtrees_retrained += 1;
                    report.rows_touched += rows.len();
                    *node = build_node(ctx, rows, depth);
                }
            }
        }
    }
}

/// Walk the subtree validating every cached statistic against the leaf
/// contents below it. Returns the row ids of the subtree.
pub(crate) fn check_node(
    ctx: &TreeContext<'_>,
    node: &DareNode,
    depth: usize,
) -> Result<Vec<u64>, String> {
    match node {
        DareNode::Internal {
            stats,
            chosen,
            left,
            right,
        } => {
            if *chosen >= stats.candidates.len() {
                return Err(format!(
                    "chosen index {} out of range ({} candidates)",
                    chosen,
                    stats.candidates.len()
                ));
            }
            for cand in &stats.candidates {
                if (cand.left.n0 + cand.right.n0, cand.left.n1 + cand.right.n1)
                    != (stats.counts.n0, stats.counts.n1)
                {
                    return Err(format!(
                        "candidate ({}, {}) side counts do not sum to node counts",
                        cand.feature, cand.threshold
                    ));
                }
            }
            for hist in &stats.hists {
                if hist.counts() != stats.counts {
                    return Err(format!(
                        "histogram for feature {} disagrees with node counts",
                        hist.feature
                    ));
                }
            }
            let best = best_candidate(
                &stats.candidates,
                stats.counts,
                ctx.params.min_samples_leaf as u64,
            );
            if best.map(|(idx, _)| idx) != Some(*chosen) {
                return Err(format!(
                    "chosen candidate {} is not the best eligible split",
                    chosen
                ));
            }
            let mut ids = check_node(ctx, left, depth + 1)?;
            let right_ids = check_node(ctx, right, depth + 1)?;
            let left_counts = count_ids(ctx, &ids);
            let right_counts = count_ids(ctx, &right_ids);
            let cand = &stats.candidates[*chosen];
            if left_counts != cand.left || right_counts != cand.right {
                return Err("chosen candidate side counts disagree with leaf contents".into());
            }
            ids.extend(right_ids);
            Ok(ids)
        }
        DareNode::Leaf { counts, row_ids } => {
            if !row_ids.windows(2).all(|w| w[0] < w[1]) {
                return Err("leaf row ids not sorted and unique".into());
            }
            if count_ids(ctx, row_ids) != *counts {
                return Err("leaf counts disagree with resident rows".into());
            }
            if counts.total() == 0 && depth > 0 {
                return Err("empty leaf below the root".into());
            }
            Ok(row_ids.clone())
        }
    }
}

fn count_ids(ctx: &TreeContext<'_>, ids: &[u64]) -> ClassCounts {
    let mut c = ClassCounts::default();
    for id in ids {
        c.add(ctx.data.label(ctx.index[id]));
    }
    c
}
