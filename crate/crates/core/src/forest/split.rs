//! Split statistics: per-node label counts, per-feature value
//! histograms, candidate thresholds, and Gini gain.
//!
//! Candidate thresholds at a node are a pure function of the node's
//! surviving rows: midpoints between adjacent unique values of each
//! sampled feature, thinned to at most `thresholds_per_feature` evenly
//! spaced gaps when a feature has more distinct values than that. A
//! deletion that leaves every distinct value present therefore leaves
//! every threshold in place and only counts change; when a value
//! disappears the thresholds are recomputed and compared, and any drift
//! forces a subtree rebuild. This is what makes incremental deletion
//! reproduce a from-scratch fit node for node.

use crate::dataset::Dataset;

/// Label counts at a node or on one side of a candidate split.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub n0: u64,
    pub n1: u64,
}

impl ClassCounts {
    pub fn total(&self) -> u64 {
        self.n0 + self.n1
    }

    pub fn add(&mut self, label: u8) {
        if label == 1 {
            self.n1 += 1;
        } else {
            self.n0 += 1;
        }
    }

    pub fn remove(&mut self, label: u8) {
        if label == 1 {
            debug_assert!(self.n1 > 0);
            self.n1 -= 1;
        } else {
            debug_assert!(self.n0 > 0);
            self.n0 -= 1;
        }
    }

    /// Gini impurity `1 - p0^2 - p1^2`; zero for an empty node.
    pub fn gini(&self) -> f64 {
        let t = self.total();
        if t == 0 {
            return 0.0;
        }
        let t = t as f64;
        let p0 = self.n0 as f64 / t;
        let p1 = self.n1 as f64 / t;
        1.0 - p0 * p0 - p1 * p1
    }
}

/// Gini impurity reduction of splitting `parent` into `left` and
/// `right`, weighted by child sizes. Zero when either child is empty.
///
/// Panics if the child counts do not sum to the parent counts; that is
/// an internal invariant violation, never a data condition.
pub fn gini_gain(parent: ClassCounts, left: ClassCounts, right: ClassCounts) -> f64 {
    assert_eq!(
        (parent.n0, parent.n1),
        (left.n0 + right.n0, left.n1 + right.n1),
        "child counts must sum to parent counts"
    );
    assert!(
        parent.total() >= 1,
        "parent node must hold at least one row"
    );
    if left.total() == 0 || right.total() == 0 {
        return 0.0;
    }
    let t = parent.total() as f64;
    let wl = left.total() as f64 / t;
    let wr = right.total() as f64 / t;
    parent.gini() - (wl * left.gini() + wr * right.gini())
}

/// One cached candidate split: rows with `value <= threshold` on
/// `feature` go left.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitCandidate {
    pub feature: usize,
    pub threshold: f64,
    pub left: ClassCounts,
    pub right: ClassCounts,
}

/// Sorted distinct values of one feature over a node's rows, with the
/// label counts attached to each value.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureHistogram {
    pub feature: usize,
    pub bins: Vec<ValueBin>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValueBin {
    pub value: f64,
    pub counts: ClassCounts,
}

impl FeatureHistogram {
    fn from_rows(data: &Dataset, rows: &[usize], feature: usize) -> Self {
        let mut pairs: Vec<(f64, u8)> = rows
            .iter()
            .map(|&r| (data.value(r, feature), data.label(r)))
            .collect();
        pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        let mut bins: Vec<ValueBin> = Vec::new();
        for (value, label) in pairs {
            match bins.last_mut() {
                Some(bin) if bin.value == value => bin.counts.add(label),
                _ => {
                    let mut counts = ClassCounts::default();
                    counts.add(label);
                    bins.push(ValueBin { value, counts });
                }
            }
        }
        FeatureHistogram { feature, bins }
    }

    /// Remove one observation of `value` with `label`. Returns true if
    /// the value's bin emptied and was dropped, which means the set of
    /// distinct values changed.
    pub fn remove(&mut self, value: f64, label: u8) -> bool {
        let idx = self
            .bins
            .binary_search_by(|bin| bin.value.total_cmp(&value))
            .expect("deleted value must be present in the node histogram");
        self.bins[idx].counts.remove(label);
        if self.bins[idx].counts.total() == 0 {
            self.bins.remove(idx);
            true
        } else {
            false
        }
    }

    /// Candidate thresholds for this feature: midpoints of up to
    /// `per_feature` evenly spaced gaps between adjacent distinct
    /// values. With `g` gaps and `k = min(per_feature, g)` picks, gap
    /// `j * g / k` is chosen for `j = 0..k`.
    fn thresholds(&self, per_feature: usize, out: &mut Vec<f64>) {
        out.clear();
        let gaps = self.bins.len().saturating_sub(1);
        if gaps == 0 {
            return;
        }
        let k = per_feature.min(gaps);
        for j in 0..k {
            let idx = j * gaps / k;
            out.push((self.bins[idx].value + self.bins[idx + 1].value) / 2.0);
        }
    }

    /// Candidates for this feature, appended to `out` in threshold
    /// order. Left counts are prefix sums over the bins at or below
    /// each threshold.
    pub fn candidates(&self, node: ClassCounts, per_feature: usize, out: &mut Vec<SplitCandidate>) {
        let mut thresholds = Vec::new();
        self.thresholds(per_feature, &mut thresholds);
        let mut prefix = ClassCounts::default();
        let mut bin_idx = 0usize;
        for threshold in thresholds {
            while bin_idx < self.bins.len() && self.bins[bin_idx].value <= threshold {
                prefix.n0 += self.bins[bin_idx].counts.n0;
                prefix.n1 += self.bins[bin_idx].counts.n1;
                bin_idx += 1;
            }
            out.push(SplitCandidate {
                feature: self.feature,
                threshold,
                left: prefix,
                right: ClassCounts {
                    n0: node.n0 - prefix.n0,
                    n1: node.n1 - prefix.n1,
                },
            });
        }
    }

    pub fn counts(&self) -> ClassCounts {
        let mut c = ClassCounts::default();
        for bin in &self.bins {
            c.n0 += bin.counts.n0;
            c.n1 += bin.counts.n1;
        }
        c
    }
}

/// Everything the builder needs to decide a node: label counts,
/// per-feature histograms, and the candidate list in (feature asc,
/// threshold asc) order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEval {
    pub counts: ClassCounts,
    pub hists: Vec<FeatureHistogram>,
    pub candidates: Vec<SplitCandidate>,
}

/// Evaluate a node over `rows` (positions into `data`). `features` must
/// be sorted ascending so that candidate order is canonical.
pub fn evaluate_rows(
    data: &Dataset,
    rows: &[usize],
    features: &[usize],
    thresholds_per_feature: usize,
) -> NodeEval {
    let mut counts = ClassCounts::default();
    for &r in rows {
        counts.add(data.label(r));
    }
    let hists: Vec<FeatureHistogram> = features
        .iter()
        .map(|&f| FeatureHistogram::from_rows(data, rows, f))
        .collect();
    let candidates = candidates_from_histograms(&hists, counts, thresholds_per_feature);
    NodeEval {
        counts,
        hists,
        candidates,
    }
}

/// Rebuild the candidate list from histograms; same order and same
/// arithmetic as [`evaluate_rows`], so incremental updates reproduce a
/// fresh evaluation exactly.
pub fn candidates_from_histograms(
    hists: &[FeatureHistogram],
    node: ClassCounts,
    thresholds_per_feature: usize,
) -> Vec<SplitCandidate> {
    let mut out = Vec::new();
    for hist in hists {
        hist.candidates(node, thresholds_per_feature, &mut out);
    }
    out
}

/// Index and gain of the best eligible candidate: both sides must hold
/// at least `min_samples_leaf` rows and the gain must be positive. Ties
/// keep the earliest candidate, i.e. lowest feature index then lowest
/// threshold. `None` means the node becomes (or stays) a leaf.
pub fn best_candidate(
    candidates: &[SplitCandidate],
    parent: ClassCounts,
    min_samples_leaf: u64,
) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (idx, c) in candidates.iter().enumerate() {
        if c.left.total() < min_samples_leaf || c.right.total() < min_samples_leaf {
            continue;
        }
        let gain = gini_gain(parent, c.left, c.right);
        if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
            best = Some((idx, gain));
        }
    }
    best
}
