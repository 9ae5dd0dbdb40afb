//! Labeled datasets with stable row identities.
//!
//! A [`Dataset`] is a dense `rows x d` matrix of f64 features, a binary
//! label per row, and a `row_id` per row. Row ids are assigned at
//! creation and survive every split, reduction, and deletion, which is
//! what lets a deletion request name the same row in the dataset, in a
//! removal-enabled forest, and in a sharded ensemble.
//!
//! All operations are pure: anything that "mutates" returns new values,
//! and every seeded operation is a deterministic function of its inputs
//! and the seed.

pub(crate) mod container;
mod encode;

use std::collections::{BTreeSet, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::hash::{mix_seed, Fnv1a};

pub use encode::{encode, ingest_csv, CsvSchema, EncodingConfig, RawRecord};

/// Dense feature matrix plus labels and stable row ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    n_cols: usize,
    labels: Vec<u8>,
    row_ids: Vec<u64>,
}

impl Dataset {
    /// Build a dataset from row-major features.
    ///
    /// Rejects ragged input, labels outside {0, 1}, non-finite feature
    /// values, duplicate row ids, and zero-width rows.
    pub fn new(
        features: Vec<f64>,
        n_cols: usize,
        labels: Vec<u8>,
        row_ids: Vec<u64>,
    ) -> Result<Self> {
        if n_cols == 0 {
            return Err(Error::invalid(
                "dataset must have at least one feature column",
            ));
        }
        if labels.len() != row_ids.len() || features.len() != labels.len() * n_cols {
            return Err(Error::invalid(format!(
                "shape mismatch: {} feature values, {} columns, {} labels, {} row ids",
                features.len(),
                n_cols,
                labels.len(),
                row_ids.len()
            )));
        }
        if let Some(l) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::invalid(format!("label {l} outside {{0, 1}}")));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("non-finite feature value"));
        }
        let mut seen = HashSet::with_capacity(row_ids.len());
        for &id in &row_ids {
            if !seen.insert(id) {
                return Err(Error::invalid(format!("duplicate row id {id}")));
            }
        }
        Ok(Dataset {
            features,
            n_cols,
            labels,
            row_ids,
        })
    }

    /// Two Gaussian class-conditional clouds with unit variance, their
    /// means `class_sep` apart along every axis. Labels are balanced
    /// (`n_rows / 2` positives) and shuffled by the seed, so both
    /// classes are always present for `n_rows >= 2`.
    pub fn generate_synthetic(n_rows: usize, d: usize, class_sep: f64, seed: u64) -> Result<Self> {
        if n_rows < 2 {
            return Err(Error::invalid("synthetic dataset needs at least 2 rows"));
        }
        if d == 0 {
            return Err(Error::invalid("synthetic dataset needs at least 1 column"));
        }
        if !class_sep.is_finite() {
            return Err(Error::invalid("class_sep must be finite"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_pos = n_rows / 2;
        let mut labels: Vec<u8> = vec![0; n_rows - n_pos];
        labels.extend(std::iter::repeat_n(1, n_pos));
        labels.shuffle(&mut rng);

        let noise = Normal::new(0.0, 1.0).expect("unit normal");
        let mut features = Vec::with_capacity(n_rows * d);
        for &label in &labels {
            let mean = if label == 1 {
                class_sep / 2.0
            } else {
                -class_sep / 2.0
            };
            for _ in 0..d {
                features.push(mean + noise.sample(&mut rng));
            }
        }
        let row_ids = (0..n_rows as u64).collect();
        Dataset::new(features, d, labels, row_ids)
    }

    pub fn n_rows(&self) -> usize {
        self.labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn value(&self, row: usize, col: usize) -> f64 {
        self.features[row * self.n_cols + col]
    }

    pub fn label(&self, i: usize) -> u8 {
        self.labels[i]
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn row_id(&self, i: usize) -> u64 {
        self.row_ids[i]
    }

    pub fn row_ids(&self) -> &[u64] {
        &self.row_ids
    }

    /// Count of (label 0, label 1) rows.
    pub fn label_counts(&self) -> (usize, usize) {
        let ones = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - ones, ones)
    }

    /// New dataset containing the given row positions, in the given order.
    pub fn subset(&self, positions: &[usize]) -> Dataset {
        let mut features = Vec::with_capacity(positions.len() * self.n_cols);
        let mut labels = Vec::with_capacity(positions.len());
        let mut row_ids = Vec::with_capacity(positions.len());
        for &p in positions {
            features.extend_from_slice(self.row(p));
            labels.push(self.labels[p]);
            row_ids.push(self.row_ids[p]);
        }
        Dataset {
            features,
            n_cols: self.n_cols,
            labels,
            row_ids,
        }
    }

    /// New dataset with the given row ids removed, preserving row order.
    pub fn without_row_ids(&self, ids: &BTreeSet<u64>) -> Dataset {
        let keep: Vec<usize> = (0..self.n_rows())
            .filter(|&i| !ids.contains(&self.row_ids[i]))
            .collect();
        self.subset(&keep)
    }

    /// Disjoint train/test partition by row ids; the test side gets
    /// `round(rows * test_fraction)` rows, clamped to `[1, rows - 1]`.
    pub fn train_test_split(&self, test_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
        if self.n_rows() < 2 {
            return Err(Error::invalid("need at least 2 rows to split"));
        }
        if !(test_fraction > 0.0 && test_fraction < 1.0) {
            return Err(Error::invalid(format!(
                "test_fraction must lie in (0, 1), got {test_fraction}"
            )));
        }
        let rows = self.n_rows();
        let test_size = ((rows as f64 * test_fraction).round() as usize).clamp(1, rows - 1);
        let mut order: Vec<usize> = (0..rows).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        order.shuffle(&mut rng);
        let mut test_pos: Vec<usize> = order[..test_size].to_vec();
        let mut train_pos: Vec<usize> = order[test_size..].to_vec();
        test_pos.sort_unstable();
        train_pos.sort_unstable();
        Ok((self.subset(&train_pos), self.subset(&test_pos)))
    }

    /// The row ids `delete_n_elements` would remove for this seed:
    /// `n` distinct rows chosen uniformly, listed in row order.
    pub fn choose_rows_for_deletion(&self, n: usize, seed: u64) -> Result<Vec<u64>> {
        if n > self.n_rows() {
            return Err(Error::invalid(format!(
                "cannot delete {n} rows from a dataset of {}",
                self.n_rows()
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut picks = rand::seq::index::sample(&mut rng, self.n_rows(), n).into_vec();
        picks.sort_unstable();
        Ok(picks.into_iter().map(|p| self.row_ids[p]).collect())
    }

    /// Remove `n` rows chosen uniformly without replacement; features and
    /// labels move in lockstep. Returns the reduced dataset and the ids
    /// of the removed rows.
    pub fn delete_n_elements(&self, n: usize, seed: u64) -> Result<(Dataset, Vec<u64>)> {
        let deleted = self.choose_rows_for_deletion(n, seed)?;
        let gone: BTreeSet<u64> = deleted.iter().copied().collect();
        Ok((self.without_row_ids(&gone), deleted))
    }

    /// Stable fingerprint of the dataset's full contents (shape, feature
    /// bits, labels, row ids). Equal datasets hash equal.
    pub fn content_hash(&self) -> u64 {
        let mut h = Fnv1a::new();
        h.write_u64(self.n_rows() as u64);
        h.write_u64(self.n_cols as u64);
        for &v in &self.features {
            h.write_f64(v);
        }
        h.write(&self.labels);
        for &id in &self.row_ids {
            h.write_u64(id);
        }
        h.finish()
    }
}

/// Reduce `train` to `min(target_size, rows)` rows chosen per seed. The
/// test set is only touched if it exceeds `test_ceiling`, keeping it at
/// a near-constant size across trials.
pub fn reduce_to_target_size(
    train: &Dataset,
    test: &Dataset,
    target_size: usize,
    test_ceiling: Option<usize>,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if target_size == 0 {
        return Err(Error::invalid("target_size must be at least 1"));
    }
    let reduced_train = sample_down(train, target_size, mix_seed(seed, 0));
    let reduced_test = match test_ceiling {
        Some(cap) if test.n_rows() > cap => sample_down(test, cap, mix_seed(seed, 1)),
        _ => test.clone(),
    };
    Ok((reduced_train, reduced_test))
}

/// Delete `floor(rows * pct)` rows from each of train and test,
/// selected independently per seed.
pub fn delete_percentage(
    train: &Dataset,
    test: &Dataset,
    pct: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(0.0..=1.0).contains(&pct) {
        return Err(Error::invalid(format!(
            "delete percentage must lie in [0, 1], got {pct}"
        )));
    }
    let n_train = (train.n_rows() as f64 * pct).floor() as usize;
    let n_test = (test.n_rows() as f64 * pct).floor() as usize;
    let (train_out, _) = train.delete_n_elements(n_train, mix_seed(seed, 0))?;
    let (test_out, _) = test.delete_n_elements(n_test, mix_seed(seed, 1))?;
    Ok((train_out, test_out))
}

fn sample_down(ds: &Dataset, target: usize, seed: u64) -> Dataset {
    if ds.n_rows() <= target {
        return ds.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picks = rand::seq::index::sample(&mut rng, ds.n_rows(), target).into_vec();
    picks.sort_unstable();
    ds.subset(&picks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tiny(rows: usize, seed: u64) -> Dataset {
        Dataset::generate_synthetic(rows, 3, 1.5, seed).unwrap()
    }

    #[test]
    fn synthetic_shape_and_classes() {
        let ds = Dataset::generate_synthetic(10, 4, 2.0, 7).unwrap();
        assert_eq!(ds.n_rows(), 10);
        assert_eq!(ds.n_cols(), 4);
        let (zeros, ones) = ds.label_counts();
        assert!(zeros > 0 && ones > 0);
    }

    #[test]
    fn synthetic_two_rows_one_of_each() {
        let ds = Dataset::generate_synthetic(2, 1, 0.0, 0).unwrap();
        let (zeros, ones) = ds.label_counts();
        assert_eq!((zeros, ones), (1, 1));
    }

    #[test]
    fn synthetic_is_deterministic() {
        let a = Dataset::generate_synthetic(50, 5, 1.0, 99).unwrap();
        let b = Dataset::generate_synthetic(50, 5, 1.0, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn synthetic_rejects_bad_dims() {
        assert!(Dataset::generate_synthetic(1, 4, 1.0, 0).is_err());
        assert!(Dataset::generate_synthetic(4, 0, 1.0, 0).is_err());
    }

    #[test]
    fn new_validates_invariants() {
        assert!(Dataset::new(vec![0.0], 1, vec![2], vec![0]).is_err());
        assert!(Dataset::new(vec![f64::NAN], 1, vec![0], vec![0]).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], 1, vec![0, 1], vec![5, 5]).is_err());
        assert!(Dataset::new(vec![0.0, 1.0], 2, vec![0, 1], vec![0, 1]).is_err());
    }

    #[test]
    fn split_sizes_and_disjointness() {
        let ds = tiny(10, 3);
        let (train, test) = ds.train_test_split(0.3, 11).unwrap();
        assert_eq!(train.n_rows(), 7);
        assert_eq!(test.n_rows(), 3);
        let train_ids: BTreeSet<u64> = train.row_ids().iter().copied().collect();
        let test_ids: BTreeSet<u64> = test.row_ids().iter().copied().collect();
        assert!(train_ids.is_disjoint(&test_ids));
    }

    #[test]
    fn split_clamps_tiny_sets() {
        let ds = tiny(2, 3);
        let (train, test) = ds.train_test_split(0.9, 11).unwrap();
        assert_eq!((train.n_rows(), test.n_rows()), (1, 1));
    }

    #[test]
    fn split_rejects_degenerate_fraction() {
        let ds = tiny(10, 3);
        assert!(ds.train_test_split(0.0, 1).is_err());
        assert!(ds.train_test_split(1.0, 1).is_err());
    }

    #[test]
    fn reduce_hits_target() {
        let train = tiny(500, 1);
        let test = tiny(100, 2);
        let (r_train, r_test) = reduce_to_target_size(&train, &test, 100, None, 5).unwrap();
        assert_eq!(r_train.n_rows(), 100);
        assert_eq!(r_test.n_rows(), 100);
    }

    #[test]
    fn reduce_clamps_to_available() {
        let train = tiny(50, 1);
        let test = tiny(20, 2);
        let (r_train, r_test) = reduce_to_target_size(&train, &test, 100, Some(10), 5).unwrap();
        assert_eq!(r_train.n_rows(), 50);
        assert_eq!(r_test.n_rows(), 10);
    }

    #[test]
    fn delete_n_boundaries() {
        let ds = tiny(10, 4);
        let (unchanged, gone) = ds.delete_n_elements(0, 9).unwrap();
        assert_eq!(unchanged, ds);
        assert!(gone.is_empty());

        let (emptied, gone) = ds.delete_n_elements(10, 9).unwrap();
        assert_eq!(emptied.n_rows(), 0);
        assert_eq!(gone.len(), 10);

        assert!(ds.delete_n_elements(11, 9).is_err());
    }

    #[test]
    fn delete_percentage_floor_counts() {
        let train = tiny(100, 1);
        let test = tiny(40, 2);
        let (t1, t2) = delete_percentage(&train, &test, 0.25, 8).unwrap();
        assert_eq!((t1.n_rows(), t2.n_rows()), (75, 30));
        let (u1, u2) = delete_percentage(&train, &test, 0.0, 8).unwrap();
        assert_eq!((u1, u2), (train.clone(), test.clone()));
        let (e1, e2) = delete_percentage(&train, &test, 1.0, 8).unwrap();
        assert_eq!((e1.n_rows(), e2.n_rows()), (0, 0));
        assert!(delete_percentage(&train, &test, 1.5, 8).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn split_is_a_partition(rows in 2usize..60, frac in 0.05f64..0.95, seed: u64) {
            let ds = tiny(rows, seed);
            let (train, test) = ds.train_test_split(frac, seed).unwrap();
            let mut ids: Vec<u64> = train.row_ids().to_vec();
            ids.extend_from_slice(test.row_ids());
            ids.sort_unstable();
            let mut want: Vec<u64> = ds.row_ids().to_vec();
            want.sort_unstable();
            prop_assert_eq!(ids, want);
            prop_assert!(test.n_rows() >= 1 && train.n_rows() >= 1);
        }

        #[test]
        fn deletion_is_lockstep_and_exact(rows in 2usize..60, seed: u64) {
            let ds = tiny(rows, seed);
            let n = rows / 2;
            let (reduced, deleted) = ds.delete_n_elements(n, seed).unwrap();
            prop_assert_eq!(reduced.n_rows(), rows - n);
            prop_assert_eq!(deleted.len(), n);
            prop_assert_eq!(reduced.labels().len(), reduced.row_ids().len());
            for id in &deleted {
                prop_assert!(!reduced.row_ids().contains(id));
            }
            // Same seed, same selection.
            let (again, deleted_again) = ds.delete_n_elements(n, seed).unwrap();
            prop_assert_eq!(reduced, again);
            prop_assert_eq!(deleted, deleted_again);
        }

        #[test]
        fn content_hash_tracks_equality(rows in 2usize..30, seed: u64) {
            let a = tiny(rows, seed);
            let b = tiny(rows, seed);
            prop_assert_eq!(a.content_hash(), b.content_hash());
        }
    }
}
