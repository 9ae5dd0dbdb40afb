//! Sharded, isolated, sliced, aggregated training around constituent
//! forests.
//!
//! Rows are assigned to shards by a seeded hash of their row id, never
//! by position, so deleting rows cannot reshuffle anyone else's shard —
//! that stability is what keeps `delete` equal to a from-scratch fit on
//! the reduced data. Slices use a second seeded hash the same way: slice
//! `k`'s rows are a superset of slice `k-1`'s, giving nested prefixes
//! that survive deletions.
//!
//! With removal-enabled constituents (the default) a deletion is
//! forwarded to the one shard holding the row and handled in place;
//! slicing only earns its keep for plain constituents, where a deletion
//! retrains the sliced checkpoints from the deepest prefix that never
//! contained the row.

use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use crate::dataset::container::{read_dataset, write_dataset};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::forest::{DareForest, DeletionReport, ForestParams, NaiveForest};
use crate::hash::{assign_hash, mix_seed, Fnv1a};
use crate::wire::{put_u32, put_u64, put_u8, Reader};

const SHARD_SALT: u64 = 0x5348_4152;
const SLICE_SALT: u64 = 0x534c_4943;

const SISA_MAGIC: &[u8; 8] = b"ULRNSIS1";
const VERSION: u32 = 1;
const MAX_LEN: usize = 1 << 33;

/// How constituent outputs are combined.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Aggregation {
    /// Unweighted mean of constituent probabilities.
    #[default]
    MeanProba,
    /// Fraction of constituents predicting class 1.
    MajorityVote,
}

/// Which forest kind each shard trains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConstituentKind {
    /// Removal-enabled forest; deletions are handled in place.
    #[default]
    Dare,
    /// Plain forest; deletions retrain from the nearest slice boundary.
    Naive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SisaConfig {
    pub n_shards: usize,
    pub n_slices: usize,
    pub constituent: ConstituentKind,
    pub params: ForestParams,
    pub seed: u64,
    pub aggregation: Aggregation,
}

impl Default for SisaConfig {
    fn default() -> Self {
        SisaConfig {
            n_shards: 1,
            n_slices: 1,
            constituent: ConstituentKind::Dare,
            params: ForestParams::default(),
            seed: 0,
            aggregation: Aggregation::MeanProba,
        }
    }
}

impl SisaConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_shards == 0 {
            return Err(Error::invalid("n_shards must be at least 1"));
        }
        if self.n_slices == 0 {
            return Err(Error::invalid("n_slices must be at least 1"));
        }
        self.params.validate()
    }
}

/// Plain constituent with nested slice checkpoints. `models[k]` is fit
/// on the rows whose slice index is `<= k`; the last one sees the whole
/// shard and serves predictions.
#[derive(Debug, Clone, PartialEq)]
struct SlicedNaive {
    data: Dataset,
    models: Vec<Option<NaiveForest>>,
}

#[derive(Debug, Clone, PartialEq)]
enum ShardModel {
    /// Shard with no live rows; skipped during aggregation.
    Empty,
    Dare(DareForest),
    Naive(SlicedNaive),
}

#[derive(Debug, Clone, PartialEq)]
struct Shard {
    rows: BTreeSet<u64>,
    model: ShardModel,
}

/// The sharded ensemble.
#[derive(Debug, Clone, PartialEq)]
pub struct SisaEnsemble {
    config: SisaConfig,
    n_cols: usize,
    shards: Vec<Shard>,
}

fn shard_of(cfg: &SisaConfig, row_id: u64) -> usize {
    (assign_hash(cfg.seed, SHARD_SALT, row_id) % cfg.n_shards as u64) as usize
}

fn slice_of(cfg: &SisaConfig, row_id: u64) -> usize {
    (assign_hash(cfg.seed, SLICE_SALT, row_id) % cfg.n_slices as u64) as usize
}

fn shard_seed(cfg: &SisaConfig, shard_idx: usize) -> u64 {
    mix_seed(cfg.seed, shard_idx as u64)
}

impl SlicedNaive {
    fn fit(data: Dataset, cfg: &SisaConfig, seed: u64) -> Result<Self> {
        let mut models = Vec::with_capacity(cfg.n_slices);
        for k in 0..cfg.n_slices {
            let positions: Vec<usize> = (0..data.n_rows())
                .filter(|&i| slice_of(cfg, data.row_id(i)) <= k)
                .collect();
            if positions.is_empty() {
                models.push(None);
            } else {
                models.push(Some(NaiveForest::fit(
                    &data.subset(&positions),
                    &cfg.params,
                    seed,
                )?));
            }
        }
        Ok(SlicedNaive { data, models })
    }

    fn live_model(&self) -> &NaiveForest {
        self.models
            .last()
            .and_then(|m| m.as_ref())
            .expect("a non-empty shard always has a full-prefix model")
    }

    /// Drop one row and refit every slice checkpoint whose prefix
    /// contained it; earlier checkpoints are untouched.
    fn delete(&mut self, cfg: &SisaConfig, seed: u64, row_id: u64) -> Result<DeletionReport> {
        let sigma = slice_of(cfg, row_id);
        let gone: BTreeSet<u64> = [row_id].into_iter().collect();
        self.data = self.data.without_row_ids(&gone);
        let mut report = DeletionReport::default();
        for k in sigma..cfg.n_slices {
            let positions: Vec<usize> = (0..self.data.n_rows())
                .filter(|&i| slice_of(cfg, self.data.row_id(i)) <= k)
                .collect();
            if positions.is_empty() {
                self.models[k] = None;
            } else {
                report.subtrees_retrained += 1;
                report.rows_touched += positions.len();
                self.models[k] = Some(NaiveForest::fit(
                    &self.data.subset(&positions),
                    &cfg.params,
                    seed,
                )?);
            }
        }
        Ok(report)
    }
}

impl SisaEnsemble {
    /// Shard the training rows by seeded hash and fit one isolated
    /// constituent per shard. Deterministic per seed; shard `i` trains
    /// with sub-seed `mix_seed(seed, i)`.
    pub fn fit(train: &Dataset, cfg: &SisaConfig) -> Result<Self> {
        cfg.validate()?;
        if train.n_rows() < cfg.n_shards {
            return Err(Error::invalid(format!(
                "{} rows cannot fill {} shards",
                train.n_rows(),
                cfg.n_shards
            )));
        }
        let mut shard_positions: Vec<Vec<usize>> = vec![Vec::new(); cfg.n_shards];
        for i in 0..train.n_rows() {
            shard_positions[shard_of(cfg, train.row_id(i))].push(i);
        }
        let mut shards = Vec::with_capacity(cfg.n_shards);
        for (idx, positions) in shard_positions.into_iter().enumerate() {
            let rows: BTreeSet<u64> = positions.iter().map(|&i| train.row_id(i)).collect();
            let model = if positions.is_empty() {
                ShardModel::Empty
            } else {
                let data = train.subset(&positions);
                match cfg.constituent {
                    ConstituentKind::Dare => {
                        ShardModel::Dare(DareForest::fit(&data, &cfg.params, shard_seed(cfg, idx))?)
                    }
                    ConstituentKind::Naive => {
                        ShardModel::Naive(SlicedNaive::fit(data, cfg, shard_seed(cfg, idx))?)
                    }
                }
            };
            shards.push(Shard { rows, model });
        }
        Ok(SisaEnsemble {
            config: *cfg,
            n_cols: train.n_cols(),
            shards,
        })
    }

    pub fn config(&self) -> &SisaConfig {
        &self.config
    }

    pub fn n_shards(&self) -> usize {
        self.shards.len()
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_live_rows(&self) -> usize {
        self.shards.iter().map(|s| s.rows.len()).sum()
    }

    pub fn shard_is_active(&self, idx: usize) -> bool {
        !matches!(self.shards[idx].model, ShardModel::Empty)
    }

    pub fn shard_row_ids(&self, idx: usize) -> impl Iterator<Item = u64> + '_ {
        self.shards[idx].rows.iter().copied()
    }

    /// Which shard a row id belongs to under this configuration.
    pub fn shard_for_row(&self, row_id: u64) -> usize {
        shard_of(&self.config, row_id)
    }

    /// Aggregated probability of class 1 per input row.
    pub fn predict_proba(&self, x: &Dataset) -> Result<Vec<f64>> {
        if x.n_cols() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: x.n_cols(),
            });
        }
        let mut member_probas: Vec<Vec<f64>> = Vec::new();
        for shard in &self.shards {
            match &shard.model {
                ShardModel::Empty => {}
                ShardModel::Dare(f) => member_probas.push(f.predict_proba(x)?),
                ShardModel::Naive(sn) => member_probas.push(sn.live_model().predict_proba(x)?),
            }
        }
        if member_probas.is_empty() {
            return Err(Error::state("every shard of the ensemble is empty"));
        }
        let n = member_probas.len() as f64;
        let mut out = vec![0.0f64; x.n_rows()];
        for probas in &member_probas {
            match self.config.aggregation {
                Aggregation::MeanProba => {
                    for (o, p) in out.iter_mut().zip(probas) {
                        *o += p;
                    }
                }
                Aggregation::MajorityVote => {
                    for (o, p) in out.iter_mut().zip(probas) {
                        *o += f64::from(*p >= 0.5);
                    }
                }
            }
        }
        for o in &mut out {
            *o /= n;
        }
        Ok(out)
    }

    /// Class predictions; ties at exactly 0.5 go to class 1.
    pub fn predict(&self, x: &Dataset) -> Result<Vec<u8>> {
        Ok(self
            .predict_proba(x)?
            .into_iter()
            .map(|p| u8::from(p >= 0.5))
            .collect())
    }

    /// Remove one training row. Only the shard holding it is touched;
    /// afterwards the ensemble equals a fresh fit on the reduced data.
    pub fn delete(&mut self, row_id: u64) -> Result<DeletionReport> {
        let idx = shard_of(&self.config, row_id);
        let shard = &mut self.shards[idx];
        if !shard.rows.remove(&row_id) {
            return Err(Error::UnknownRow(row_id));
        }
        let report = match &mut shard.model {
            ShardModel::Empty => unreachable!("a row cannot live in an empty shard"),
            ShardModel::Dare(f) => f.delete(row_id)?,
            ShardModel::Naive(sn) => {
                sn.delete(&self.config, shard_seed(&self.config, idx), row_id)?
            }
        };
        if shard.rows.is_empty() {
            shard.model = ShardModel::Empty;
        }
        Ok(report)
    }

    /// Canonical bytes for one shard; untouched shards keep identical
    /// fingerprints across deletions elsewhere.
    pub fn shard_checkpoint_bytes(&self, idx: usize) -> Vec<u8> {
        let mut buf = Vec::new();
        put_shard(&mut buf, &self.shards[idx]);
        buf
    }

    /// FNV fingerprint of each shard's canonical bytes.
    pub fn shard_fingerprints(&self) -> Vec<u64> {
        (0..self.shards.len())
            .map(|i| {
                let mut h = Fnv1a::new();
                h.write(&self.shard_checkpoint_bytes(i));
                h.finish()
            })
            .collect()
    }

    /// Structural checks: hash-consistent shard membership, per-shard
    /// model contents matching the shard row sets, and constituent
    /// invariants.
    pub fn check_invariants(&self) -> Result<()> {
        for (idx, shard) in self.shards.iter().enumerate() {
            for &id in &shard.rows {
                if shard_of(&self.config, id) != idx {
                    return Err(Error::state(format!(
                        "row {id} is filed in shard {idx} but hashes elsewhere"
                    )));
                }
            }
            match &shard.model {
                ShardModel::Empty => {
                    if !shard.rows.is_empty() {
                        return Err(Error::state(format!("shard {idx} has rows but no model")));
                    }
                }
                ShardModel::Dare(f) => {
                    let model_rows: BTreeSet<u64> = f.live_row_ids().collect();
                    if model_rows != shard.rows {
                        return Err(Error::state(format!(
                            "shard {idx} model rows disagree with the shard"
                        )));
                    }
                    f.check_invariants()?;
                }
                ShardModel::Naive(sn) => {
                    let model_rows: BTreeSet<u64> = sn.data.row_ids().iter().copied().collect();
                    if model_rows != shard.rows {
                        return Err(Error::state(format!(
                            "shard {idx} data rows disagree with the shard"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    /// Canonical checkpoint: config, shard assignment table, and every
    /// constituent checkpoint.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        buf.extend_from_slice(SISA_MAGIC);
        put_u32(&mut buf, VERSION);
        put_u64(&mut buf, self.config.n_shards as u64);
        put_u64(&mut buf, self.config.n_slices as u64);
        put_u8(
            &mut buf,
            match self.config.constituent {
                ConstituentKind::Dare => 0,
                ConstituentKind::Naive => 1,
            },
        );
        put_u8(
            &mut buf,
            match self.config.aggregation {
                Aggregation::MeanProba => 0,
                Aggregation::MajorityVote => 1,
            },
        );
        crate::forest::checkpoint_put_params(&mut buf, &self.config.params);
        put_u64(&mut buf, self.config.seed);
        put_u64(&mut buf, self.n_cols as u64);
        put_u64(&mut buf, self.shards.len() as u64);
        for shard in &self.shards {
            put_shard(&mut buf, shard);
        }
        buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader::new(bytes);
        r.expect_magic(SISA_MAGIC, "ensemble checkpoint")?;
        let at = r.pos();
        let version = r.u32("checkpoint version")?;
        if version != VERSION {
            return Err(Error::format(
                at,
                format!("unsupported checkpoint version {version}"),
            ));
        }
        let n_shards = r.len(MAX_LEN, "n_shards")?;
        let n_slices = r.len(MAX_LEN, "n_slices")?;
        let at = r.pos();
        let constituent = match r.u8("constituent tag")? {
            0 => ConstituentKind::Dare,
            1 => ConstituentKind::Naive,
            t => return Err(Error::format(at, format!("bad constituent tag {t}"))),
        };
        let at = r.pos();
        let aggregation = match r.u8("aggregation tag")? {
            0 => Aggregation::MeanProba,
            1 => Aggregation::MajorityVote,
            t => return Err(Error::format(at, format!("bad aggregation tag {t}"))),
        };
        let params = crate::forest::checkpoint_read_params(&mut r)?;
        let seed = r.u64("seed")?;
        let n_cols = r.len(MAX_LEN, "column count")?;
        let shard_count_at = r.pos();
        let shard_count = r.len(MAX_LEN, "shard count")?;
        if shard_count != n_shards {
            return Err(Error::format(
                shard_count_at,
                format!("shard count {shard_count} disagrees with config ({n_shards})"),
            ));
        }
        let config = SisaConfig {
            n_shards,
            n_slices,
            constituent,
            params,
            seed,
            aggregation,
        };
        let mut shards = Vec::with_capacity(shard_count);
        for _ in 0..shard_count {
            shards.push(read_shard(&mut r, n_slices)?);
        }
        r.expect_eof()?;
        Ok(SisaEnsemble {
            config,
            n_cols,
            shards,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }
}

const SHARD_EMPTY: u8 = 0;
const SHARD_DARE: u8 = 1;
const SHARD_NAIVE: u8 = 2;

fn put_shard(buf: &mut Vec<u8>, shard: &Shard) {
    put_u64(buf, shard.rows.len() as u64);
    for &id in &shard.rows {
        put_u64(buf, id);
    }
    match &shard.model {
        ShardModel::Empty => put_u8(buf, SHARD_EMPTY),
        ShardModel::Dare(f) => {
            put_u8(buf, SHARD_DARE);
            crate::forest::checkpoint_write_dare(buf, f);
        }
        ShardModel::Naive(sn) => {
            put_u8(buf, SHARD_NAIVE);
            write_dataset(buf, &sn.data);
            put_u64(buf, sn.models.len() as u64);
            for m in &sn.models {
                match m {
                    None => put_u8(buf, 0),
                    Some(f) => {
                        put_u8(buf, 1);
                        crate::forest::checkpoint_write_naive(buf, f);
                    }
                }
            }
        }
    }
}

fn read_shard(r: &mut Reader<'_>, n_slices: usize) -> Result<Shard> {
    let n_rows = r.len(MAX_LEN, "shard row count")?;
    let mut rows = BTreeSet::new();
    for _ in 0..n_rows {
        rows.insert(r.u64("shard row id")?);
    }
    let at = r.pos();
    let model = match r.u8("shard model tag")? {
        SHARD_EMPTY => ShardModel::Empty,
        SHARD_DARE => ShardModel::Dare(crate::forest::checkpoint_read_dare(r)?),
        SHARD_NAIVE => {
            let data = read_dataset(r)?;
            let at = r.pos();
            let n_models = r.len(MAX_LEN, "slice model count")?;
            if n_models != n_slices {
                return Err(Error::format(
                    at,
                    format!("{n_models} slice models for {n_slices} slices"),
                ));
            }
            let mut models = Vec::with_capacity(n_models);
            for _ in 0..n_models {
                let at = r.pos();
                models.push(match r.u8("slice model tag")? {
                    0 => None,
                    1 => Some(crate::forest::checkpoint_read_naive(r)?),
                    t => return Err(Error::format(at, format!("bad slice model tag {t}"))),
                });
            }
            ShardModel::Naive(SlicedNaive { data, models })
        }
        t => return Err(Error::format(at, format!("bad shard model tag {t}"))),
    };
    Ok(Shard { rows, model })
}
