//! Trial runner comparing unlearning strategies.
//!
//! A trial pins (strategy, target_size, delete_percentage, repeat) and
//! measures consistency before and after unlearning plus the wall-clock
//! cost of the unlearning itself. The timed window covers exactly the
//! deletion, any retraining it requires, and the post-deletion
//! prediction and consistency computation — never the baseline fit or
//! the before-metrics.
//!
//! Both arms of a grid cell share one trial seed, so they reduce the
//! training set identically, delete the same rows, and are scored
//! against the same test set. Trials are isolated: every trial re-derives
//! its reduced training set from the master split, so nothing leaks from
//! one trial into the next. Run trials sequentially when costs matter;
//! [`run_grid_parallel`] exists for correctness-only runs and its
//! timings are not comparable.

use std::fmt;
use std::str::FromStr;

use crate::dataset::{reduce_to_target_size, Dataset};
use crate::error::{Error, Result};
use crate::forest::{ForestParams, NaiveForest};
use crate::hash::mix_seed;
use crate::metrics::{agreement, consistency, percent_change, Stopwatch};
use crate::sisa::{Aggregation, ConstituentKind, SisaConfig, SisaEnsemble};

const REDUCE_SALT: u64 = 1;
const DELETE_SALT: u64 = 2;
const MODEL_SALT: u64 = 3;

/// Unlearning strategy under measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    /// Discard the model, delete the rows, retrain from scratch.
    Naive,
    /// Sharded ensemble of removal-enabled forests; delete in place.
    SisaDare,
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Strategy::Naive => "naive",
            Strategy::SisaDare => "sisa_dare",
        })
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "naive" => Ok(Strategy::Naive),
            "sisa_dare" => Ok(Strategy::SisaDare),
            other => Err(Error::invalid(format!(
                "unknown strategy {other:?} (expected naive or sisa_dare)"
            ))),
        }
    }
}

/// One cell of the experiment grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialConfig {
    pub strategy: Strategy,
    pub target_size: usize,
    pub delete_percentage: f64,
    pub repeat: u32,
    /// Trial seed, shared by both arms of the same grid cell.
    pub seed: u64,
    pub forest: ForestParams,
    pub n_shards: usize,
    pub n_slices: usize,
}

impl TrialConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_size == 0 {
            return Err(Error::invalid("target_size must be at least 1"));
        }
        if !(0.0..=1.0).contains(&self.delete_percentage) {
            return Err(Error::invalid(format!(
                "delete_percentage must lie in [0, 1], got {}",
                self.delete_percentage
            )));
        }
        if self.n_shards == 0 || self.n_slices == 0 {
            return Err(Error::invalid("n_shards and n_slices must be at least 1"));
        }
        self.forest.validate()
    }

    /// Rows a trial deletes: `floor(target_size * delete_percentage)`,
    /// truncating like the integer cast it mirrors.
    pub fn n_to_delete(&self) -> usize {
        (self.target_size as f64 * self.delete_percentage).floor() as usize
    }
}

/// Measured outcome of one trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub config: TrialConfig,
    pub n_deleted: usize,
    pub consistency_before: f64,
    pub consistency_after: f64,
    /// `None` when the baseline consistency is zero and the relative
    /// change is undefined.
    pub percent_change: Option<f64>,
    /// Fraction of test predictions unchanged by the unlearning.
    pub agreement_after: f64,
    pub computational_cost_seconds: f64,
    /// Fingerprint of the test set this trial was scored against.
    pub test_set_hash: u64,
    /// True when the configuration deletes zero rows.
    pub degenerate: bool,
}

/// Grid construction: which cells to run and with what shared settings.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub sizes: Vec<usize>,
    pub percentages: Vec<f64>,
    pub strategies: Vec<Strategy>,
    pub repeats: u32,
    pub master_seed: u64,
    pub forest: ForestParams,
    pub n_shards: usize,
    pub n_slices: usize,
    /// Reduce the test set only when it exceeds this many rows.
    pub test_ceiling: Option<usize>,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            sizes: vec![10, 100, 1000],
            percentages: vec![0.25, 0.50, 0.75],
            strategies: vec![Strategy::Naive, Strategy::SisaDare],
            repeats: 1,
            master_seed: 42,
            forest: ForestParams::default(),
            n_shards: 1,
            n_slices: 1,
            test_ceiling: None,
        }
    }
}

impl GridSpec {
    /// Expand into trial configs: repeats outermost, then size, then
    /// percentage, with every strategy run back to back on the same
    /// cell. The trial seed is derived from (master seed, size,
    /// percentage, repeat) — never the strategy — so paired arms share
    /// their data.
    pub fn build(&self) -> Vec<TrialConfig> {
        let mut out = Vec::new();
        for repeat in 0..self.repeats {
            for &target_size in &self.sizes {
                for &delete_percentage in &self.percentages {
                    let seed = trial_seed(self.master_seed, target_size, delete_percentage, repeat);
                    for &strategy in &self.strategies {
                        out.push(TrialConfig {
                            strategy,
                            target_size,
                            delete_percentage,
                            repeat,
                            seed,
                            forest: self.forest,
                            n_shards: self.n_shards,
                            n_slices: self.n_slices,
                        });
                    }
                }
            }
        }
        out
    }
}

fn trial_seed(master: u64, size: usize, pct: f64, repeat: u32) -> u64 {
    mix_seed(
        mix_seed(mix_seed(master, size as u64), pct.to_bits()),
        u64::from(repeat),
    )
}

/// Naive arm: fit a baseline, then — inside the stopwatch — delete the
/// rows, retrain from scratch, predict, and score.
pub fn run_naive_trial(cfg: &TrialConfig, train: &Dataset, test: &Dataset) -> Result<TrialResult> {
    cfg.validate()?;
    let n_delete = cfg.n_to_delete();
    let model_seed = mix_seed(cfg.seed, MODEL_SALT);

    let baseline = NaiveForest::fit(train, &cfg.forest, model_seed)?;
    let preds_before = baseline.predict(test)?;
    let consistency_before = consistency(&preds_before, test.labels())?;

    let sw = Stopwatch::start();
    let (reduced, _deleted) = train.delete_n_elements(n_delete, mix_seed(cfg.seed, DELETE_SALT))?;
    let retrained = NaiveForest::fit(&reduced, &cfg.forest, model_seed)?;
    let preds_after = retrained.predict(test)?;
    let consistency_after = consistency(&preds_after, test.labels())?;
    let computational_cost_seconds = sw.elapsed_seconds();

    Ok(TrialResult {
        config: *cfg,
        n_deleted: n_delete,
        consistency_before,
        consistency_after,
        percent_change: percent_change(consistency_before, consistency_after),
        agreement_after: agreement(&preds_before, &preds_after)?,
        computational_cost_seconds,
        test_set_hash: test.content_hash(),
        degenerate: n_delete == 0,
    })
}

/// Sharded-unlearning arm: fit the ensemble, then — inside the
/// stopwatch — delete the same rows the naive arm would, one call per
/// row, predict, and score.
pub fn run_sisa_trial(cfg: &TrialConfig, train: &Dataset, test: &Dataset) -> Result<TrialResult> {
    cfg.validate()?;
    let n_delete = cfg.n_to_delete();
    let model_seed = mix_seed(cfg.seed, MODEL_SALT);
    let sisa_config = SisaConfig {
        n_shards: cfg.n_shards,
        n_slices: cfg.n_slices,
        constituent: ConstituentKind::Dare,
        params: cfg.forest,
        seed: model_seed,
        aggregation: Aggregation::MeanProba,
    };

    let mut ensemble = SisaEnsemble::fit(train, &sisa_config)?;
    let preds_before = ensemble.predict(test)?;
    let consistency_before = consistency(&preds_before, test.labels())?;

    let sw = Stopwatch::start();
    let victims = trial_deletion_ids(cfg, train)?;
    for id in victims {
        ensemble.delete(id)?;
    }
    let preds_after = ensemble.predict(test)?;
    let consistency_after = consistency(&preds_after, test.labels())?;
    let computational_cost_seconds = sw.elapsed_seconds();

    Ok(TrialResult {
        config: *cfg,
        n_deleted: n_delete,
        consistency_before,
        consistency_after,
        percent_change: percent_change(consistency_before, consistency_after),
        agreement_after: agreement(&preds_before, &preds_after)?,
        computational_cost_seconds,
        test_set_hash: test.content_hash(),
        degenerate: n_delete == 0,
    })
}

/// The reduced (train, test) pair a trial runs on. Exposed so external
/// verification can reproduce a trial's exact inputs from its config.
pub fn trial_datasets(
    cfg: &TrialConfig,
    train_master: &Dataset,
    test_master: &Dataset,
    test_ceiling: Option<usize>,
) -> Result<(Dataset, Dataset)> {
    reduce_to_target_size(
        train_master,
        test_master,
        cfg.target_size,
        test_ceiling,
        mix_seed(cfg.seed, REDUCE_SALT),
    )
}

/// The row ids a trial deletes from its reduced training set; both
/// arms of a grid cell delete the same rows.
pub fn trial_deletion_ids(cfg: &TrialConfig, train: &Dataset) -> Result<Vec<u64>> {
    train.choose_rows_for_deletion(cfg.n_to_delete(), mix_seed(cfg.seed, DELETE_SALT))
}

/// The seed a trial's models train with.
pub fn trial_model_seed(cfg: &TrialConfig) -> u64 {
    mix_seed(cfg.seed, MODEL_SALT)
}

fn run_one(
    cfg: &TrialConfig,
    train_master: &Dataset,
    test_master: &Dataset,
    test_ceiling: Option<usize>,
) -> Result<TrialResult> {
    cfg.validate()?;
    let (train, test) = trial_datasets(cfg, train_master, test_master, test_ceiling)?;
    match cfg.strategy {
        Strategy::Naive => run_naive_trial(cfg, &train, &test),
        Strategy::SisaDare => run_sisa_trial(cfg, &train, &test),
    }
}

/// A completed grid run: the results in grid order, per-trial failures
/// (the grid keeps going), and any result-level invariant violations.
#[derive(Debug, Default)]
pub struct GridOutcome {
    pub results: Vec<TrialResult>,
    pub failures: Vec<(usize, String)>,
    pub invariant_violations: Vec<String>,
}

impl GridOutcome {
    pub fn is_clean(&self) -> bool {
        self.invariant_violations.is_empty()
    }
}

/// Self-checks applied to every result as it is produced.
fn validate_result(r: &TrialResult) -> Vec<String> {
    let mut violations = Vec::new();
    let tag = format!(
        "{} n={} pct={} repeat={}",
        r.config.strategy, r.config.target_size, r.config.delete_percentage, r.config.repeat
    );
    if r.percent_change != percent_change(r.consistency_before, r.consistency_after) {
        violations.push(format!(
            "{tag}: percent_change does not recompute from its fields"
        ));
    }
    for (name, v) in [
        ("consistency_before", r.consistency_before),
        ("consistency_after", r.consistency_after),
        ("agreement_after", r.agreement_after),
    ] {
        if !(0.0..=1.0).contains(&v) {
            violations.push(format!("{tag}: {name} = {v} outside [0, 1]"));
        }
    }
    if r.computational_cost_seconds < 0.0 {
        violations.push(format!("{tag}: negative computational cost"));
    }
    if r.n_deleted != r.config.n_to_delete() {
        violations.push(format!(
            "{tag}: n_deleted = {} but the config calls for {}",
            r.n_deleted,
            r.config.n_to_delete()
        ));
    }
    violations
}

/// Run trials sequentially in grid order, invoking `on_result` as each
/// finishes (for append-style logging).
pub fn run_grid(
    grid: &[TrialConfig],
    train_master: &Dataset,
    test_master: &Dataset,
    test_ceiling: Option<usize>,
    mut on_result: impl FnMut(&TrialResult),
) -> GridOutcome {
    let mut outcome = GridOutcome::default();
    for (i, cfg) in grid.iter().enumerate() {
        match run_one(cfg, train_master, test_master, test_ceiling) {
            Ok(result) => {
                outcome
                    .invariant_violations
                    .extend(validate_result(&result));
                on_result(&result);
                outcome.results.push(result);
            }
            Err(e) => outcome.failures.push((i, e.to_string())),
        }
    }
    outcome
}

/// Correctness-only parallel variant. Results are still delivered in
/// grid order, but wall-clock costs from concurrent trials contend for
/// cores and must not be compared.
pub fn run_grid_parallel(
    grid: &[TrialConfig],
    train_master: &Dataset,
    test_master: &Dataset,
    test_ceiling: Option<usize>,
    threads: usize,
    mut on_result: impl FnMut(&TrialResult),
) -> GridOutcome {
    let threads = threads.max(1);
    let mut slots: Vec<Option<Result<TrialResult>>> = Vec::with_capacity(grid.len());
    slots.resize_with(grid.len(), || None);
    std::thread::scope(|scope| {
        let mut handles = Vec::new();
        for t in 0..threads {
            let indices: Vec<usize> = (t..grid.len()).step_by(threads).collect();
            handles.push(scope.spawn(move || {
                indices
                    .into_iter()
                    .map(|i| {
                        (
                            i,
                            run_one(&grid[i], train_master, test_master, test_ceiling),
                        )
                    })
                    .collect::<Vec<_>>()
            }));
        }
        for handle in handles {
            for (i, res) in handle.join().expect("trial worker panicked") {
                slots[i] = Some(res);
            }
        }
    });
    let mut outcome = GridOutcome::default();
    for (i, slot) in slots.into_iter().enumerate() {
        match slot.expect("every grid index was scheduled") {
            Ok(result) => {
                outcome
                    .invariant_violations
                    .extend(validate_result(&result));
                on_result(&result);
                outcome.results.push(result);
            }
            Err(e) => outcome.failures.push((i, e.to_string())),
        }
    }
    outcome
}
