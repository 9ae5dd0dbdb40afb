//! Built-in release gate: small-instance oracle checks runnable from
//! the command line without any input files.
//!
//! The suite exercises the claims the library stands on — incremental
//! deletion equals retraining from scratch, shard isolation, the
//! percent-change formula, serialization round trips — on seeded random
//! instances small enough to finish in seconds.

use std::collections::BTreeSet;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dataset::Dataset;
use crate::forest::{gini_gain, ClassCounts, DareForest, ForestParams, NaiveForest};
use crate::metrics::{percent_change, Stopwatch};
use crate::report::{csv_row, log_block, tidy_log, CSV_HEADER};
use crate::sisa::{SisaConfig, SisaEnsemble};

#[derive(Debug)]
pub struct SelftestReport {
    pub passed: usize,
    pub failed: usize,
    pub failures: Vec<String>,
    pub elapsed_seconds: f64,
}

impl SelftestReport {
    pub fn ok(&self) -> bool {
        self.failed == 0
    }
}

/// Random dataset mixing continuous and binarized features so both the
/// cheap (counts-only) and expensive (rebuild) deletion paths run.
fn random_instance(rng: &mut ChaCha8Rng) -> Dataset {
    let rows = rng.random_range(12..=60);
    let d = rng.random_range(2..=6);
    let ds =
        Dataset::generate_synthetic(rows, d, rng.random_range(0.2..2.0), rng.random()).unwrap();
    if rng.random_bool(0.5) {
        binarize(&ds)
    } else {
        ds
    }
}

fn binarize(ds: &Dataset) -> Dataset {
    let mut features = Vec::with_capacity(ds.n_rows() * ds.n_cols());
    for i in 0..ds.n_rows() {
        for &v in ds.row(i) {
            features.push(f64::from(v > 0.0));
        }
    }
    Dataset::new(
        features,
        ds.n_cols(),
        ds.labels().to_vec(),
        ds.row_ids().to_vec(),
    )
    .unwrap()
}

fn random_params(rng: &mut ChaCha8Rng) -> ForestParams {
    ForestParams {
        n_trees: rng.random_range(1..=3),
        max_depth: rng.random_range(2..=6),
        thresholds_per_feature: rng.random_range(2..=8),
        max_features_per_tree: None,
        min_samples_leaf: rng.random_range(1..=2),
    }
}

fn check_gini_values() -> Result<(), String> {
    let c = |n0, n1| ClassCounts { n0, n1 };
    if gini_gain(c(2, 2), c(2, 0), c(0, 2)) != 0.5 {
        return Err("gini_gain((2,2),(2,0),(0,2)) != 0.5".into());
    }
    if gini_gain(c(2, 2), c(1, 1), c(1, 1)) != 0.0 {
        return Err("gini_gain((2,2),(1,1),(1,1)) != 0.0".into());
    }
    Ok(())
}

fn check_percent_change() -> Result<(), String> {
    if percent_change(0.80, 0.84) != Some(5.0) {
        return Err("percent_change(0.80, 0.84) != 5.0".into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0x5e1f);
    for _ in 0..1000 {
        let c: f64 = rng.random_range(f64::MIN_POSITIVE..=1.0);
        if percent_change(c, c) != Some(0.0) {
            return Err(format!("percent_change({c}, {c}) != 0"));
        }
    }
    if percent_change(0.0, 0.5).is_some() {
        return Err("percent_change(0.0, _) must be undefined".into());
    }
    Ok(())
}

fn check_deletion_exactness() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xda7e);
    for case in 0..20 {
        let ds = random_instance(&mut rng);
        let params = random_params(&mut rng);
        let seed: u64 = rng.random();
        let mut model =
            DareForest::fit(&ds, &params, seed).map_err(|e| format!("case {case}: {e}"))?;
        let n_delete = ds.n_rows() * 2 / 5;
        let victims = ds
            .choose_rows_for_deletion(n_delete, rng.random())
            .map_err(|e| format!("case {case}: {e}"))?;
        for &id in &victims {
            model.delete(id).map_err(|e| format!("case {case}: {e}"))?;
        }
        let gone: BTreeSet<u64> = victims.into_iter().collect();
        let scratch = DareForest::fit(&ds.without_row_ids(&gone), &params, seed)
            .map_err(|e| format!("case {case}: {e}"))?;
        if model != scratch {
            return Err(format!(
                "case {case}: deletion result differs from scratch fit"
            ));
        }
        let a = model
            .predict_proba(&ds)
            .map_err(|e| format!("case {case}: {e}"))?;
        let b = scratch
            .predict_proba(&ds)
            .map_err(|e| format!("case {case}: {e}"))?;
        if a.iter()
            .map(|v| v.to_bits())
            .ne(b.iter().map(|v| v.to_bits()))
        {
            return Err(format!(
                "case {case}: probabilities differ from scratch fit"
            ));
        }
        model
            .check_invariants()
            .map_err(|e| format!("case {case}: {e}"))?;
    }
    Ok(())
}

fn check_shard_isolation() -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x515a);
    for (case, &n_shards) in [1usize, 2, 4].iter().enumerate() {
        let ds = Dataset::generate_synthetic(60, 4, 1.0, rng.random()).unwrap();
        let cfg = SisaConfig {
            n_shards,
            params: ForestParams {
                n_trees: 2,
                max_depth: 4,
                ..Default::default()
            },
            seed: rng.random(),
            ..Default::default()
        };
        let mut ens = SisaEnsemble::fit(&ds, &cfg).map_err(|e| format!("case {case}: {e}"))?;
        let victim = ds.row_id(rng.random_range(0..ds.n_rows()));
        let target = ens.shard_for_row(victim);
        let before = ens.shard_fingerprints();
        ens.delete(victim)
            .map_err(|e| format!("case {case}: {e}"))?;
        let after = ens.shard_fingerprints();
        for i in 0..n_shards {
            if i != target && before[i] != after[i] {
                return Err(format!("case {case}: untouched shard {i} changed"));
            }
        }
        let gone: BTreeSet<u64> = [victim].into_iter().collect();
        let scratch = SisaEnsemble::fit(&ds.without_row_ids(&gone), &cfg)
            .map_err(|e| format!("case {case}: {e}"))?;
        if ens != scratch {
            return Err(format!("case {case}: ensemble differs from scratch fit"));
        }
    }
    Ok(())
}

fn check_round_trips() -> Result<(), String> {
    let ds = Dataset::generate_synthetic(30, 4, 1.0, 77).unwrap();
    let bytes = ds.to_bytes();
    let back = Dataset::from_bytes(&bytes).map_err(|e| e.to_string())?;
    if back != ds || back.to_bytes() != bytes {
        return Err("dataset container round trip not bit-exact".into());
    }

    let params = ForestParams {
        n_trees: 2,
        max_depth: 4,
        ..Default::default()
    };
    let forest = DareForest::fit(&ds, &params, 5).map_err(|e| e.to_string())?;
    let bytes = forest.to_bytes();
    if DareForest::from_bytes(&bytes)
        .map_err(|e| e.to_string())?
        .to_bytes()
        != bytes
    {
        return Err("forest checkpoint round trip not bit-exact".into());
    }

    let naive = NaiveForest::fit(&ds, &params, 5).map_err(|e| e.to_string())?;
    let bytes = naive.to_bytes();
    if NaiveForest::from_bytes(&bytes)
        .map_err(|e| e.to_string())?
        .to_bytes()
        != bytes
    {
        return Err("baseline checkpoint round trip not bit-exact".into());
    }

    let cfg = SisaConfig {
        n_shards: 2,
        params,
        seed: 5,
        ..Default::default()
    };
    let ens = SisaEnsemble::fit(&ds, &cfg).map_err(|e| e.to_string())?;
    let bytes = ens.to_bytes();
    if SisaEnsemble::from_bytes(&bytes)
        .map_err(|e| e.to_string())?
        .to_bytes()
        != bytes
    {
        return Err("ensemble checkpoint round trip not bit-exact".into());
    }
    Ok(())
}

fn check_count_conservation() -> Result<(), String> {
    let ds = Dataset::generate_synthetic(50, 4, 1.0, 123).unwrap();
    let mut forest =
        DareForest::fit(&ds, &ForestParams::default(), 123).map_err(|e| e.to_string())?;
    forest.check_invariants().map_err(|e| e.to_string())?;
    if forest.corrupt_first_candidate() && forest.check_invariants().is_ok() {
        return Err("count corruption went undetected".into());
    }
    Ok(())
}

fn check_log_tidy() -> Result<(), String> {
    let (train, test) = Dataset::generate_synthetic(80, 4, 1.5, 9)
        .unwrap()
        .train_test_split(0.3, 9)
        .map_err(|e| e.to_string())?;
    let spec = crate::harness::GridSpec {
        sizes: vec![12],
        percentages: vec![0.5],
        forest: ForestParams {
            n_trees: 2,
            max_depth: 3,
            ..Default::default()
        },
        ..Default::default()
    };
    let outcome = crate::harness::run_grid(&spec.build(), &train, &test, None, |_| {});
    if !outcome.failures.is_empty() || !outcome.is_clean() {
        return Err("tiny grid run failed".into());
    }
    let mut log = String::new();
    let mut csv = String::from(CSV_HEADER);
    csv.push('\n');
    for r in &outcome.results {
        log.push_str(&log_block(r));
        csv.push_str(&csv_row(r));
    }
    let tidied = tidy_log(&log).map_err(|e| e.to_string())?;
    if tidied != csv {
        return Err("tidied log differs from the CSV writer".into());
    }
    Ok(())
}

/// Run every check, returning counts and failure messages.
pub fn run() -> SelftestReport {
    let sw = Stopwatch::start();
    type Check = (&'static str, fn() -> Result<(), String>);
    let checks: Vec<Check> = vec![
        ("gini unit values", check_gini_values),
        ("percent-change formula", check_percent_change),
        (
            "deletion matches scratch retraining",
            check_deletion_exactness,
        ),
        ("shard isolation and exactness", check_shard_isolation),
        ("serialization round trips", check_round_trips),
        ("count conservation checker", check_count_conservation),
        ("log tidy matches CSV writer", check_log_tidy),
    ];
    let mut report = SelftestReport {
        passed: 0,
        failed: 0,
        failures: Vec::new(),
        elapsed_seconds: 0.0,
    };
    for (name, check) in checks {
        match check() {
            Ok(()) => report.passed += 1,
            Err(msg) => {
                report.failed += 1;
                report.failures.push(format!("{name}: {msg}"));
            }
        }
    }
    report.elapsed_seconds = sw.elapsed_seconds();
    report
}
