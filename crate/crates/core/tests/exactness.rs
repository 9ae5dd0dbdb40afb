//! Differential tests against the scratch-retraining oracle.
//!
//! The oracle is simply `fit` on the reduced dataset — it never touches
//! the incremental deletion path, so agreement between the two is
//! evidence, not tautology.

use std::collections::BTreeSet;

use proptest::prelude::*;

use unlearn_core::{DareForest, Dataset, ForestParams, SisaConfig, SisaEnsemble};

#[derive(Debug, Clone)]
struct Instance {
    rows: usize,
    d: usize,
    class_sep: f64,
    binarize: bool,
    seed: u64,
    n_trees: usize,
    max_depth: usize,
    thresholds_per_feature: usize,
    min_samples_leaf: usize,
    delete_fraction: f64,
    order_seed: u64,
}

fn instance_strategy() -> impl Strategy<Value = Instance> {
    (
        8usize..80,
        1usize..8,
        0.0f64..2.5,
        any::<bool>(),
        any::<u64>(),
        (1usize..4, 1usize..7, 1usize..9, 1usize..3),
        0.0f64..0.8,
        any::<u64>(),
    )
        .prop_map(
            |(
                rows,
                d,
                class_sep,
                binarize,
                seed,
                (n_trees, max_depth, tpf, msl),
                frac,
                order_seed,
            )| {
                Instance {
                    rows,
                    d,
                    class_sep,
                    binarize,
                    seed,
                    n_trees,
                    max_depth,
                    thresholds_per_feature: tpf,
                    min_samples_leaf: msl,
                    delete_fraction: frac,
                    order_seed,
                }
            },
        )
}

fn materialize(inst: &Instance) -> (Dataset, ForestParams, Vec<u64>) {
    let mut ds = Dataset::generate_synthetic(inst.rows, inst.d, inst.class_sep, inst.seed).unwrap();
    if inst.binarize {
        let mut features = Vec::with_capacity(ds.n_rows() * ds.n_cols());
        for i in 0..ds.n_rows() {
            for &v in ds.row(i) {
                features.push(f64::from(v > 0.0));
            }
        }
        ds = Dataset::new(
            features,
            ds.n_cols(),
            ds.labels().to_vec(),
            ds.row_ids().to_vec(),
        )
        .unwrap();
    }
    let params = ForestParams {
        n_trees: inst.n_trees,
        max_depth: inst.max_depth,
        thresholds_per_feature: inst.thresholds_per_feature,
        max_features_per_tree: None,
        min_samples_leaf: inst.min_samples_leaf,
    };
    let n_delete = ((inst.rows as f64) * inst.delete_fraction) as usize;
    let mut victims = ds
        .choose_rows_for_deletion(n_delete, inst.seed ^ 0xde1_e7e)
        .unwrap();
    // Deletion order is arbitrary; scramble it independently of the
    // selection so order-independence is exercised too.
    let mut state = inst.order_seed | 1;
    for i in (1..victims.len()).rev() {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        victims.swap(i, (state >> 33) as usize % (i + 1));
    }
    (ds, params, victims)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn forest_deletion_matches_scratch_oracle(inst in instance_strategy()) {
        let (ds, params, victims) = materialize(&inst);
        let mut model = DareForest::fit(&ds, &params, inst.seed).unwrap();
        for &id in &victims {
            model.delete(id).unwrap();
        }
        let gone: BTreeSet<u64> = victims.iter().copied().collect();
        let remaining = ds.without_row_ids(&gone);
        if remaining.is_empty() {
            prop_assert!(model.predict_proba(&ds).is_err());
            return Ok(());
        }
        let oracle = DareForest::fit(&remaining, &params, inst.seed).unwrap();
        prop_assert!(model == oracle, "structure differs from the scratch oracle");

        let got = model.predict_proba(&ds).unwrap();
        let want = oracle.predict_proba(&ds).unwrap();
        for (g, w) in got.iter().zip(&want) {
            prop_assert_eq!(g.to_bits(), w.to_bits());
            prop_assert!((0.0..=1.0).contains(g));
        }
        model.check_invariants().unwrap();
    }

    #[test]
    fn ensemble_deletion_matches_scratch_oracle(
        inst in instance_strategy(),
        n_shards in 1usize..5,
    ) {
        let (ds, params, victims) = materialize(&inst);
        prop_assume!(ds.n_rows() >= n_shards);
        let cfg = SisaConfig {
            n_shards,
            params,
            seed: inst.seed,
            ..Default::default()
        };
        let mut ens = SisaEnsemble::fit(&ds, &cfg).unwrap();
        for &id in &victims {
            ens.delete(id).unwrap();
        }
        let gone: BTreeSet<u64> = victims.iter().copied().collect();
        let remaining = ds.without_row_ids(&gone);
        if remaining.n_rows() < n_shards {
            return Ok(());
        }
        let oracle = SisaEnsemble::fit(&remaining, &cfg).unwrap();
        prop_assert!(ens == oracle, "ensemble differs from the scratch oracle");
        prop_assert_eq!(ens.shard_fingerprints(), oracle.shard_fingerprints());
        ens.check_invariants().unwrap();
    }
}
