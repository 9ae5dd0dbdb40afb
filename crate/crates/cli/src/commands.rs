use std::fs::{self, OpenOptions};
use std::io::Write as _;
use std::process::ExitCode;

use unlearn_core::report::{csv_row, log_block, CSV_HEADER};
use unlearn_core::{
    chart, encode, ingest_csv, report, run_grid, run_grid_parallel, selftest, CsvSchema, Dataset,
    EncodingConfig, ForestParams, GridSpec, Strategy, TrialResult,
};

use crate::config::{parse_list, Settings};
use crate::{BenchArgs, GenerateArgs, PlotArgs, PreprocessArgs, TidyArgs};

type CmdResult = Result<ExitCode, String>;

const DEFAULT_SEED: u64 = 42;

pub fn generate(args: &GenerateArgs, settings: &Settings) -> CmdResult {
    let seed = settings.resolve_seed(args.seed, DEFAULT_SEED)?;
    let ds = if args.source.synthetic {
        let rows = settings.resolve(args.rows, "rows", 2000)?;
        let dims = settings.resolve(args.dims, "dims", 64)?;
        let class_sep = settings.resolve(args.class_sep, "class_sep", 1.5)?;
        Dataset::generate_synthetic(rows, dims, class_sep, seed).map_err(|e| e.to_string())?
    } else {
        let path = args.source.csv.as_ref().expect("clap enforces one source");
        let schema = CsvSchema {
            user_id_col: settings.resolve(
                args.user_id_col.clone(),
                "user_id_col",
                "user_id".to_string(),
            )?,
            label_col: settings.resolve(
                args.label_col.clone(),
                "label_col",
                "label".to_string(),
            )?,
            text_col: settings.resolve(args.text_col.clone(), "text_col", "text".to_string())?,
        };
        let (records, skipped) = ingest_csv(path, &schema).map_err(|e| e.to_string())?;
        if skipped > 0 {
            println!("skipped {skipped} rows with unusable labels or empty text");
        }
        if records.is_empty() {
            return Err(format!("{}: no usable rows", path.display()));
        }
        let cfg = EncodingConfig {
            num_hash_features: settings.resolve(args.hash_features, "hash_features", 64)?,
            seed,
            binarize: !args.count_tokens,
        };
        encode(&records, &cfg).map_err(|e| e.to_string())?
    };
    ds.save(&args.out).map_err(|e| e.to_string())?;
    let (zeros, ones) = ds.label_counts();
    println!(
        "wrote {} rows x {} columns to {} (labels: {zeros} zero / {ones} one)",
        ds.n_rows(),
        ds.n_cols(),
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn preprocess(args: &PreprocessArgs, settings: &Settings) -> CmdResult {
    let seed = settings.resolve_seed(args.seed, DEFAULT_SEED)?;
    let test_fraction = settings.resolve(args.test_fraction, "test_fraction", 0.3)?;
    let ds = Dataset::load(&args.input).map_err(|e| e.to_string())?;
    let (zeros, ones) = ds.label_counts();
    if zeros == 0 || ones == 0 {
        eprintln!("warning: input contains a single label class; models will be trivial");
    }
    let (train, test) = ds
        .train_test_split(test_fraction, seed)
        .map_err(|e| e.to_string())?;
    train.save(&args.train_out).map_err(|e| e.to_string())?;
    test.save(&args.test_out).map_err(|e| e.to_string())?;
    let (train_zeros, train_ones) = train.label_counts();
    let (test_zeros, test_ones) = test.label_counts();
    println!(
        "train: {} rows ({train_zeros} zero / {train_ones} one) -> {}",
        train.n_rows(),
        args.train_out.display()
    );
    println!(
        "test:  {} rows ({test_zeros} zero / {test_ones} one) -> {}",
        test.n_rows(),
        args.test_out.display()
    );
    Ok(ExitCode::SUCCESS)
}

pub fn bench(args: &BenchArgs, settings: &Settings) -> CmdResult {
    let train = Dataset::load(&args.train).map_err(|e| e.to_string())?;
    let test = Dataset::load(&args.test).map_err(|e| e.to_string())?;

    let sizes_raw = settings.resolve(args.sizes.clone(), "sizes", "10,100,1000".to_string())?;
    let pcts_raw = settings.resolve(args.pcts.clone(), "pcts", "0.25,0.5,0.75".to_string())?;
    let strategies_raw = settings.resolve(
        args.strategies.clone(),
        "strategies",
        "naive,sisa_dare".to_string(),
    )?;
    let spec = GridSpec {
        sizes: parse_list(&sizes_raw, "sizes")?,
        percentages: parse_list(&pcts_raw, "pcts")?,
        strategies: parse_list::<Strategy>(&strategies_raw, "strategies")?,
        repeats: settings.resolve(args.repeats, "repeats", 1)?,
        master_seed: settings.resolve_seed(args.seed, DEFAULT_SEED)?,
        forest: ForestParams {
            n_trees: settings.resolve(args.trees, "trees", 10)?,
            max_depth: settings.resolve(args.max_depth, "max_depth", 10)?,
            thresholds_per_feature: settings.resolve(
                args.thresholds_per_feature,
                "thresholds_per_feature",
                8,
            )?,
            max_features_per_tree: settings.resolve_opt(args.max_features, "max_features")?,
            min_samples_leaf: settings.resolve(args.min_samples_leaf, "min_samples_leaf", 1)?,
        },
        n_shards: settings.resolve(args.shards, "shards", 1)?,
        n_slices: settings.resolve(args.slices, "slices", 1)?,
        test_ceiling: settings.resolve_opt(args.test_ceiling, "test_ceiling")?,
    };
    let grid = spec.build();

    let mut log = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.log)
        .map_err(|e| format!("cannot open {}: {e}", args.log.display()))?;
    let csv_needs_header = fs::metadata(&args.csv)
        .map(|m| m.len() == 0)
        .unwrap_or(true);
    let mut csv = OpenOptions::new()
        .create(true)
        .append(true)
        .open(&args.csv)
        .map_err(|e| format!("cannot open {}: {e}", args.csv.display()))?;
    if csv_needs_header {
        csv.write_all(CSV_HEADER.as_bytes())
            .and_then(|()| csv.write_all(b"\n"))
            .map_err(|e| e.to_string())?;
    }

    println!(
        "running {} trials on {} train / {} test rows",
        grid.len(),
        train.n_rows(),
        test.n_rows()
    );
    let mut write_error: Option<String> = None;
    let mut on_result = |r: &TrialResult| {
        println!(
            "  {:<9} n={:<5} pct={:<4} repeat={}  consistency {:.4} -> {:.4}  cost {:.4}s{}",
            r.config.strategy.to_string(),
            r.config.target_size,
            r.config.delete_percentage,
            r.config.repeat,
            r.consistency_before,
            r.consistency_after,
            r.computational_cost_seconds,
            if r.degenerate {
                "  (degenerate: no rows deleted)"
            } else {
                ""
            },
        );
        if let Err(e) = log
            .write_all(log_block(r).as_bytes())
            .and_then(|()| csv.write_all(csv_row(r).as_bytes()))
        {
            write_error.get_or_insert(e.to_string());
        }
    };
    let outcome = match args.parallel {
        Some(threads) => {
            eprintln!("note: parallel mode is for correctness runs; do not compare its timings");
            run_grid_parallel(
                &grid,
                &train,
                &test,
                spec.test_ceiling,
                threads,
                &mut on_result,
            )
        }
        None => run_grid(&grid, &train, &test, spec.test_ceiling, &mut on_result),
    };
    if let Some(e) = write_error {
        return Err(format!("failed writing results: {e}"));
    }

    for (idx, msg) in &outcome.failures {
        eprintln!("trial {idx} failed: {msg}");
    }
    println!(
        "{} results -> {} and {}",
        outcome.results.len(),
        args.log.display(),
        args.csv.display()
    );
    if !outcome.is_clean() {
        for v in &outcome.invariant_violations {
            eprintln!("invariant violation: {v}");
        }
        return Ok(ExitCode::FAILURE);
    }
    Ok(ExitCode::SUCCESS)
}

pub fn tidy(args: &TidyArgs) -> CmdResult {
    report::tidy_file(&args.log, &args.out).map_err(|e| e.to_string())?;
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn plot(args: &PlotArgs) -> CmdResult {
    chart::plot_file(&args.csv, &args.out).map_err(|e| e.to_string())?;
    println!("wrote {}", args.out.display());
    Ok(ExitCode::SUCCESS)
}

pub fn selftest() -> CmdResult {
    let report = selftest::run();
    println!(
        "{} checks passed, {} failed in {:.1}s",
        report.passed, report.failed, report.elapsed_seconds
    );
    if report.ok() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &report.failures {
            eprintln!("failed: {f}");
        }
        Ok(ExitCode::FAILURE)
    }
}
