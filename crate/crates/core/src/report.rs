//! Result logging: an append-only text log (one block per trial), the
//! results CSV, and the tidier that converts the former into the
//! latter.
//!
//! Both writers format floats with Rust's shortest round-trip `{}`
//! notation and end lines with `\n`, so `tidy` applied to a log
//! produced by a run emits byte-for-byte the CSV that run wrote itself.
//! An undefined percent change (zero baseline consistency) is logged as
//! the distinguished value `NA` in both formats.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::harness::{Strategy, TrialResult};

pub const CSV_HEADER: &str = "strategy,target_size,delete_percentage,repeat,n_deleted,consistency_before,consistency_after,percent_change,agreement_after,computational_cost_seconds,test_set_hash";

/// Shortest decimal form that parses back to the same f64.
pub fn format_float(v: f64) -> String {
    format!("{v}")
}

fn format_percent_change(pc: Option<f64>) -> String {
    match pc {
        Some(v) => format_float(v),
        None => "NA".to_string(),
    }
}

/// One log block, terminated by a blank line.
pub fn log_block(r: &TrialResult) -> String {
    let mut s = String::new();
    s.push_str("[trial]\n");
    s.push_str(&format!("strategy = {}\n", r.config.strategy));
    s.push_str(&format!("target_size = {}\n", r.config.target_size));
    s.push_str(&format!(
        "delete_percentage = {}\n",
        format_float(r.config.delete_percentage)
    ));
    s.push_str(&format!("repeat = {}\n", r.config.repeat));
    s.push_str(&format!("n_deleted = {}\n", r.n_deleted));
    s.push_str(&format!(
        "consistency_before = {}\n",
        format_float(r.consistency_before)
    ));
    s.push_str(&format!(
        "consistency_after = {}\n",
        format_float(r.consistency_after)
    ));
    s.push_str(&format!(
        "percent_change = {}\n",
        format_percent_change(r.percent_change)
    ));
    s.push_str(&format!(
        "agreement_after = {}\n",
        format_float(r.agreement_after)
    ));
    s.push_str(&format!(
        "computational_cost_seconds = {}\n",
        format_float(r.computational_cost_seconds)
    ));
    s.push_str(&format!("test_set_hash = {:016x}\n", r.test_set_hash));
    s.push_str(&format!("degenerate = {}\n", r.degenerate));
    s.push('\n');
    s
}

/// One CSV data row (no trailing newline handling — includes `\n`).
pub fn csv_row(r: &TrialResult) -> String {
    render_row(&RowFields {
        strategy: r.config.strategy.to_string(),
        target_size: r.config.target_size as u64,
        delete_percentage: r.config.delete_percentage,
        repeat: u64::from(r.config.repeat),
        n_deleted: r.n_deleted as u64,
        consistency_before: r.consistency_before,
        consistency_after: r.consistency_after,
        percent_change: r.percent_change,
        agreement_after: r.agreement_after,
        computational_cost_seconds: r.computational_cost_seconds,
        test_set_hash: format!("{:016x}", r.test_set_hash),
    })
}

struct RowFields {
    strategy: String,
    target_size: u64,
    delete_percentage: f64,
    repeat: u64,
    n_deleted: u64,
    consistency_before: f64,
    consistency_after: f64,
    percent_change: Option<f64>,
    agreement_after: f64,
    computational_cost_seconds: f64,
    test_set_hash: String,
}

fn render_row(f: &RowFields) -> String {
    format!(
        "{},{},{},{},{},{},{},{},{},{},{}\n",
        f.strategy,
        f.target_size,
        format_float(f.delete_percentage),
        f.repeat,
        f.n_deleted,
        format_float(f.consistency_before),
        format_float(f.consistency_after),
        format_percent_change(f.percent_change),
        format_float(f.agreement_after),
        format_float(f.computational_cost_seconds),
        f.test_set_hash,
    )
}

/// Convert a results text log into CSV text (header plus one row per
/// block). An empty log yields a header-only CSV. Malformed input is
/// rejected with the offending line number.
pub fn tidy_log(text: &str) -> Result<String> {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');

    let mut lines = text.lines().enumerate().peekable();
    while let Some((idx, line)) = lines.next() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed != "[trial]" {
            return Err(Error::LogParse {
                line: line_no,
                message: format!("expected [trial] or blank line, found {trimmed:?}"),
            });
        }
        let block_line = line_no;
        let mut fields: Vec<(String, String, usize)> = Vec::new();
        for (idx, line) in lines.by_ref() {
            let line_no = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                break;
            }
            match trimmed.split_once('=') {
                Some((k, v)) => fields.push((k.trim().to_string(), v.trim().to_string(), line_no)),
                None => {
                    return Err(Error::LogParse {
                        line: line_no,
                        message: format!("expected `key = value`, found {trimmed:?}"),
                    })
                }
            }
        }
        out.push_str(&render_row(&block_to_row(block_line, &fields)?));
    }
    Ok(out)
}

fn block_to_row(block_line: usize, fields: &[(String, String, usize)]) -> Result<RowFields> {
    let get = |key: &str| -> Result<(&str, usize)> {
        fields
            .iter()
            .find(|(k, _, _)| k == key)
            .map(|(_, v, line)| (v.as_str(), *line))
            .ok_or(Error::LogParse {
                line: block_line,
                message: format!("block is missing the {key} field"),
            })
    };
    fn parse<T: std::str::FromStr>(pair: (&str, usize), what: &str) -> Result<T> {
        pair.0.parse().map_err(|_| Error::LogParse {
            line: pair.1,
            message: format!("bad {what} value {:?}", pair.0),
        })
    }

    let (strategy_raw, strategy_line) = get("strategy")?;
    let strategy: Strategy = strategy_raw.parse().map_err(|_| Error::LogParse {
        line: strategy_line,
        message: format!("bad strategy value {strategy_raw:?}"),
    })?;
    let (pc_raw, pc_line) = get("percent_change")?;
    let percent_change = if pc_raw == "NA" {
        None
    } else {
        Some(parse::<f64>((pc_raw, pc_line), "percent_change")?)
    };
    let (hash_raw, hash_line) = get("test_set_hash")?;
    if hash_raw.len() != 16 || !hash_raw.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(Error::LogParse {
            line: hash_line,
            message: format!("bad test_set_hash value {hash_raw:?}"),
        });
    }

    Ok(RowFields {
        strategy: strategy.to_string(),
        target_size: parse(get("target_size")?, "target_size")?,
        delete_percentage: parse(get("delete_percentage")?, "delete_percentage")?,
        repeat: parse(get("repeat")?, "repeat")?,
        n_deleted: parse(get("n_deleted")?, "n_deleted")?,
        consistency_before: parse(get("consistency_before")?, "consistency_before")?,
        consistency_after: parse(get("consistency_after")?, "consistency_after")?,
        percent_change,
        agreement_after: parse(get("agreement_after")?, "agreement_after")?,
        computational_cost_seconds: parse(
            get("computational_cost_seconds")?,
            "computational_cost_seconds",
        )?,
        test_set_hash: hash_raw.to_string(),
    })
}

/// File-to-file tidy.
pub fn tidy_file(log_path: &Path, csv_path: &Path) -> Result<()> {
    let text = fs::read_to_string(log_path)?;
    let csv = tidy_log(&text)?;
    fs::write(csv_path, csv)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forest::ForestParams;
    use crate::harness::{Strategy, TrialConfig};
    use proptest::prelude::*;

    fn result(pc: Option<f64>) -> TrialResult {
        TrialResult {
            config: TrialConfig {
                strategy: Strategy::SisaDare,
                target_size: 100,
                delete_percentage: 0.25,
                repeat: 0,
                seed: 1,
                forest: ForestParams::default(),
                n_shards: 1,
                n_slices: 1,
            },
            n_deleted: 25,
            consistency_before: 0.8,
            consistency_after: 0.84,
            percent_change: pc,
            agreement_after: 0.95,
            computational_cost_seconds: 0.012345,
            test_set_hash: 0xdead_beef_0042_0001,
            degenerate: false,
        }
    }

    #[test]
    fn tidy_of_log_matches_csv_writer() {
        let results = vec![result(Some(5.0)), result(None)];
        let mut log = String::new();
        let mut csv = String::from(CSV_HEADER);
        csv.push('\n');
        for r in &results {
            log.push_str(&log_block(r));
            csv.push_str(&csv_row(r));
        }
        assert_eq!(tidy_log(&log).unwrap(), csv);
    }

    #[test]
    fn empty_log_gives_header_only() {
        let csv = tidy_log("").unwrap();
        assert_eq!(csv, format!("{CSV_HEADER}\n"));
    }

    #[test]
    fn truncated_block_names_its_line() {
        let log = "[trial]\nstrategy = naive\ntarget_size = 10\n";
        match tidy_log(log).unwrap_err() {
            Error::LogParse { line, message } => {
                assert_eq!(line, 1);
                assert!(message.contains("missing"));
            }
            other => panic!("expected log parse error, got {other}"),
        }
    }

    #[test]
    fn garbage_line_names_its_line() {
        // A full block is 13 key lines plus 1 blank; the stray line is 15.
        let log = format!("{}stray line\n", log_block(&result(Some(1.0))));
        match tidy_log(&log).unwrap_err() {
            Error::LogParse { line, .. } => assert_eq!(line, 15),
            other => panic!("expected log parse error, got {other}"),
        }
    }

    #[test]
    fn bad_values_are_rejected_with_lines() {
        let mut log = log_block(&result(Some(1.0)));
        log = log.replace("consistency_before = 0.8", "consistency_before = soup");
        match tidy_log(&log).unwrap_err() {
            Error::LogParse { line, message } => {
                assert_eq!(line, 7);
                assert!(message.contains("consistency_before"));
            }
            other => panic!("expected log parse error, got {other}"),
        }
    }

    #[test]
    fn unknown_keys_are_tolerated() {
        // degenerate is logged for humans but has no CSV column.
        let log = log_block(&result(Some(5.0)));
        assert!(log.contains("degenerate = false"));
        assert!(tidy_log(&log).is_ok());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn float_fields_survive_the_text_round_trip(
            cb in 0.0f64..=1.0,
            ca in 0.0f64..=1.0,
            cost in 0.0f64..1e6,
        ) {
            let mut r = result(None);
            r.consistency_before = cb;
            r.consistency_after = ca;
            r.percent_change = crate::metrics::percent_change(cb, ca);
            r.computational_cost_seconds = cost;
            let tidied = tidy_log(&log_block(&r)).unwrap();
            let direct = format!("{CSV_HEADER}\n{}", csv_row(&r));
            prop_assert_eq!(tidied, direct);
        }
    }
}
