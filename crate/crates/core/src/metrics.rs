//! Evaluation metrics and the stopwatch used for cost measurement.
//!
//! Consistency is prediction accuracy against labels; agreement is the
//! fraction of positions where two prediction vectors match. Both
//! readings are logged by the harness so either notion of "did
//! unlearning change the model" can be analyzed.

use std::time::Instant;

use crate::error::{Error, Result};

/// Fraction of positions where `predictions[i] == labels[i]`.
pub fn consistency(predictions: &[u8], labels: &[u8]) -> Result<f64> {
    matching_fraction(predictions, labels)
}

/// Fraction of positions where two prediction vectors agree.
pub fn agreement(pred_a: &[u8], pred_b: &[u8]) -> Result<f64> {
    matching_fraction(pred_a, pred_b)
}

fn matching_fraction(a: &[u8], b: &[u8]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::invalid(format!(
            "vector lengths differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::invalid("cannot score empty vectors"));
    }
    let matches = a.iter().zip(b).filter(|(x, y)| x == y).count();
    Ok(matches as f64 / a.len() as f64)
}

/// Relative change in consistency, in percent:
/// `(c_after - c_before) / c_before * 100`.
///
/// Evaluated as `(100*c_after - 100*c_before) / c_before` so that
/// whole-percent changes of exactly representable inputs come out exact
/// (e.g. 0.80 -> 0.84 yields exactly 5.0). Returns `None` when
/// `c_before` is zero, where the ratio is undefined; callers log a
/// distinguished value instead of crashing.
pub fn percent_change(c_before: f64, c_after: f64) -> Option<f64> {
    if c_before == 0.0 {
        return None;
    }
    Some((100.0 * c_after - 100.0 * c_before) / c_before)
}

/// Wall-clock interval timer over a monotonic clock.
#[derive(Debug, Clone, Copy)]
pub struct Stopwatch {
    start: Instant,
}

impl Stopwatch {
    pub fn start() -> Self {
        Stopwatch {
            start: Instant::now(),
        }
    }

    /// Seconds elapsed since `start()`. Monotonic, so never negative.
    pub fn elapsed_seconds(&self) -> f64 {
        self.start.elapsed().as_secs_f64()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn consistency_counts_matches() {
        let got = consistency(&[1, 0, 1, 1], &[1, 0, 0, 1]).unwrap();
        assert_eq!(got, 0.75);
    }

    #[test]
    fn consistency_identity_and_complement() {
        assert_eq!(consistency(&[1, 0, 1], &[1, 0, 1]).unwrap(), 1.0);
        assert_eq!(consistency(&[1, 0, 1], &[0, 1, 0]).unwrap(), 0.0);
    }

    #[test]
    fn consistency_rejects_bad_inputs() {
        assert!(consistency(&[1], &[1, 0]).is_err());
        assert!(consistency(&[], &[]).is_err());
    }

    #[test]
    fn agreement_matches_definition() {
        assert_eq!(agreement(&[1; 10], &[1; 10]).unwrap(), 1.0);
        let mut b = [1u8; 10];
        b[3] = 0;
        assert_eq!(agreement(&[1; 10], &b).unwrap(), 0.9);
        assert_eq!(agreement(&[1], &[0]).unwrap(), 0.0);
    }

    #[test]
    fn percent_change_exact_values() {
        // 0.80 -> 0.84 is a five percent rise, exactly.
        assert_eq!(percent_change(0.80, 0.84), Some(5.0));
        // 0.84 -> 0.70 drops by one sixth.
        assert_eq!(percent_change(0.84, 0.70), Some(-16.666666666666668));
    }

    #[test]
    fn percent_change_identity_is_exact_zero() {
        for c in [0.1, 0.25, 0.333, 0.84, 1.0] {
            assert_eq!(percent_change(c, c), Some(0.0));
        }
    }

    #[test]
    fn percent_change_zero_baseline_is_undefined() {
        assert_eq!(percent_change(0.0, 0.5), None);
    }

    #[test]
    fn stopwatch_is_nonnegative() {
        let sw = Stopwatch::start();
        assert!(sw.elapsed_seconds() >= 0.0);
    }
}
