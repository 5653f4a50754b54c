//! Log-space primitives and the evaluated-sample containers shared by the
//! rest of the crate.
//!
//! Every density, bin height and importance ratio is carried on the natural
//! log scale. Unnormalized log joints of order -1e3 are routine for real
//! models and underflow immediately if exponentiated.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A natural-log quantity. Negative infinity (log 0) is admissible,
/// positive infinity and NaN are not.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LogValue(f64);

impl LogValue {
    pub const ZERO: LogValue = LogValue(f64::NEG_INFINITY);
    pub const ONE: LogValue = LogValue(0.0);

    /// Returns `None` for NaN or `+inf`.
    pub fn new(value: f64) -> Option<Self> {
        if value.is_nan() || value == f64::INFINITY {
            None
        } else {
            Some(LogValue(value))
        }
    }

    #[inline]
    pub fn get(self) -> f64 {
        self.0
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    /// Linear-scale value. Underflows to 0 for very negative logs.
    pub fn exp(self) -> f64 {
        self.0.exp()
    }
}

impl fmt::Display for LogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl From<LogValue> for f64 {
    fn from(v: LogValue) -> f64 {
        v.0
    }
}

/// Sums with a fixed pairwise tree so the result depends only on the input
/// order, never on how the work is split.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().fold(0.0, |acc, &v| acc + v);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// `ln(sum(exp(v)))` for raw log values, shifted by the maximum.
///
/// Empty input, or input made only of `-inf`, gives `-inf`.
pub fn log_sum_exp_f64(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    // -inf terms are dropped rather than summed as zeros so they cannot
    // perturb the reduction tree.
    let shifted: Vec<f64> = values
        .iter()
        .filter(|&&v| v > f64::NEG_INFINITY)
        .map(|&v| (v - max).exp())
        .collect();
    max + pairwise_sum(&shifted).ln()
}

/// Stable `ln(sum(exp(v_i)))`.
pub fn log_sum_exp(values: &[LogValue]) -> LogValue {
    let raw: Vec<f64> = values.iter().map(|v| v.0).collect();
    LogValue(log_sum_exp_f64(&raw))
}

/// `ln(mean(exp(v_i)))`; `-inf` for empty input.
pub fn log_mean_exp(values: &[LogValue]) -> LogValue {
    if values.is_empty() {
        return LogValue::ZERO;
    }
    LogValue(log_sum_exp(values).0 - (values.len() as f64).ln())
}

/// A posterior draw paired with its unnormalized log joint density
/// `log p(theta, x | model)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluatedSample {
    pub theta: Vec<f64>,
    pub log_joint: f64,
}

impl EvaluatedSample {
    pub fn new(theta: Vec<f64>, log_joint: f64) -> Self {
        EvaluatedSample { theta, log_joint }
    }

    pub fn dim(&self) -> usize {
        self.theta.len()
    }
}

/// Validated, order-preserving collection of samples of a common dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    samples: Vec<EvaluatedSample>,
    dim: usize,
}

impl SampleSet {
    /// Validates raw rows, reporting the first offending row (1-based).
    pub fn new(rows: Vec<EvaluatedSample>) -> Result<Self> {
        let first = rows.first().ok_or(Error::EmptySampleSet)?;
        let dim = first.dim();
        if dim == 0 {
            return Err(Error::ZeroDimension);
        }
        for (i, row) in rows.iter().enumerate() {
            let row_no = i + 1;
            if row.dim() != dim {
                return Err(Error::DimensionMismatch {
                    row: row_no,
                    expected: dim,
                    found: row.dim(),
                });
            }
            if let Some(k) = row.theta.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteValue {
                    row: row_no,
                    field: format!("theta_{}", k + 1),
                });
            }
            if !row.log_joint.is_finite() {
                return Err(Error::NonFiniteValue {
                    row: row_no,
                    field: "log_joint".to_string(),
                });
            }
        }
        Ok(SampleSet { samples: rows, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[EvaluatedSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<EvaluatedSample> {
        self.samples
    }
}

/// Free-function form of [`SampleSet::new`].
pub fn validate_sample_set(rows: Vec<EvaluatedSample>) -> Result<SampleSet> {
    SampleSet::new(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lv(v: &[f64]) -> Vec<LogValue> {
        v.iter().map(|&x| LogValue::new(x).unwrap()).collect()
    }

    #[test]
    fn lse_examples() {
        assert_eq!(log_sum_exp(&[]).get(), f64::NEG_INFINITY);
        assert_eq!(log_sum_exp(&lv(&[-7.5])).get(), -7.5);
        assert!((log_sum_exp(&lv(&[-2.0, -3.0])).get() - (-1.686738312481777)).abs() < 1e-12);
    }

    #[test]
    fn lse_all_neg_inf() {
        let v = [LogValue::ZERO, LogValue::ZERO];
        assert!(log_sum_exp(&v).is_zero());
    }

    #[test]
    fn lse_no_overflow() {
        let v = lv(&[1000.0, 1000.0]);
        assert!((log_sum_exp(&v).get() - (1000.0 + 2f64.ln())).abs() < 1e-12);
        let v = lv(&[-1000.0, -1000.0]);
        assert!((log_sum_exp(&v).get() - (-1000.0 + 2f64.ln())).abs() < 1e-12);
    }

    #[test]
    fn log_value_rejects_nan_and_pos_inf() {
        assert!(LogValue::new(f64::NAN).is_none());
        assert!(LogValue::new(f64::INFINITY).is_none());
        assert!(LogValue::new(f64::NEG_INFINITY).unwrap().is_zero());
    }

    #[test]
    fn pairwise_sum_matches_naive_for_integers() {
        let v: Vec<f64> = (1..=1000).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500500.0);
    }

    fn rows(specs: &[(&[f64], f64)]) -> Vec<EvaluatedSample> {
        specs
            .iter()
            .map(|(t, l)| EvaluatedSample::new(t.to_vec(), *l))
            .collect()
    }

    #[test]
    fn validate_ok() {
        let s = validate_sample_set(rows(&[(&[0.0, 1.0], -1.0), (&[2.0, 3.0], -2.0)])).unwrap();
        assert_eq!(s.dim(), 2);
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn validate_dimension_mismatch_names_row() {
        let mut r = vec![EvaluatedSample::new(vec![0.0, 1.0], -1.0); 6];
        r[4] = EvaluatedSample::new(vec![0.0, 1.0, 2.0], -1.0);
        match validate_sample_set(r) {
            Err(Error::DimensionMismatch {
                row,
                expected,
                found,
            }) => {
                assert_eq!((row, expected, found), (5, 2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn validate_non_finite_log_joint() {
        let r = rows(&[(&[0.0, 1.0], -1.0), (&[0.0, 1.0], f64::NAN)]);
        assert!(matches!(
            validate_sample_set(r),
            Err(Error::NonFiniteValue { row: 2, .. })
        ));
        let r = rows(&[(&[0.0], f64::NEG_INFINITY)]);
        assert!(matches!(
            validate_sample_set(r),
            Err(Error::NonFiniteValue { row: 1, .. })
        ));
        let r = rows(&[(&[f64::INFINITY], 0.0)]);
        assert!(matches!(
            validate_sample_set(r),
            Err(Error::NonFiniteValue { row: 1, .. })
        ));
    }

    #[test]
    fn validate_empty() {
        assert_eq!(validate_sample_set(vec![]), Err(Error::EmptySampleSet));
        assert_eq!(
            validate_sample_set(rows(&[(&[], 0.0)])),
            Err(Error::ZeroDimension)
        );
    }
}
