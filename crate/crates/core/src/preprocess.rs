//! Partitioning, per-dimension standardization and the support guard.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::histogram::ArrogantHistogram;
use crate::numeric::{EvaluatedSample, SampleSet};

/// Default number of samples reserved for bin-width tuning.
pub const DEFAULT_TUNING_COUNT: usize = 40;

/// Split of `N` ordered samples into histogram, tuning and estimation runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionPlan {
    pub m_hist: usize,
    pub t_tune: usize,
    pub n_eval: usize,
}

impl PartitionPlan {
    pub fn total(&self) -> usize {
        self.m_hist + self.t_tune + self.n_eval
    }

    /// Borrow the three contiguous subsets, in input order.
    pub fn split<'a>(
        &self,
        samples: &'a [EvaluatedSample],
    ) -> (
        &'a [EvaluatedSample],
        &'a [EvaluatedSample],
        &'a [EvaluatedSample],
    ) {
        let (hist, rest) = samples.split_at(self.m_hist);
        let (tune, eval) = rest.split_at(self.t_tune);
        (hist, tune, &eval[..self.n_eval])
    }
}

/// Default histogram size: `floor(min(0.2 N, 2 sqrt N))`.
pub fn default_histogram_count(total: usize) -> usize {
    let n = total as f64;
    (0.2 * n).min(2.0 * n.sqrt()).floor() as usize
}

pub fn partition_samples(
    samples: &SampleSet,
    t_tune: usize,
    m_override: Option<usize>,
) -> Result<PartitionPlan> {
    if samples.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    if t_tune == 0 {
        return Err(Error::InvalidArgument(
            "tuning count must be at least 1".into(),
        ));
    }
    let total = samples.len();
    let m_hist = m_override.unwrap_or_else(|| default_histogram_count(total));
    let insufficient = || Error::InsufficientSamples {
        total,
        m_hist,
        tuning: t_tune,
        n_eval: total.saturating_sub(m_hist + t_tune),
    };
    if m_hist == 0 {
        return Err(insufficient());
    }
    match total.checked_sub(m_hist + t_tune) {
        Some(n_eval) if n_eval >= 2 => Ok(PartitionPlan {
            m_hist,
            t_tune,
            n_eval,
        }),
        _ => Err(insufficient()),
    }
}

/// Seeded Fisher-Yates shuffle, for callers whose chains are autocorrelated.
pub fn shuffle_samples(samples: SampleSet, seed: u64) -> SampleSet {
    let mut rows = samples.into_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rows.shuffle(&mut rng);
    SampleSet::new(rows).expect("shuffling preserves validity")
}

/// Per-dimension divisors and the log Jacobian `sum(ln scale_k)` that keeps
/// the transformed density correctly normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingVector {
    scale: Vec<f64>,
    log_jacobian: f64,
}

impl ScalingVector {
    pub fn new(scale: Vec<f64>) -> Result<Self> {
        if let Some(k) = scale.iter().position(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(Error::DegenerateDimension { dim: k });
        }
        let log_jacobian = scale.iter().map(|s| s.ln()).sum();
        Ok(ScalingVector {
            scale,
            log_jacobian,
        })
    }

    pub fn identity(dim: usize) -> Self {
        ScalingVector {
            scale: vec![1.0; dim],
            log_jacobian: 0.0,
        }
    }

    pub fn scale(&self) -> &[f64] {
        &self.scale
    }

    pub fn log_jacobian(&self) -> f64 {
        self.log_jacobian
    }

    pub fn dim(&self) -> usize {
        self.scale.len()
    }
}

/// Sample standard deviation (denominator `m - 1`) of each coordinate.
pub fn compute_scaling(hist_samples: &[EvaluatedSample]) -> Result<ScalingVector> {
    if hist_samples.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: hist_samples.len(),
        });
    }
    let dim = hist_samples[0].dim();
    let m = hist_samples.len() as f64;
    let scale = (0..dim)
        .map(|k| {
            let mean = hist_samples.iter().map(|s| s.theta[k]).sum::<f64>() / m;
            let ss: f64 = hist_samples
                .iter()
                .map(|s| (s.theta[k] - mean).powi(2))
                .sum();
            (ss / (m - 1.0)).sqrt()
        })
        .collect::<Vec<_>>();
    if let Some(k) = scale.iter().position(|&s| s == 0.0) {
        return Err(Error::DegenerateDimension { dim: k });
    }
    ScalingVector::new(scale)
}

/// Maps `theta` to `theta / scale` and adds the log Jacobian, so the
/// normalizing constant of the transformed density is unchanged.
pub fn apply_scaling(sample: &EvaluatedSample, sc: &ScalingVector) -> EvaluatedSample {
    debug_assert_eq!(sample.dim(), sc.dim());
    EvaluatedSample {
        theta: sample
            .theta
            .iter()
            .zip(&sc.scale)
            .map(|(t, s)| t / s)
            .collect(),
        log_joint: sample.log_joint + sc.log_jacobian,
    }
}

/// Inverse of [`apply_scaling`].
pub fn unapply_scaling(sample: &EvaluatedSample, sc: &ScalingVector) -> EvaluatedSample {
    EvaluatedSample {
        theta: sample
            .theta
            .iter()
            .zip(&sc.scale)
            .map(|(t, s)| t * s)
            .collect(),
        log_joint: sample.log_joint - sc.log_jacobian,
    }
}

/// Per-dimension closed intervals (in original parameter units) on which the
/// posterior density is known to be positive.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportRanges {
    ranges: Vec<(f64, f64)>,
}

impl SupportRanges {
    pub fn unbounded(dim: usize) -> Self {
        SupportRanges {
            ranges: vec![(f64::NEG_INFINITY, f64::INFINITY); dim],
        }
    }

    pub fn new(ranges: Vec<(f64, f64)>) -> Result<Self> {
        for (k, &(lo, hi)) in ranges.iter().enumerate() {
            if lo.is_nan() || hi.is_nan() || lo >= hi {
                return Err(Error::InvalidArgument(format!(
                    "support range for dimension {k} must satisfy lo < hi (got [{lo}, {hi}])"
                )));
            }
        }
        Ok(SupportRanges { ranges })
    }

    /// Restricts one dimension, leaving the others untouched.
    pub fn with_range(mut self, dim: usize, lo: f64, hi: f64) -> Result<Self> {
        if dim >= self.ranges.len() {
            return Err(Error::InvalidArgument(format!(
                "support dimension {dim} out of range for d={}",
                self.ranges.len()
            )));
        }
        if lo.is_nan() || hi.is_nan() || lo >= hi {
            return Err(Error::InvalidArgument(format!(
                "support range for dimension {dim} must satisfy lo < hi (got [{lo}, {hi}])"
            )));
        }
        self.ranges[dim] = (lo, hi);
        Ok(self)
    }

    pub fn ranges(&self) -> &[(f64, f64)] {
        &self.ranges
    }

    pub fn dim(&self) -> usize {
        self.ranges.len()
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        theta
            .iter()
            .zip(&self.ranges)
            .all(|(&t, &(lo, hi))| lo <= t && t <= hi)
    }
}

/// Every occupied bin, mapped back to original units, must lie inside the
/// declared ranges. Bins are visited in key order; the first offender wins.
pub fn check_support(
    hist: &ArrogantHistogram,
    sc: &ScalingVector,
    ranges: &SupportRanges,
) -> Result<()> {
    let h = hist.bin_width();
    for key in hist.keys() {
        for (k, &c) in key.coords().iter().enumerate() {
            let Some(&(lo, hi)) = ranges.ranges().get(k) else {
                continue;
            };
            let s = sc.scale()[k];
            let left = c as f64 * h * s;
            let right = (c + 1) as f64 * h * s;
            if left < lo || right > hi {
                return Err(Error::SupportViolation {
                    bin: key.coords().to_vec(),
                    dim: k,
                });
            }
        }
    }
    Ok(())
}
