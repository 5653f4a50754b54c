//! The "arrogant" histogram: a sparse cubic-bin histogram whose bin heights
//! are the *minimum* sampled log joint among the points in each bin, rather
//! than a count, normalized to integrate to one.
//!
//! Bins are anchored at the origin of the (standardized) coordinate system:
//! bin `k` along an axis covers `[k h, (k + 1) h)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{log_sum_exp_f64, EvaluatedSample, LogValue};

/// Default fraction of tuning samples that should land in occupied bins.
pub const DEFAULT_COVERAGE_TARGET: f64 = 0.5;
/// Ratio between successive candidate widths in the bin-width search.
pub const WIDTH_GRID_RATIO: f64 = 0.8;
/// Number of candidate widths in the bin-width search.
pub const WIDTH_GRID_LEN: usize = 60;

/// Integer coordinates of a cubic bin.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BinKey(Vec<i64>);

impl BinKey {
    pub fn new(coords: Vec<i64>) -> Self {
        BinKey(coords)
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

/// `floor(theta_k / h)` per coordinate.
pub fn bin_index(theta: &[f64], h: f64) -> BinKey {
    BinKey(theta.iter().map(|&t| (t / h).floor() as i64).collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Bin {
    log_height: f64,
    count: usize,
}

/// One occupied bin, as exposed for diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BinRecord {
    pub coords: Vec<i64>,
    pub log_height: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArrogantHistogram {
    dim: usize,
    bin_width: f64,
    bins: BTreeMap<BinKey, Bin>,
    log_norm: f64,
}

impl ArrogantHistogram {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_width
    }

    /// `ln` of the integral of the unnormalized piecewise-constant density:
    /// `log_sum_exp(heights) + d ln h`.
    pub fn log_norm(&self) -> f64 {
        self.log_norm
    }

    pub fn occupied_count(&self) -> usize {
        self.bins.len()
    }

    pub fn keys(&self) -> impl Iterator<Item = &BinKey> {
        self.bins.keys()
    }

    pub fn bin_log_height(&self, key: &BinKey) -> Option<f64> {
        self.bins.get(key).map(|b| b.log_height)
    }

    pub fn is_occupied(&self, theta: &[f64]) -> bool {
        self.bins.contains_key(&bin_index(theta, self.bin_width))
    }

    /// Normalized log density at `theta`; `-inf` outside occupied bins.
    pub fn query_log_density(&self, theta: &[f64]) -> LogValue {
        match self.bins.get(&bin_index(theta, self.bin_width)) {
            Some(bin) => {
                LogValue::new(bin.log_height - self.log_norm).expect("finite height and normalizer")
            }
            None => LogValue::ZERO,
        }
    }

    /// Per-bin records in key order.
    pub fn records(&self) -> Vec<BinRecord> {
        self.bins
            .iter()
            .map(|(k, b)| BinRecord {
                coords: k.0.clone(),
                log_height: b.log_height,
                count: b.count,
            })
            .collect()
    }

    /// `sum_bins exp(height - log_norm) h^d`; one up to rounding.
    pub fn total_mass(&self) -> f64 {
        let log_vol = self.dim as f64 * self.bin_width.ln();
        self.bins
            .values()
            .map(|b| (b.log_height - self.log_norm + log_vol).exp())
            .sum()
    }
}

/// Builds the histogram from (already standardized) samples with width `h`.
pub fn build_histogram(samples: &[EvaluatedSample], h: f64) -> Result<ArrogantHistogram> {
    let first = samples.first().ok_or(Error::EmptySampleSet)?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "bin width must be positive and finite, got {h}"
        )));
    }
    let dim = first.dim();
    let mut bins: BTreeMap<BinKey, Bin> = BTreeMap::new();
    for s in samples {
        bins.entry(bin_index(&s.theta, h))
            .and_modify(|b| {
                b.log_height = b.log_height.min(s.log_joint);
                b.count += 1;
            })
            .or_insert(Bin {
                log_height: s.log_joint,
                count: 1,
            });
    }
    let heights: Vec<f64> = bins.values().map(|b| b.log_height).collect();
    let log_norm = log_sum_exp_f64(&heights) + dim as f64 * h.ln();
    Ok(ArrogantHistogram {
        dim,
        bin_width: h,
        bins,
        log_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub fraction: f64,
    pub target: f64,
}

/// Fraction of `tuning` samples whose bin is occupied.
pub fn coverage_fraction(
    hist: &ArrogantHistogram,
    tuning: &[EvaluatedSample],
    target: f64,
) -> CoverageReport {
    let hits = tuning.iter().filter(|s| hist.is_occupied(&s.theta)).count();
    CoverageReport {
        fraction: if tuning.is_empty() {
            0.0
        } else {
            hits as f64 / tuning.len() as f64
        },
        target,
    }
}

/// Geometric grid `h_max * ratio^j`, largest first.
pub fn width_grid(h_max: f64, ratio: f64, len: usize) -> Vec<f64> {
    (0..len).map(|j| h_max * ratio.powi(j as i32)).collect()
}

fn largest_range(samples: &[EvaluatedSample]) -> f64 {
    let Some(first) = samples.first() else {
        return 0.0;
    };
    (0..first.dim())
        .map(|k| {
            let (lo, hi) = samples
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
                    (lo.min(s.theta[k]), hi.max(s.theta[k]))
                });
            hi - lo
        })
        .fold(0.0, f64::max)
}

/// Starting width for the search: the widest per-dimension spread of the
/// histogram samples, widened to include the tuning samples if that is zero.
pub fn default_max_width(hist: &[EvaluatedSample], tuning: &[EvaluatedSample]) -> f64 {
    let r = largest_range(hist);
    if r > 0.0 {
        return r;
    }
    let all: Vec<EvaluatedSample> = hist.iter().chain(tuning).cloned().collect();
    let r = largest_range(&all);
    if r > 0.0 {
        r
    } else {
        1.0
    }
}

/// Picks the width whose coverage of the tuning samples is closest to
/// `target`, searching the default geometric grid.
pub fn select_bin_width(
    hist: &[EvaluatedSample],
    tuning: &[EvaluatedSample],
    target: f64,
) -> Result<(f64, CoverageReport)> {
    let grid = width_grid(
        default_max_width(hist, tuning),
        WIDTH_GRID_RATIO,
        WIDTH_GRID_LEN,
    );
    select_bin_width_from(hist, tuning, target, &grid)
}

/// Same as [`select_bin_width`] over caller-supplied candidates. Ties in
/// `|coverage - target|` go to the smaller width.
pub fn select_bin_width_from(
    hist: &[EvaluatedSample],
    tuning: &[EvaluatedSample],
    target: f64,
    candidates: &[f64],
) -> Result<(f64, CoverageReport)> {
    if hist.is_empty() || tuning.is_empty() {
        return Err(Error::EmptySampleSet);
    }
    let mut best: Option<(f64, CoverageReport)> = None;
    let mut any_positive = false;
    for &h in candidates {
        let histogram = build_histogram(hist, h)?;
        let cov = coverage_fraction(&histogram, tuning, target);
        any_positive |= cov.fraction > 0.0;
        let err = (cov.fraction - target).abs();
        let better = match &best {
            None => true,
            Some((bh, bc)) => {
                let berr = (bc.fraction - target).abs();
                err < berr || (err == berr && h < *bh)
            }
        };
        if better {
            best = Some((h, cov));
        }
    }
    match best {
        Some(b) if any_positive => Ok(b),
        Some(_) => Err(Error::NoPositiveCoverage),
        None => Err(Error::InvalidArgument("no candidate bin widths".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pts(v: &[(f64, f64)]) -> Vec<EvaluatedSample> {
        v.iter()
            .map(|&(t, l)| EvaluatedSample::new(vec![t], l))
            .collect()
    }

    #[test]
    fn bin_index_examples() {
        assert_eq!(bin_index(&[0.0], 1.0).coords(), &[0]);
        assert_eq!(bin_index(&[2.5, -1.2], 0.5).coords(), &[5, -3]);
        assert_eq!(bin_index(&[-0.001], 1.0).coords(), &[-1]);
    }

    #[test]
    fn build_example_two_bins() {
        let h = build_histogram(&pts(&[(0.1, -1.0), (0.2, -2.0), (1.5, -3.0)]), 1.0).unwrap();
        assert_eq!(h.occupied_count(), 2);
        assert_eq!(h.bin_log_height(&BinKey::new(vec![0])), Some(-2.0));
        assert_eq!(h.bin_log_height(&BinKey::new(vec![1])), Some(-3.0));
        assert!((h.log_norm() - (-1.686738312481777)).abs() < 1e-12);
        let q = h.query_log_density(&[0.4]).get();
        assert!((q - (-0.31326168751822303)).abs() < 1e-12);
        assert!((h.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn build_single_bin() {
        let h = build_histogram(&pts(&[(0.5, -4.0)]), 1.0).unwrap();
        assert_eq!(h.query_log_density(&[0.7]).get(), 0.0);
        assert!(h.query_log_density(&[1.7]).is_zero());
        // a single bin of width 0.25 has density 4
        let h = build_histogram(&pts(&[(0.1, -4.0)]), 0.25).unwrap();
        assert!((h.query_log_density(&[0.2]).get() - 4f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn build_takes_minimum() {
        let h = build_histogram(&pts(&[(0.1, -1.0), (0.3, -5.0)]), 1.0).unwrap();
        assert_eq!(h.bin_log_height(&BinKey::new(vec![0])), Some(-5.0));
        assert_eq!(h.records()[0].count, 2);
    }

    #[test]
    fn build_rejects_bad_width() {
        assert!(build_histogram(&pts(&[(0.1, -1.0)]), 0.0).is_err());
        assert!(build_histogram(&pts(&[(0.1, -1.0)]), f64::NAN).is_err());
        assert!(build_histogram(&[], 1.0).is_err());
    }

    #[test]
    fn coverage_examples() {
        let hs = pts(&[(0.0, 0.0), (2.2, 0.0)]);
        let h = build_histogram(&hs, 1.0).unwrap();
        assert_eq!(coverage_fraction(&h, &hs, 0.5).fraction, 1.0);

        let h = build_histogram(&pts(&[(0.0, 0.0)]), 1.0).unwrap();
        let c = coverage_fraction(&h, &pts(&[(0.3, 0.0), (5.0, 0.0)]), 0.5);
        assert_eq!(c.fraction, 0.5);
        let c = coverage_fraction(&h, &pts(&[(3.0, 0.0), (5.0, 0.0)]), 0.5);
        assert_eq!(c.fraction, 0.0);
    }

    #[test]
    fn select_identical_sets_picks_smallest() {
        let hs = pts(&[(0.0, 0.0), (0.7, 0.0), (3.1, 0.0)]);
        let (h, c) = select_bin_width(&hs, &hs, 0.5).unwrap();
        let grid = width_grid(
            default_max_width(&hs, &hs),
            WIDTH_GRID_RATIO,
            WIDTH_GRID_LEN,
        );
        assert_eq!(h, *grid.last().unwrap());
        assert_eq!(c.fraction, 1.0);
    }

    #[test]
    fn select_explicit_candidates() {
        let hs = pts(&[(0.0, 0.0)]);
        let ts = pts(&[(0.3, 0.0), (5.0, 0.0)]);
        let (h, c) = select_bin_width_from(&hs, &ts, 0.5, &[1.0, 8.0]).unwrap();
        assert_eq!(h, 1.0);
        assert_eq!(c.fraction, 0.5);
    }

    #[test]
    fn select_target_one_prefers_smallest_full_cover() {
        let hs = pts(&[(0.1, 0.0), (0.6, 0.0)]);
        let ts = pts(&[(0.2, 0.0)]);
        let (h, c) = select_bin_width_from(&hs, &ts, 1.0, &[4.0, 2.0, 1.0, 0.5]).unwrap();
        assert_eq!(c.fraction, 1.0);
        assert_eq!(h, 0.5);
    }

    #[test]
    fn select_no_positive_coverage() {
        let hs = pts(&[(0.0, 0.0), (0.5, 0.0)]);
        let ts = pts(&[(100.0, 0.0)]);
        assert_eq!(
            select_bin_width(&hs, &ts, 0.5),
            Err(Error::NoPositiveCoverage)
        );
    }

    #[test]
    fn default_max_width_fallbacks() {
        assert_eq!(
            default_max_width(&pts(&[(0.0, 0.0)]), &pts(&[(5.0, 0.0)])),
            5.0
        );
        assert_eq!(
            default_max_width(&pts(&[(0.0, 0.0)]), &pts(&[(0.0, 0.0)])),
            1.0
        );
    }

    #[test]
    fn occupancy_not_monotone_for_unnested_widths() {
        // bins anchored at 0: width 1.5 merges both points, width 2 splits them
        let hs = pts(&[(1.9, 0.0), (2.1, 0.0)]);
        assert_eq!(build_histogram(&hs, 1.5).unwrap().occupied_count(), 1);
        assert_eq!(build_histogram(&hs, 2.0).unwrap().occupied_count(), 2);
    }
}
