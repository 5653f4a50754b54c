//! Importance-sampling estimate of the marginal likelihood with the
//! histogram as target and the posterior as proposal, plus the harmonic-mean
//! baseline.
//!
//! With `f` the normalized histogram and `p~` the unnormalized posterior,
//! `S = mean(f(theta_i) / p~(theta_i))` is an unbiased estimate of
//! `1 / p(x)`. Everything below works with `ln r_i = ln f - ln p~`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::histogram::ArrogantHistogram;
use crate::numeric::{log_sum_exp, pairwise_sum, EvaluatedSample, LogValue};

/// Zero-ratio fraction above which a report carries a warning.
pub const ZERO_RATIO_WARN_FRACTION: f64 = 0.75;

#[derive(Debug, Clone, PartialEq)]
pub struct RatioSet {
    log_ratios: Vec<LogValue>,
    zero_count: usize,
}

impl RatioSet {
    pub fn from_log_ratios(log_ratios: Vec<LogValue>) -> Self {
        let zero_count = log_ratios.iter().filter(|r| r.is_zero()).count();
        RatioSet {
            log_ratios,
            zero_count,
        }
    }

    /// Panics on NaN or `+inf`.
    pub fn from_f64(values: &[f64]) -> Self {
        Self::from_log_ratios(
            values
                .iter()
                .map(|&v| LogValue::new(v).expect("log ratio must not be NaN or +inf"))
                .collect(),
        )
    }

    pub fn log_ratios(&self) -> &[LogValue] {
        &self.log_ratios
    }

    pub fn len(&self) -> usize {
        self.log_ratios.len()
    }

    pub fn is_empty(&self) -> bool {
        self.log_ratios.is_empty()
    }

    pub fn zero_count(&self) -> usize {
        self.zero_count
    }

    pub fn zero_fraction(&self) -> f64 {
        if self.log_ratios.is_empty() {
            0.0
        } else {
            self.zero_count as f64 / self.log_ratios.len() as f64
        }
    }

    fn max_log_ratio(&self) -> f64 {
        self.log_ratios
            .iter()
            .map(|r| r.get())
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

/// `ln r_i = ln f(theta_i) - (log_joint_i + log_jacobian)`.
///
/// `eval` must already be in the histogram's coordinates. Samples in empty
/// bins give `-inf` and still count towards `n`.
pub fn compute_ratios(
    hist: &ArrogantHistogram,
    eval: &[EvaluatedSample],
    log_jacobian: f64,
) -> RatioSet {
    let log_ratios = eval
        .iter()
        .map(|s| {
            let q = hist.query_log_density(&s.theta);
            if q.is_zero() {
                LogValue::ZERO
            } else {
                LogValue::new(q.get() - (s.log_joint + log_jacobian))
                    .expect("finite density and log joint")
            }
        })
        .collect();
    RatioSet::from_log_ratios(log_ratios)
}

/// `-ln(mean(r_i))`.
pub fn estimate_log_marginal(r: &RatioSet) -> Result<f64> {
    if r.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if r.zero_count == r.len() {
        return Err(Error::AllRatiosZero);
    }
    Ok(-(log_sum_exp(&r.log_ratios).get() - (r.len() as f64).ln()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub low: f64,
    /// `+inf` when `one_sided` is set.
    pub high: f64,
    pub level: f64,
    /// The lower end of the interval on `S` reached zero, so `high` is unbounded.
    pub one_sided: bool,
    /// Zero sample variance; the interval collapses to a point.
    pub degenerate: bool,
}

/// Mean and sample standard deviation of `exp(ln r_i - shift)`, with
/// `shift` the largest log ratio.
struct ShiftedMoments {
    shift: f64,
    mean: f64,
    sd: f64,
}

fn shifted_moments(r: &RatioSet) -> Result<ShiftedMoments> {
    let n = r.len();
    if n < 2 {
        return Err(Error::TooFewSamples { needed: 2, got: n });
    }
    if r.zero_count == n {
        return Err(Error::AllRatiosZero);
    }
    let shift = r.max_log_ratio();
    let w: Vec<f64> = r
        .log_ratios
        .iter()
        .map(|l| (l.get() - shift).exp())
        .collect();
    let nf = n as f64;
    let mean = pairwise_sum(&w) / nf;
    let sq: Vec<f64> = w.iter().map(|&x| (x - mean) * (x - mean)).collect();
    let sd = (pairwise_sum(&sq) / (nf - 1.0)).sqrt();
    Ok(ShiftedMoments { shift, mean, sd })
}

/// Two-sided normal quantile for a confidence level in (0, 1).
pub fn normal_quantile(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let std_normal = Normal::standard();
    Ok(std_normal.inverse_cdf(0.5 + level / 2.0))
}

/// CLT interval on `S = 1 / p(x)`, mapped endpoint-wise onto the log
/// marginal likelihood scale.
///
/// All arithmetic runs on `exp(ln r_i - max)` so ratios spanning many orders
/// of magnitude neither overflow nor lose the mean.
pub fn confidence_interval(r: &RatioSet, level: f64) -> Result<ConfidenceInterval> {
    let z = normal_quantile(level)?;
    let ShiftedMoments { shift, mean, sd } = shifted_moments(r)?;
    let nf = r.len() as f64;
    let half = z * sd / nf.sqrt();

    let log_ml = estimate_log_marginal(r)?;
    let low = (-(shift + (mean + half).ln())).min(log_ml);
    let upper_s = mean - half;
    let (high, one_sided) = if upper_s > 0.0 {
        ((-(shift + upper_s.ln())).max(log_ml), false)
    } else {
        (f64::INFINITY, true)
    };
    Ok(ConfidenceInterval {
        low,
        high,
        level,
        one_sided,
        degenerate: sd == 0.0,
    })
}

/// Relative half-width `z sd / (sqrt(n) S)` of the interval on `S`.
pub fn relative_half_width(r: &RatioSet, level: f64) -> Result<f64> {
    let z = normal_quantile(level)?;
    let ShiftedMoments { mean, sd, .. } = shifted_moments(r)?;
    let nf = r.len() as f64;
    Ok(z * sd / (nf.sqrt() * mean))
}

/// Harmonic mean of the likelihoods: `-ln(mean(exp(-ll_i)))`.
///
/// Takes `ln p(x | theta_i)`, not the log joint.
pub fn harmonic_mean_estimate(log_likelihoods: &[f64]) -> Result<f64> {
    estimate_log_marginal(&harmonic_ratios(log_likelihoods)?)
}

/// The harmonic-mean estimator as a ratio set, `ln r_i = -ll_i`, so it can
/// share the trace machinery.
pub fn harmonic_ratios(log_likelihoods: &[f64]) -> Result<RatioSet> {
    if log_likelihoods.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let mut out = Vec::with_capacity(log_likelihoods.len());
    for (i, &ll) in log_likelihoods.iter().enumerate() {
        match LogValue::new(-ll) {
            Some(v) if ll.is_finite() => out.push(v),
            _ => {
                return Err(Error::NonFiniteValue {
                    row: i + 1,
                    field: "log_likelihood".into(),
                })
            }
        }
    }
    Ok(RatioSet::from_log_ratios(out))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TracePoint {
    pub k: usize,
    /// `None` while every ratio seen so far is zero.
    pub running_log_ml: Option<f64>,
}

/// Prefix estimates at `k = stride, 2 stride, ...`, always ending at `n`.
pub fn running_trace(r: &RatioSet, stride: usize) -> Result<Vec<TracePoint>> {
    if stride == 0 {
        return Err(Error::InvalidArgument(
            "trace stride must be at least 1".into(),
        ));
    }
    let mut out = Vec::with_capacity(r.len() / stride + 1);
    // running ln(sum r) carried as (max, sum of exp(l - max))
    let mut max = f64::NEG_INFINITY;
    let mut acc = 0.0f64;
    for (i, l) in r.log_ratios.iter().enumerate() {
        let l = l.get();
        if l > f64::NEG_INFINITY {
            if l > max {
                acc = acc * (max - l).exp() + 1.0;
                max = l;
            } else {
                acc += (l - max).exp();
            }
        }
        let k = i + 1;
        if k % stride == 0 || k == r.len() {
            let running_log_ml = if max == f64::NEG_INFINITY {
                None
            } else {
                Some(-(max + acc.ln() - (k as f64).ln()))
            };
            out.push(TracePoint { k, running_log_ml });
        }
    }
    Ok(out)
}

/// Everything a caller needs to judge an estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub log_ml: f64,
    pub ci_low: f64,
    /// `None` when the interval is one-sided (unbounded above).
    pub ci_high: Option<f64>,
    pub confidence: f64,
    pub ci_degenerate: bool,
    pub n_eval: usize,
    pub m_hist: usize,
    pub tuning_count: usize,
    pub bin_width: f64,
    pub occupied_bins: usize,
    pub coverage: f64,
    pub zero_ratio_fraction: f64,
    pub method: String,
    pub warnings: Vec<String>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::build_histogram;

    const LN2: f64 = std::f64::consts::LN_2;

    #[test]
    fn ratios_single_bin() {
        let h = build_histogram(&[EvaluatedSample::new(vec![0.5], 0.0)], 1.0).unwrap();
        let eval = [
            EvaluatedSample::new(vec![0.2], LN2),
            EvaluatedSample::new(vec![3.0], LN2),
        ];
        let r = compute_ratios(&h, &eval, 0.0);
        assert!((r.log_ratios()[0].get() + LN2).abs() < 1e-15);
        assert!(r.log_ratios()[1].is_zero());
        assert_eq!(r.zero_count(), 1);
        let shifted = compute_ratios(&h, &eval, LN2);
        assert!((shifted.log_ratios()[0].get() - (r.log_ratios()[0].get() - LN2)).abs() < 1e-15);
    }

    #[test]
    fn estimate_examples() {
        let r = RatioSet::from_f64(&[-LN2; 10]);
        assert!((estimate_log_marginal(&r).unwrap() - LN2).abs() < 1e-12);

        let r = RatioSet::from_f64(&[-LN2, f64::NEG_INFINITY]);
        assert!((estimate_log_marginal(&r).unwrap() - 4f64.ln()).abs() < 1e-12);

        let r = RatioSet::from_f64(&[f64::NEG_INFINITY; 3]);
        assert_eq!(estimate_log_marginal(&r), Err(Error::AllRatiosZero));
    }

    #[test]
    fn ci_degenerate() {
        let r = RatioSet::from_f64(&[-LN2; 3]);
        let ci = confidence_interval(&r, 0.95).unwrap();
        assert!(ci.degenerate);
        assert!(!ci.one_sided);
        assert!((ci.low - LN2).abs() < 1e-12 && (ci.high - LN2).abs() < 1e-12);
    }

    #[test]
    fn ci_two_ratios() {
        // scipy: S=0.5, sd=0.1414214, z=1.959964, half=0.1959964
        let r = RatioSet::from_f64(&[0.4f64.ln(), 0.6f64.ln()]);
        let ci = confidence_interval(&r, 0.95).unwrap();
        assert!((ci.low - 0.3624107932961557).abs() < 1e-9, "{}", ci.low);
        assert!((ci.high - 1.1907157304553206).abs() < 1e-9, "{}", ci.high);
        assert!(!ci.degenerate && !ci.one_sided);
        let rel = relative_half_width(&r, 0.95).unwrap();
        assert!((rel - 0.19599639845400532 / 0.5).abs() < 1e-12);
    }

    #[test]
    fn ci_one_sided_when_interval_crosses_zero() {
        let r = RatioSet::from_f64(&[0.0, f64::NEG_INFINITY, f64::NEG_INFINITY]);
        let ci = confidence_interval(&r, 0.95).unwrap();
        assert!(ci.one_sided);
        assert_eq!(ci.high, f64::INFINITY);
        assert!(ci.low <= estimate_log_marginal(&r).unwrap());
    }

    #[test]
    fn ci_errors() {
        let r = RatioSet::from_f64(&[0.0]);
        assert_eq!(
            confidence_interval(&r, 0.95),
            Err(Error::TooFewSamples { needed: 2, got: 1 })
        );
        let r = RatioSet::from_f64(&[0.0, 0.0]);
        assert!(confidence_interval(&r, 1.0).is_err());
        assert!(confidence_interval(&r, 0.0).is_err());
    }

    #[test]
    fn ci_survives_huge_magnitudes() {
        let r = RatioSet::from_f64(&[-2000.0, -2001.0, -1999.5]);
        let ci = confidence_interval(&r, 0.95).unwrap();
        let est = estimate_log_marginal(&r).unwrap();
        assert!(ci.low.is_finite() && ci.low <= est && est <= ci.high);
    }

    #[test]
    fn hme_examples() {
        assert!((harmonic_mean_estimate(&[-3.5; 4]).unwrap() + 3.5).abs() < 1e-12);
        assert!((harmonic_mean_estimate(&[0.0, LN2]).unwrap() - 0.2876820724517809).abs() < 1e-12);
        assert_eq!(harmonic_mean_estimate(&[-7.0]).unwrap(), -7.0);
        assert!(harmonic_mean_estimate(&[]).is_err());
        assert!(harmonic_mean_estimate(&[f64::NAN]).is_err());
    }

    #[test]
    fn trace_examples() {
        let r = RatioSet::from_f64(&[-1.0; 7]);
        let t = running_trace(&r, 2).unwrap();
        assert_eq!(t.iter().map(|p| p.k).collect::<Vec<_>>(), vec![2, 4, 6, 7]);
        assert!(t
            .iter()
            .all(|p| (p.running_log_ml.unwrap() - 1.0).abs() < 1e-12));

        let r = RatioSet::from_f64(&[-0.3, -1.2, 0.4, f64::NEG_INFINITY]);
        let t = running_trace(&r, 4).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0].running_log_ml.unwrap() - estimate_log_marginal(&r).unwrap()).abs() < 1e-12);

        let r = RatioSet::from_f64(&[-LN2, f64::NEG_INFINITY]);
        let t = running_trace(&r, 1).unwrap();
        assert!((t[0].running_log_ml.unwrap() - LN2).abs() < 1e-12);
        assert!((t[1].running_log_ml.unwrap() - 4f64.ln()).abs() < 1e-12);

        let r = RatioSet::from_f64(&[f64::NEG_INFINITY, 0.0]);
        let t = running_trace(&r, 1).unwrap();
        assert_eq!(t[0].running_log_ml, None);
        assert!(running_trace(&r, 0).is_err());
    }

    #[test]
    fn appending_zero_raises_estimate() {
        let base = [-0.3, -1.2, 0.4];
        let a = estimate_log_marginal(&RatioSet::from_f64(&base)).unwrap();
        let mut more = base.to_vec();
        more.push(f64::NEG_INFINITY);
        let b = estimate_log_marginal(&RatioSet::from_f64(&more)).unwrap();
        assert!(b > a);
    }
}
