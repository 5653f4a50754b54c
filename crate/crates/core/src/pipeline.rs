//! End-to-end estimation: partition, standardize, tune the bin width, build
//! the histogram, check support, then importance-sample.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::{
    compute_ratios, confidence_interval, estimate_log_marginal, running_trace, ConfidenceInterval,
    EstimateReport, RatioSet, TracePoint, ZERO_RATIO_WARN_FRACTION,
};
use crate::histogram::{
    build_histogram, select_bin_width, ArrogantHistogram, CoverageReport, DEFAULT_COVERAGE_TARGET,
};
use crate::numeric::{EvaluatedSample, SampleSet};
use crate::preprocess::{
    apply_scaling, check_support, compute_scaling, partition_samples, shuffle_samples,
    PartitionPlan, ScalingVector, SupportRanges, DEFAULT_TUNING_COUNT,
};

pub const METHOD_LABEL: &str = "arrogance";
pub const DEFAULT_CONFIDENCE: f64 = 0.95;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub tuning_count: usize,
    pub coverage_target: f64,
    pub confidence: f64,
    pub scale: bool,
    pub shuffle_seed: Option<u64>,
    pub support: Option<SupportRanges>,
    pub m_override: Option<usize>,
    pub trace_stride: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            tuning_count: DEFAULT_TUNING_COUNT,
            coverage_target: DEFAULT_COVERAGE_TARGET,
            confidence: DEFAULT_CONFIDENCE,
            scale: true,
            shuffle_seed: None,
            support: None,
            m_override: None,
            trace_stride: None,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "confidence must lie in (0, 1), got {}",
                self.confidence
            )));
        }
        if !(self.coverage_target > 0.0 && self.coverage_target < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "coverage target must lie in (0, 1), got {}",
                self.coverage_target
            )));
        }
        if self.trace_stride == Some(0) {
            return Err(Error::InvalidArgument(
                "trace stride must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// A tuned histogram in standardized coordinates, plus the transform that
/// maps raw samples into them.
#[derive(Debug, Clone, PartialEq)]
pub struct FittedHistogram {
    pub histogram: ArrogantHistogram,
    pub scaling: ScalingVector,
    pub coverage: CoverageReport,
}

impl FittedHistogram {
    /// Standardizes `hist` and `tuning`, then picks the width and builds.
    pub fn fit(
        hist: &[EvaluatedSample],
        tuning: &[EvaluatedSample],
        scale: bool,
        coverage_target: f64,
    ) -> Result<Self> {
        let dim = hist.first().ok_or(Error::EmptySampleSet)?.dim();
        let scaling = if scale {
            compute_scaling(hist)?
        } else {
            ScalingVector::identity(dim)
        };
        let hist: Vec<_> = hist.iter().map(|s| apply_scaling(s, &scaling)).collect();
        let tuning: Vec<_> = tuning.iter().map(|s| apply_scaling(s, &scaling)).collect();
        let (h, coverage) = select_bin_width(&hist, &tuning, coverage_target)?;
        let histogram = build_histogram(&hist, h)?;
        Ok(FittedHistogram {
            histogram,
            scaling,
            coverage,
        })
    }

    /// Log importance ratios of raw (unscaled) estimation samples.
    pub fn ratios(&self, eval: &[EvaluatedSample]) -> RatioSet {
        let scaled: Vec<EvaluatedSample> = eval
            .iter()
            .map(|s| EvaluatedSample {
                theta: s
                    .theta
                    .iter()
                    .zip(self.scaling.scale())
                    .map(|(t, sc)| t / sc)
                    .collect(),
                log_joint: s.log_joint,
            })
            .collect();
        compute_ratios(&self.histogram, &scaled, self.scaling.log_jacobian())
    }

    pub fn check_support(&self, ranges: &SupportRanges) -> Result<()> {
        if ranges.dim() != self.histogram.dim() {
            return Err(Error::InvalidArgument(format!(
                "support ranges cover {} dimensions, samples have {}",
                ranges.dim(),
                self.histogram.dim()
            )));
        }
        check_support(&self.histogram, &self.scaling, ranges)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub report: EstimateReport,
    pub plan: PartitionPlan,
    pub fitted: FittedHistogram,
    pub ratios: RatioSet,
    pub interval: ConfidenceInterval,
    pub trace: Option<Vec<TracePoint>>,
}

pub fn run(samples: SampleSet, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    let samples = match cfg.shuffle_seed {
        Some(seed) => shuffle_samples(samples, seed),
        None => samples,
    };
    let plan = partition_samples(&samples, cfg.tuning_count, cfg.m_override)?;
    let (hist, tuning, eval) = plan.split(samples.samples());

    let fitted = FittedHistogram::fit(hist, tuning, cfg.scale, cfg.coverage_target)?;
    if let Some(ranges) = &cfg.support {
        fitted.check_support(ranges)?;
    }

    let ratios = fitted.ratios(eval);
    let log_ml = estimate_log_marginal(&ratios)?;
    let interval = confidence_interval(&ratios, cfg.confidence)?;
    let trace = cfg
        .trace_stride
        .map(|stride| running_trace(&ratios, stride))
        .transpose()?;

    let mut warnings = Vec::new();
    let zero_fraction = ratios.zero_fraction();
    if zero_fraction > ZERO_RATIO_WARN_FRACTION {
        warnings.push(format!(
            "{:.1}% of estimation samples fell in empty bins (design point is {:.0}%)",
            100.0 * zero_fraction,
            100.0 * (1.0 - cfg.coverage_target)
        ));
    }
    if interval.one_sided {
        warnings.push("confidence interval is unbounded above; supply more samples".into());
    }
    if interval.degenerate {
        warnings.push("importance ratios have zero variance; interval is degenerate".into());
    }

    let report = EstimateReport {
        log_ml,
        ci_low: interval.low,
        ci_high: (!interval.one_sided).then_some(interval.high),
        confidence: cfg.confidence,
        ci_degenerate: interval.degenerate,
        n_eval: plan.n_eval,
        m_hist: plan.m_hist,
        tuning_count: plan.t_tune,
        bin_width: fitted.histogram.bin_width(),
        occupied_bins: fitted.histogram.occupied_count(),
        coverage: fitted.coverage.fraction,
        zero_ratio_fraction: zero_fraction,
        method: METHOD_LABEL.into(),
        warnings,
    };
    Ok(PipelineOutput {
        report,
        plan,
        fitted,
        ratios,
        interval,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::make_mvn_model;

    #[test]
    fn recovers_planted_normalizer() {
        let m = make_mvn_model(1, vec![2.0], vec![0.25], 3.0).unwrap();
        let out = run(m.generate_set(5000, 1).unwrap(), &PipelineConfig::default()).unwrap();
        let r = &out.report;
        assert!((r.log_ml - 3.0).abs() < 0.1, "{r:?}");
        assert!(r.ci_low <= r.log_ml && r.log_ml <= r.ci_high.unwrap());
        assert_eq!(r.n_eval + r.m_hist + r.tuning_count, 5000);
        assert_eq!(r.method, "arrogance");
        assert!((r.coverage - 0.5).abs() <= 0.1);
    }

    #[test]
    fn insufficient_samples() {
        let m = make_mvn_model(1, vec![0.0], vec![1.0], 0.0).unwrap();
        let err = run(m.generate_set(45, 1).unwrap(), &PipelineConfig::default()).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { .. }));
    }

    #[test]
    fn support_violation_aborts() {
        let m = make_mvn_model(1, vec![0.0], vec![1.0], 0.0).unwrap();
        let cfg = PipelineConfig {
            support: Some(SupportRanges::new(vec![(-0.1, 0.1)]).unwrap()),
            ..Default::default()
        };
        let err = run(m.generate_set(2000, 1).unwrap(), &cfg).unwrap_err();
        assert!(matches!(err, Error::SupportViolation { dim: 0, .. }));
    }

    #[test]
    fn config_validation() {
        let m = make_mvn_model(1, vec![0.0], vec![1.0], 0.0).unwrap();
        let s = m.generate_set(500, 1).unwrap();
        for cfg in [
            PipelineConfig {
                confidence: 1.0,
                ..Default::default()
            },
            PipelineConfig {
                coverage_target: 0.0,
                ..Default::default()
            },
            PipelineConfig {
                trace_stride: Some(0),
                ..Default::default()
            },
        ] {
            assert!(matches!(
                run(s.clone(), &cfg),
                Err(Error::InvalidArgument(_))
            ));
        }
    }

    #[test]
    fn shuffle_changes_partition_but_is_reproducible() {
        let m = make_mvn_model(2, vec![0.0; 2], vec![1.0; 2], 0.0).unwrap();
        let s = m.generate_set(3000, 4).unwrap();
        let cfg = PipelineConfig {
            shuffle_seed: Some(11),
            trace_stride: Some(100),
            ..Default::default()
        };
        let a = run(s.clone(), &cfg).unwrap();
        let b = run(s.clone(), &cfg).unwrap();
        assert_eq!(a.report, b.report);
        assert_eq!(a.trace, b.trace);
        let c = run(s, &PipelineConfig::default()).unwrap();
        assert_ne!(a.report.log_ml, c.report.log_ml);
    }
}
