//! Marginal likelihood estimation from posterior samples by nonparametric
//! ("arrogance") importance sampling.
//!
//! Given draws `theta_i` from a posterior and the unnormalized log joint
//! `ln p(theta_i, x)` at each, the first few draws build a histogram whose
//! bin heights are the smallest sampled density in each bin. The histogram,
//! normalized, is then importance-sampled with the posterior itself as the
//! proposal, which yields an unbiased estimate of `1 / p(x)` and a CLT
//! confidence interval.
//!
//! ```
//! use arrogance::{models::make_mvn_model, pipeline::{run, PipelineConfig}};
//!
//! let model = make_mvn_model(1, vec![0.0], vec![1.0], 2.5).unwrap();
//! let samples = model.generate_set(5_000, 7).unwrap();
//! let out = run(samples, &PipelineConfig::default()).unwrap();
//! assert!((out.report.log_ml - 2.5).abs() < 0.2);
//! ```

pub mod error;
pub mod estimator;
pub mod histogram;
pub mod models;
pub mod numeric;
pub mod pipeline;
pub mod preprocess;

pub use error::{Error, Result};
pub use estimator::{ConfidenceInterval, EstimateReport, RatioSet, TracePoint};
pub use histogram::{ArrogantHistogram, BinKey, BinRecord, CoverageReport};
pub use models::AnalyticModel;
pub use numeric::{log_sum_exp, EvaluatedSample, LogValue, SampleSet};
pub use pipeline::{FittedHistogram, PipelineConfig, PipelineOutput};
pub use preprocess::{PartitionPlan, ScalingVector, SupportRanges};
