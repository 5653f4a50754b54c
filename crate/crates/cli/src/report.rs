//! JSON documents emitted by `estimate` and `compare`.
//!
//! Non-finite numbers never appear: an unbounded upper interval end is
//! written as `"ci_high": null` with `"ci_high_unbounded": true`.

use arrogance::{BinRecord, EstimateReport, TracePoint};
use serde::{Deserialize, Serialize};

use crate::io::SampleFormat;

pub const FORMAT_VERSION: u32 = 1;
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

/// Echo of the settings that produced a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: Option<String>,
    pub format: Option<SampleFormat>,
    pub tuning_count: usize,
    pub coverage_target: f64,
    pub confidence: f64,
    pub scale: bool,
    pub shuffle_seed: Option<u64>,
    /// Declared ranges as `dim:lo:hi` strings, in the order given.
    pub support: Vec<String>,
    pub m_override: Option<usize>,
    pub trace_stride: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub format_version: u32,
    pub version: String,
    pub log_ml: f64,
    pub ci_low: f64,
    pub ci_high: Option<f64>,
    pub ci_high_unbounded: bool,
    pub ci_degenerate: bool,
    pub confidence: f64,
    pub n_eval: usize,
    pub m_hist: usize,
    pub tuning_count: usize,
    pub bin_width: f64,
    pub occupied_bins: usize,
    pub coverage: f64,
    pub zero_ratio_fraction: f64,
    pub method: String,
    pub warnings: Vec<String>,
    pub config: ConfigEcho,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<Vec<BinRecord>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TracePoint>>,
}

impl ReportFile {
    pub fn new(
        report: EstimateReport,
        config: ConfigEcho,
        bins: Option<Vec<BinRecord>>,
        trace: Option<Vec<TracePoint>>,
    ) -> Self {
        ReportFile {
            format_version: FORMAT_VERSION,
            version: TOOL_VERSION.to_string(),
            log_ml: report.log_ml,
            ci_low: report.ci_low,
            ci_high_unbounded: report.ci_high.is_none(),
            ci_high: report.ci_high,
            ci_degenerate: report.ci_degenerate,
            confidence: report.confidence,
            n_eval: report.n_eval,
            m_hist: report.m_hist,
            tuning_count: report.tuning_count,
            bin_width: report.bin_width,
            occupied_bins: report.occupied_bins,
            coverage: report.coverage,
            zero_ratio_fraction: report.zero_ratio_fraction,
            method: report.method,
            warnings: report.warnings,
            config,
            bins,
            trace,
        }
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(self)
    }

    pub fn from_json(s: &str) -> serde_json::Result<Self> {
        serde_json::from_str(s)
    }
}

/// One estimator's result for one seed in a comparison run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub seed: u64,
    pub estimator: String,
    pub log_ml: f64,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
    pub true_log_ml: f64,
    pub abs_error: f64,
    pub trace: Vec<TracePoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareSummary {
    pub seeds: usize,
    /// Seeds where the arrogance estimate has strictly smaller absolute error.
    pub arrogance_wins: usize,
    pub arrogance_win_fraction: f64,
    pub median_abs_error_arrogance: f64,
    pub median_abs_error_harmonic_mean: f64,
    /// Fraction of seeds whose arrogance interval contains the true value.
    pub arrogance_ci_coverage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub format_version: u32,
    pub version: String,
    pub model: String,
    pub model_params: String,
    pub n: usize,
    pub true_log_ml: f64,
    pub config: ConfigEcho,
    pub rows: Vec<CompareRow>,
    pub summary: CompareSummary,
}
