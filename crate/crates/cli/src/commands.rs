use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use arrogance::estimator::{harmonic_ratios, running_trace};
use arrogance::pipeline::{self, PipelineConfig};
use arrogance::{SampleSet, SupportRanges};
use clap::Args;

use crate::error::{CliError, Result};
use crate::io::{parse_samples_file, write_samples, SampleFormat};
use crate::params::build_model;
use crate::report::{CompareReport, CompareRow, CompareSummary, ConfigEcho, ReportFile};

#[derive(Debug, Clone, Args)]
pub struct PipelineArgs {
    /// Samples reserved for bin-width tuning
    #[arg(long, default_value_t = 40)]
    pub tuning_count: usize,
    /// Fraction of tuning samples that should land in occupied bins
    #[arg(long, default_value_t = 0.5)]
    pub coverage_target: f64,
    /// Confidence level of the reported interval
    #[arg(long, default_value_t = 0.95)]
    pub confidence: f64,
    /// Skip per-dimension standardization
    #[arg(long)]
    pub no_scale: bool,
    /// Shuffle samples with this seed before partitioning
    #[arg(long)]
    pub shuffle_seed: Option<u64>,
    /// Known positive-density range, as dim:lo:hi (0-based dim; inf/-inf allowed)
    #[arg(long = "support", value_name = "DIM:LO:HI")]
    pub support: Vec<String>,
    /// Number of histogram samples instead of min(0.2N, 2 sqrt N)
    #[arg(long)]
    pub m_override: Option<usize>,
    /// Emit a running estimate every this many estimation samples
    #[arg(long)]
    pub trace_stride: Option<usize>,
}

impl Default for PipelineArgs {
    fn default() -> Self {
        PipelineArgs {
            tuning_count: 40,
            coverage_target: 0.5,
            confidence: 0.95,
            no_scale: false,
            shuffle_seed: None,
            support: Vec::new(),
            m_override: None,
            trace_stride: None,
        }
    }
}

pub fn parse_support_spec(spec: &str) -> Result<(usize, f64, f64)> {
    let bad = || CliError::SupportSpec(spec.to_string());
    let mut parts = spec.splitn(3, ':');
    let dim = parts
        .next()
        .and_then(|d| d.trim().parse().ok())
        .ok_or_else(bad)?;
    let lo = parts
        .next()
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(bad)?;
    let hi = parts
        .next()
        .and_then(|v| v.trim().parse().ok())
        .ok_or_else(bad)?;
    Ok((dim, lo, hi))
}

impl PipelineArgs {
    fn to_config(&self, dim: usize) -> Result<PipelineConfig> {
        let support = if self.support.is_empty() {
            None
        } else {
            let mut ranges = SupportRanges::unbounded(dim);
            for spec in &self.support {
                let (k, lo, hi) = parse_support_spec(spec)?;
                ranges = ranges.with_range(k, lo, hi)?;
            }
            Some(ranges)
        };
        let cfg = PipelineConfig {
            tuning_count: self.tuning_count,
            coverage_target: self.coverage_target,
            confidence: self.confidence,
            scale: !self.no_scale,
            shuffle_seed: self.shuffle_seed,
            support,
            m_override: self.m_override,
            trace_stride: self.trace_stride,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn echo(&self, input: Option<&Path>, format: Option<SampleFormat>) -> ConfigEcho {
        ConfigEcho {
            input: input.map(|p| p.display().to_string()),
            format,
            tuning_count: self.tuning_count,
            coverage_target: self.coverage_target,
            confidence: self.confidence,
            scale: !self.no_scale,
            shuffle_seed: self.shuffle_seed,
            support: self.support.clone(),
            m_override: self.m_override,
            trace_stride: self.trace_stride,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct EstimateArgs {
    /// Sample file (csv or ndjson)
    #[arg(long)]
    pub input: PathBuf,
    /// Report path; stdout when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Input format; inferred from the extension when absent
    #[arg(long, value_enum)]
    pub format: Option<SampleFormat>,
    /// Include one record per occupied bin in the report
    #[arg(long)]
    pub bins: bool,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

/// Runs the full pipeline on a sample set and assembles the report.
pub fn estimate_samples(
    samples: SampleSet,
    args: &PipelineArgs,
    echo: ConfigEcho,
    with_bins: bool,
) -> Result<ReportFile> {
    let cfg = args.to_config(samples.dim())?;
    let out = pipeline::run(samples, &cfg)?;
    let bins = with_bins.then(|| out.fitted.histogram.records());
    Ok(ReportFile::new(out.report, echo, bins, out.trace))
}

pub fn run_estimate(args: &EstimateArgs) -> Result<ReportFile> {
    let format = args
        .format
        .unwrap_or_else(|| SampleFormat::from_path(&args.input));
    let samples = parse_samples_file(&args.input, format)?;
    let echo = args.pipeline.echo(Some(&args.input), Some(format));
    estimate_samples(samples, &args.pipeline, echo, args.bins)
}

#[derive(Debug, Clone, Args)]
pub struct GenerateArgs {
    /// mvn, normal-normal or beta-binomial
    #[arg(long)]
    pub model: String,
    /// Comma-separated key=value model parameters
    #[arg(long, default_value = "")]
    pub model_params: String,
    /// Number of posterior draws
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output path; stdout when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Output format; inferred from the extension when absent
    #[arg(long, value_enum)]
    pub format: Option<SampleFormat>,
}

pub fn run_generate<W: Write>(args: &GenerateArgs, out: W) -> Result<()> {
    let model = build_model(&args.model, &args.model_params)?;
    let format = args.format.unwrap_or_else(|| {
        args.output
            .as_deref()
            .map_or(SampleFormat::Csv, SampleFormat::from_path)
    });
    let samples = model.generate(args.n, args.seed);
    write_samples(out, &samples, format).map_err(|e| {
        CliError::io(
            args.output
                .clone()
                .unwrap_or_else(|| PathBuf::from("<stdout>")),
            e,
        )
    })
}

#[derive(Debug, Clone, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub model: String,
    #[arg(long, default_value = "")]
    pub model_params: String,
    /// Posterior draws per seed
    #[arg(long)]
    pub n: usize,
    /// First seed
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Number of consecutive seeds to run
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[command(flatten)]
    pub pipeline: PipelineArgs,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return f64::NAN;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Arrogance sampling against the harmonic-mean estimator on draws from an
/// analytic model, one pair of rows per seed.
pub fn run_compare(args: &CompareArgs) -> Result<CompareReport> {
    if args.seeds == 0 {
        return Err(arrogance::Error::InvalidArgument("--seeds must be at least 1".into()).into());
    }
    let model = build_model(&args.model, &args.model_params)?;
    let cfg = args.pipeline.to_config(model.dim)?;
    let stride = args
        .pipeline
        .trace_stride
        .unwrap_or_else(|| (args.n / 100).max(1));
    let truth = model.true_log_ml;

    let mut rows = Vec::new();
    let mut wins = 0;
    let mut covered = 0;
    let mut err_a = Vec::new();
    let mut err_h = Vec::new();
    for seed in args.seed..args.seed + args.seeds {
        let samples = model.generate_set(args.n, seed)?;
        let lls: Vec<f64> = samples
            .samples()
            .iter()
            .map(|s| model.log_likelihood(&s.theta))
            .collect();

        let out = pipeline::run(samples, &cfg)?;
        let a = out.report.log_ml;
        let a_trace = running_trace(&out.ratios, stride)?;

        let hme = harmonic_ratios(&lls)?;
        let h = arrogance::estimator::estimate_log_marginal(&hme)?;
        let h_trace = running_trace(&hme, stride)?;

        let (ea, eh) = ((a - truth).abs(), (h - truth).abs());
        wins += usize::from(ea < eh);
        let hi = out.report.ci_high.unwrap_or(f64::INFINITY);
        covered += usize::from(out.report.ci_low <= truth && truth <= hi);
        err_a.push(ea);
        err_h.push(eh);

        rows.push(CompareRow {
            seed,
            estimator: "arrogance".into(),
            log_ml: a,
            ci_low: Some(out.report.ci_low),
            ci_high: out.report.ci_high,
            true_log_ml: truth,
            abs_error: ea,
            trace: a_trace,
        });
        rows.push(CompareRow {
            seed,
            estimator: "harmonic_mean".into(),
            log_ml: h,
            ci_low: None,
            ci_high: None,
            true_log_ml: truth,
            abs_error: eh,
            trace: h_trace,
        });
    }
    let seeds = args.seeds as usize;
    Ok(CompareReport {
        format_version: crate::report::FORMAT_VERSION,
        version: crate::report::TOOL_VERSION.to_string(),
        model: args.model.clone(),
        model_params: args.model_params.clone(),
        n: args.n,
        true_log_ml: truth,
        config: args.pipeline.echo(None, None),
        rows,
        summary: CompareSummary {
            seeds,
            arrogance_wins: wins,
            arrogance_win_fraction: wins as f64 / seeds as f64,
            median_abs_error_arrogance: median(err_a),
            median_abs_error_harmonic_mean: median(err_h),
            arrogance_ci_coverage: covered as f64 / seeds as f64,
        },
    })
}

/// Writes `text` to `path`, or stdout when `path` is `None`.
pub fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => {
            let mut f = File::create(p).map_err(|e| CliError::io(p, e))?;
            writeln!(f, "{text}").map_err(|e| CliError::io(p, e))
        }
        None => {
            let mut out = std::io::stdout().lock();
            writeln!(out, "{text}").map_err(|e| CliError::io("<stdout>", e))
        }
    }
}
