//! Analytic test models with closed-form normalizers.
//!
//! Each model can draw exact posterior samples under a fixed seed and
//! evaluate the unnormalized log joint and the log likelihood, so estimates
//! can be scored against a known truth.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};
use crate::numeric::{EvaluatedSample, SampleSet};
use crate::preprocess::SupportRanges;

/// Margin kept away from the edges of (0, 1) in the beta-binomial support.
pub const BETA_SUPPORT_EPSILON: f64 = 1e-6;

const LN_2PI: f64 = 1.8378770664093453;

fn normal_log_pdf(x: f64, mean: f64, var: f64) -> f64 {
    -0.5 * (LN_2PI + var.ln() + (x - mean).powi(2) / var)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelKind {
    /// Independent normal coordinates, scaled so the normalizer is `exp(planted)`.
    Mvn {
        mean: Vec<f64>,
        var: Vec<f64>,
        planted_log_ml: f64,
    },
    /// `theta ~ N(0, tau^2)`, `x_i | theta ~ N(theta, sigma^2)`.
    NormalNormal {
        prior_sd: f64,
        noise_sd: f64,
        observations: Vec<f64>,
    },
    /// `theta ~ Beta(alpha, beta)`, `k | theta ~ Binomial(trials, theta)`.
    BetaBinomial {
        alpha: f64,
        beta: f64,
        trials: u64,
        successes: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalyticModel {
    pub name: String,
    pub dim: usize,
    pub true_log_ml: f64,
    pub support: SupportRanges,
    pub kind: ModelKind,
}

pub fn make_mvn_model(
    dim: usize,
    mean: Vec<f64>,
    var: Vec<f64>,
    planted_log_ml: f64,
) -> Result<AnalyticModel> {
    if dim == 0 || mean.len() != dim || var.len() != dim {
        return Err(Error::InvalidArgument(format!(
            "mvn: dim={dim} but mean has {} and var has {} entries",
            mean.len(),
            var.len()
        )));
    }
    if var.iter().any(|v| !(v.is_finite() && *v > 0.0)) || mean.iter().any(|m| !m.is_finite()) {
        return Err(Error::InvalidArgument(
            "mvn: variances must be positive and finite, means finite".into(),
        ));
    }
    if !planted_log_ml.is_finite() {
        return Err(Error::InvalidArgument(
            "mvn: planted log_ml must be finite".into(),
        ));
    }
    Ok(AnalyticModel {
        name: "mvn".into(),
        dim,
        true_log_ml: planted_log_ml,
        support: SupportRanges::unbounded(dim),
        kind: ModelKind::Mvn {
            mean,
            var,
            planted_log_ml,
        },
    })
}

/// Closed-form marginal of `n` observations: `x ~ N(0, sigma^2 I + tau^2 11')`.
pub fn normal_normal_log_ml(prior_sd: f64, noise_sd: f64, obs: &[f64]) -> f64 {
    let n = obs.len() as f64;
    let s2 = noise_sd * noise_sd;
    let t2 = prior_sd * prior_sd;
    let sum: f64 = obs.iter().sum();
    let sum_sq: f64 = obs.iter().map(|x| x * x).sum();
    -0.5 * n * (2.0 * PI * s2).ln()
        - 0.5 * (1.0 + n * t2 / s2).ln()
        - (sum_sq - t2 * sum * sum / (s2 + n * t2)) / (2.0 * s2)
}

pub fn make_normal_normal_model(
    prior_sd: f64,
    noise_sd: f64,
    observations: Vec<f64>,
) -> Result<AnalyticModel> {
    if !(prior_sd.is_finite() && prior_sd > 0.0 && noise_sd.is_finite() && noise_sd > 0.0) {
        return Err(Error::InvalidArgument(
            "normal-normal: standard deviations must be positive".into(),
        ));
    }
    if observations.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument(
            "normal-normal: observations must be finite".into(),
        ));
    }
    Ok(AnalyticModel {
        name: "normal-normal".into(),
        dim: 1,
        true_log_ml: normal_normal_log_ml(prior_sd, noise_sd, &observations),
        support: SupportRanges::unbounded(1),
        kind: ModelKind::NormalNormal {
            prior_sd,
            noise_sd,
            observations,
        },
    })
}

pub fn beta_binomial_log_ml(alpha: f64, beta: f64, trials: u64, successes: u64) -> f64 {
    let (n, k) = (trials as f64, successes as f64);
    ln_binomial(trials, successes) + ln_beta(k + alpha, n - k + beta) - ln_beta(alpha, beta)
}

pub fn make_beta_binomial_model(
    alpha: f64,
    beta: f64,
    trials: u64,
    successes: u64,
) -> Result<AnalyticModel> {
    if !(alpha.is_finite() && alpha > 0.0 && beta.is_finite() && beta > 0.0) {
        return Err(Error::InvalidArgument(
            "beta-binomial: alpha and beta must be positive".into(),
        ));
    }
    if successes > trials {
        return Err(Error::InvalidArgument(
            "beta-binomial: successes cannot exceed trials".into(),
        ));
    }
    Ok(AnalyticModel {
        name: "beta-binomial".into(),
        dim: 1,
        true_log_ml: beta_binomial_log_ml(alpha, beta, trials, successes),
        support: SupportRanges::new(vec![(BETA_SUPPORT_EPSILON, 1.0 - BETA_SUPPORT_EPSILON)])?,
        kind: ModelKind::BetaBinomial {
            alpha,
            beta,
            trials,
            successes,
        },
    })
}

impl AnalyticModel {
    /// Unnormalized log posterior `ln p(theta, x)`.
    pub fn log_joint(&self, theta: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::Mvn {
                mean,
                var,
                planted_log_ml,
            } => {
                planted_log_ml
                    + theta
                        .iter()
                        .zip(mean.iter().zip(var))
                        .map(|(&t, (&m, &v))| normal_log_pdf(t, m, v))
                        .sum::<f64>()
            }
            ModelKind::NormalNormal { prior_sd, .. } => {
                normal_log_pdf(theta[0], 0.0, prior_sd * prior_sd) + self.log_likelihood(theta)
            }
            ModelKind::BetaBinomial { alpha, beta, .. } => {
                let t = theta[0];
                if !(t > 0.0 && t < 1.0) {
                    return f64::NEG_INFINITY;
                }
                let log_prior =
                    (alpha - 1.0) * t.ln() + (beta - 1.0) * (-t).ln_1p() - ln_beta(*alpha, *beta);
                log_prior + self.log_likelihood(theta)
            }
        }
    }

    /// `ln p(x | theta)`. The mvn model has no separate prior, so its
    /// likelihood is the joint itself.
    pub fn log_likelihood(&self, theta: &[f64]) -> f64 {
        match &self.kind {
            ModelKind::Mvn { .. } => self.log_joint(theta),
            ModelKind::NormalNormal {
                noise_sd,
                observations,
                ..
            } => {
                let v = noise_sd * noise_sd;
                observations
                    .iter()
                    .map(|&x| normal_log_pdf(x, theta[0], v))
                    .sum()
            }
            ModelKind::BetaBinomial {
                trials, successes, ..
            } => {
                let t = theta[0];
                if !(t > 0.0 && t < 1.0) {
                    return f64::NEG_INFINITY;
                }
                let (n, k) = (*trials as f64, *successes as f64);
                ln_binomial(*trials, *successes) + k * t.ln() + (n - k) * (-t).ln_1p()
            }
        }
    }

    /// Exact posterior draws, deterministic in `seed`.
    pub fn sampler(&self, seed: u64) -> PosteriorSampler {
        let draw = match &self.kind {
            ModelKind::Mvn { mean, var, .. } => Draw::Normal(
                mean.iter()
                    .zip(var)
                    .map(|(&m, &v)| Normal::new(m, v.sqrt()).expect("validated variance"))
                    .collect(),
            ),
            ModelKind::NormalNormal {
                prior_sd,
                noise_sd,
                observations,
            } => {
                let precision =
                    1.0 / (prior_sd * prior_sd) + observations.len() as f64 / (noise_sd * noise_sd);
                let post_mean =
                    observations.iter().sum::<f64>() / (noise_sd * noise_sd) / precision;
                Draw::Normal(vec![
                    Normal::new(post_mean, precision.recip().sqrt()).expect("positive sd")
                ])
            }
            ModelKind::BetaBinomial {
                alpha,
                beta,
                trials,
                successes,
            } => {
                let (n, k) = (*trials as f64, *successes as f64);
                Draw::Beta(Beta::new(k + alpha, n - k + beta).expect("positive shape"))
            }
        };
        PosteriorSampler {
            rng: ChaCha8Rng::seed_from_u64(seed),
            draw,
        }
    }

    /// `n` posterior draws paired with their log joints.
    pub fn generate(&self, n: usize, seed: u64) -> Vec<EvaluatedSample> {
        self.sampler(seed)
            .take(n)
            .map(|theta| {
                let lj = self.log_joint(&theta);
                EvaluatedSample::new(theta, lj)
            })
            .collect()
    }

    /// [`generate`](Self::generate) validated into a [`SampleSet`].
    pub fn generate_set(&self, n: usize, seed: u64) -> Result<SampleSet> {
        SampleSet::new(self.generate(n, seed))
    }
}

enum Draw {
    Normal(Vec<Normal<f64>>),
    Beta(Beta<f64>),
}

/// Infinite iterator of posterior draws. Owns its generator; one per task.
pub struct PosteriorSampler {
    rng: ChaCha8Rng,
    draw: Draw,
}

impl Iterator for PosteriorSampler {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        Some(match &self.draw {
            Draw::Normal(ds) => ds.iter().map(|d| d.sample(&mut self.rng)).collect(),
            Draw::Beta(b) => {
                // exact 0 or 1 has zero posterior density; redraw
                loop {
                    let t = b.sample(&mut self.rng);
                    if t > 0.0 && t < 1.0 {
                        break vec![t];
                    }
                }
            }
        })
    }
}
