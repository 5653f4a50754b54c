//! `--model` / `--model-params` parsing.
//!
//! Parameters are `key=value` pairs separated by commas. List values use
//! colons: `mean=0:1.5`. A single list value is broadcast to every
//! dimension.
//!
//! | model           | keys (defaults)                                   |
//! |-----------------|---------------------------------------------------|
//! | `mvn`           | `dim` (1), `mean` (0), `var` (1), `planted` (0)   |
//! | `normal-normal` | `tau` (1), `sigma` (1), `x` (0)                   |
//! | `beta-binomial` | `alpha` (1), `beta` (1), `trials` (2), `successes` (1) |

use std::collections::BTreeMap;

use arrogance::models::{make_beta_binomial_model, make_mvn_model, make_normal_normal_model};
use arrogance::AnalyticModel;

use crate::error::{CliError, Result};

fn parse_pairs(params: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for pair in params.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| CliError::ModelParams(format!("{pair:?} is not key=value")))?;
        if out
            .insert(k.trim().to_string(), v.trim().to_string())
            .is_some()
        {
            return Err(CliError::ModelParams(format!("{k} given twice")));
        }
    }
    Ok(out)
}

struct Params(BTreeMap<String, String>);

impl Params {
    fn take_list(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.0
            .remove(key)
            .map(|v| {
                v.split(':')
                    .map(|x| {
                        x.trim().parse::<f64>().map_err(|_| {
                            CliError::ModelParams(format!("{key}: {x:?} is not a number"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    fn take_f64(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take_list(key)? {
            None => Ok(default),
            Some(v) if v.len() == 1 => Ok(v[0]),
            Some(_) => Err(CliError::ModelParams(format!("{key} takes a single value"))),
        }
    }

    fn take_u64(&mut self, key: &str, default: u64) -> Result<u64> {
        match self.0.remove(key) {
            None => Ok(default),
            Some(v) => v
                .parse()
                .map_err(|_| CliError::ModelParams(format!("{key}: {v:?} is not a count"))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.0.keys().next() {
            Some(k) => Err(CliError::ModelParams(format!("unknown parameter {k:?}"))),
            None => Ok(()),
        }
    }
}

fn broadcast(v: Option<Vec<f64>>, dim: usize, default: f64, key: &str) -> Result<Vec<f64>> {
    match v {
        None => Ok(vec![default; dim]),
        Some(v) if v.len() == 1 => Ok(vec![v[0]; dim]),
        Some(v) if v.len() == dim => Ok(v),
        Some(v) => Err(CliError::ModelParams(format!(
            "{key} has {} entries but dim={dim}",
            v.len()
        ))),
    }
}

/// Builds a named analytic model from a `--model-params` string.
pub fn build_model(name: &str, params: &str) -> Result<AnalyticModel> {
    let mut p = Params(parse_pairs(params)?);
    let model = match name {
        "mvn" => {
            let dim = p.take_u64("dim", 1)? as usize;
            let mean = broadcast(p.take_list("mean")?, dim, 0.0, "mean")?;
            let var = broadcast(p.take_list("var")?, dim, 1.0, "var")?;
            let planted = p.take_f64("planted", 0.0)?;
            make_mvn_model(dim, mean, var, planted)?
        }
        "normal-normal" => {
            let tau = p.take_f64("tau", 1.0)?;
            let sigma = p.take_f64("sigma", 1.0)?;
            let x = p.take_list("x")?.unwrap_or_else(|| vec![0.0]);
            make_normal_normal_model(tau, sigma, x)?
        }
        "beta-binomial" => {
            let alpha = p.take_f64("alpha", 1.0)?;
            let beta = p.take_f64("beta", 1.0)?;
            let trials = p.take_u64("trials", 2)?;
            let successes = p.take_u64("successes", 1)?;
            make_beta_binomial_model(alpha, beta, trials, successes)?
        }
        other => return Err(CliError::UnknownModel(other.to_string())),
    };
    p.finish()?;
    Ok(model)
}
