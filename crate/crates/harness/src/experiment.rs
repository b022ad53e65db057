//! Replication loop over a scenario grid.

use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use aggcorr::{estimate, limit_of, split_seed, LimitRequest, Method, Params, RepairReport, SignalFactor, Simulator};
use anyhow::{anyhow, Result};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ExperimentConfig, ScenarioSection};

/// Stable 64-bit tag for a scenario id, so seeds do not depend on grid order.
pub fn scenario_tag(id: &str) -> u64 {
    id.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

pub fn data_seed(master: u64, scenario_id: &str, rep: usize) -> u64 {
    split_seed(master, &[scenario_tag(scenario_id), rep as u64])
}

pub fn sampler_seed(data_seed: u64, method: Method) -> u64 {
    let idx = Method::ALL.iter().position(|m| *m == method).unwrap_or(0);
    split_seed(data_seed, &[0x5a, idx as u64])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RepOutcome {
    pub rep: usize,
    pub estimate: Option<f64>,
    pub discarded: usize,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EstimateSummary {
    pub scenario_id: String,
    pub intra_model: String,
    pub snr_eps_db: Option<f64>,
    pub snr_e_db: Option<f64>,
    pub method: Method,
    pub reps: Vec<RepOutcome>,
    pub mean: f64,
    pub sd: f64,
    pub limit: f64,
    pub bias_vs_r: f64,
    pub bias_vs_limit: f64,
    pub discarded: usize,
    pub failed: usize,
}

impl EstimateSummary {
    pub fn values(&self) -> Vec<f64> {
        self.reps.iter().filter_map(|r| r.estimate).collect()
    }

    /// Monte Carlo standard error of the mean.
    pub fn se(&self) -> f64 {
        self.sd / (self.values().len() as f64).sqrt()
    }
}

fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::NAN);
    }
    let ss: f64 = xs.iter().map(|x| (x - mean) * (x - mean)).sum();
    (mean, (ss / (n - 1.0)).sqrt())
}

/// Signal factors keyed by the noise-free model, shared across runs.
#[derive(Default)]
pub struct FactorCache {
    factors: Mutex<HashMap<String, Arc<SignalFactor>>>,
}

impl FactorCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, params: &Params, repair: aggcorr::PsdRepair) -> Result<Arc<SignalFactor>> {
        let key = format!("{}|{repair:?}", serde_json::to_string(&params.with_noise(0.0, 0.0)?)?);
        let mut map = self.factors.lock().map_err(|_| anyhow!("factor cache poisoned"))?;
        if let Some(f) = map.get(&key) {
            return Ok(f.clone());
        }
        let f = Arc::new(aggcorr::factor_signal_covariance(params, repair)?);
        map.insert(key, f.clone());
        Ok(f)
    }

    /// Repair reports of every cached factor that needed one.
    pub fn repairs(&self) -> Vec<RepairReport> {
        let map = self.factors.lock().expect("factor cache poisoned");
        let mut out: Vec<_> = map.values().filter_map(|f| f.repair.clone()).collect();
        out.sort_by(|a, b| a.min_eigenvalue.total_cmp(&b.min_eigenvalue));
        out
    }
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<EstimateSummary>> {
    run_experiment_with(cfg, &FactorCache::new(), |_| {})
}

/// Run the grid, reusing `cache` and calling `progress` after each scenario.
pub fn run_experiment_with(
    cfg: &ExperimentConfig,
    cache: &FactorCache,
    mut progress: impl FnMut(&ScenarioSection),
) -> Result<Vec<EstimateSummary>> {
    cfg.validate()?;
    let mut out = Vec::new();
    for s in &cfg.scenarios {
        out.extend(run_scenario(cfg, s, cache)?);
        progress(s);
    }
    Ok(out)
}

fn run_scenario(cfg: &ExperimentConfig, s: &ScenarioSection, cache: &FactorCache) -> Result<Vec<EstimateSummary>> {
    let params = cfg.scenario_params(s)?;
    let sim = Simulator::with_factor(params.clone(), cache.get(&params, cfg.run.psd_repair)?)?;
    let methods = &cfg.methods.names;

    let per_rep: Vec<Vec<RepOutcome>> = (1..=cfg.run.reps)
        .into_par_iter()
        .map(|rep| {
            let seed = data_seed(cfg.run.seed, &s.id, rep);
            let data = match sim.simulate(cfg.run.t_len, seed) {
                Ok(d) => d,
                Err(e) => {
                    let error = Some(format!("simulate: {e}"));
                    return methods
                        .iter()
                        .map(|_| RepOutcome { rep, estimate: None, discarded: 0, error: error.clone() })
                        .collect();
                }
            };
            methods
                .iter()
                .map(|&m| match estimate(&data, &cfg.estimator(m, sampler_seed(seed, m))) {
                    Ok(e) => RepOutcome { rep, estimate: Some(e.value), discarded: e.discarded, error: None },
                    Err(e) => RepOutcome { rep, estimate: None, discarded: 0, error: Some(e.to_string()) },
                })
                .collect()
        })
        .collect();

    let r = cfg.true_r();
    Ok(methods
        .iter()
        .enumerate()
        .map(|(i, &m)| {
            let reps: Vec<RepOutcome> = per_rep.iter().map(|row| row[i].clone()).collect();
            let values: Vec<f64> = reps.iter().filter_map(|o| o.estimate).collect();
            let (mean, sd) = mean_sd(&values);
            let req = LimitRequest::from_config(&params, &cfg.estimator(m, 0)).with_form(cfg.run.limit_form);
            let limit = limit_of(&req).unwrap_or(f64::NAN);
            EstimateSummary {
                scenario_id: s.id.clone(),
                intra_model: s.intra.clone(),
                snr_eps_db: s.snr_eps_db,
                snr_e_db: s.snr_e_db,
                method: m,
                mean,
                sd,
                limit,
                bias_vs_r: mean - r,
                bias_vs_limit: mean - limit,
                discarded: reps.iter().map(|o| o.discarded).sum(),
                failed: reps.iter().filter(|o| o.estimate.is_none()).count(),
                reps,
            }
        })
        .collect())
}

/// Limits of every configured method for every scenario.
pub fn limit_table(cfg: &ExperimentConfig) -> Result<Vec<(String, Method, f64)>> {
    let mut out = Vec::new();
    for s in &cfg.scenarios {
        let params = cfg.scenario_params(s)?;
        for &m in &cfg.methods.names {
            let req = LimitRequest::from_config(&params, &cfg.estimator(m, 0)).with_form(cfg.run.limit_form);
            out.push((s.id.clone(), m, limit_of(&req)?));
        }
    }
    Ok(out)
}
