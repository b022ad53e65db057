//! Experiment configuration (TOML).
//!
//! See `docs/config.md` for the schema; `docs/example.toml` is the default
//! study and is compiled in as [`DEFAULT_CONFIG`].

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use aggcorr::model::{identity_table, layout_along_axis, snr_to_noise_variance};
use aggcorr::{CorrelationFunction, EstimatorConfig, LimitForm, Method, Params, PsdRepair, RegionId};
use anyhow::{anyhow, bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

pub const DEFAULT_CONFIG: &str = include_str!("../../../docs/example.toml");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub run: RunSection,
    pub layout: LayoutSection,
    pub intra: BTreeMap<String, IntraSection>,
    #[serde(default)]
    pub noise: NoiseSection,
    pub scenarios: Vec<ScenarioSection>,
    pub methods: MethodsSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub reps: usize,
    #[serde(rename = "T")]
    pub t_len: usize,
    #[serde(default = "default_repair")]
    pub psd_repair: PsdRepair,
    #[serde(default)]
    pub limit_form: LimitForm,
}

fn default_repair() -> PsdRepair {
    PsdRepair::ClipEigenvalues
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionEntry {
    pub id: RegionId,
    pub shape: Vec<usize>,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CorrelationEntry {
    pub a: RegionId,
    pub b: RegionId,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayoutSection {
    pub dim: usize,
    /// Uniform distance between consecutive regions; default `max(p, delta, 2)`.
    pub gap: Option<usize>,
    pub regions: Vec<RegionEntry>,
    #[serde(default)]
    pub correlations: Vec<CorrelationEntry>,
    pub targets: [RegionId; 2],
    pub donors: Option<[RegionId; 2]>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntraSection {
    pub k_max: f64,
    pub r_min: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// `eta_0 .. eta_{p-1}`; `[1.0]` is spatially uncorrelated noise.
    pub weights: Vec<f64>,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self { weights: vec![1.0] }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSection {
    pub id: String,
    pub intra: String,
    /// Local-noise SNR in dB; absent means no local noise.
    pub snr_eps_db: Option<f64>,
    /// Global-noise SNR in dB; absent means no global noise.
    pub snr_e_db: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodsSection {
    pub names: Vec<Method>,
    #[serde(default = "default_nu")]
    pub nu: usize,
    pub delta: Option<usize>,
    #[serde(default = "default_draws")]
    pub draws: usize,
}

fn default_nu() -> usize {
    1
}

fn default_draws() -> usize {
    100
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub boxplots: bool,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text)
    }

    /// The shipped default grid.
    pub fn default_study() -> Self {
        Self::parse(DEFAULT_CONFIG).expect("shipped default config is valid")
    }

    pub fn noise_support(&self) -> usize {
        self.noise.weights.len().max(1)
    }

    pub fn delta(&self) -> usize {
        self.methods.delta.unwrap_or(self.noise_support())
    }

    pub fn gap(&self) -> usize {
        self.layout.gap.unwrap_or(self.noise_support().max(self.delta()).max(2))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.run.reps >= 2, "run.reps must be at least 2");
        ensure!(self.run.t_len >= 3, "run.T must be at least 3");
        ensure!(!self.scenarios.is_empty(), "no scenarios");
        ensure!(!self.methods.names.is_empty(), "no methods");
        let mut seen = std::collections::BTreeSet::new();
        for s in &self.scenarios {
            ensure!(seen.insert(&s.id), "duplicate scenario id {:?}", s.id);
            ensure!(!s.id.contains([',', '"', '\n']), "scenario id {:?} must not contain commas or quotes", s.id);
            ensure!(self.intra.contains_key(&s.intra), "scenario {:?}: unknown intra model {:?}", s.id, s.intra);
            for db in [s.snr_eps_db, s.snr_e_db].into_iter().flatten() {
                ensure!(db.is_finite(), "scenario {:?}: SNR must be finite", s.id);
            }
        }
        for name in self.intra.keys() {
            let params = self.params(name, 0.0, 0.0)?;
            for m in &self.methods.names {
                self.estimator(*m, 0)
                    .validate(&params)
                    .map_err(|e| anyhow!("method {m} with intra model {name:?}: {e}"))?;
            }
        }
        Ok(())
    }

    /// Parameters for one intra model with the given noise standard deviations.
    pub fn params(&self, intra: &str, sigma_eps: f64, sigma_e: f64) -> Result<Params> {
        let l = &self.layout;
        let specs: Vec<_> = l.regions.iter().map(|r| (r.id, r.shape.clone(), r.sigma)).collect();
        let regions = layout_along_axis(l.dim, self.gap(), &specs)?;
        let mut inter = identity_table(regions.len());
        let pos = |id: RegionId| {
            regions.iter().position(|r| r.id == id).ok_or_else(|| anyhow!("unknown region id {id} in layout"))
        };
        for c in &l.correlations {
            let (a, b) = (pos(c.a)?, pos(c.b)?);
            ensure!(a != b, "correlation entry for region {} with itself", c.a);
            inter[a][b] = c.r;
            inter[b][a] = c.r;
        }
        let spec = self.intra.get(intra).ok_or_else(|| anyhow!("unknown intra model {intra:?}"))?;
        Ok(Params::new(
            regions,
            inter,
            CorrelationFunction::intra(spec.k_max, spec.r_min)?,
            sigma_eps,
            CorrelationFunction::noise(self.noise.weights.clone())?,
            sigma_e,
        )?)
    }

    /// Parameters of a scenario, with noise levels derived from its SNRs.
    pub fn scenario_params(&self, s: &ScenarioSection) -> Result<Params> {
        let base = self.params(&s.intra, 0.0, 0.0)?;
        let [j, jp] = self.layout.targets;
        let sd = |db: Option<f64>| -> Result<f64> {
            Ok(match db {
                None => 0.0,
                Some(db) => snr_to_noise_variance(db, base.region(j)?.sigma, base.region(jp)?.sigma).sqrt(),
            })
        };
        Ok(base.with_noise(sd(s.snr_eps_db)?, sd(s.snr_e_db)?)?)
    }

    pub fn estimator(&self, method: Method, sampler_seed: u64) -> EstimatorConfig {
        let [j, jp] = self.layout.targets;
        let mut cfg = EstimatorConfig::new(method, j, jp)
            .with_nu(self.methods.nu)
            .with_delta(self.delta())
            .with_draws(self.methods.draws)
            .with_sampler_seed(sampler_seed);
        cfg.donors = self.layout.donors.map(|[k, kp]| (k, kp));
        cfg
    }

    pub fn scenario(&self, id: &str) -> Result<&ScenarioSection> {
        self.scenarios.iter().find(|s| s.id == id).ok_or_else(|| anyhow!("unknown scenario {id:?}"))
    }

    pub fn true_r(&self) -> f64 {
        let [j, jp] = self.layout.targets;
        self.layout.correlations.iter().find(|c| (c.a, c.b) == (j, jp) || (c.a, c.b) == (jp, j)).map_or(0.0, |c| c.r)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| anyhow!(e))
    }
}

/// Restrict a config to a subset of scenarios, keeping their order.
pub fn select_scenarios(cfg: &ExperimentConfig, ids: &[&str]) -> Result<ExperimentConfig> {
    let mut out = cfg.clone();
    out.scenarios = ids.iter().map(|id| cfg.scenario(id).cloned()).collect::<Result<_>>()?;
    if out.scenarios.is_empty() {
        bail!("no scenarios selected");
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_study_grid() {
        let cfg = ExperimentConfig::default_study();
        assert_eq!(cfg.scenarios.len(), 10);
        assert_eq!(cfg.run.reps, 100);
        assert_eq!(cfg.run.t_len, 1000);
        assert_eq!(cfg.true_r(), 0.6);
        assert_eq!(cfg.gap(), 2);
        let p = cfg.scenario_params(cfg.scenario("model1-eps0").unwrap()).unwrap();
        assert!((p.sigma_eps - 1.0).abs() < 1e-12);
        assert_eq!(p.sigma_e, 0.0);
        let p = cfg.scenario_params(cfg.scenario("model2-e10").unwrap()).unwrap();
        assert!((p.sigma_e * p.sigma_e - 0.1).abs() < 1e-12);
        let study = Params::four_region_study(CorrelationFunction::intra(300.0, 0.9).unwrap());
        assert_eq!(cfg.params("model1", 0.0, 0.0).unwrap(), study);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::default_study();
        assert_eq!(ExperimentConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_configs() {
        let good = DEFAULT_CONFIG;
        assert!(ExperimentConfig::parse(&good.replace("reps = 100", "reps = 1")).is_err());
        assert!(ExperimentConfig::parse(&good.replace("intra = \"model2\"", "intra = \"model9\"")).is_err());
        assert!(ExperimentConfig::parse(&good.replace("\"LRD\"", "\"XYZ\"")).is_err());
        assert!(ExperimentConfig::parse(&good.replace("nu = 1", "nu = 6")).is_err(), "donors too small");
        assert!(ExperimentConfig::parse(&format!("{good}\n[extra]\nx = 1\n")).is_err());
    }
}
