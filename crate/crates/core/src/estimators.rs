//! Estimators of the inter-regional correlation `r_jj'` from one dataset.
//!
//! Sampling-based methods average over `draws` independent configurations.
//! Configuration `b` is drawn from `child_stream(sampler_seed, [b])`, target
//! `j` first, then `j'`, then the donors `k` and `k'`. A draw whose
//! denominator is undefined (non-positive product, or an undefined difference
//! correlation) is discarded and counted.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lattice::{
    admissible_center_count, admissible_pair_count, sample_neighborhood, sample_neighborhood_pair, RegionId,
};
use crate::model::ModelParams;
use crate::rng::{child_stream, StreamRng};
use crate::scalar::Real;
use crate::stats::{cor_tilde, mean, sample_cor};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CA")]
    Ca,
    #[serde(rename = "AC")]
    Ac,
    #[serde(rename = "ACt")]
    AcTilde,
    #[serde(rename = "LCA")]
    Lca,
    #[serde(rename = "R")]
    R,
    #[serde(rename = "LR")]
    Lr,
    #[serde(rename = "D")]
    D,
    #[serde(rename = "LD")]
    Ld,
    #[serde(rename = "RD")]
    Rd,
    #[serde(rename = "LRD")]
    Lrd,
}

impl Method {
    pub const ALL: [Method; 10] = [
        Method::Ca,
        Method::Ac,
        Method::AcTilde,
        Method::Lca,
        Method::R,
        Method::Lr,
        Method::D,
        Method::Ld,
        Method::Rd,
        Method::Lrd,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Method::Ca => "CA",
            Method::Ac => "AC",
            Method::AcTilde => "ACt",
            Method::Lca => "LCA",
            Method::R => "R",
            Method::Lr => "LR",
            Method::D => "D",
            Method::Ld => "LD",
            Method::Rd => "RD",
            Method::Lrd => "LRD",
        }
    }

    /// Uses the donor regions `k`, `k'`.
    pub fn needs_donors(self) -> bool {
        matches!(self, Method::D | Method::Ld | Method::Rd | Method::Lrd)
    }

    /// Uses within-region replicate pairs at distance `delta`.
    pub fn uses_replicates(self) -> bool {
        matches!(self, Method::R | Method::Lr | Method::Rd | Method::Lrd)
    }

    pub fn is_sampled(self) -> bool {
        !matches!(self, Method::Ca | Method::Ac | Method::AcTilde)
    }

    /// Averages over neighborhoods rather than single voxels.
    pub fn is_local(self) -> bool {
        matches!(self, Method::Lca | Method::Lr | Method::Ld | Method::Lrd)
    }

    /// Neighborhood radius the method actually uses for a configured `nu`.
    pub fn effective_nu(self, nu: usize) -> usize {
        if self.is_local() {
            nu
        } else {
            0
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EstimatorConfig {
    pub method: Method,
    pub j: RegionId,
    pub jp: RegionId,
    /// Donor regions `(k, k')`; required by the D family.
    pub donors: Option<(RegionId, RegionId)>,
    pub nu: usize,
    /// Replicate distance; `None` means `max(p, 1)` for the dataset's noise support `p`.
    pub delta: Option<usize>,
    pub draws: usize,
    pub sampler_seed: u64,
}

impl EstimatorConfig {
    /// Defaults: `nu = 1`, `delta = max(p, 1)`, 100 draws, sampler seed 0.
    pub fn new(method: Method, j: RegionId, jp: RegionId) -> Self {
        Self { method, j, jp, donors: None, nu: 1, delta: None, draws: 100, sampler_seed: 0 }
    }

    pub fn with_donors(mut self, k: RegionId, kp: RegionId) -> Self {
        self.donors = Some((k, kp));
        self
    }

    pub fn with_nu(mut self, nu: usize) -> Self {
        self.nu = nu;
        self
    }

    pub fn with_delta(mut self, delta: usize) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn with_draws(mut self, draws: usize) -> Self {
        self.draws = draws;
        self
    }

    pub fn with_sampler_seed(mut self, seed: u64) -> Self {
        self.sampler_seed = seed;
        self
    }

    /// Check targets, donors, `delta` and region sizes against a layout.
    pub fn validate<T: Real>(&self, params: &ModelParams<T>) -> Result<()> {
        resolve(params, self).map(|_| ())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EstimateResult<T> {
    pub value: T,
    pub draws_used: usize,
    pub discarded: usize,
}

struct Targets {
    j: usize,
    jp: usize,
    donors: Option<(usize, usize)>,
    delta: usize,
}

fn resolve<T: Real>(params: &ModelParams<T>, cfg: &EstimatorConfig) -> Result<Targets> {
    let m = cfg.method;
    let j = params.region_position(cfg.j)?;
    let jp = params.region_position(cfg.jp)?;
    if j == jp {
        return Err(Error::InvalidParameter("targets j and j' must differ".into()));
    }
    let donors = match (m.needs_donors(), cfg.donors) {
        (true, None) => return Err(Error::InvalidParameter(format!("{m} needs donor regions"))),
        (true, Some((k, kp))) => {
            let (k, kp) = (params.region_position(k)?, params.region_position(kp)?);
            if k == kp || [k, kp].iter().any(|&d| d == j || d == jp) {
                return Err(Error::InvalidParameter("donors must be distinct from each other and the targets".into()));
            }
            Some((k, kp))
        }
        (false, _) => None,
    };
    if m.is_sampled() && cfg.draws == 0 {
        return Err(Error::InvalidParameter("draws must be >= 1".into()));
    }
    let p = params.noise_support();
    let delta = cfg.delta.unwrap_or(p.max(1));
    if m.uses_replicates() && delta < p.max(1) {
        return Err(Error::InvalidParameter(format!(
            "delta = {delta} must be at least the noise support p = {p} and positive"
        )));
    }
    let nu = m.effective_nu(cfg.nu);
    let regions = &params.regions;
    for &pos in [j, jp].iter().chain(donors.iter().flat_map(|(a, b)| [a, b])) {
        let shape = &regions[pos].shape;
        let is_target = pos == j || pos == jp;
        let fits = if m.uses_replicates() && is_target {
            admissible_pair_count(shape, nu, delta) > 0
        } else {
            admissible_center_count(shape, nu) > 0
        };
        if m.is_sampled() && !fits {
            return Err(Error::RegionTooSmall {
                id: regions[pos].id,
                what: format!("{m} with nu = {nu}, delta = {delta}"),
            });
        }
    }
    Ok(Targets { j, jp, donors, delta })
}

/// Sum over voxels of the standardized series of one region.
fn standardized_sum<T: Real>(data: &Dataset<T>, pos: usize) -> Result<Vec<T>> {
    let t_len = data.t_len();
    let mut acc = vec![T::zero(); t_len];
    let df = T::from_count(t_len as u64 - 1);
    for v in data.region_range(pos) {
        let y = data.series(v);
        let m = mean(y);
        let ss: T = y.iter().map(|&x| (x - m) * (x - m)).sum();
        if ss <= T::zero() {
            return Err(Error::DegenerateSeries);
        }
        let sd = (ss / df).sqrt();
        for (a, &x) in acc.iter_mut().zip(y) {
            *a = *a + (x - m) / sd;
        }
    }
    Ok(acc)
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn single<T>(value: T) -> EstimateResult<T> {
    EstimateResult { value, draws_used: 1, discarded: 0 }
}

fn est_ca<T: Real>(data: &Dataset<T>, t: &Targets) -> Result<EstimateResult<T>> {
    Ok(single(sample_cor(&data.region_average(t.j), &data.region_average(t.jp))?))
}

/// Mean of all `N_j N_j'` voxel-pair correlations. Uses
/// `sum_{i,i'} cor(y_i, y_i') = <S_j, S_j'> / (T - 1)` with `S` the sum of
/// standardized series, so the cost is linear in the voxel count.
fn est_ac<T: Real>(data: &Dataset<T>, t: &Targets) -> Result<EstimateResult<T>> {
    let (sj, sjp) = (standardized_sum(data, t.j)?, standardized_sum(data, t.jp)?);
    let n = T::from_count((data.region_range(t.j).len() * data.region_range(t.jp).len()) as u64);
    let df = T::from_count(data.t_len() as u64 - 1);
    Ok(single(dot(&sj, &sjp) / df / n))
}

/// CA rescaled by the square root of the two mean within-region correlations:
/// `CA * sqrt(S_j S_j') / (N_j N_j')` with `S_j` the sum of all ordered
/// within-region voxel correlations (diagonal included).
fn est_ac_tilde<T: Real>(data: &Dataset<T>, t: &Targets) -> Result<EstimateResult<T>> {
    let ca = est_ca(data, t)?.value;
    let df = T::from_count(data.t_len() as u64 - 1);
    let within = |pos: usize| -> Result<T> {
        let s = standardized_sum(data, pos)?;
        let n = T::from_count(data.region_range(pos).len() as u64);
        Ok(dot(&s, &s) / df / (n * n))
    };
    Ok(single(ca * (within(t.j)? * within(t.jp)?).sqrt()))
}

fn over_draws<T: Real>(
    cfg: &EstimatorConfig,
    mut draw: impl FnMut(&mut StreamRng) -> Result<Option<T>>,
) -> Result<EstimateResult<T>> {
    let mut sum = T::zero();
    let mut used = 0usize;
    for b in 0..cfg.draws {
        let mut rng = child_stream(cfg.sampler_seed, &[b as u64]);
        if let Some(v) = draw(&mut rng)? {
            sum = sum + v;
            used += 1;
        }
    }
    if used == 0 {
        return Err(Error::AllDrawsDiscarded { method: cfg.method.to_string(), draws: cfg.draws });
    }
    Ok(EstimateResult { value: sum / T::from_count(used as u64), draws_used: used, discarded: cfg.draws - used })
}

fn undefined_to_none<T>(r: Result<T>) -> Result<Option<T>> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(Error::UndefinedDifferenceCorrelation) => Ok(None),
        Err(e) => Err(e),
    }
}

fn est_lca<T: Real>(data: &Dataset<T>, t: &Targets, cfg: &EstimatorConfig) -> Result<EstimateResult<T>> {
    let regions = &data.params().regions;
    over_draws(cfg, |rng| {
        let a = sample_neighborhood(&regions[t.j], cfg.nu, rng)?;
        let b = sample_neighborhood(&regions[t.jp], cfg.nu, rng)?;
        Ok(Some(sample_cor(&data.unit_series(t.j, &a)?, &data.unit_series(t.jp, &b)?)?))
    })
}

fn est_replicate<T: Real>(
    data: &Dataset<T>,
    t: &Targets,
    cfg: &EstimatorConfig,
    nu: usize,
) -> Result<EstimateResult<T>> {
    let regions = &data.params().regions;
    over_draws(cfg, |rng| {
        let (a1, a2) = sample_neighborhood_pair(&regions[t.j], nu, t.delta, rng)?;
        let (b1, b2) = sample_neighborhood_pair(&regions[t.jp], nu, t.delta, rng)?;
        let u = [data.unit_series(t.j, &a1)?, data.unit_series(t.j, &a2)?];
        let v = [data.unit_series(t.jp, &b1)?, data.unit_series(t.jp, &b2)?];
        let mut num = T::zero();
        for ua in &u {
            for vb in &v {
                num = num + sample_cor(ua, vb)?;
            }
        }
        let den = sample_cor(&u[0], &u[1])? * sample_cor(&v[0], &v[1])?;
        Ok((den > T::zero()).then(|| num / T::lit(4.0) / den.sqrt()))
    })
}

fn est_difference<T: Real>(
    data: &Dataset<T>,
    t: &Targets,
    cfg: &EstimatorConfig,
    nu: usize,
) -> Result<EstimateResult<T>> {
    let regions = &data.params().regions;
    let (k, kp) = t.donors.expect("resolved");
    over_draws(cfg, |rng| {
        let a = sample_neighborhood(&regions[t.j], nu, rng)?;
        let b = sample_neighborhood(&regions[t.jp], nu, rng)?;
        let c = sample_neighborhood(&regions[k], nu, rng)?;
        let d = sample_neighborhood(&regions[kp], nu, rng)?;
        undefined_to_none(cor_tilde(
            &data.unit_series(t.j, &a)?,
            &data.unit_series(t.jp, &b)?,
            &data.unit_series(k, &c)?,
            &data.unit_series(kp, &d)?,
        ))
    })
}

fn est_replicate_difference<T: Real>(
    data: &Dataset<T>,
    t: &Targets,
    cfg: &EstimatorConfig,
    nu: usize,
) -> Result<EstimateResult<T>> {
    let regions = &data.params().regions;
    let (k, kp) = t.donors.expect("resolved");
    over_draws(cfg, |rng| {
        let (a1, a2) = sample_neighborhood_pair(&regions[t.j], nu, t.delta, rng)?;
        let (b1, b2) = sample_neighborhood_pair(&regions[t.jp], nu, t.delta, rng)?;
        let c = sample_neighborhood(&regions[k], nu, rng)?;
        let d = sample_neighborhood(&regions[kp], nu, rng)?;
        let u = [data.unit_series(t.j, &a1)?, data.unit_series(t.j, &a2)?];
        let v = [data.unit_series(t.jp, &b1)?, data.unit_series(t.jp, &b2)?];
        let (y3, y4) = (data.unit_series(k, &c)?, data.unit_series(kp, &d)?);
        let inner = || -> Result<Option<T>> {
            let mut num = T::zero();
            for ua in &u {
                for vb in &v {
                    num = num + cor_tilde(ua, vb, &y3, &y4)?;
                }
            }
            let den = cor_tilde(&u[0], &u[1], &y3, &y4)? * cor_tilde(&v[0], &v[1], &y3, &y4)?;
            Ok((den > T::zero()).then(|| num / T::lit(4.0) / den.sqrt()))
        };
        undefined_to_none(inner()).map(Option::flatten)
    })
}

pub fn estimate<T: Real>(data: &Dataset<T>, cfg: &EstimatorConfig) -> Result<EstimateResult<T>> {
    let t = resolve(data.params(), cfg)?;
    match cfg.method {
        Method::Ca => est_ca(data, &t),
        Method::Ac => est_ac(data, &t),
        Method::AcTilde => est_ac_tilde(data, &t),
        Method::Lca => est_lca(data, &t, cfg),
        Method::R => est_replicate(data, &t, cfg, 0),
        Method::Lr => est_replicate(data, &t, cfg, cfg.nu),
        Method::D => est_difference(data, &t, cfg, 0),
        Method::Ld => est_difference(data, &t, cfg, cfg.nu),
        Method::Rd => est_replicate_difference(data, &t, cfg, 0),
        Method::Lrd => est_replicate_difference(data, &t, cfg, cfg.nu),
    }
}
