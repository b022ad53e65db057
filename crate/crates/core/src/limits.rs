//! Almost-sure limits (as `T -> infinity`) of every estimator.
//!
//! Each limit is a ratio of population moments of the units an estimator
//! correlates (single voxels, neighborhood averages or region averages). For
//! a unit of region `j` aggregated over a scope with intra aggregate `rho` and
//! noise aggregate `eta`:
//!
//! ```text
//! var        = sigma_j^2 rho + sigma_eps^2 eta + sigma_e^2
//! cov(j, j') = sigma_j sigma_j' r_jj' + sigma_e^2
//! ```
//!
//! Difference correlations remove every term shared by all voxels, leaving
//! the donor corrections `tau`.
//!
//! [`LimitForm::Derived`] evaluates these moments exactly. [`LimitForm::Printed`]
//! evaluates the closed forms as commonly printed for the local-average,
//! difference and replicate-difference methods, which differ from the
//! moments in the noise constant, the sign of the donor cross terms and the
//! neighborhood attenuation. The two forms agree for every other method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{EstimatorConfig, Method};
use crate::lattice::{aggregated_correlation, AggregationScope, RegionId};
use crate::model::ModelParams;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitForm {
    #[default]
    Derived,
    Printed,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LimitRequest<'a, T> {
    pub method: Method,
    pub params: &'a ModelParams<T>,
    pub j: RegionId,
    pub jp: RegionId,
    pub donors: Option<(RegionId, RegionId)>,
    pub nu: usize,
    /// `None` means `max(p, 1)`, as for the estimators.
    pub delta: Option<usize>,
    pub form: LimitForm,
}

impl<'a, T: Real> LimitRequest<'a, T> {
    pub fn new(method: Method, params: &'a ModelParams<T>, j: RegionId, jp: RegionId) -> Self {
        Self { method, params, j, jp, donors: None, nu: 1, delta: None, form: LimitForm::Derived }
    }

    pub fn from_config(params: &'a ModelParams<T>, cfg: &EstimatorConfig) -> Self {
        Self {
            method: cfg.method,
            params,
            j: cfg.j,
            jp: cfg.jp,
            donors: cfg.donors,
            nu: cfg.nu,
            delta: cfg.delta,
            form: LimitForm::Derived,
        }
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

    pub fn with_form(mut self, form: LimitForm) -> Self {
        self.form = form;
        self
    }

    pub fn effective_delta(&self) -> usize {
        self.delta.unwrap_or(self.params.noise_support().max(1))
    }

    /// Every spatial aggregate the limit formulas use.
    pub fn aggregates(&self) -> Result<Aggregates<T>> {
        let p = self.params;
        let dim = p.dim();
        let (nu, delta) = (self.nu, self.effective_delta());
        let region = |id: RegionId| -> Result<(T, T)> {
            let scope = AggregationScope::Region { shape: p.region(id)?.shape.clone() };
            Ok((aggregated_correlation(&scope, &p.intra), aggregated_correlation(&scope, &p.noise_corr)))
        };
        let (rho_j, eta_j) = region(self.j)?;
        let (rho_jp, eta_jp) = region(self.jp)?;
        let ball = AggregationScope::Neighborhood { nu, dim };
        let pair = AggregationScope::NeighborhoodPair { nu, delta, dim };
        Ok(Aggregates {
            rho_j,
            rho_jp,
            eta_j,
            eta_jp,
            rho_nu: aggregated_correlation(&ball, &p.intra),
            eta_nu: aggregated_correlation(&ball, &p.noise_corr),
            rho_delta: p.intra.eval(delta as u64),
            eta_delta: p.noise_corr.eval(delta as u64),
            rho_nu_delta: aggregated_correlation(&pair, &p.intra),
            eta_nu_delta: aggregated_correlation(&pair, &p.noise_corr),
        })
    }
}

/// Spatial aggregates of the intra (`rho`) and local-noise (`eta`) correlations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Aggregates<T> {
    /// Whole-region means for `j` and `j'`.
    pub rho_j: T,
    pub rho_jp: T,
    pub eta_j: T,
    pub eta_jp: T,
    /// Mean over one `nu`-ball.
    pub rho_nu: T,
    pub eta_nu: T,
    /// Single-voxel correlation at distance `delta`.
    pub rho_delta: T,
    pub eta_delta: T,
    /// Mean over the cross pairs of two `nu`-balls at ball distance `delta`.
    pub rho_nu_delta: T,
    pub eta_nu_delta: T,
}

/// Donor corrections `(tau_jj', tau_j, tau_j')`.
fn donor_terms<T: Real>(req: &LimitRequest<'_, T>, printed: bool) -> Result<(T, T, T)> {
    let p = req.params;
    let (k, kp) = req.donors.ok_or_else(|| Error::InvalidParameter(format!("{} needs donor regions", req.method)))?;
    let s = |id| p.region(id).map(|r| r.sigma);
    let (sj, sjp, sk, skp) = (s(req.j)?, s(req.jp)?, s(k)?, s(kp)?);
    let r = |a, b| p.inter(a, b);
    let kk = sk * skp * r(k, kp)?;
    let tau_j = -sj * sk * r(req.j, k)? - sj * skp * r(req.j, kp)? + kk;
    let tau_jp = -sjp * sk * r(req.jp, k)? - sjp * skp * r(req.jp, kp)? + kk;
    let cross = sj * skp * r(req.j, kp)? + sjp * sk * r(req.jp, k)?;
    let tau = if printed { cross } else { kk - cross };
    Ok((tau, tau_j, tau_jp))
}

pub fn limit_of<T: Real>(req: &LimitRequest<'_, T>) -> Result<T> {
    let p = req.params;
    let a = req.aggregates()?;
    let (sj, sjp) = (p.region(req.j)?.sigma, p.region(req.jp)?.sigma);
    let r = p.inter(req.j, req.jp)?;
    let (se2, sg2) = (p.sigma_eps * p.sigma_eps, p.sigma_e * p.sigma_e);
    let (vj, vjp) = (sj * sj, sjp * sjp);
    let cross = sj * sjp * r + sg2;
    let ratio = |num: T, dj: T, djp: T| num / (dj * djp).sqrt();
    let printed = req.form == LimitForm::Printed;
    let two = T::lit(2.0);

    Ok(match req.method {
        Method::Ca => ratio(cross, vj * a.rho_j + se2 * a.eta_j + sg2, vjp * a.rho_jp + se2 * a.eta_jp + sg2),
        Method::Ac | Method::AcTilde => ratio(cross, vj + se2 + sg2, vjp + se2 + sg2),
        Method::Lca => {
            let noise = if printed { sg2 } else { se2 };
            ratio(cross, vj * a.rho_nu + noise * a.eta_nu + sg2, vjp * a.rho_nu + noise * a.eta_nu + sg2)
        }
        Method::R => {
            ratio(cross, vj * a.rho_delta + se2 * a.eta_delta + sg2, vjp * a.rho_delta + se2 * a.eta_delta + sg2)
        }
        Method::Lr => ratio(
            cross,
            vj * a.rho_nu_delta + se2 * a.eta_nu_delta + sg2,
            vjp * a.rho_nu_delta + se2 * a.eta_nu_delta + sg2,
        ),
        Method::D | Method::Ld => {
            let (tau, tj, tjp) = donor_terms(req, printed)?;
            let num = sj * sjp * r + tau;
            match (printed, req.method) {
                (true, Method::D) => ratio(num, vj + two * se2 + tj, vjp + two * se2 + tjp),
                (true, _) => ratio(sj * sjp * r, vj + two * se2, vjp + two * se2),
                (false, Method::D) => ratio(num, vj + se2 + tj, vjp + se2 + tjp),
                (false, _) => ratio(num, vj * a.rho_nu + se2 * a.eta_nu + tj, vjp * a.rho_nu + se2 * a.eta_nu + tjp),
            }
        }
        Method::Rd | Method::Lrd => {
            let (rho, eta) =
                if req.method == Method::Rd { (a.rho_delta, a.eta_delta) } else { (a.rho_nu_delta, a.eta_nu_delta) };
            if printed {
                r / rho
            } else {
                let (tau, tj, tjp) = donor_terms(req, false)?;
                ratio(sj * sjp * r + tau, vj * rho + se2 * eta + tj, vjp * rho + se2 * eta + tjp)
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::CorrelationFunction;
    use approx::assert_relative_eq;

    fn study(k: f64, rmin: f64) -> ModelParams<f64> {
        ModelParams::four_region_study(CorrelationFunction::intra(k, rmin).unwrap())
    }

    fn req(m: Method, p: &ModelParams<f64>) -> LimitRequest<'_, f64> {
        LimitRequest::new(m, p, 0, 1).with_donors(2, 3)
    }

    #[test]
    fn perfect_intra_correlation_gives_r() {
        let p = ModelParams::four_region_study(CorrelationFunction::perfect());
        for m in Method::ALL {
            assert_relative_eq!(limit_of(&req(m, &p)).unwrap(), 0.6, epsilon = 1e-12);
        }
    }

    #[test]
    fn ac_under_local_noise() {
        let p = study(300.0, 0.9).with_noise(1.0, 0.0).unwrap();
        assert_relative_eq!(limit_of(&req(Method::Ac, &p)).unwrap(), 1.2 / 10f64.sqrt(), epsilon = 1e-12);
        assert_relative_eq!(limit_of(&req(Method::Ac, &p)).unwrap(), 0.3795, epsilon = 1e-4);
    }

    #[test]
    fn replicate_difference_model_one() {
        let p = study(300.0, 0.9);
        let got = limit_of(&req(Method::Rd, &p).with_delta(1)).unwrap();
        assert_relative_eq!(got, 0.6 / (299.0 / 300.0), epsilon = 1e-12);
        assert_relative_eq!(got, 0.60201, epsilon = 1e-5);
    }

    #[test]
    fn difference_constant_forms() {
        let p = study(300.0, 0.9).with_noise(1.0, 0.0).unwrap();
        let d = limit_of(&req(Method::D, &p)).unwrap();
        let printed = limit_of(&req(Method::D, &p).with_form(LimitForm::Printed)).unwrap();
        assert_relative_eq!(d, 1.2 / (2.0 * 5.0f64).sqrt(), epsilon = 1e-12);
        assert_relative_eq!(printed, 1.2 / (3.0 * 6.0f64).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn connected_donors_use_tau() {
        let mut p = study(300.0, 0.9);
        // r_{j k'} = 0.2, r_{j' k} = 0.1, r_{k k'} = 0.3.
        for (a, b, v) in [(0, 3, 0.2), (1, 2, 0.1), (2, 3, 0.3)] {
            p.inter_corr[a][b] = v;
            p.inter_corr[b][a] = v;
        }
        let got = limit_of(&req(Method::D, &p)).unwrap();
        let tau = 0.3 - 1.0 * 1.0 * 0.2 - 2.0 * 1.0 * 0.1;
        let tj: f64 = -0.2 + 0.3;
        let tjp = -2.0 * 0.1 + 0.3;
        assert_relative_eq!(got, (1.2 + tau) / ((1.0 + tj) * (4.0 + tjp)).sqrt(), epsilon = 1e-12);
        let printed = limit_of(&req(Method::D, &p).with_form(LimitForm::Printed)).unwrap();
        assert_relative_eq!(printed, (1.2 + 0.2 + 0.2) / ((1.0 + tj) * (4.0 + tjp)).sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn lca_forms_differ_only_in_noise_variance() {
        let p = study(100.0, 0.6).with_noise(1.0, 0.0).unwrap();
        let derived = limit_of(&req(Method::Lca, &p)).unwrap();
        let printed = limit_of(&req(Method::Lca, &p).with_form(LimitForm::Printed)).unwrap();
        assert!(derived < printed);
        let q = p.with_noise(0.0, 0.0).unwrap();
        assert_relative_eq!(limit_of(&req(Method::Lca, &q)).unwrap(), printed, epsilon = 1e-12);
    }

    #[test]
    fn missing_donors_error() {
        let p = study(300.0, 0.9);
        assert!(limit_of(&LimitRequest::new(Method::D, &p, 0, 1)).is_err());
        assert!(limit_of(&LimitRequest::new(Method::Ca, &p, 0, 7)).is_err());
    }
}
