//! Generative model `Y_i(t) = X_i(t) + eps_i(t) + e(t)`.
//!
//! The signal `X` is a zero-mean Gaussian vector over all voxels with
//! covariance `sigma_j^2 rho(|i' - i|)` inside region `j` and
//! `sigma_j sigma_j' r_jj'` across regions. Local noise `eps` has covariance
//! `sigma_eps^2 eta(|i' - i|)` inside each region and is independent across
//! regions (regions sit at least `p` apart). The global noise `e(t)` is one
//! Gaussian scalar per time slice shared by every voxel. Time slices are
//! independent.
//!
//! Sampling factorizes the signal covariance once (Cholesky, with a small
//! diagonal jitter ladder) and reuses the factor for every dataset.

use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::lattice::{region_voxels, uniform_distance, CorrelationFunction, RegionId, RegionSpec, VoxelIndex};
use crate::rng::child_stream;
use crate::scalar::Real;

/// Relative diagonal jitters tried in order when a Cholesky factorization fails.
/// Scalar types coarser than `f64` add one final step at `16 * epsilon`, the
/// rounding level of their own parameters.
pub const JITTER_LADDER: [f64; 4] = [0.0, 1e-12, 1e-10, 1e-8];

fn jitter_ladder<T: Real>() -> Vec<f64> {
    let mut ladder = JITTER_LADDER.to_vec();
    let coarse = 16.0 * T::epsilon().as_f64();
    if coarse > ladder[ladder.len() - 1] {
        ladder.push(coarse);
    }
    ladder
}

const PRODUCT_BLOCK: usize = 128;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelParams<T> {
    pub regions: Vec<RegionSpec<T>>,
    /// Symmetric `J x J` inter-correlation table indexed by region position.
    pub inter_corr: Vec<Vec<T>>,
    pub intra: CorrelationFunction<T>,
    pub sigma_eps: T,
    pub noise_corr: CorrelationFunction<T>,
    pub sigma_e: T,
}

impl<T: Real> ModelParams<T> {
    pub fn new(
        regions: Vec<RegionSpec<T>>,
        inter_corr: Vec<Vec<T>>,
        intra: CorrelationFunction<T>,
        sigma_eps: T,
        noise_corr: CorrelationFunction<T>,
        sigma_e: T,
    ) -> Result<Self> {
        let p = Self { regions, inter_corr, intra, sigma_eps, noise_corr, sigma_e };
        p.validate()?;
        Ok(p)
    }

    /// The four-region planar design: targets of 20x20 (sigma 1) and 40x40
    /// (sigma 2) voxels with inter-correlation 0.6, and two 10x10 donor
    /// regions (sigma 1) uncorrelated with everything. Noise is off and
    /// spatially uncorrelated (`p = 1`).
    pub fn four_region_study(intra: CorrelationFunction<T>) -> Self {
        let regions = layout_along_axis(
            2,
            2,
            &[
                (0, vec![20, 20], T::one()),
                (1, vec![40, 40], T::lit(2.0)),
                (2, vec![10, 10], T::one()),
                (3, vec![10, 10], T::one()),
            ],
        )
        .expect("static layout is valid");
        let mut inter = identity_table(4);
        inter[0][1] = T::lit(0.6);
        inter[1][0] = T::lit(0.6);
        Self::new(regions, inter, intra, T::zero(), CorrelationFunction::iid_noise(), T::zero())
            .expect("static parameters are valid")
    }

    pub fn validate(&self) -> Result<()> {
        let j = self.regions.len();
        if j == 0 {
            return Err(Error::InvalidParameter("no regions".into()));
        }
        let dim = self.regions[0].dim();
        for (a, r) in self.regions.iter().enumerate() {
            r.validate_geometry()?;
            if r.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: r.dim() });
            }
            if !(r.sigma > T::zero()) || !r.sigma.is_finite() {
                return Err(Error::InvalidRegion { id: r.id, reason: "sigma must be positive".into() });
            }
            if self.regions[..a].iter().any(|o| o.id == r.id) {
                return Err(Error::InvalidRegion { id: r.id, reason: "duplicate id".into() });
            }
        }
        let p = self.noise_support() as u64;
        for a in 0..j {
            for b in a + 1..j {
                let d = self.regions[a].distance_to(&self.regions[b])?;
                if d == 0 {
                    return Err(Error::InvalidRegion {
                        id: self.regions[b].id,
                        reason: format!("overlaps region {}", self.regions[a].id),
                    });
                }
                if d < p {
                    return Err(Error::InvalidRegion {
                        id: self.regions[b].id,
                        reason: format!("closer than the noise support p = {p} to region {}", self.regions[a].id),
                    });
                }
            }
        }
        if self.inter_corr.len() != j || self.inter_corr.iter().any(|row| row.len() != j) {
            return Err(Error::InvalidParameter(format!("inter-correlation table must be {j}x{j}")));
        }
        for a in 0..j {
            if self.inter_corr[a][a] != T::one() {
                return Err(Error::InvalidParameter("inter-correlation diagonal must be 1".into()));
            }
            for b in 0..j {
                let v = self.inter_corr[a][b];
                if v != self.inter_corr[b][a] || !(v >= -T::one() && v <= T::one()) {
                    return Err(Error::InvalidParameter(
                        "inter-correlation must be symmetric with entries in [-1, 1]".into(),
                    ));
                }
            }
        }
        if !matches!(self.intra, CorrelationFunction::Intra { .. }) {
            return Err(Error::InvalidParameter("intra must be an intra-correlation function".into()));
        }
        if !matches!(self.noise_corr, CorrelationFunction::Noise { .. }) {
            return Err(Error::InvalidParameter("noise_corr must be a noise correlation function".into()));
        }
        self.intra.validate()?;
        self.noise_corr.validate()?;
        for (name, s) in [("sigma_eps", self.sigma_eps), ("sigma_e", self.sigma_e)] {
            if !(s >= T::zero()) || !s.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0")));
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.regions[0].dim()
    }

    pub fn noise_support(&self) -> usize {
        self.noise_corr.support().unwrap_or(1)
    }

    pub fn voxel_count(&self) -> usize {
        self.regions.iter().map(RegionSpec::voxel_count).sum()
    }

    pub fn region_position(&self, id: RegionId) -> Result<usize> {
        self.regions.iter().position(|r| r.id == id).ok_or(Error::UnknownRegion(id))
    }

    pub fn region(&self, id: RegionId) -> Result<&RegionSpec<T>> {
        self.region_position(id).map(|p| &self.regions[p])
    }

    /// `r_{jk}` by region id.
    pub fn inter(&self, j: RegionId, k: RegionId) -> Result<T> {
        Ok(self.inter_corr[self.region_position(j)?][self.region_position(k)?])
    }

    pub fn with_noise(&self, sigma_eps: T, sigma_e: T) -> Result<Self> {
        let mut p = self.clone();
        p.sigma_eps = sigma_eps;
        p.sigma_e = sigma_e;
        p.validate()?;
        Ok(p)
    }

    /// Voxels of every region, concatenated in region order.
    pub fn voxels(&self) -> Vec<(RegionId, VoxelIndex)> {
        self.regions.iter().flat_map(|r| region_voxels(r).into_iter().map(move |v| (r.id, v))).collect()
    }
}

pub fn identity_table<T: Real>(j: usize) -> Vec<Vec<T>> {
    (0..j).map(|a| (0..j).map(|b| if a == b { T::one() } else { T::zero() }).collect()).collect()
}

/// Place boxes side by side along axis 0, `gap` voxels apart, all starting at
/// 0 on the remaining axes. Consecutive boxes are then exactly `gap` apart in
/// the uniform norm.
pub fn layout_along_axis<T: Copy>(
    dim: usize,
    gap: usize,
    specs: &[(RegionId, Vec<usize>, T)],
) -> Result<Vec<RegionSpec<T>>> {
    if gap == 0 {
        return Err(Error::InvalidParameter("layout gap must be >= 1".into()));
    }
    let mut x = 0i64;
    specs
        .iter()
        .map(|(id, shape, sigma)| {
            if shape.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: shape.len() });
            }
            let mut origin = vec![0i64; dim];
            origin[0] = x;
            x += (shape[0] + gap - 1) as i64;
            RegionSpec::new(*id, VoxelIndex(origin), shape.clone(), *sigma)
        })
        .collect()
}

/// Noise variance for a signal-to-noise ratio in dB relative to the weaker
/// of the two target signals: `10^(-snr/10) * min(sigma_j^2, sigma_j'^2)`.
pub fn snr_to_noise_variance<T: Real>(snr_db: T, sigma_j: T, sigma_jp: T) -> T {
    let floor = (sigma_j * sigma_j).min(sigma_jp * sigma_jp);
    T::lit(10.0).powf(-snr_db / T::lit(10.0)) * floor
}

/// `sigma_eps^2` for a local-noise SNR between targets `j` and `jp`.
pub fn snr_to_sigma_eps<T: Real>(snr_db: T, params: &ModelParams<T>, j: RegionId, jp: RegionId) -> Result<T> {
    Ok(snr_to_noise_variance(snr_db, params.region(j)?.sigma, params.region(jp)?.sigma))
}

/// `sigma_e^2` for a global-noise SNR between targets `j` and `jp`.
pub fn snr_to_sigma_e<T: Real>(snr_db: T, params: &ModelParams<T>, j: RegionId, jp: RegionId) -> Result<T> {
    snr_to_sigma_eps(snr_db, params, j, jp)
}

fn assemble_signal_covariance<T: Real>(params: &ModelParams<T>) -> DMatrix<f64> {
    let voxels = params.voxels();
    let n = voxels.len();
    let pos: Vec<usize> =
        params.regions.iter().enumerate().flat_map(|(p, r)| std::iter::repeat_n(p, r.voxel_count())).collect();
    let sig: Vec<f64> = params.regions.iter().map(|r| r.sigma.as_f64()).collect();
    let max_d = 1 + params.regions.iter().map(|r| r.shape.iter().copied().max().unwrap_or(1)).max().unwrap_or(1);
    let rho: Vec<f64> = (0..max_d as u64).map(|d| params.intra.eval(d).as_f64()).collect();
    DMatrix::from_fn(n, n, |a, b| {
        let (pa, pb) = (pos[a], pos[b]);
        if pa == pb {
            let d = uniform_distance(&voxels[a].1, &voxels[b].1).expect("same dimension") as usize;
            sig[pa] * sig[pa] * rho[d]
        } else {
            sig[pa] * sig[pb] * params.inter_corr[pa][pb].as_f64()
        }
    })
}

fn cholesky_with_jitter(m: &DMatrix<f64>, ladder: &[f64]) -> Option<(DMatrix<f64>, f64)> {
    let n = m.nrows();
    let scale = (m.trace() / n.max(1) as f64).abs().max(f64::MIN_POSITIVE);
    ladder.iter().find_map(|&rel| {
        let mut a = m.clone();
        for i in 0..n {
            a[(i, i)] += rel * scale;
        }
        nalgebra::Cholesky::new(a).map(|c| (c.l(), rel))
    })
}

fn describe<T: Real>(params: &ModelParams<T>) -> String {
    format!(
        "intra {:?}, {} regions, {} voxels, relative jitter up to {:e}",
        params.intra,
        params.regions.len(),
        params.voxel_count(),
        jitter_ladder::<T>().last().copied().unwrap_or_default()
    )
}

/// Joint signal covariance over all voxels (region order, then the documented
/// voxel order), validated by a Cholesky factorization.
pub fn build_signal_covariance<T: Real>(params: &ModelParams<T>) -> Result<DMatrix<f64>> {
    params.validate()?;
    let m = assemble_signal_covariance(params);
    if cholesky_with_jitter(&m, &jitter_ladder::<T>()).is_none() {
        return Err(Error::NotPositiveSemidefinite(describe(params)));
    }
    Ok(m)
}

/// What to do when the signal covariance cannot be factorized.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsdRepair {
    /// Fail with [`Error::NotPositiveSemidefinite`].
    #[default]
    Strict,
    /// Replace the correlation matrix by its eigenvalue-clipped projection,
    /// rescaled to unit diagonal, then factorize.
    ClipEigenvalues,
}

/// Diagnostics of an eigenvalue-clipping repair, on the correlation scale.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RepairReport {
    pub min_eigenvalue: f64,
    pub clipped: usize,
    pub max_abs_change: f64,
}

/// Upper-triangular factor `U` with `U^T U = Sigma`.
#[derive(Clone, Debug)]
pub struct SignalFactor {
    upper: DMatrix<f64>,
    pub jitter: f64,
    pub repair: Option<RepairReport>,
}

impl SignalFactor {
    pub fn dim(&self) -> usize {
        self.upper.nrows()
    }

    /// `Sigma` as actually sampled (after jitter or repair).
    pub fn effective_covariance(&self) -> DMatrix<f64> {
        self.upper.transpose() * &self.upper
    }

    /// `z * U` for a `T x n` matrix of independent normals, exploiting the
    /// triangular shape block by block.
    fn correlate(&self, z: &DMatrix<f64>) -> DMatrix<f64> {
        let n = self.dim();
        let mut out = DMatrix::zeros(z.nrows(), n);
        let mut i0 = 0;
        while i0 < n {
            let w = PRODUCT_BLOCK.min(n - i0);
            let i1 = i0 + w;
            out.columns_mut(i0, w).gemm(1.0, &z.columns(0, i1), &self.upper.view((0, i0), (i1, w)), 0.0);
            i0 = i1;
        }
        out
    }
}

fn clip_to_psd(cov: &DMatrix<f64>) -> (DMatrix<f64>, RepairReport) {
    let n = cov.nrows();
    let sd: Vec<f64> = (0..n).map(|i| cov[(i, i)].sqrt()).collect();
    let corr = DMatrix::from_fn(n, n, |a, b| cov[(a, b)] / (sd[a] * sd[b]));
    let eig = SymmetricEigen::new(corr.clone());
    let min_eigenvalue = eig.eigenvalues.min();
    let clipped = eig.eigenvalues.iter().filter(|&&l| l < 0.0).count();
    let vals = eig.eigenvalues.map(|l| l.max(0.0));
    let mut fixed = &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose();
    let d: Vec<f64> = (0..n).map(|i| fixed[(i, i)].sqrt()).collect();
    let mut max_abs_change = 0.0f64;
    for a in 0..n {
        for b in 0..n {
            let c = if a == b { 1.0 } else { 0.5 * (fixed[(a, b)] + fixed[(b, a)]) / (d[a] * d[b]) };
            max_abs_change = max_abs_change.max((c - corr[(a, b)]).abs());
            fixed[(a, b)] = c;
        }
    }
    let out = DMatrix::from_fn(n, n, |a, b| fixed[(a, b)] * sd[a] * sd[b]);
    (out, RepairReport { min_eigenvalue, clipped, max_abs_change })
}

pub fn factor_signal_covariance<T: Real>(params: &ModelParams<T>, repair: PsdRepair) -> Result<SignalFactor> {
    params.validate()?;
    let m = assemble_signal_covariance(params);
    if let Some((l, jitter)) = cholesky_with_jitter(&m, &jitter_ladder::<T>()) {
        return Ok(SignalFactor { upper: l.transpose(), jitter, repair: None });
    }
    match repair {
        PsdRepair::Strict => Err(Error::NotPositiveSemidefinite(describe(params))),
        PsdRepair::ClipEigenvalues => {
            let (fixed, report) = clip_to_psd(&m);
            let (l, jitter) = cholesky_with_jitter(&fixed, &jitter_ladder::<T>()).ok_or_else(|| {
                Error::NotPositiveSemidefinite(format!("{} (after eigenvalue clipping)", describe(params)))
            })?;
            Ok(SignalFactor { upper: l.transpose(), jitter, repair: Some(report) })
        }
    }
}

/// Lower Cholesky factor of the local-noise correlation inside one region;
/// `None` when the noise is spatially uncorrelated.
fn noise_factor<T: Real>(params: &ModelParams<T>, region: &RegionSpec<T>) -> Result<Option<DMatrix<f64>>> {
    if params.noise_support() <= 1 {
        return Ok(None);
    }
    let vox = region_voxels(region);
    let m = DMatrix::from_fn(vox.len(), vox.len(), |a, b| {
        params.noise_corr.eval(uniform_distance(&vox[a], &vox[b]).expect("same dimension")).as_f64()
    });
    cholesky_with_jitter(&m, &jitter_ladder::<T>())
        .map(|(l, _)| Some(l))
        .ok_or_else(|| Error::NotPositiveSemidefinite(format!("local noise {:?}", params.noise_corr)))
}

/// Draws datasets from a fixed parameter set, reusing one signal factorization.
///
/// Randomness for a dataset with seed `s` comes from three independent
/// streams: `split(s, 0)` for the signal, `split(s, 1)` for the local noise
/// and `split(s, 2)` for the global noise. Each stream is consumed time slice
/// by time slice (voxels in dataset order within a slice), so two parameter
/// sets sharing the signal part produce the same `X` for the same seed.
#[derive(Clone, Debug)]
pub struct Simulator<T> {
    params: ModelParams<T>,
    factor: Arc<SignalFactor>,
    noise_factors: Vec<Option<DMatrix<f64>>>,
}

impl<T: Real> Simulator<T> {
    pub fn new(params: ModelParams<T>, repair: PsdRepair) -> Result<Self> {
        let factor = Arc::new(factor_signal_covariance(&params, repair)?);
        Self::with_factor(params, factor)
    }

    /// Reuse a factor computed for the same regions, inter-correlations and
    /// intra-correlation (noise settings may differ).
    pub fn with_factor(params: ModelParams<T>, factor: Arc<SignalFactor>) -> Result<Self> {
        params.validate()?;
        if factor.dim() != params.voxel_count() {
            return Err(Error::DimensionMismatch { expected: params.voxel_count(), found: factor.dim() });
        }
        let noise_factors = params.regions.iter().map(|r| noise_factor(&params, r)).collect::<Result<_>>()?;
        Ok(Self { params, factor, noise_factors })
    }

    pub fn params(&self) -> &ModelParams<T> {
        &self.params
    }

    pub fn factor(&self) -> &Arc<SignalFactor> {
        &self.factor
    }

    pub fn simulate(&self, t_len: usize, seed: u64) -> Result<Dataset<T>> {
        if t_len < 2 {
            return Err(Error::SeriesTooShort(t_len));
        }
        let n = self.factor.dim();
        let mut rng = child_stream(seed, &[0]);
        let mut z = DMatrix::<f64>::zeros(t_len, n);
        for t in 0..t_len {
            for v in 0..n {
                z[(t, v)] = StandardNormal.sample(&mut rng);
            }
        }
        let mut y = self.factor.correlate(&z);

        let sigma_eps = self.params.sigma_eps.as_f64();
        if sigma_eps > 0.0 {
            let mut rng = child_stream(seed, &[1]);
            let mut offset = 0;
            let mut w: Vec<f64> = Vec::new();
            for t in 0..t_len {
                offset = 0;
                for (region, factor) in self.params.regions.iter().zip(&self.noise_factors) {
                    let nj = region.voxel_count();
                    w.clear();
                    w.extend((0..nj).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
                    for a in 0..nj {
                        let eps: f64 = match factor {
                            None => w[a],
                            Some(l) => (0..=a).map(|b| l[(a, b)] * w[b]).sum(),
                        };
                        y[(t, offset + a)] += sigma_eps * eps;
                    }
                    offset += nj;
                }
            }
            debug_assert_eq!(offset, n);
        }

        let sigma_e = self.params.sigma_e.as_f64();
        if sigma_e > 0.0 {
            let mut rng = child_stream(seed, &[2]);
            for t in 0..t_len {
                let g: f64 = StandardNormal.sample(&mut rng);
                for v in 0..n {
                    y[(t, v)] += sigma_e * g;
                }
            }
        }

        let values = y.as_slice().iter().map(|&x| T::lit(x)).collect();
        Dataset::new(self.params.clone(), t_len, seed, values)
    }
}

/// One-shot simulation with strict covariance validation.
pub fn simulate<T: Real>(params: &ModelParams<T>, t_len: usize, seed: u64) -> Result<Dataset<T>> {
    Simulator::new(params.clone(), PsdRepair::Strict)?.simulate(t_len, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{sample_cor, sample_var};
    use approx::assert_relative_eq;

    fn micro(shapes: &[[usize; 2]], sigmas: &[f64], r: f64) -> ModelParams<f64> {
        let specs: Vec<_> =
            shapes.iter().zip(sigmas).enumerate().map(|(i, (s, &sig))| (i as RegionId, s.to_vec(), sig)).collect();
        let regions = layout_along_axis(2, 2, &specs).unwrap();
        let mut inter = identity_table(regions.len());
        if regions.len() > 1 {
            inter[0][1] = r;
            inter[1][0] = r;
        }
        ModelParams::new(
            regions,
            inter,
            CorrelationFunction::intra(300.0, 0.9).unwrap(),
            0.0,
            CorrelationFunction::iid_noise(),
            0.0,
        )
        .unwrap()
    }

    #[test]
    fn two_single_voxel_regions() {
        let p = micro(&[[1, 1], [1, 1]], &[1.0, 1.0], 0.6);
        let c = build_signal_covariance(&p).unwrap();
        assert_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 0.6, 0.6, 1.0]));
    }

    #[test]
    fn one_two_voxel_region() {
        let mut p = micro(&[[2, 1]], &[1.0], 0.0);
        p.intra = CorrelationFunction::intra(100.0, 0.5).unwrap();
        let c = build_signal_covariance(&p).unwrap();
        assert_relative_eq!(c, DMatrix::from_row_slice(2, 2, &[1.0, 0.99, 0.99, 1.0]), epsilon = 1e-15);
    }

    #[test]
    fn validation_errors() {
        let p = micro(&[[2, 2], [2, 2]], &[1.0, 1.0], 0.6);
        let mut q = p.clone();
        q.inter_corr[0][1] = 0.5;
        assert!(q.validate().is_err());
        let mut q = p.clone();
        q.regions[1].origin = VoxelIndex::new([1, 0]);
        assert!(q.validate().is_err());
        let mut q = p.clone();
        q.noise_corr = CorrelationFunction::noise(vec![1.0, 0.2, 0.1]).unwrap();
        assert!(q.validate().is_err(), "gap 2 < p = 3");
        assert!(p.with_noise(-1.0, 0.0).is_err());
    }

    #[test]
    fn impossible_inter_correlation_is_rejected() {
        // Two perfectly coherent regions cannot be correlated -1 with a third at +1 each.
        let mut p = micro(&[[1, 1], [1, 1], [1, 1]], &[1.0, 1.0, 1.0], 0.0);
        p.inter_corr = vec![vec![1.0, 1.0, 1.0], vec![1.0, 1.0, -1.0], vec![1.0, -1.0, 1.0]];
        assert!(matches!(build_signal_covariance(&p), Err(Error::NotPositiveSemidefinite(_))));
    }

    #[test]
    fn snr_conversions() {
        assert_relative_eq!(snr_to_noise_variance(0.0, 1.0, 2.0), 1.0);
        assert_relative_eq!(snr_to_noise_variance(10.0, 1.0, 2.0), 0.1, epsilon = 1e-15);
        assert_relative_eq!(snr_to_noise_variance(-10.0, 1.0, 2.0), 10.0, epsilon = 1e-12);
        let p = ModelParams::<f64>::four_region_study(CorrelationFunction::perfect());
        assert_relative_eq!(snr_to_sigma_eps(0.0, &p, 0, 1).unwrap(), 1.0);
        assert_relative_eq!(snr_to_sigma_e(10.0, &p, 1, 0).unwrap(), 0.1, epsilon = 1e-15);
    }

    #[test]
    fn single_voxel_variance() {
        let p = micro(&[[1, 1]], &[1.0], 0.0);
        let d = simulate(&p, 100_000, 3).unwrap();
        let v = sample_var(d.series(0)).unwrap();
        // sd of the sample variance of N(0,1) is sqrt(2/T).
        assert!((v - 1.0).abs() < 3.0 * (2.0f64 / 1e5).sqrt(), "{v}");
    }

    #[test]
    fn same_seed_same_dataset() {
        let p = micro(&[[3, 3], [2, 2]], &[1.0, 2.0], 0.6).with_noise(0.5, 0.7).unwrap();
        let a = simulate(&p, 50, 11).unwrap();
        let b = simulate(&p, 50, 11).unwrap();
        assert_eq!(a.values(), b.values());
        let c = simulate(&p, 50, 12).unwrap();
        assert_ne!(a.values(), c.values());
    }

    #[test]
    fn signal_shared_across_noise_levels() {
        let p = micro(&[[3, 3], [2, 2]], &[1.0, 2.0], 0.6);
        let quiet = simulate(&p, 40, 5).unwrap();
        let loud = simulate(&p.with_noise(0.0, 3.0).unwrap(), 40, 5).unwrap();
        // Adding the global term changes every voxel by the same series.
        let shift: Vec<f64> = (0..40).map(|t| loud.series(0)[t] - quiet.series(0)[t]).collect();
        for v in 1..quiet.voxel_count() {
            for t in 0..40 {
                assert_relative_eq!(loud.series(v)[t] - quiet.series(v)[t], shift[t], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn lag_one_autocorrelation_vanishes() {
        let p = micro(&[[2, 2]], &[1.0], 0.0).with_noise(0.5, 0.5).unwrap();
        let t = 20_000;
        let d = simulate(&p, t, 8).unwrap();
        for v in 0..d.voxel_count() {
            let s = d.series(v);
            let r = sample_cor(&s[..t - 1], &s[1..]).unwrap();
            assert!(r.abs() < 3.0 / (t as f64).sqrt(), "voxel {v}: {r}");
        }
    }

    #[test]
    fn correlated_local_noise_factor() {
        let mut p = micro(&[[3, 3]], &[1.0], 0.0).with_noise(1.0, 0.0).unwrap();
        p.noise_corr = CorrelationFunction::noise(vec![1.0, 0.3]).unwrap();
        let sim = Simulator::new(p, PsdRepair::Strict).unwrap();
        assert!(sim.noise_factors[0].is_some());
    }

    #[test]
    fn small_study_regions_factorize_without_repair() {
        // 20x20 under either intra model and 40x40 under the second are PSD
        // (the linear part of rho is never clipped at these sizes).
        for (k, rmin, side) in [(300.0, 0.9, 20), (100.0, 0.6, 20), (100.0, 0.6, 40)] {
            let mut p = micro(&[[side, side]], &[1.0], 0.0);
            p.intra = CorrelationFunction::intra(k, rmin).unwrap();
            let f = factor_signal_covariance(&p, PsdRepair::Strict).unwrap();
            assert!(f.repair.is_none());
        }
    }

    #[test]
    fn clipping_repairs_and_preserves_unit_diagonal() {
        // A 3x3 "correlation" with an impossible triangle.
        let m = DMatrix::from_row_slice(3, 3, &[1.0, 0.9, -0.9, 0.9, 1.0, 0.9, -0.9, 0.9, 1.0]);
        let (fixed, rep) = clip_to_psd(&m);
        assert!(rep.min_eigenvalue < 0.0);
        assert_eq!(rep.clipped, 1);
        for i in 0..3 {
            assert_relative_eq!(fixed[(i, i)], 1.0, epsilon = 1e-12);
        }
        assert!(cholesky_with_jitter(&fixed, &JITTER_LADDER).is_some());
    }
}
