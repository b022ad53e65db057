//! Integer-lattice geometry.
//!
//! Voxels live on `Z^d` (`d` in 1..=3) and distances are taken in the uniform
//! (max) norm. Regions are axis-aligned boxes. Voxels of a region are
//! enumerated with axis 0 varying fastest, so the 2x2 box at the origin lists
//! `(0,0), (1,0), (0,1), (1,1)`.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Field;

pub type RegionId = u32;

pub const MAX_DIM: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct VoxelIndex(pub Vec<i64>);

impl VoxelIndex {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        Self(coords.into())
    }

    pub fn origin(dim: usize) -> Self {
        Self(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }
}

impl From<&[i64]> for VoxelIndex {
    fn from(c: &[i64]) -> Self {
        Self(c.to_vec())
    }
}

/// Uniform-norm distance `max_c |a_c - b_c|`.
pub fn uniform_distance(a: &VoxelIndex, b: &VoxelIndex) -> Result<u64> {
    if a.dim() != b.dim() {
        return Err(Error::DimensionMismatch { expected: a.dim(), found: b.dim() });
    }
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x.abs_diff(*y)).max().unwrap_or(0))
}

/// A rectangular block of voxels carrying one signal standard deviation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec<T> {
    pub id: RegionId,
    pub origin: VoxelIndex,
    pub shape: Vec<usize>,
    pub sigma: T,
}

impl<T> RegionSpec<T> {
    pub fn new(id: RegionId, origin: VoxelIndex, shape: Vec<usize>, sigma: T) -> Result<Self> {
        let spec = Self { id, origin, shape, sigma };
        spec.validate_geometry()?;
        Ok(spec)
    }

    pub(crate) fn validate_geometry(&self) -> Result<()> {
        let d = self.shape.len();
        if d == 0 || d > MAX_DIM {
            return Err(Error::InvalidRegion { id: self.id, reason: format!("dimension {d} outside 1..={MAX_DIM}") });
        }
        if self.origin.dim() != d {
            return Err(Error::DimensionMismatch { expected: d, found: self.origin.dim() });
        }
        if self.shape.contains(&0) {
            return Err(Error::InvalidRegion { id: self.id, reason: "empty side".into() });
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn voxel_count(&self) -> usize {
        self.shape.iter().product()
    }

    /// Linear position of a region-local coordinate (axis 0 fastest).
    pub fn local_index(&self, local: &[usize]) -> usize {
        local.iter().zip(&self.shape).rev().fold(0, |acc, (&c, &s)| acc * s + c)
    }

    pub fn local_coords(&self, mut index: usize) -> Vec<usize> {
        self.shape
            .iter()
            .map(|&s| {
                let c = index % s;
                index /= s;
                c
            })
            .collect()
    }

    pub fn global(&self, local: &[usize]) -> VoxelIndex {
        VoxelIndex(self.origin.0.iter().zip(local).map(|(o, &c)| o + c as i64).collect())
    }

    /// Region-local coordinates of a global voxel, if it lies inside.
    pub fn to_local(&self, voxel: &VoxelIndex) -> Option<Vec<usize>> {
        if voxel.dim() != self.dim() {
            return None;
        }
        voxel
            .0
            .iter()
            .zip(&self.origin.0)
            .zip(&self.shape)
            .map(|((v, o), &s)| {
                let c = v - o;
                (c >= 0 && (c as usize) < s).then_some(c as usize)
            })
            .collect()
    }

    /// Smallest uniform distance between a voxel of `self` and one of `other`.
    pub fn distance_to<U>(&self, other: &RegionSpec<U>) -> Result<u64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        let gap = (0..self.dim())
            .map(|c| {
                let (alo, ahi) = (self.origin.0[c], self.origin.0[c] + self.shape[c] as i64 - 1);
                let (blo, bhi) = (other.origin.0[c], other.origin.0[c] + other.shape[c] as i64 - 1);
                (blo - ahi).max(alo - bhi).max(0) as u64
            })
            .max()
            .unwrap_or(0);
        Ok(gap)
    }
}

/// All voxels of a region in the documented order.
pub fn region_voxels<T>(spec: &RegionSpec<T>) -> Vec<VoxelIndex> {
    (0..spec.voxel_count()).map(|i| spec.global(&spec.local_coords(i))).collect()
}

/// A `(2nu+1)^d` block of voxels around `center`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Neighborhood {
    pub center: VoxelIndex,
    pub nu: usize,
    pub region_id: RegionId,
}

impl Neighborhood {
    pub fn len(&self) -> usize {
        (2 * self.nu + 1).pow(self.center.dim() as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn side(&self) -> usize {
        2 * self.nu + 1
    }

    /// Lowest corner of the block.
    pub fn corner(&self) -> VoxelIndex {
        VoxelIndex(self.center.0.iter().map(|c| c - self.nu as i64).collect())
    }

    pub fn voxels(&self) -> Vec<VoxelIndex> {
        let corner = self.corner();
        let d = corner.dim();
        let side = self.side();
        (0..self.len())
            .map(|mut i| {
                VoxelIndex(
                    (0..d)
                        .map(|c| {
                            let off = i % side;
                            i /= side;
                            corner.0[c] + off as i64
                        })
                        .collect(),
                )
            })
            .collect()
    }
}

/// Number of centers whose full `nu`-ball fits inside a box of the given shape.
pub fn admissible_center_count(shape: &[usize], nu: usize) -> usize {
    shape.iter().map(|&s| s.saturating_sub(2 * nu)).product()
}

fn too_small<T>(region: &RegionSpec<T>, what: String) -> Error {
    Error::RegionTooSmall { id: region.id, what }
}

/// Draw a `nu`-neighborhood uniformly among those contained in `region`.
///
/// Consumes one uniform integer per axis, axis 0 first.
pub fn sample_neighborhood<T, R: Rng + ?Sized>(region: &RegionSpec<T>, nu: usize, rng: &mut R) -> Result<Neighborhood> {
    if admissible_center_count(&region.shape, nu) == 0 {
        return Err(too_small(region, format!("a {nu}-neighborhood")));
    }
    let local: Vec<usize> = region.shape.iter().map(|&s| nu + rng.random_range(0..s - 2 * nu)).collect();
    Ok(Neighborhood { center: region.global(&local), nu, region_id: region.id })
}

/// Centre offset between two `nu`-balls whose uniform (ball-to-ball) distance is `delta`.
pub fn pair_center_offset(nu: usize, delta: usize) -> usize {
    2 * nu + delta
}

fn pair_counts_per_axis(shape: &[usize], nu: usize, delta: usize) -> Vec<usize> {
    let reach = 4 * nu + delta;
    (0..shape.len())
        .map(|axis| {
            shape
                .iter()
                .enumerate()
                .map(|(c, &s)| if c == axis { s.saturating_sub(reach) } else { s.saturating_sub(2 * nu) })
                .product()
        })
        .collect()
}

/// Number of ordered pairs of `nu`-balls inside `shape` displaced along one
/// axis so that their ball-to-ball uniform distance is exactly `delta`.
pub fn admissible_pair_count(shape: &[usize], nu: usize, delta: usize) -> usize {
    2 * pair_counts_per_axis(shape, nu, delta).iter().sum::<usize>()
}

/// Draw an ordered pair of `nu`-neighborhoods of `region` at ball distance
/// `delta`, displaced along a coordinate axis.
///
/// The pair is uniform over all admissible ordered configurations: the axis is
/// drawn with probability proportional to its number of placements, then the
/// lower centre uniformly, then the orientation.
pub fn sample_neighborhood_pair<T, R: Rng + ?Sized>(
    region: &RegionSpec<T>,
    nu: usize,
    delta: usize,
    rng: &mut R,
) -> Result<(Neighborhood, Neighborhood)> {
    let per_axis = pair_counts_per_axis(&region.shape, nu, delta);
    let total: usize = per_axis.iter().sum();
    if total == 0 {
        return Err(too_small(region, format!("two {nu}-neighborhoods at distance {delta}")));
    }
    let mut pick = rng.random_range(0..total);
    let axis = per_axis
        .iter()
        .position(|&n| {
            if pick < n {
                true
            } else {
                pick -= n;
                false
            }
        })
        .expect("pick < total");
    let offset = pair_center_offset(nu, delta);
    let lower: Vec<usize> = region
        .shape
        .iter()
        .enumerate()
        .map(|(c, &s)| {
            let span = if c == axis { s - 4 * nu - delta } else { s - 2 * nu };
            nu + rng.random_range(0..span)
        })
        .collect();
    let mut upper = lower.clone();
    upper[axis] += offset;
    let a = Neighborhood { center: region.global(&lower), nu, region_id: region.id };
    let b = Neighborhood { center: region.global(&upper), nu, region_id: region.id };
    Ok(if rng.random_bool(0.5) { (b, a) } else { (a, b) })
}

/// Correlation as a function of uniform distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CorrelationFunction<T> {
    /// `rho_d = max(1 - d / k_max, r_min)`.
    Intra { k_max: T, r_min: T },
    /// `eta_d = weights[d]` for `d < p = weights.len()`, zero beyond.
    Noise { weights: Vec<T> },
}

impl<T: Field> CorrelationFunction<T> {
    pub fn intra(k_max: T, r_min: T) -> Result<Self> {
        let f = Self::Intra { k_max, r_min };
        f.validate()?;
        Ok(f)
    }

    pub fn noise(weights: Vec<T>) -> Result<Self> {
        let f = Self::Noise { weights };
        f.validate()?;
        Ok(f)
    }

    /// Spatially uncorrelated noise (`p = 1`).
    pub fn iid_noise() -> Self {
        Self::Noise { weights: vec![T::one()] }
    }

    /// The constant function 1 (perfect intra-correlation).
    pub fn perfect() -> Self {
        Self::Intra { k_max: T::one(), r_min: T::one() }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Self::Intra { k_max, r_min } => {
                if !(*k_max > T::zero()) {
                    return Err(Error::InvalidParameter("k_max must be positive".into()));
                }
                if !(*r_min > T::zero() && *r_min <= T::one()) {
                    return Err(Error::InvalidParameter("r_min must lie in (0, 1]".into()));
                }
            }
            Self::Noise { weights } => {
                if weights.first() != Some(&T::one()) {
                    return Err(Error::InvalidParameter("noise correlation needs eta_0 = 1".into()));
                }
                let lo = T::zero() - T::one();
                if weights.iter().any(|w| !(*w >= lo && *w <= T::one())) {
                    return Err(Error::InvalidParameter("noise weights must lie in [-1, 1]".into()));
                }
            }
        }
        Ok(())
    }

    pub fn eval(&self, d: u64) -> T {
        match self {
            Self::Intra { k_max, r_min } => (T::one() - T::from_count(d) / *k_max).max_of(*r_min),
            Self::Noise { weights } => {
                usize::try_from(d).ok().and_then(|d| weights.get(d).copied()).unwrap_or_else(T::zero)
            }
        }
    }

    /// Compact support `p` of a noise correlation; `None` for intra kinds.
    pub fn support(&self) -> Option<usize> {
        match self {
            Self::Intra { .. } => None,
            Self::Noise { weights } => Some(weights.len()),
        }
    }
}

/// Index sets over which [`aggregated_correlation`] averages.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AggregationScope {
    /// One `nu`-ball: the `rho-bar_nu` / `eta-bar_nu` aggregates.
    Neighborhood { nu: usize, dim: usize },
    /// A whole region box.
    Region { shape: Vec<usize> },
    /// Two `nu`-balls displaced along an axis at ball distance `delta`
    /// (cross pairs only).
    NeighborhoodPair { nu: usize, delta: usize, dim: usize },
}

/// Exact mean of `corr(|i' - i|)` over the ordered pairs of a scope.
pub fn aggregated_correlation<T: Field>(scope: &AggregationScope, corr: &CorrelationFunction<T>) -> T {
    match scope {
        AggregationScope::Neighborhood { nu, dim } => {
            let shape = vec![2 * nu + 1; *dim];
            box_pair_mean(&shape, &shape, &vec![0; *dim], corr)
        }
        AggregationScope::Region { shape } => box_pair_mean(shape, shape, &vec![0; shape.len()], corr),
        AggregationScope::NeighborhoodPair { nu, delta, dim } => {
            let shape = vec![2 * nu + 1; *dim];
            let mut shift = vec![0i64; *dim];
            shift[0] = pair_center_offset(*nu, *delta) as i64;
            box_pair_mean(&shape, &shape, &shift, corr)
        }
    }
}

/// Histogram of uniform distances over ordered pairs `(a, b)` with `a` in the
/// box `[0, a_shape)` and `b` in `shift + [0, b_shape)`.
///
/// Works on difference vectors: along each axis the number of pairs with a
/// given coordinate difference is an interval overlap length, and the counts
/// multiply across axes.
pub fn box_pair_distance_counts(a_shape: &[usize], b_shape: &[usize], shift: &[i64]) -> BTreeMap<u64, u64> {
    let d = a_shape.len();
    assert_eq!(b_shape.len(), d);
    assert_eq!(shift.len(), d);
    let axes: Vec<Vec<(u64, u64)>> = (0..d)
        .map(|c| {
            let (a, b, s) = (a_shape[c] as i64, b_shape[c] as i64, shift[c]);
            (s - (a - 1)..=s + (b - 1))
                .filter_map(|diff| {
                    let n = (a.min(s + b - diff) - 0i64.max(s - diff)).max(0);
                    (n > 0).then_some((diff.unsigned_abs(), n as u64))
                })
                .collect()
        })
        .collect();
    let mut hist = BTreeMap::new();
    let mut idx = vec![0usize; d];
    loop {
        let (dist, count) =
            idx.iter().enumerate().fold((0u64, 1u64), |(m, n), (c, &k)| (m.max(axes[c][k].0), n * axes[c][k].1));
        *hist.entry(dist).or_insert(0) += count;
        let mut c = 0;
        loop {
            if c == d {
                return hist;
            }
            idx[c] += 1;
            if idx[c] < axes[c].len() {
                break;
            }
            idx[c] = 0;
            c += 1;
        }
    }
}

pub fn box_pair_mean<T: Field>(
    a_shape: &[usize],
    b_shape: &[usize],
    shift: &[i64],
    corr: &CorrelationFunction<T>,
) -> T {
    let pairs = (a_shape.iter().product::<usize>() * b_shape.iter().product::<usize>()) as u64;
    let total = box_pair_distance_counts(a_shape, b_shape, shift)
        .into_iter()
        .fold(T::zero(), |acc, (dist, n)| acc + T::from_count(n) * corr.eval(dist));
    total / T::from_count(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use num_rational::Rational64;

    fn region(shape: &[usize]) -> RegionSpec<f64> {
        RegionSpec::new(0, VoxelIndex::origin(shape.len()), shape.to_vec(), 1.0).unwrap()
    }

    #[test]
    fn uniform_distance_cases() {
        let v = |c: &[i64]| VoxelIndex::from(c);
        assert_eq!(uniform_distance(&v(&[0, 0]), &v(&[0, 0])).unwrap(), 0);
        assert_eq!(uniform_distance(&v(&[0, 0]), &v(&[3, 1])).unwrap(), 3);
        assert_eq!(uniform_distance(&v(&[2, 5]), &v(&[5, 2])).unwrap(), 3);
        assert!(matches!(uniform_distance(&v(&[0, 0]), &v(&[0, 0, 0])), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn enumeration_order() {
        let one = region(&[1, 1]);
        assert_eq!(region_voxels(&one), vec![VoxelIndex::new([0, 0])]);
        let two = region(&[2, 2]);
        let expect: Vec<_> = [[0, 0], [1, 0], [0, 1], [1, 1]].iter().map(|c| VoxelIndex::new(*c)).collect();
        assert_eq!(region_voxels(&two), expect);
        assert_eq!(region_voxels(&region(&[20, 20])).len(), 400);
        for i in 0..400 {
            let spec = region(&[20, 20]);
            assert_eq!(spec.local_index(&spec.local_coords(i)), i);
        }
    }

    #[test]
    fn neighborhood_sampling() {
        let r = region(&[20, 20]);
        let mut rng = stream(1);
        let n0 = sample_neighborhood(&r, 0, &mut rng).unwrap();
        assert_eq!(n0.voxels().len(), 1);
        assert_eq!(admissible_center_count(&r.shape, 1), 324);
        for _ in 0..200 {
            let n = sample_neighborhood(&r, 1, &mut rng).unwrap();
            assert_eq!(n.voxels().len(), 9);
            assert!(n.voxels().iter().all(|v| r.to_local(v).is_some()));
        }
        assert!(matches!(sample_neighborhood(&r, 10, &mut rng), Err(Error::RegionTooSmall { .. })));
    }

    #[test]
    fn admissible_centres_match_enumeration() {
        // Brute force: a centre is admissible when every voxel of its ball is inside.
        let r = region(&[20, 20]);
        let brute = region_voxels(&r)
            .iter()
            .filter(|c| {
                let nb = Neighborhood { center: (*c).clone(), nu: 1, region_id: 0 };
                nb.voxels().iter().all(|v| r.to_local(v).is_some())
            })
            .count();
        assert_eq!(brute, 324);
    }

    #[test]
    fn pair_sampling_respects_distance() {
        let r = region(&[9, 12]);
        let mut rng = stream(5);
        for (nu, delta) in [(0, 1), (1, 1), (1, 2), (0, 3)] {
            for _ in 0..100 {
                let (a, b) = sample_neighborhood_pair(&r, nu, delta, &mut rng).unwrap();
                let (va, vb) = (a.voxels(), b.voxels());
                assert!(va.iter().chain(&vb).all(|v| r.to_local(v).is_some()));
                let min =
                    va.iter().flat_map(|x| vb.iter().map(move |y| uniform_distance(x, y).unwrap())).min().unwrap();
                assert_eq!(min as usize, delta);
            }
        }
        assert!(sample_neighborhood_pair(&region(&[3, 3]), 1, 1, &mut rng).is_err());
    }

    #[test]
    fn pair_count_matches_enumeration() {
        let r = region(&[8, 6]);
        let (nu, delta) = (1usize, 1usize);
        let off = pair_center_offset(nu, delta) as i64;
        let inside = |c: &[i64]| c.iter().zip(&r.shape).all(|(&x, &s)| x >= nu as i64 && x + (nu as i64) < s as i64);
        let mut brute = 0;
        for x in 0..8i64 {
            for y in 0..6i64 {
                for (dx, dy) in [(off, 0), (-off, 0), (0, off), (0, -off)] {
                    if inside(&[x, y]) && inside(&[x + dx, y + dy]) {
                        brute += 1;
                    }
                }
            }
        }
        assert_eq!(admissible_pair_count(&r.shape, nu, delta), brute);
    }

    fn brute_force_mean(a: &[VoxelIndex], b: &[VoxelIndex], f: &CorrelationFunction<Rational64>) -> Rational64 {
        let mut s = Rational64::from_integer(0);
        for x in a {
            for y in b {
                s += f.eval(uniform_distance(x, y).unwrap());
            }
        }
        s / Rational64::from_integer((a.len() * b.len()) as i64)
    }

    fn model1() -> CorrelationFunction<Rational64> {
        CorrelationFunction::intra(Rational64::from_integer(300), Rational64::new(9, 10)).unwrap()
    }

    #[test]
    fn rho_bar_one_model1_exact() {
        let v = aggregated_correlation(&AggregationScope::Neighborhood { nu: 1, dim: 2 }, &model1());
        let expect = (Rational64::from_integer(9)
            + Rational64::from_integer(40) * Rational64::new(299, 300)
            + Rational64::from_integer(32) * Rational64::new(298, 300))
            / Rational64::from_integer(81);
        assert_eq!(v, expect);
        assert!((0.995_72 - 80.653_333_333 / 81.0_f64).abs() < 1e-5);
    }

    #[test]
    fn eta_bar_iid_is_inverse_count() {
        let iid = CorrelationFunction::<Rational64>::iid_noise();
        let v = aggregated_correlation(&AggregationScope::Neighborhood { nu: 1, dim: 2 }, &iid);
        assert_eq!(v, Rational64::new(1, 9));
        let v = aggregated_correlation(&AggregationScope::Region { shape: vec![20, 20] }, &iid);
        assert_eq!(v, Rational64::new(1, 400));
    }

    #[test]
    fn offset_counting_matches_pair_enumeration() {
        let f = model1();
        let box_voxels = |shape: &[usize], shift: &[i64]| -> Vec<VoxelIndex> {
            let spec = RegionSpec::new(0, VoxelIndex::new(shift.to_vec()), shape.to_vec(), 1.0).unwrap();
            region_voxels(&spec)
        };
        for (a, b, s) in [
            (vec![3, 3], vec![3, 3], vec![0, 0]),
            (vec![5, 2], vec![3, 4], vec![-1, 6]),
            (vec![3, 3], vec![3, 3], vec![3, 0]),
            (vec![2, 3, 2], vec![2, 2, 3], vec![1, -2, 4]),
            (vec![7], vec![4], vec![9]),
        ] {
            let fast = box_pair_mean(&a, &b, &s, &f);
            let slow = brute_force_mean(&box_voxels(&a, &vec![0; a.len()]), &box_voxels(&b, &s), &f);
            assert_eq!(fast, slow, "a={a:?} b={b:?} shift={s:?}");
        }
    }

    #[test]
    fn pair_scope_is_geometry_of_sampler() {
        // rho-bar_{nu,delta} must agree with an explicit sampled pair, whatever the axis.
        let f = model1();
        let r = region(&[12, 12]);
        let mut rng = stream(9);
        let expect = aggregated_correlation(&AggregationScope::NeighborhoodPair { nu: 1, delta: 2, dim: 2 }, &f);
        for _ in 0..20 {
            let (a, b) = sample_neighborhood_pair(&r, 1, 2, &mut rng).unwrap();
            assert_eq!(brute_force_mean(&a.voxels(), &b.voxels(), &f), expect);
        }
    }

    #[test]
    fn coincident_pair_reduces_to_single_ball() {
        let f = model1();
        let shape = vec![3, 3];
        assert_eq!(
            box_pair_mean(&shape, &shape, &[0, 0], &f),
            aggregated_correlation(&AggregationScope::Neighborhood { nu: 1, dim: 2 }, &f)
        );
    }

    #[test]
    fn perfect_correlation_aggregates_to_one() {
        let f = CorrelationFunction::<f64>::perfect();
        for scope in [
            AggregationScope::Neighborhood { nu: 2, dim: 2 },
            AggregationScope::Region { shape: vec![40, 40] },
            AggregationScope::NeighborhoodPair { nu: 1, delta: 3, dim: 3 },
        ] {
            assert_eq!(aggregated_correlation(&scope, &f), 1.0);
        }
    }

    #[test]
    fn region_distance() {
        let a = RegionSpec::new(0, VoxelIndex::new([0, 0]), vec![3, 3], 1.0).unwrap();
        let b = RegionSpec::new(1, VoxelIndex::new([5, 1]), vec![2, 2], 1.0).unwrap();
        assert_eq!(a.distance_to(&b).unwrap(), 3);
        assert_eq!(a.distance_to(&a).unwrap(), 0);
    }

    #[test]
    fn correlation_function_validation() {
        assert!(CorrelationFunction::intra(0.0, 0.5).is_err());
        assert!(CorrelationFunction::intra(10.0, 0.0).is_err());
        assert!(CorrelationFunction::noise(vec![0.5]).is_err());
        assert!(CorrelationFunction::noise(vec![1.0, 1.5]).is_err());
        let eta = CorrelationFunction::noise(vec![1.0, -0.2]).unwrap();
        assert_eq!(eta.eval(1), -0.2);
        assert_eq!(eta.eval(2), 0.0);
        assert_eq!(eta.support(), Some(2));
    }
}
