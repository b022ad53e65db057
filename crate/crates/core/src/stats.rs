//! Sample moments and the difference-based correlation functionals.
//!
//! All variances and covariances use the `1/(T-1)` divisor.

use num_traits::Float;

use crate::error::{Error, Result};
use crate::scalar::Real;

fn check_pair<T>(a: &[T], b: &[T]) -> Result<usize> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    if a.len() < 2 {
        return Err(Error::SeriesTooShort(a.len()));
    }
    Ok(a.len())
}

pub fn mean<T: Real>(a: &[T]) -> T {
    a.iter().copied().sum::<T>() / T::from_count(a.len() as u64)
}

pub fn sample_cov<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    let n = check_pair(a, b)?;
    let (ma, mb) = (mean(a), mean(b));
    let s: T = a.iter().zip(b).map(|(&x, &y)| (x - ma) * (y - mb)).sum();
    Ok(s / T::from_count(n as u64 - 1))
}

pub fn sample_var<T: Real>(a: &[T]) -> Result<T> {
    sample_cov(a, a)
}

pub fn sample_sd<T: Real>(a: &[T]) -> Result<T> {
    sample_var(a).map(Float::sqrt)
}

pub fn sample_cor<T: Real>(a: &[T], b: &[T]) -> Result<T> {
    check_pair(a, b)?;
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (T::zero(), T::zero(), T::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    if saa <= T::zero() || sbb <= T::zero() {
        return Err(Error::DegenerateSeries);
    }
    Ok(sab / (saa * sbb).sqrt())
}

/// `cov(a - b, c - d)` without materialising the differences.
pub fn cov_of_differences<T: Real>(a: &[T], b: &[T], c: &[T], d: &[T]) -> Result<T> {
    let n = check_pair(a, b)?;
    check_pair(c, d)?;
    check_pair(a, c)?;
    let m1 = mean(a) - mean(b);
    let m2 = mean(c) - mean(d);
    let s: T = (0..n).map(|t| ((a[t] - b[t]) - m1) * ((c[t] - d[t]) - m2)).sum();
    Ok(s / T::from_count(n as u64 - 1))
}

/// `( var(u - v) + var(u - w) - var(v - w) ) / 2`; may be negative.
pub fn s_hat_squared<T: Real>(u: &[T], v: &[T], w: &[T]) -> Result<T> {
    let uv = cov_of_differences(u, v, u, v)?;
    let uw = cov_of_differences(u, w, u, w)?;
    let vw = cov_of_differences(v, w, v, w)?;
    Ok((uv + uw - vw) / T::lit(2.0))
}

/// Difference correlation of `(y1, y2)` relative to the donor pair `(y3, y4)`:
/// `cov(y1 - y3, y2 - y4) / (s(y1, y3, y4) s(y2, y3, y4))`, not clamped.
pub fn cor_tilde<T: Real>(y1: &[T], y2: &[T], y3: &[T], y4: &[T]) -> Result<T> {
    let s1 = s_hat_squared(y1, y3, y4)?;
    let s2 = s_hat_squared(y2, y3, y4)?;
    if s1 <= T::zero() || s2 <= T::zero() {
        return Err(Error::UndefinedDifferenceCorrelation);
    }
    Ok(cov_of_differences(y1, y3, y2, y4)? / (s1 * s2).sqrt())
}

/// Linear-interpolated quantile of already sorted data (`q` in `[0, 1]`).
pub fn quantile_sorted<T: Real>(sorted: &[T], q: f64) -> Option<T> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * frac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand_distr::{Distribution, StandardNormal};

    fn normals(seed: u64, n: usize) -> Vec<f64> {
        let mut rng = crate::rng::stream(seed);
        (0..n).map(|_| StandardNormal.sample(&mut rng)).collect()
    }

    #[test]
    fn identical_and_reversed() {
        let a = [1.0, 2.0, 3.0];
        assert_relative_eq!(sample_cor(&a, &a).unwrap(), 1.0);
        assert_relative_eq!(sample_cor(&a, &[3.0, 2.0, 1.0]).unwrap(), -1.0);
        assert_relative_eq!(sample_var(&a).unwrap(), 1.0);
        assert_relative_eq!(sample_cov(&a, &[2.0, 4.0, 6.0]).unwrap(), 2.0);
    }

    #[test]
    fn errors() {
        assert!(matches!(sample_cor(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::DegenerateSeries)));
        assert!(matches!(sample_cov(&[1.0], &[1.0]), Err(Error::SeriesTooShort(1))));
        assert!(matches!(sample_cov(&[1.0, 2.0], &[1.0]), Err(Error::LengthMismatch(2, 1))));
    }

    #[test]
    fn independent_normals_are_uncorrelated() {
        let t = 100_000;
        let r = sample_cor(&normals(1, t), &normals(2, t)).unwrap();
        assert!(r.abs() < 3.0 / (t as f64).sqrt(), "{r}");
    }

    #[test]
    fn s_hat_degenerate_cases() {
        let u = normals(3, 50);
        let v = normals(4, 50);
        let w = normals(5, 50);
        let diff: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a - b).collect();
        assert_relative_eq!(s_hat_squared(&u, &v, &v).unwrap(), sample_var(&diff).unwrap(), epsilon = 1e-12);
        assert_relative_eq!(s_hat_squared(&u, &u, &w).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn s_hat_independent_unit_variances() {
        let t = 100_000;
        let s = s_hat_squared(&normals(6, t), &normals(7, t), &normals(8, t)).unwrap();
        // Population value var(u) = 1; sd of the estimator is about sqrt(2/T) * 1.7.
        assert!((s - 1.0).abs() < 3.0 * 2.0 * (2.0 / t as f64).sqrt(), "{s}");
    }

    #[test]
    fn cor_tilde_with_zero_donors_is_cor() {
        let y1 = normals(9, 200);
        let y2: Vec<f64> = y1.iter().zip(normals(10, 200)).map(|(a, b)| 0.5 * a + b).collect();
        let z = vec![0.0; 200];
        assert_relative_eq!(cor_tilde(&y1, &y2, &z, &z).unwrap(), sample_cor(&y1, &y2).unwrap(), epsilon = 1e-12);
    }

    #[test]
    fn cor_tilde_identical_targets_tend_to_one() {
        let t = 100_000;
        let y = normals(11, t);
        let v = cor_tilde(&y, &y, &normals(12, t), &normals(13, t)).unwrap();
        assert!((v - 1.0).abs() < 3.0 * 2.0 / (t as f64).sqrt(), "{v}");
    }

    #[test]
    fn cor_tilde_discards_shared_global_term() {
        // Paired: the same component draws with and without a shared additive series.
        let t = 20_000;
        let common = normals(14, t);
        let mk = |seed: u64, load: f64| -> Vec<f64> {
            normals(seed, t).iter().zip(&common).map(|(a, c)| a + load * c).collect()
        };
        let y1 = mk(15, 0.8);
        let y2 = mk(16, 0.8);
        let (y3, y4) = (normals(17, t), normals(18, t));
        let e = normals(19, t);
        let add = |y: &[f64]| -> Vec<f64> { y.iter().zip(&e).map(|(a, b)| a + 2.0 * b).collect() };
        let plain = cor_tilde(&y1, &y2, &y3, &y4).unwrap();
        let noisy = cor_tilde(&add(&y1), &add(&y2), &add(&y3), &add(&y4)).unwrap();
        assert_relative_eq!(plain, noisy, epsilon = 1e-9);
        assert!((plain - 0.64 / 1.64).abs() < 0.03, "{plain}");
    }

    #[test]
    fn undefined_difference_correlation() {
        let u = [1.0, 2.0, 3.0, 4.0];
        // s^2(u, u, w) = 0 exactly.
        assert!(matches!(
            cor_tilde(&u, &[4.0, 1.0, 3.0, 2.0], &u, &[0.0, 1.0, 0.0, 1.0]),
            Err(Error::UndefinedDifferenceCorrelation)
        ));
    }

    #[test]
    fn quantiles() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        assert_eq!(quantile_sorted(&s, 0.5), Some(3.0));
        assert_eq!(quantile_sorted(&s, 0.25), Some(2.0));
        assert_eq!(quantile_sorted(&[1.0, 2.0], 0.5), Some(1.5));
        assert_eq!(quantile_sorted::<f64>(&[], 0.5), None);
    }
}
