//! Small goodness-of-fit helpers used by the acceptance checks and the CLI.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Upper tail of the Kolmogorov distribution, `P(K > t)`.
pub fn kolmogorov_sf(t: f64) -> f64 {
    if t < 0.2 {
        return 1.0;
    }
    let mut sum = 0.0;
    for k in 1..=100 {
        let kf = k as f64;
        let term = (-2.0 * kf * kf * t * t).exp();
        sum += if k % 2 == 1 { term } else { -term };
        if term < 1e-16 {
            break;
        }
    }
    (2.0 * sum).clamp(0.0, 1.0)
}

fn sorted(v: &[f64]) -> Result<Vec<f64>> {
    if v.iter().any(|x| x.is_nan()) {
        return Err(Error::InvalidArgument("NaN in sample".into()));
    }
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.total_cmp(b));
    Ok(s)
}

/// Kolmogorov-Smirnov distance between the empirical law of `sample` and
/// Uniform[0, 1].
pub fn ks_uniform(sample: &[f64]) -> Result<f64> {
    if sample.is_empty() {
        return Err(Error::TooSmall { min: 1, got: 0 });
    }
    let s = sorted(sample)?;
    let n = s.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in s.iter().enumerate() {
        let f = x.clamp(0.0, 1.0);
        d = d.max((i + 1) as f64 / n - f).max(f - i as f64 / n);
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Two-sample Kolmogorov-Smirnov test with the asymptotic p-value.
pub fn ks_two_sample(x: &[f64], y: &[f64]) -> Result<KsResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::TooSmall { min: 1, got: 0 });
    }
    let (xs, ys) = (sorted(x)?, sorted(y)?);
    let (n, m) = (xs.len() as f64, ys.len() as f64);
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < xs.len() && j < ys.len() {
        let t = xs[i].min(ys[j]);
        while i < xs.len() && xs[i] <= t {
            i += 1;
        }
        while j < ys.len() && ys[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    let en = (n * m / (n + m)).sqrt();
    let p = kolmogorov_sf((en + 0.12 + 0.11 / en) * d);
    Ok(KsResult {
        statistic: d,
        p_value: p,
    })
}

/// Pearson chi-square goodness-of-fit p-value of `observed` counts against
/// cell probabilities `expected` (cells with zero probability must be empty).
pub fn chi_square_gof(observed: &[usize], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() {
        return Err(Error::DimensionMismatch {
            expected: expected.len(),
            got: observed.len(),
        });
    }
    let total: usize = observed.iter().sum();
    if total == 0 {
        return Err(Error::TooSmall { min: 1, got: 0 });
    }
    let mass: f64 = expected.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&o, &p) in observed.iter().zip(expected) {
        let e = total as f64 * p / mass;
        if e <= 0.0 {
            if o > 0 {
                return Ok(0.0);
            }
            continue;
        }
        cells += 1;
        stat += (o as f64 - e).powi(2) / e;
    }
    if cells < 2 {
        return Ok(1.0);
    }
    let dist = ChiSquared::new((cells - 1) as f64)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(dist.sf(stat))
}

/// Sample quantile by linear interpolation between order statistics
/// (the default "type 7" rule). `q` must lie in `[0, 1]`.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::TooSmall { min: 1, got: 0 });
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!("quantile level {q} outside [0, 1]")));
    }
    let s = sorted(values)?;
    let h = (s.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(s.len() - 1);
    Ok(s[lo] + (h - lo as f64) * (s[hi] - s[lo]))
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_tail_known_points() {
        // P(K > 1.36) ~ 0.049, P(K > 1.63) ~ 0.0098
        assert!((kolmogorov_sf(1.358) - 0.05).abs() < 1e-3);
        assert!((kolmogorov_sf(1.628) - 0.01).abs() < 5e-4);
        assert_eq!(kolmogorov_sf(0.0), 1.0);
    }

    #[test]
    fn ks_uniform_on_grid_is_half_step() {
        let grid: Vec<f64> = (0..10).map(|i| (i as f64 + 0.5) / 10.0).collect();
        assert!((ks_uniform(&grid).unwrap() - 0.05).abs() < 1e-12);
        assert!((ks_uniform(&[0.0; 4]).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_two_sample_identical_and_disjoint() {
        let x = [1.0, 2.0, 3.0];
        let r = ks_two_sample(&x, &x).unwrap();
        assert_eq!(r.statistic, 0.0);
        let r = ks_two_sample(&x, &[10.0, 11.0, 12.0]).unwrap();
        assert_eq!(r.statistic, 1.0);
    }

    #[test]
    fn chi_square_examples() {
        assert!((chi_square_gof(&[50, 50], &[0.5, 0.5]).unwrap() - 1.0).abs() < 1e-12);
        // stat = (60-50)^2/50 * 2 = 4 on 1 df  =>  p ~ 0.0455
        let p = chi_square_gof(&[60, 40], &[0.5, 0.5]).unwrap();
        assert!((p - 0.04550026).abs() < 1e-6);
        assert_eq!(chi_square_gof(&[1, 3], &[0.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn quantile_type7() {
        let v = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(quantile(&v, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&v, 1.0).unwrap(), 4.0);
        assert!((quantile(&v, 0.5).unwrap() - 2.5).abs() < 1e-15);
        assert!((quantile(&v, 0.25).unwrap() - 1.75).abs() < 1e-15);
    }
}
