//! Minimal added noise that equalizes Gaussian score laws across two groups.
//!
//! For scores `s | y, a ~ N(mu_a + A_a y, Sigma_a)`, group 0 is first mapped
//! into group 1's coordinates by `s -> A1 A0^+ (s - mu0)` and group 1 by
//! `s -> s - mu1`. Both then have mean `A1 y`, with covariances `Sigma0'` and
//! `Sigma1'`. Splitting `D = Sigma1' - Sigma0'` into its positive part `T0`
//! and negative part `-T1` and adding `N(0, T_a)` noise to group `a` makes the
//! two output laws identical for every `y`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::kernels::{self, sym_eig};

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianScoreModel {
    pub mu: [DVector<f64>; 2],
    /// `n_s x n_y` loadings; must have full column rank.
    pub loading: [DMatrix<f64>; 2],
    pub sigma: [DMatrix<f64>; 2],
}

impl GaussianScoreModel {
    pub fn dims(&self) -> (usize, usize) {
        (self.loading[0].nrows(), self.loading[0].ncols())
    }

    pub fn validate(&self) -> Result<()> {
        let (ns, ny) = self.dims();
        for g in 0..2 {
            if self.mu[g].len() != ns {
                return Err(Error::DimensionMismatch {
                    expected: ns,
                    got: self.mu[g].len(),
                });
            }
            if self.loading[g].shape() != (ns, ny) || self.sigma[g].shape() != (ns, ns) {
                return Err(Error::InvalidArgument(format!("group {g}: inconsistent shapes")));
            }
            let sv = self.loading[g].clone().svd(false, false).singular_values;
            let max = sv.max();
            if ny > ns || sv.iter().any(|&v| v <= max * 1e-12 * ns.max(ny) as f64) || max == 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "loading matrix of group {g} is rank deficient"
                )));
            }
            if kernels::min_eigenvalue(&self.sigma[g])? < -1e-10 * self.sigma[g].amax().max(1.0) {
                return Err(Error::InvalidArgument(format!(
                    "covariance of group {g} is not positive semidefinite"
                )));
            }
        }
        Ok(())
    }

    /// One draw of `s` given `(y, a)`.
    pub fn sample_score<R: Rng>(&self, a: usize, y: &DVector<f64>, rng: &mut R) -> Result<DVector<f64>> {
        let root = psd_sqrt(&self.sigma[a])?;
        Ok(&self.mu[a] + &self.loading[a] * y + root * standard_normal(self.mu[a].len(), rng))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRandomizer {
    /// `A1 A0^+`, applied to centered group-0 scores.
    pub map0: DMatrix<f64>,
    pub mu: [DVector<f64>; 2],
    /// `Sigma1' - Sigma0'`.
    pub d: DMatrix<f64>,
    pub t0: DMatrix<f64>,
    pub t1: DMatrix<f64>,
    roots: [DMatrix<f64>; 2],
}

fn standard_normal<R: Rng>(n: usize, rng: &mut R) -> DVector<f64> {
    DVector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// Symmetric square root of a PSD matrix, clamping round-off negatives.
fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    Ok(sym_eig(m)?.apply(|l| l.max(0.0).sqrt()))
}

pub fn gaussian_randomizer(model: &GaussianScoreModel) -> Result<GaussianRandomizer> {
    model.validate()?;
    let pinv0 = model.loading[0]
        .clone()
        .pseudo_inverse(1e-12)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let map0 = &model.loading[1] * pinv0;
    let mut s0 = &map0 * &model.sigma[0] * map0.transpose();
    kernels::symmetrize(&mut s0);
    let mut d = &model.sigma[1] - s0;
    kernels::symmetrize(&mut d);
    let eig = sym_eig(&d)?;
    let t0 = eig.apply(|l| l.max(0.0));
    let t1 = eig.apply(|l| (-l).max(0.0));
    let roots = [psd_sqrt(&t0)?, psd_sqrt(&t1)?];
    Ok(GaussianRandomizer {
        map0,
        mu: model.mu.clone(),
        d,
        t0,
        t1,
        roots,
    })
}

impl GaussianRandomizer {
    pub fn noise(&self, a: usize) -> &DMatrix<f64> {
        if a == 0 {
            &self.t0
        } else {
            &self.t1
        }
    }

    /// Deterministic part of the decision, `s'`.
    pub fn transform(&self, a: usize, s: &DVector<f64>) -> DVector<f64> {
        if a == 0 {
            &self.map0 * (s - &self.mu[0])
        } else {
            s - &self.mu[1]
        }
    }

    /// Randomized decision `s' + N(0, T_a)`.
    pub fn decide<R: Rng>(&self, a: usize, s: &DVector<f64>, rng: &mut R) -> DVector<f64> {
        let out = self.transform(a, s);
        let e = standard_normal(out.len(), rng);
        out + &self.roots[a] * e
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kci::replicate_rng;
    use crate::kernels::min_eigenvalue;
    use crate::stats::ks_two_sample;

    fn model(s0: DMatrix<f64>, s1: DMatrix<f64>) -> GaussianScoreModel {
        let n = s0.nrows();
        GaussianScoreModel {
            mu: [DVector::zeros(n), DVector::zeros(n)],
            loading: [DMatrix::identity(n, n), DMatrix::identity(n, n)],
            sigma: [s0, s1],
        }
    }

    #[test]
    fn equal_groups_need_no_noise() {
        let s = DMatrix::from_row_slice(2, 2, &[2.0, 0.3, 0.3, 1.0]);
        let r = gaussian_randomizer(&model(s.clone(), s)).unwrap();
        assert!(r.t0.amax() < 1e-12 && r.t1.amax() < 1e-12);
    }

    #[test]
    fn one_dimensional_split() {
        let m = model(DMatrix::from_element(1, 1, 1.0), DMatrix::from_element(1, 1, 1.5));
        let r = gaussian_randomizer(&m).unwrap();
        assert!((r.t0[(0, 0)] - 0.5).abs() < 1e-12);
        assert!(r.t1[(0, 0)].abs() < 1e-12);
        // post-noise variances agree
        assert!((1.0 + r.t0[(0, 0)] - (1.5 + r.t1[(0, 0)])).abs() < 1e-12);
    }

    #[test]
    fn axis_aligned_split() {
        let s0 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 3.0]));
        let s1 = DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 1.0]));
        let r = gaussian_randomizer(&model(s0, s1)).unwrap();
        let t0 = DMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 0.0]));
        let t1 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.0, 2.0]));
        assert!((&r.t0 - t0).amax() < 1e-12);
        assert!((&r.t1 - t1).amax() < 1e-12);
    }

    #[test]
    fn rank_deficient_loading_is_rejected() {
        let mut m = model(DMatrix::identity(2, 2), DMatrix::identity(2, 2));
        m.loading[0] = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(gaussian_randomizer(&m).is_err());
    }

    fn general_model() -> GaussianScoreModel {
        GaussianScoreModel {
            mu: [DVector::from_vec(vec![0.5, -1.0, 0.0]), DVector::from_vec(vec![1.0, 0.0, 2.0])],
            loading: [
                DMatrix::from_row_slice(3, 2, &[1.0, 0.2, 0.0, 1.5, 0.3, -0.4]),
                DMatrix::from_row_slice(3, 2, &[0.8, 0.0, 0.1, 1.0, 0.5, 0.5]),
            ],
            sigma: [
                DMatrix::from_row_slice(3, 3, &[1.0, 0.2, 0.0, 0.2, 0.5, 0.1, 0.0, 0.1, 2.0]),
                DMatrix::from_row_slice(3, 3, &[0.6, -0.1, 0.0, -0.1, 1.2, 0.3, 0.0, 0.3, 0.9]),
            ],
        }
    }

    #[test]
    fn split_invariants() {
        let r = gaussian_randomizer(&general_model()).unwrap();
        assert!(min_eigenvalue(&r.t0).unwrap() >= -1e-12);
        assert!(min_eigenvalue(&r.t1).unwrap() >= -1e-12);
        assert!((&r.t0 - &r.t1 - &r.d).amax() <= 1e-10);
        assert!((&r.t0 * &r.t1).amax() <= 1e-8);
        let nuclear: f64 = r.d.clone().svd(false, false).singular_values.sum();
        assert!((r.t0.trace() + r.t1.trace() - nuclear).abs() <= 1e-10);
    }

    #[test]
    fn randomized_laws_agree() {
        let m = general_model();
        let r = gaussian_randomizer(&m).unwrap();
        let y = DVector::from_vec(vec![0.7, -0.3]);
        let draws = 10_000;
        let mut out: [Vec<DVector<f64>>; 2] = Default::default();
        for (a, sink) in out.iter_mut().enumerate() {
            for t in 0..draws {
                let mut rng = replicate_rng(11 + a as u64, t);
                let s = m.sample_score(a, &y, &mut rng).unwrap();
                sink.push(r.decide(a, &s, &mut rng));
            }
        }
        for c in 0..3 {
            let col = |v: &[DVector<f64>]| v.iter().map(|x| x[c]).collect::<Vec<_>>();
            let p = ks_two_sample(&col(&out[0]), &col(&out[1])).unwrap().p_value;
            assert!(p > 0.001, "component {c}: p = {p}");
        }
    }
}
