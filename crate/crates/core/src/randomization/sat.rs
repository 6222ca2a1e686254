//! Latent-ability test-score model.
//!
//! A subject of group `a ~ Bernoulli(1/2)` has ability `z ~ N(mu_z a, tau_z^2)`,
//! test score `s ~ N(z + mu_s a, sigma_s^2)` and outcome `y ~ Bernoulli(p_z(z))`.
//! When `mu_s = (sigma_s^2 / tau_z^2) mu_z` the posterior of `z` given
//! `(a, s)` does not depend on `a`, so the Bayes decision uses the score
//! alone even though the score laws differ between groups.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kci::replicate_rng;
use crate::kernels::sym_eig;

use super::brier::brier_score;
use super::kernels::{randomize, solve_eo_kernels, CostSpec, MarkovKernelPair};
use super::pmfs::{assign_bin, estimate_conditional_pmfs, ConditionalPmfSet};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SatModelParams {
    pub mu_z: f64,
    pub tau_z: f64,
    pub mu_s: f64,
    pub sigma_s: f64,
    /// `p_z(z) = 1 / (1 + exp(-pz_slope (z - pz_location)))`.
    pub pz_location: f64,
    pub pz_slope: f64,
}

impl Default for SatModelParams {
    fn default() -> Self {
        SatModelParams {
            mu_z: 1.0,
            tau_z: 1.0,
            mu_s: 1.0,
            sigma_s: 1.0,
            pz_location: 0.5,
            pz_slope: 2.0,
        }
    }
}

impl SatModelParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_z > 0.0 && self.sigma_s > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "tau_z and sigma_s must be positive, got {} and {}",
                self.tau_z, self.sigma_s
            )));
        }
        if self.pz_slope.is_nan() || self.pz_slope < 0.0 {
            return Err(Error::InvalidArgument("pz_slope must be nonnegative".into()));
        }
        let all = [self.mu_z, self.tau_z, self.mu_s, self.sigma_s, self.pz_location, self.pz_slope];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("model parameters must be finite".into()));
        }
        Ok(())
    }

    pub fn p_z(&self, z: f64) -> f64 {
        1.0 / (1.0 + (-self.pz_slope * (z - self.pz_location)).exp())
    }

    /// Mean and variance of `z` given `(a, s)`.
    pub fn posterior_z(&self, a: usize, s: f64) -> (f64, f64) {
        let (t2, s2) = (self.tau_z.powi(2), self.sigma_s.powi(2));
        let af = a as f64;
        let mean = (s2 * af * self.mu_z + t2 * (s - af * self.mu_s)) / (s2 + t2);
        (mean, s2 * t2 / (s2 + t2))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SatSample {
    pub a: Vec<usize>,
    pub z: Vec<f64>,
    pub s: Vec<f64>,
    pub y: Vec<usize>,
}

impl SatSample {
    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

/// Draws `n` subjects; subject `i` uses the random stream `(seed, i)`.
pub fn simulate_sat_model(params: &SatModelParams, n: usize, seed: u64) -> Result<SatSample> {
    params.validate()?;
    if n == 0 {
        return Err(Error::TooSmall { min: 1, got: 0 });
    }
    let mut out = SatSample {
        a: Vec::with_capacity(n),
        z: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        y: Vec::with_capacity(n),
    };
    for i in 0..n {
        let mut rng = replicate_rng(seed, i as u64);
        let a = usize::from(rng.random::<f64>() < 0.5);
        let e1: f64 = rng.sample(StandardNormal);
        let e2: f64 = rng.sample(StandardNormal);
        let z = params.mu_z * a as f64 + params.tau_z * e1;
        let s = z + params.mu_s * a as f64 + params.sigma_s * e2;
        let y = usize::from(rng.random::<f64>() < params.p_z(z));
        out.a.push(a);
        out.z.push(z);
        out.s.push(s);
        out.y.push(y);
    }
    Ok(out)
}

/// Gauss-Hermite rule for `E f(Z)`, `Z ~ N(0, 1)`, from the eigen-system of
/// the Jacobi matrix of the probabilists' Hermite polynomials.
pub fn gauss_hermite(points: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if points == 0 {
        return Err(Error::TooSmall { min: 1, got: 0 });
    }
    let j = DMatrix::from_fn(points, points, |r, c| {
        if r + 1 == c || c + 1 == r {
            (r.max(c) as f64).sqrt()
        } else {
            0.0
        }
    });
    let eig = sym_eig(&j)?;
    let weights = (0..points).map(|i| eig.vectors[(0, i)].powi(2)).collect();
    Ok((eig.values, weights))
}

/// Exact `P(y = 1 | a, s) = E[p_z(z) | a, s]` by quadrature over the
/// Gaussian posterior of `z`.
#[derive(Debug, Clone)]
pub struct BayesPredictor {
    params: SatModelParams,
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl BayesPredictor {
    pub fn new(params: &SatModelParams) -> Result<Self> {
        params.validate()?;
        let (nodes, weights) = gauss_hermite(64)?;
        Ok(BayesPredictor {
            params: params.clone(),
            nodes,
            weights,
        })
    }

    pub fn probability(&self, a: usize, s: f64) -> f64 {
        let (m, v) = self.params.posterior_z(a, s);
        let sd = v.sqrt();
        let p: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(x, w)| w * self.params.p_z(m + sd * x))
            .sum();
        p.clamp(0.0, 1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupBrier {
    pub group: usize,
    pub n: usize,
    pub bayes: f64,
    pub binned_bayes: f64,
    /// Randomized decision with outputs calibrated within the group.
    pub randomized: f64,
    /// Randomized decision with outputs calibrated on the pooled sample.
    pub randomized_pooled: f64,
}

/// Everything produced by one run of the score-randomization experiment.
#[derive(Debug, Clone)]
pub struct SatEvaluation {
    pub sample: SatSample,
    pub pmfs: ConditionalPmfSet,
    pub bins: Vec<usize>,
    pub bayes: Vec<f64>,
    pub binned_bayes: Vec<f64>,
    pub kernels: MarkovKernelPair,
    /// Sampled output column per subject.
    pub decision: Vec<usize>,
    /// `calibration[a][j] = P(y = 1 | output j, a)` under the kernels.
    pub calibration: [Vec<f64>; 2],
    pub pooled_calibration: Vec<f64>,
    pub brier: Vec<GroupBrier>,
}

/// Expected squared error of the randomized decision for each subject,
/// averaging over the kernel row.
fn expected_brier(rows: &[&[f64]], y: &[usize], g: &[f64]) -> f64 {
    let total: f64 = rows
        .iter()
        .zip(y)
        .map(|(row, &yy)| {
            row.iter()
                .zip(g)
                .map(|(w, p)| w * (p - yy as f64).powi(2))
                .sum::<f64>()
        })
        .sum();
    total / rows.len() as f64
}

fn calibrate(rows: &[&[f64]], y: &[usize], k1: usize) -> Vec<f64> {
    let mut num = vec![0.0; k1];
    let mut den = vec![0.0; k1];
    for (row, &yy) in rows.iter().zip(y) {
        for j in 0..k1 {
            num[j] += row[j] * yy as f64;
            den[j] += row[j];
        }
    }
    num.iter().zip(&den).map(|(n, d)| if *d > 0.0 { n / d } else { 0.0 }).collect()
}

/// Simulates `n` subjects, bins scores into `k` quantile bins, fits the
/// kernel pair with `k1` outputs and scores the exact, binned and
/// randomized decisions by group.
pub fn evaluate_sat(
    params: &SatModelParams,
    n: usize,
    seed: u64,
    k: usize,
    k1: usize,
    cost: &CostSpec,
) -> Result<SatEvaluation> {
    let sample = simulate_sat_model(params, n, seed)?;
    let pmfs = estimate_conditional_pmfs(&sample.s, &sample.a, &sample.y, k)?;
    let bins: Vec<usize> = sample.s.iter().map(|&s| assign_bin(&pmfs.bin_edges, s)).collect();
    let predictor = BayesPredictor::new(params)?;
    let bayes: Vec<f64> = sample
        .a
        .iter()
        .zip(&sample.s)
        .map(|(&a, &s)| predictor.probability(a, s))
        .collect();

    let mut cell_sum = vec![[0.0f64; 2]; k];
    let mut cell_n = vec![[0usize; 2]; k];
    for t in 0..n {
        cell_sum[bins[t]][sample.a[t]] += bayes[t];
        cell_n[bins[t]][sample.a[t]] += 1;
    }
    let binned_bayes: Vec<f64> = (0..n)
        .map(|t| {
            let (b, a) = (bins[t], sample.a[t]);
            cell_sum[b][a] / cell_n[b][a] as f64
        })
        .collect();

    let kernels = solve_eo_kernels(&pmfs, k1, cost)?;
    let decision = randomize(&kernels, &bins, &sample.a, seed ^ 0x9e37_79b9_7f4a_7c15)?;

    let row_of = |t: usize| -> Vec<f64> { kernels.kernel(sample.a[t]).row(bins[t]).iter().copied().collect() };
    let rows: Vec<Vec<f64>> = (0..n).map(row_of).collect();
    let all_rows: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    let pooled_calibration = calibrate(&all_rows, &sample.y, k1);

    let mut calibration: [Vec<f64>; 2] = Default::default();
    let mut brier = Vec::new();
    for (g, cal) in calibration.iter_mut().enumerate() {
        let idx: Vec<usize> = (0..n).filter(|&t| sample.a[t] == g).collect();
        let rows_g: Vec<&[f64]> = idx.iter().map(|&t| rows[t].as_slice()).collect();
        let y_g: Vec<usize> = idx.iter().map(|&t| sample.y[t]).collect();
        *cal = calibrate(&rows_g, &y_g, k1);
        let pick = |v: &[f64]| idx.iter().map(|&t| v[t]).collect::<Vec<f64>>();
        brier.push(GroupBrier {
            group: g,
            n: idx.len(),
            bayes: brier_score(&pick(&bayes), &y_g)?,
            binned_bayes: brier_score(&pick(&binned_bayes), &y_g)?,
            randomized: expected_brier(&rows_g, &y_g, cal),
            randomized_pooled: expected_brier(&rows_g, &y_g, &pooled_calibration),
        });
    }

    Ok(SatEvaluation {
        sample,
        pmfs,
        bins,
        bayes,
        binned_bayes,
        kernels,
        decision,
        calibration,
        pooled_calibration,
        brier,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_two_sample, mean};

    #[test]
    fn gauss_hermite_moments() {
        let (x, w) = gauss_hermite(20).unwrap();
        let m = |p: i32| x.iter().zip(&w).map(|(x, w)| w * x.powi(p)).sum::<f64>();
        assert!((m(0) - 1.0).abs() < 1e-12);
        assert!(m(1).abs() < 1e-12);
        assert!((m(2) - 1.0).abs() < 1e-12);
        assert!((m(4) - 3.0).abs() < 1e-10);
        assert!((m(6) - 15.0).abs() < 1e-9);
    }

    #[test]
    fn bayes_probability_matches_monte_carlo_integral() {
        let params = SatModelParams::default();
        let pred = BayesPredictor::new(&params).unwrap();
        let (m, v) = params.posterior_z(1, 2.3);
        let mut rng = replicate_rng(5, 0);
        let draws = 200_000;
        let mc: f64 = (0..draws)
            .map(|_| {
                let e: f64 = rng.sample(StandardNormal);
                params.p_z(m + v.sqrt() * e)
            })
            .sum::<f64>()
            / draws as f64;
        assert!((pred.probability(1, 2.3) - mc).abs() < 3e-3);
    }

    #[test]
    fn identical_groups_without_shift() {
        let params = SatModelParams {
            mu_z: 0.0,
            mu_s: 0.0,
            ..SatModelParams::default()
        };
        let sample = simulate_sat_model(&params, 10_000, 4).unwrap();
        let split = |v: &[f64], g: usize| -> Vec<f64> {
            v.iter().zip(&sample.a).filter(|(_, &a)| a == g).map(|(x, _)| *x).collect()
        };
        for col in [&sample.z, &sample.s] {
            assert!(ks_two_sample(&split(col, 0), &split(col, 1)).unwrap().p_value > 0.001);
        }
        let yf: Vec<f64> = sample.y.iter().map(|&v| v as f64).collect();
        assert!(ks_two_sample(&split(&yf, 0), &split(&yf, 1)).unwrap().p_value > 0.001);
    }

    #[test]
    fn group_mean_of_ability() {
        let params = SatModelParams::default();
        let n = 20_000;
        let sample = simulate_sat_model(&params, n, 8).unwrap();
        let z1: Vec<f64> = sample.z.iter().zip(&sample.a).filter(|(_, &a)| a == 1).map(|(z, _)| *z).collect();
        let bound = 4.0 * params.tau_z / (z1.len() as f64).sqrt();
        assert!((mean(&z1) - params.mu_z).abs() <= bound);
    }

    #[test]
    fn posterior_mean_regression_check() {
        // within a narrow score window, the average ability approaches the
        // closed-form posterior mean at the window centre
        let params = SatModelParams::default();
        let sample = simulate_sat_model(&params, 200_000, 12).unwrap();
        for (a, s0) in [(0usize, 0.5), (1, 2.0), (1, 3.0)] {
            let zs: Vec<f64> = (0..sample.len())
                .filter(|&t| sample.a[t] == a && (sample.s[t] - s0).abs() < 0.05)
                .map(|t| sample.z[t])
                .collect();
            let (m, v) = params.posterior_z(a, s0);
            let se = (v / zs.len() as f64).sqrt();
            assert!((mean(&zs) - m).abs() < 4.0 * se + 0.02, "a={a} s={s0}");
        }
    }

    #[test]
    fn deterministic_and_validated() {
        let p = SatModelParams::default();
        assert_eq!(simulate_sat_model(&p, 50, 3).unwrap(), simulate_sat_model(&p, 50, 3).unwrap());
        let bad = SatModelParams {
            tau_z: 0.0,
            ..SatModelParams::default()
        };
        assert!(simulate_sat_model(&bad, 10, 0).is_err());
        assert!(simulate_sat_model(&p, 0, 0).is_err());
    }

    #[test]
    fn small_evaluation_orders_brier_scores() {
        let e = evaluate_sat(&SatModelParams::default(), 5000, 2, 8, 8, &CostSpec::default()).unwrap();
        assert!(e.kernels.parity_residual <= 1e-8);
        for b in &e.brier {
            assert!(b.bayes <= b.binned_bayes);
            assert!(b.binned_bayes <= b.randomized);
        }
        assert_eq!(e.decision.len(), 5000);
    }
}
