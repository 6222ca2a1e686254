//! Kernel conditional-independence test and the empirical epsilon-parity checker.
//!
//! The test statistic is the squared Hilbert-Schmidt norm of the regularized
//! empirical conditional cross-covariance operator of `((x, z), a)` given `z`,
//! evaluated from centered Gram matrices as
//!
//! ```text
//! (1/n^2) [ tr(Kxz Ka) - 2 tr(Kxz Kz R Ka) + tr(R Kz Kxz Kz R Ka) ],   R = (Kz + lambda M_n)^+
//! ```
//!
//! Under the null, `n` times the statistic is approximated by a weighted sum
//! of independent chi-square(1) variables.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use statrs::distribution::{ContinuousCDF, Gamma};

use crate::data::DataColumn;
use crate::error::{Error, Result};
use crate::kernels::{self, center, gram, hadamard, reg_pinv, sym_eig, GramMatrix, KernelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NullMethod {
    /// Two-moment Gamma approximation of the chi-square mixture.
    Gamma,
    /// Direct simulation of the mixture.
    MonteCarlo,
}

impl NullMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            NullMethod::Gamma => "gamma",
            NullMethod::MonteCarlo => "montecarlo",
        }
    }
}

/// How the chi-square mixture weights are derived from the Gram matrices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NullWeights {
    /// Eigenvalues of `(Q Kxz Q) o (Q Ka Q) / n`, `Q = P^(1/2)`: the
    /// covariance of the per-observation products of the residualized
    /// feature maps. Calibrated under conditional independence.
    Covariance,
    /// Products `mu_i nu_j / n^2` of the spectra of `P Kxz P'` and `Ka`.
    /// Exact in mean but conservative when `a` depends on `z`.
    Product,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KciConfig {
    pub lambda: f64,
    pub null_method: NullMethod,
    pub mc_reps: usize,
    /// Eigenvalues below `eig_keep_ratio * max` are dropped from the mixture.
    pub eig_keep_ratio: f64,
    pub weights: NullWeights,
    pub seed: u64,
}

impl Default for KciConfig {
    fn default() -> Self {
        KciConfig {
            lambda: 1e-3,
            null_method: NullMethod::Gamma,
            mc_reps: 5000,
            eig_keep_ratio: 1e-10,
            weights: NullWeights::Covariance,
            seed: 0,
        }
    }
}

impl KciConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        if self.mc_reps < 100 {
            return Err(Error::InvalidArgument(format!(
                "mc_reps must be at least 100, got {}",
                self.mc_reps
            )));
        }
        if !(self.eig_keep_ratio > 0.0 && self.eig_keep_ratio <= 1.0) {
            return Err(Error::InvalidArgument(format!(
                "eig_keep_ratio must lie in (0, 1], got {}",
                self.eig_keep_ratio
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KciResult {
    /// `n * ||Sigma_hat||_HS^2`, the quantity compared against the null mixture.
    pub statistic: f64,
    /// `||Sigma_hat||_HS^2` itself.
    pub hs_norm_sq: f64,
    pub p_value: f64,
    pub mixture_weights: Vec<f64>,
    pub method: NullMethod,
    pub n: usize,
}

/// Centered Gram matrix of the product kernel `k_x * k_z`.
///
/// Both inputs must be uncentered Gram matrices; the product is taken
/// entrywise and then centered.
pub fn joint_gram(gx: &GramMatrix, gz: &GramMatrix) -> Result<GramMatrix> {
    if gx.is_centered() || gz.is_centered() {
        return Err(Error::InvalidArgument(
            "joint_gram expects uncentered Gram matrices".into(),
        ));
    }
    Ok(center(&hadamard(gx, gz)?))
}

fn check_inputs(kxz: &GramMatrix, ka: &GramMatrix, kz: &GramMatrix) -> Result<usize> {
    let n = kxz.dim();
    for g in [ka, kz] {
        if g.dim() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: g.dim(),
            });
        }
    }
    if !(kxz.is_centered() && ka.is_centered() && kz.is_centered()) {
        return Err(Error::NotCentered);
    }
    Ok(n)
}

/// `sum_ij a_ij b_ji`, i.e. `tr(A B)` without forming the product.
fn trace_of_product(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(&b.transpose()).sum()
}

/// Squared HS norm of the regularized conditional cross-covariance, via the
/// three-trace formula. Negative round-off is clamped to zero.
pub fn kci_statistic(kxz: &GramMatrix, ka: &GramMatrix, kz: &GramMatrix, lambda: f64) -> Result<f64> {
    let n = check_inputs(kxz, ka, kz)?;
    let r = reg_pinv(kz, lambda)?;
    let kxz = kxz.entries();
    let ka = ka.entries();
    let s = kz.entries() * &r; // Kz R
    let kxz_s = kxz * &s;
    let t1 = trace_of_product(kxz, ka);
    let t2 = trace_of_product(&kxz_s, ka);
    let t3 = trace_of_product(&(s.transpose() * &kxz_s), ka); // R Kz Kxz Kz R Ka
    let n2 = (n * n) as f64;
    Ok(((t1 - 2.0 * t2 + t3) / n2).max(0.0))
}

/// `P = I - Kz (Kz + lambda M_n)^+`.
fn residualizer(kz: &GramMatrix, lambda: f64) -> Result<DMatrix<f64>> {
    let r = reg_pinv(kz, lambda)?;
    let n = kz.dim();
    let mut p = DMatrix::identity(n, n) - kz.entries() * r;
    kernels::symmetrize(&mut p);
    Ok(p)
}

fn keep_top(mut values: Vec<f64>, ratio: f64) -> Vec<f64> {
    let max = values.iter().copied().fold(0.0f64, f64::max);
    if max <= 0.0 {
        return Vec::new();
    }
    values.retain(|&v| v >= ratio * max && v > 0.0);
    values
}

/// Weights `w` of the chi-square(1) mixture approximating the null law of
/// `n * kci_statistic`.
pub fn null_mixture_weights(
    kxz: &GramMatrix,
    ka: &GramMatrix,
    kz: &GramMatrix,
    cfg: &KciConfig,
) -> Result<Vec<f64>> {
    let n = check_inputs(kxz, ka, kz)?;
    cfg.validate()?;
    if ka.max_abs() == 0.0 {
        return Ok(Vec::new());
    }
    let nf = n as f64;
    let p = residualizer(kz, cfg.lambda)?;
    match cfg.weights {
        NullWeights::Product => {
            let mut resid = &p * kxz.entries() * p.transpose();
            kernels::symmetrize(&mut resid);
            let mu = keep_top(sym_eig(&resid)?.values, cfg.eig_keep_ratio);
            let nu = keep_top(sym_eig(ka.entries())?.values, cfg.eig_keep_ratio);
            let mut w = Vec::with_capacity(mu.len() * nu.len());
            for &m in &mu {
                for &v in &nu {
                    w.push(m * v / (nf * nf));
                }
            }
            Ok(w)
        }
        NullWeights::Covariance => {
            let q = sym_eig(&p)?.apply(|l| l.max(0.0).sqrt());
            let mut a = &q * kxz.entries() * &q;
            let mut b = &q * ka.entries() * &q;
            kernels::symmetrize(&mut a);
            kernels::symmetrize(&mut b);
            let c = a.component_mul(&b) / nf;
            Ok(keep_top(sym_eig(&c)?.values, cfg.eig_keep_ratio))
        }
    }
}

/// Upper-tail probability of `scaled_statistic` (that is, `n` times the HS
/// statistic) under the weighted chi-square(1) mixture.
pub fn kci_pvalue(scaled_statistic: f64, weights: &[f64], cfg: &KciConfig) -> Result<f64> {
    if let Some(w) = weights.iter().find(|w| w.is_nan() || **w < 0.0) {
        return Err(Error::InvalidArgument(format!("negative mixture weight {w}")));
    }
    let mean: f64 = weights.iter().sum();
    if weights.is_empty() || mean == 0.0 || scaled_statistic <= 0.0 {
        return Ok(1.0);
    }
    let p = match cfg.null_method {
        NullMethod::Gamma => {
            let var = 2.0 * weights.iter().map(|w| w * w).sum::<f64>();
            let shape = mean * mean / var;
            let rate = mean / var;
            let dist = Gamma::new(shape, rate)
                .map_err(|e| Error::InvalidArgument(format!("gamma approximation: {e}")))?;
            dist.sf(scaled_statistic)
        }
        NullMethod::MonteCarlo => {
            if cfg.mc_reps < 100 {
                return Err(Error::InvalidArgument("mc_reps must be at least 100".into()));
            }
            let mut exceed = 0usize;
            for r in 0..cfg.mc_reps {
                let mut rng = replicate_rng(cfg.seed, r as u64);
                let draw: f64 = weights
                    .iter()
                    .map(|w| {
                        let z: f64 = rng.sample(StandardNormal);
                        w * z * z
                    })
                    .sum();
                if draw >= scaled_statistic {
                    exceed += 1;
                }
            }
            (1 + exceed) as f64 / (cfg.mc_reps + 1) as f64
        }
    };
    Ok(p.clamp(0.0, 1.0))
}

/// Random stream for replicate `r` of a seeded simulation; independent of
/// the order in which replicates are evaluated.
pub fn replicate_rng(seed: u64, r: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(r);
    rng
}

/// Tests `x` independent of `a` given `z` (or plain independence when `z` is
/// absent) with the default kernels for each column.
pub fn kci_test(
    x: &DataColumn,
    a: &DataColumn,
    z: Option<&DataColumn>,
    cfg: &KciConfig,
) -> Result<KciResult> {
    let n = x.len();
    for c in [Some(a), z].into_iter().flatten() {
        if c.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: c.len(),
            });
        }
    }
    if n < 10 {
        return Err(Error::TooSmall { min: 10, got: n });
    }
    let gx = gram(x, &KernelSpec::default_for(x))?;
    let ga = gram(a, &KernelSpec::default_for(a))?;
    let gz = match z {
        Some(z) => Some(gram(z, &KernelSpec::default_for(z))?),
        None => None,
    };
    kci_test_grams(&gx, &ga, gz.as_ref(), cfg)
}

/// Same as [`kci_test`] from precomputed uncentered Gram matrices.
pub fn kci_test_grams(
    gx: &GramMatrix,
    ga: &GramMatrix,
    gz: Option<&GramMatrix>,
    cfg: &KciConfig,
) -> Result<KciResult> {
    cfg.validate()?;
    let n = gx.dim();
    if n < 10 {
        return Err(Error::TooSmall { min: 10, got: n });
    }
    let (kxz, kz) = match gz {
        Some(gz) => (joint_gram(gx, gz)?, center(gz)),
        None => (center(gx), GramMatrix::zeros(n)),
    };
    let ka = center(ga);
    let hs = kci_statistic(&kxz, &ka, &kz, cfg.lambda)?;
    let weights = null_mixture_weights(&kxz, &ka, &kz, cfg)?;
    let statistic = n as f64 * hs;
    let p_value = kci_pvalue(statistic, &weights, cfg)?;
    Ok(KciResult {
        statistic,
        hs_norm_sq: hs,
        p_value,
        mixture_weights: weights,
        method: cfg.null_method,
        n,
    })
}

// ---------------------------------------------------------------------------
// Empirical epsilon-conditional parity
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WorstPair {
    pub stratum: String,
    pub a: String,
    pub a_prime: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumDistance {
    pub stratum: String,
    pub max_tv: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EpsilonCpResult {
    pub epsilon_hat: f64,
    pub worst_pair: Option<WorstPair>,
    pub per_stratum: Vec<StratumDistance>,
    /// Strata left out because some level of `a` had no observations there.
    pub skipped: Vec<String>,
}

/// Total-variation distance `0.5 * sum |p - q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub(crate) const ALL_STRATUM: &str = "(all)";

/// Largest total-variation distance between the empirical laws of `x` given
/// `(a, z)` across pairs of `a` levels, maximized over strata of `z`.
pub fn epsilon_cp_discrete(
    x: &DataColumn,
    a: &DataColumn,
    z: Option<&DataColumn>,
) -> Result<EpsilonCpResult> {
    let (xc, xl) = x.as_categorical()?;
    let (ac, al) = a.as_categorical()?;
    let n = xc.len();
    if ac.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: ac.len(),
        });
    }
    let strata: Vec<(String, Vec<usize>)> = match z {
        None => vec![(ALL_STRATUM.to_string(), (0..n).collect())],
        Some(z) => {
            let (zc, zl) = z.as_categorical()?;
            if zc.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: zc.len(),
                });
            }
            zl.iter()
                .enumerate()
                .map(|(level, name)| {
                    let rows: Vec<usize> = (0..n).filter(|&i| zc[i] == level).collect();
                    (name.clone(), rows)
                })
                .filter(|(_, rows)| !rows.is_empty())
                .collect()
        }
    };
    // a levels that occur anywhere in the data
    let mut present = vec![false; al.len()];
    for &c in ac {
        present[c] = true;
    }
    let a_levels: Vec<usize> = (0..al.len()).filter(|&l| present[l]).collect();

    let mut result = EpsilonCpResult {
        epsilon_hat: 0.0,
        worst_pair: None,
        per_stratum: Vec::new(),
        skipped: Vec::new(),
    };
    for (name, rows) in strata {
        let mut counts = vec![vec![0usize; xl.len()]; al.len()];
        for &i in &rows {
            counts[ac[i]][xc[i]] += 1;
        }
        if a_levels.iter().any(|&l| counts[l].iter().sum::<usize>() == 0) {
            result.skipped.push(name);
            continue;
        }
        let pmfs: Vec<Vec<f64>> = counts
            .iter()
            .map(|c| {
                let tot = c.iter().sum::<usize>().max(1) as f64;
                c.iter().map(|&k| k as f64 / tot).collect()
            })
            .collect();
        let mut best = 0.0;
        let mut best_pair = None;
        for (i, &l) in a_levels.iter().enumerate() {
            for &m in &a_levels[i + 1..] {
                let tv = total_variation(&pmfs[l], &pmfs[m]);
                if tv > best || best_pair.is_none() {
                    best = tv;
                    best_pair = Some((l, m));
                }
            }
        }
        if let Some((l, m)) = best_pair {
            if best > result.epsilon_hat || result.worst_pair.is_none() {
                result.epsilon_hat = best;
                result.worst_pair = Some(WorstPair {
                    stratum: name.clone(),
                    a: al[l].clone(),
                    a_prime: al[m].clone(),
                });
            }
        }
        result.per_stratum.push(StratumDistance {
            stratum: name,
            max_tv: best,
            n: rows.len(),
        });
    }
    if result.per_stratum.is_empty() {
        return Err(Error::AllStrataSkipped);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{centering_matrix, gram_real, max_abs, median_bandwidth};
    use proptest::prelude::*;
    use rand_distr::{Distribution, Normal};

    fn cat(v: &[&str]) -> DataColumn {
        DataColumn::categorical(v).unwrap()
    }

    fn gaussian_fixture(n: usize, seed: u64) -> (GramMatrix, GramMatrix, GramMatrix) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        let z: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
        let x: Vec<f64> = z.iter().map(|z| z.sin() + 0.5 * normal.sample(&mut rng)).collect();
        let a: Vec<usize> = z
            .iter()
            .map(|z| usize::from(z + normal.sample(&mut rng) > 0.0))
            .collect();
        let gx = gram_real(&x, &KernelSpec::rbf(median_bandwidth(&x)).unwrap()).unwrap();
        let gz = gram_real(&z, &KernelSpec::rbf(median_bandwidth(&z)).unwrap()).unwrap();
        let ga = kernels::gram_codes(&a);
        (joint_gram(&gx, &gz).unwrap(), center(&ga), center(&gz))
    }

    /// `(1/n^2) tr(P Kxz P' Ka)` with `P = I - Kz R`, where `R` is obtained by
    /// a plain matrix inverse: `(Kz + lambda M + 11'/n)^-1 - 11'/n`.
    fn regrouped_oracle(kxz: &GramMatrix, ka: &GramMatrix, kz: &GramMatrix, lambda: f64) -> f64 {
        let n = kz.dim();
        let j = DMatrix::from_element(n, n, 1.0 / n as f64);
        let full = kz.entries() + centering_matrix(n) * lambda + &j;
        let r = full.try_inverse().unwrap() - &j;
        let p = DMatrix::identity(n, n) - kz.entries() * r;
        let m = &p * kxz.entries() * p.transpose() * ka.entries();
        m.trace() / (n * n) as f64
    }

    #[test]
    fn statistic_matches_regrouped_oracle() {
        let (kxz, ka, kz) = gaussian_fixture(30, 7);
        let s = kci_statistic(&kxz, &ka, &kz, 1e-3).unwrap();
        let o = regrouped_oracle(&kxz, &ka, &kz, 1e-3);
        assert!((s - o).abs() <= 1e-8 * o.abs(), "{s} vs {o}");
    }

    #[test]
    fn statistic_vanishes_for_constant_attribute() {
        let (kxz, _, kz) = gaussian_fixture(20, 3);
        let ka = GramMatrix::zeros(20);
        assert_eq!(kci_statistic(&kxz, &ka, &kz, 1e-3).unwrap(), 0.0);
        let w = null_mixture_weights(&kxz, &ka, &kz, &KciConfig::default()).unwrap();
        assert!(w.is_empty());
    }

    #[test]
    fn large_lambda_recovers_unconditional_term() {
        let (kxz, ka, kz) = gaussian_fixture(25, 11);
        let n2 = 625.0;
        let hsic = trace_of_product(kxz.entries(), ka.entries()) / n2;
        let s = kci_statistic(&kxz, &ka, &kz, 1e9).unwrap();
        assert!((s - hsic).abs() <= 1e-6 * hsic, "{s} vs {hsic}");
    }

    #[test]
    fn statistic_rejects_bad_inputs() {
        let (kxz, ka, kz) = gaussian_fixture(12, 1);
        let raw = GramMatrix::new(DMatrix::identity(12, 12), false).unwrap();
        assert_eq!(kci_statistic(&kxz, &raw, &kz, 1e-3), Err(Error::NotCentered));
        let small = GramMatrix::zeros(5);
        assert!(matches!(
            kci_statistic(&kxz, &small, &kz, 1e-3),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(kci_statistic(&kxz, &ka, &kz, 0.0).is_err());
    }

    #[test]
    fn unconditional_product_weights_are_hsic_spectrum() {
        let (kxz, ka, _) = gaussian_fixture(20, 5);
        let kz = GramMatrix::zeros(20);
        let cfg = KciConfig {
            weights: NullWeights::Product,
            ..KciConfig::default()
        };
        let w = null_mixture_weights(&kxz, &ka, &kz, &cfg).unwrap();
        let mu = keep_top(sym_eig(kxz.entries()).unwrap().values, 1e-10);
        let nu = keep_top(sym_eig(ka.entries()).unwrap().values, 1e-10);
        assert_eq!(w.len(), mu.len() * nu.len());
        let total: f64 = w.iter().sum();
        let expect = mu.iter().sum::<f64>() * nu.iter().sum::<f64>() / 400.0;
        assert!((total - expect).abs() <= 1e-10 * expect);
    }

    #[test]
    fn unconditional_residualizer_is_identity() {
        let p = residualizer(&GramMatrix::zeros(6), 1e-3).unwrap();
        assert!(max_abs(&(p - DMatrix::identity(6, 6))) < 1e-12);
    }

    #[test]
    fn weight_mass_matches_null_mean() {
        // average statistic over fresh null datasets against the average
        // mixture mean sum(w)
        let reps = 200;
        let mut stat = 0.0;
        let mut mass = 0.0;
        for r in 0..reps {
            let (kxz, ka, kz) = gaussian_fixture(100, 1000 + r);
            stat += 100.0 * kci_statistic(&kxz, &ka, &kz, 1e-3).unwrap();
            mass += null_mixture_weights(&kxz, &ka, &kz, &KciConfig::default())
                .unwrap()
                .iter()
                .sum::<f64>();
        }
        let (stat, mass) = (stat / reps as f64, mass / reps as f64);
        assert!((mass - stat).abs() <= 0.2 * stat, "{mass} vs {stat}");
    }

    #[test]
    fn pvalue_examples() {
        let gamma = KciConfig::default();
        let mc = KciConfig {
            null_method: NullMethod::MonteCarlo,
            seed: 17,
            ..KciConfig::default()
        };
        assert_eq!(kci_pvalue(0.0, &[1.0, 2.0], &gamma).unwrap(), 1.0);
        assert_eq!(kci_pvalue(0.0, &[1.0, 2.0], &mc).unwrap(), 1.0);
        assert_eq!(kci_pvalue(4.0, &[], &gamma).unwrap(), 1.0);

        // one weight: Gamma(1/2, scale 2) is exactly chi-square(1)
        let p = kci_pvalue(3.841458820694124, &[1.0], &gamma).unwrap();
        assert!((p - 0.05).abs() < 1e-9, "{p}");

        // chi-square(2) tail at 5.991 is exp(-5.991/2)
        let x = 5.991;
        let exact = (-x / 2.0f64).exp();
        let p = kci_pvalue(x, &[1.0, 1.0], &mc).unwrap();
        let sd = (exact * (1.0 - exact) / mc.mc_reps as f64).sqrt();
        assert!((p - exact).abs() <= 4.0 * sd, "{p} vs {exact}");
        // deterministic in the seed
        assert_eq!(p, kci_pvalue(x, &[1.0, 1.0], &mc).unwrap());

        assert!(kci_pvalue(1.0, &[-1.0], &gamma).is_err());
    }

    #[test]
    fn kci_test_edge_cases() {
        let n = 40;
        let x = DataColumn::continuous((0..n).map(|i| (i as f64 * 0.37).sin()).collect()).unwrap();
        let a = DataColumn::categorical(&vec!["g"; n]).unwrap();
        let r = kci_test(&x, &a, None, &KciConfig::default()).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert_eq!(r.statistic, 0.0);

        let short = DataColumn::continuous(vec![1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            kci_test(&short, &short, None, &KciConfig::default()),
            Err(Error::TooSmall { .. })
        ));
        let other = DataColumn::continuous(vec![0.0; 12]).unwrap();
        assert!(matches!(
            kci_test(&x, &other, None, &KciConfig::default()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tv_examples() {
        // counts of x=1: 2 of 4 for a=0, 3 of 4 for a=1  =>  |0.5 - 0.75| = 0.25
        let x = cat(&["1", "1", "0", "0", "1", "1", "1", "0"]);
        let a = cat(&["0", "0", "0", "0", "1", "1", "1", "1"]);
        let r = epsilon_cp_discrete(&x, &a, None).unwrap();
        assert!((r.epsilon_hat - 0.25).abs() < 1e-15);

        let same = epsilon_cp_discrete(&cat(&["p", "q", "p", "q"]), &cat(&["0", "0", "1", "1"]), None)
            .unwrap();
        assert_eq!(same.epsilon_hat, 0.0);
    }

    #[test]
    fn max_over_strata() {
        // stratum s1: x=1 rates 0.5 vs 0.6 (TV 0.1); stratum s2: 0.2 vs 0.5 (TV 0.3)
        let mut x = Vec::new();
        let mut a = Vec::new();
        let mut z = Vec::new();
        let mut push = |stratum: &str, group: &str, ones: usize, total: usize| {
            for i in 0..total {
                x.push(if i < ones { "1" } else { "0" });
                a.push(group.to_string());
                z.push(stratum.to_string());
            }
        };
        push("s1", "0", 5, 10);
        push("s1", "1", 6, 10);
        push("s2", "0", 2, 10);
        push("s2", "1", 5, 10);
        let r = epsilon_cp_discrete(
            &DataColumn::categorical(&x).unwrap(),
            &DataColumn::categorical(&a).unwrap(),
            Some(&DataColumn::categorical(&z).unwrap()),
        )
        .unwrap();
        assert!((r.epsilon_hat - 0.3).abs() < 1e-12);
        assert_eq!(r.worst_pair.unwrap().stratum, "s2");
        assert!((r.per_stratum[0].max_tv - 0.1).abs() < 1e-12);
    }

    #[test]
    fn empty_cells_skip_strata() {
        let x = cat(&["1", "0", "1", "0", "1"]);
        let a = cat(&["0", "1", "0", "1", "0"]);
        let z = cat(&["s", "s", "s", "s", "t"]);
        let r = epsilon_cp_discrete(&x, &a, Some(&z)).unwrap();
        assert_eq!(r.skipped, vec!["t".to_string()]);
        let z_all_bad = cat(&["s", "t", "s", "t", "s"]);
        assert_eq!(
            epsilon_cp_discrete(&x, &a, Some(&z_all_bad)),
            Err(Error::AllStrataSkipped)
        );
        let cont = DataColumn::continuous(vec![0.0, 1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!(epsilon_cp_discrete(&cont, &a, None).is_err());
    }

    #[test]
    fn single_level_attribute_gives_zero() {
        let r = epsilon_cp_discrete(&cat(&["1", "0", "1"]), &cat(&["g", "g", "g"]), None).unwrap();
        assert_eq!(r.epsilon_hat, 0.0);
    }

    fn labels(max: usize, len: usize) -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0..max, len)
    }

    proptest! {
        #[test]
        fn statistic_is_permutation_invariant(seed in 0u64..1000, shift in 1usize..15) {
            let (kxz, ka, kz) = gaussian_fixture(16, seed);
            let n = 16;
            let perm: Vec<usize> = (0..n).map(|i| (i * 5 + shift) % n).collect();
            let p = |g: &GramMatrix| {
                let e = g.entries();
                GramMatrix::new(DMatrix::from_fn(n, n, |i, j| e[(perm[i], perm[j])]), true).unwrap()
            };
            let s = kci_statistic(&kxz, &ka, &kz, 1e-3).unwrap();
            let sp = kci_statistic(&p(&kxz), &p(&ka), &p(&kz), 1e-3).unwrap();
            prop_assert!((s - sp).abs() <= 1e-10 * s.abs().max(1e-300) + 1e-14);
            prop_assert!(s >= 0.0);
        }

        #[test]
        fn statistic_matches_oracle_on_random_data(seed in 0u64..10_000, lambda in 1e-4f64..1.0) {
            let (kxz, ka, kz) = gaussian_fixture(18, seed);
            let s = kci_statistic(&kxz, &ka, &kz, lambda).unwrap();
            let o = regrouped_oracle(&kxz, &ka, &kz, lambda);
            prop_assert!((s - o).abs() <= 1e-8 * o.abs().max(1e-300));
        }

        #[test]
        fn tv_is_symmetric_and_coarsening_never_increases_it(
            x in labels(4, 30), a in labels(2, 30), z in labels(2, 30)
        ) {
            let names = |v: &[usize]| v.iter().map(|c| c.to_string()).collect::<Vec<_>>();
            let xc = DataColumn::categorical(&names(&x)).unwrap();
            let zc = DataColumn::categorical(&names(&z)).unwrap();
            let ac = DataColumn::categorical(&names(&a)).unwrap();
            let flipped: Vec<usize> = a.iter().map(|v| 1 - v).collect();
            let af = DataColumn::categorical(&names(&flipped)).unwrap();
            if let (Ok(r), Ok(rf)) = (
                epsilon_cp_discrete(&xc, &ac, Some(&zc)),
                epsilon_cp_discrete(&xc, &af, Some(&zc)),
            ) {
                prop_assert!((r.epsilon_hat - rf.epsilon_hat).abs() < 1e-15);
                // merge x categories {2,3} -> 2 and {0,1} -> 0
                let merged: Vec<usize> = x.iter().map(|v| v / 2).collect();
                let xm = DataColumn::categorical(&names(&merged)).unwrap();
                let rm = epsilon_cp_discrete(&xm, &ac, Some(&zc)).unwrap();
                prop_assert!(rm.epsilon_hat <= r.epsilon_hat + 1e-15);
            }
        }
    }
}
