//! Pairs of Markov kernels `K0, K1` (one per group) that map a discretized
//! score to a randomized output with the same law across groups within each
//! outcome class:
//!
//! ```text
//! f_{y1} K1 = f_{y0} K0   for y in {0, 1}
//! ```
//!
//! The kernels are found by a linear program that also asks for output means
//! nondecreasing in the input bin and penalizes moving mass away from a
//! target column.

use nalgebra::DMatrix;
use rand::Rng;

use crate::error::{Error, Result};
use crate::kci::replicate_rng;
use crate::lp::{solve, LpProblem, LpSolution, LpStatus};

use super::pmfs::ConditionalPmfSet;

/// Linear cost `c_i |j - j(i)|^alpha` of sending input bin `i` to output
/// column `j` (both 1-based).
#[derive(Debug, Clone, PartialEq)]
pub struct CostSpec {
    /// Per-input weights `c_i`; all ones when absent.
    pub weights: Option<Vec<f64>>,
    pub alpha: f64,
    /// 1-based target columns `j(i)`; `ceil(i * k1 / k)` when absent.
    pub target: Option<Vec<usize>>,
}

impl Default for CostSpec {
    fn default() -> Self {
        CostSpec {
            weights: None,
            alpha: 1.0,
            target: None,
        }
    }
}

impl CostSpec {
    pub fn default_target(k: usize, k1: usize) -> Vec<usize> {
        (1..=k).map(|i| (i * k1).div_ceil(k)).collect()
    }

    /// `k x k1` matrix of per-entry costs.
    pub fn matrix(&self, k: usize, k1: usize) -> Result<DMatrix<f64>> {
        if !(self.alpha >= 0.0 && self.alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {}", self.alpha)));
        }
        let weights = self.weights.clone().unwrap_or_else(|| vec![1.0; k]);
        if weights.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: weights.len(),
            });
        }
        if weights.iter().any(|c| c.is_nan() || *c < 0.0) {
            return Err(Error::InvalidArgument("cost weights must be nonnegative".into()));
        }
        let target = self.target.clone().unwrap_or_else(|| Self::default_target(k, k1));
        if target.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: target.len(),
            });
        }
        if let Some(t) = target.iter().find(|&&t| t < 1 || t > k1) {
            return Err(Error::InvalidArgument(format!("target column {t} outside 1..={k1}")));
        }
        Ok(DMatrix::from_fn(k, k1, |i, j| {
            let d = (j as f64 + 1.0 - target[i] as f64).abs();
            weights[i] * d.powf(self.alpha)
        }))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovKernelPair {
    pub k0: DMatrix<f64>,
    pub k1: DMatrix<f64>,
    /// `max_y || f_{y1} K1 - f_{y0} K0 ||_1`.
    pub parity_residual: f64,
    pub objective: f64,
}

impl MarkovKernelPair {
    pub fn kernel(&self, group: usize) -> &DMatrix<f64> {
        if group == 0 {
            &self.k0
        } else {
            &self.k1
        }
    }
}

fn var(m: usize, i: usize, j: usize, k: usize, k1: usize) -> usize {
    m * k * k1 + i * k1 + j
}

/// Assembles the linear program over the entries of `K0` and `K1`.
///
/// Variable `(m, i, j)` sits at `m*k*k1 + i*k1 + j`. The parity equations
/// for the last output column are implied by the others together with the
/// row sums and are left out, giving `2(k + k1 - 1)` equalities and
/// `2(k - 1)` monotone-mean inequalities.
pub fn build_eo_lp(pmfs: &ConditionalPmfSet, k1: usize, cost: &CostSpec) -> Result<LpProblem> {
    if k1 < 2 {
        return Err(Error::TooSmall { min: 2, got: k1 });
    }
    let k = pmfs.k();
    let n = 2 * k * k1;
    let cm = cost.matrix(k, k1)?;
    let mut c = vec![0.0; n];
    for m in 0..2 {
        for i in 0..k {
            for j in 0..k1 {
                c[var(m, i, j, k, k1)] = cm[(i, j)];
            }
        }
    }
    let mut p = LpProblem::new(c);
    for y in 0..2 {
        for j in 0..k1 - 1 {
            let mut row = vec![0.0; n];
            for i in 0..k {
                row[var(1, i, j, k, k1)] += pmfs.get(y, 1)[i];
                row[var(0, i, j, k, k1)] -= pmfs.get(y, 0)[i];
            }
            p.add_eq(row, 0.0);
        }
    }
    for m in 0..2 {
        for i in 0..k {
            let mut row = vec![0.0; n];
            for j in 0..k1 {
                row[var(m, i, j, k, k1)] = 1.0;
            }
            p.add_eq(row, 1.0);
        }
    }
    for m in 0..2 {
        for i in 0..k - 1 {
            let mut row = vec![0.0; n];
            for j in 0..k1 {
                row[var(m, i, j, k, k1)] += (j + 1) as f64;
                row[var(m, i + 1, j, k, k1)] -= (j + 1) as f64;
            }
            p.add_ub(row, 0.0);
        }
    }
    Ok(p)
}

/// As [`build_eo_lp`] with the kernel of `group` fixed to `kernel`, so that
/// only the other group is randomized.
pub fn build_eo_lp_frozen(
    pmfs: &ConditionalPmfSet,
    k1: usize,
    cost: &CostSpec,
    group: usize,
    kernel: &DMatrix<f64>,
) -> Result<LpProblem> {
    let k = pmfs.k();
    if kernel.shape() != (k, k1) {
        return Err(Error::DimensionMismatch {
            expected: k * k1,
            got: kernel.len(),
        });
    }
    if group > 1 {
        return Err(Error::InvalidArgument(format!("group must be 0 or 1, got {group}")));
    }
    let mut p = build_eo_lp(pmfs, k1, cost)?;
    for i in 0..k {
        for j in 0..k1 {
            let v = kernel[(i, j)];
            p.set_bounds(var(group, i, j, k, k1), v, v);
        }
    }
    Ok(p)
}

/// `max_y || f_{y1} K1 - f_{y0} K0 ||_1`.
pub fn parity_residual(pmfs: &ConditionalPmfSet, k0: &DMatrix<f64>, k1: &DMatrix<f64>) -> f64 {
    (0..2)
        .map(|y| {
            let out1 = k1.tr_mul(&nalgebra::DVector::from_column_slice(pmfs.get(y, 1)));
            let out0 = k0.tr_mul(&nalgebra::DVector::from_column_slice(pmfs.get(y, 0)));
            (out1 - out0).lp_norm(1)
        })
        .fold(0.0, f64::max)
}

/// Reshapes an optimal solution of [`build_eo_lp`] into kernels, clamping
/// round-off negatives to zero.
pub fn kernel_pair_from_solution(
    pmfs: &ConditionalPmfSet,
    k1: usize,
    sol: &LpSolution,
) -> Result<MarkovKernelPair> {
    let k = pmfs.k();
    match sol.status {
        LpStatus::Optimal => {}
        s => return Err(Error::Lp(format!("kernel program is {s:?}").to_lowercase())),
    }
    if sol.x.len() != 2 * k * k1 {
        return Err(Error::DimensionMismatch {
            expected: 2 * k * k1,
            got: sol.x.len(),
        });
    }
    let take = |m| DMatrix::from_fn(k, k1, |i, j| sol.x[var(m, i, j, k, k1)].max(0.0));
    let (k0, kk1) = (take(0), take(1));
    Ok(MarkovKernelPair {
        parity_residual: parity_residual(pmfs, &k0, &kk1),
        k0,
        k1: kk1,
        objective: sol.objective,
    })
}

pub fn solve_eo_kernels(pmfs: &ConditionalPmfSet, k1: usize, cost: &CostSpec) -> Result<MarkovKernelPair> {
    let p = build_eo_lp(pmfs, k1, cost)?;
    kernel_pair_from_solution(pmfs, k1, &solve(&p)?)
}

/// Output means `sum_j j K(i, j)` (1-based `j`) for each input bin.
pub fn row_means(k: &DMatrix<f64>) -> Vec<f64> {
    (0..k.nrows())
        .map(|i| (0..k.ncols()).map(|j| (j + 1) as f64 * k[(i, j)]).sum())
        .collect()
}

/// Merges output columns: column `j` is added into column `map[j]` of a
/// `k x k_new` result.
pub fn merge_columns(k: &DMatrix<f64>, map: &[usize], k_new: usize) -> Result<DMatrix<f64>> {
    if map.len() != k.ncols() {
        return Err(Error::DimensionMismatch {
            expected: k.ncols(),
            got: map.len(),
        });
    }
    if let Some(&t) = map.iter().find(|&&t| t >= k_new) {
        return Err(Error::InvalidArgument(format!("merged column {t} out of range")));
    }
    let mut out = DMatrix::zeros(k.nrows(), k_new);
    for i in 0..k.nrows() {
        for (j, &t) in map.iter().enumerate() {
            out[(i, t)] += k[(i, j)];
        }
    }
    Ok(out)
}

/// Inverse-CDF draw from a pmf given a uniform `u` in `[0, 1)`.
pub(crate) fn draw_index(row: &[f64], u: f64) -> usize {
    let total: f64 = row.iter().sum();
    let target = u * total;
    let mut acc = 0.0;
    let mut last = 0;
    for (j, &p) in row.iter().enumerate() {
        if p > 0.0 {
            last = j;
            acc += p;
            if target < acc {
                return j;
            }
        }
    }
    last
}

/// Samples an output column from row `i` of `k`; deterministic in `seed`.
pub fn apply_kernel(k: &DMatrix<f64>, i: usize, seed: u64) -> Result<usize> {
    if i >= k.nrows() {
        return Err(Error::InvalidArgument(format!(
            "input bin {i} out of range 0..{}",
            k.nrows()
        )));
    }
    let row: Vec<f64> = k.row(i).iter().copied().collect();
    let u: f64 = replicate_rng(seed, 0).random();
    Ok(draw_index(&row, u))
}

/// Randomized output column for every observation; observation `t` uses the
/// random stream `(seed, t)`.
pub fn randomize(pair: &MarkovKernelPair, bins: &[usize], groups: &[usize], seed: u64) -> Result<Vec<usize>> {
    if bins.len() != groups.len() {
        return Err(Error::DimensionMismatch {
            expected: bins.len(),
            got: groups.len(),
        });
    }
    bins.iter()
        .zip(groups)
        .enumerate()
        .map(|(t, (&i, &g))| {
            let k = pair.kernel(g);
            if i >= k.nrows() || g > 1 {
                return Err(Error::InvalidArgument(format!("bin {i} / group {g} out of range")));
            }
            let row: Vec<f64> = k.row(i).iter().copied().collect();
            let u: f64 = replicate_rng(seed, t as u64).random();
            Ok(draw_index(&row, u))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::chi_square_gof;
    use proptest::prelude::*;

    fn pmf(v: &[f64]) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.iter().map(|x| x / s).collect()
    }

    fn fixture() -> ConditionalPmfSet {
        ConditionalPmfSet::new(
            [
                [pmf(&[4.0, 3.0, 2.0, 1.0]), pmf(&[5.0, 3.0, 1.0, 1.0])],
                [pmf(&[1.0, 2.0, 3.0, 4.0]), pmf(&[1.0, 1.0, 3.0, 5.0])],
            ],
            Vec::new(),
        )
        .unwrap()
    }

    /// Distributions over 4 bins where group 0 is nearly indistinguishable
    /// across outcomes but has one almost-empty bin, so that keeping its
    /// scores fixed cannot reproduce group 1's laws (and vice versa).
    fn one_sided_fixture() -> ConditionalPmfSet {
        let t = 0.95 / 3.0;
        ConditionalPmfSet::new(
            [
                [vec![0.001, 0.333, 0.333, 0.333], vec![0.4, 0.3, 0.2, 0.1]],
                [vec![0.05, t, t, t], vec![0.1, 0.2, 0.3, 0.4]],
            ],
            Vec::new(),
        )
        .unwrap()
    }

    fn check_pair(pair: &MarkovKernelPair) {
        assert!(pair.parity_residual <= 1e-8, "{}", pair.parity_residual);
        for k in [&pair.k0, &pair.k1] {
            for i in 0..k.nrows() {
                assert!((k.row(i).sum() - 1.0).abs() <= 1e-8);
            }
            assert!(k.iter().all(|&v| v >= 0.0));
            let means = row_means(k);
            assert!(means.windows(2).all(|w| w[1] >= w[0] - 1e-8), "{means:?}");
        }
    }

    #[test]
    fn program_dimensions() {
        for (k, k1) in [(4, 4), (5, 3), (20, 20)] {
            let f = pmf(&vec![1.0; k]);
            let pmfs = ConditionalPmfSet::new(
                [[f.clone(), f.clone()], [f.clone(), f]],
                Vec::new(),
            )
            .unwrap();
            let p = build_eo_lp(&pmfs, k1, &CostSpec::default()).unwrap();
            assert_eq!(p.num_vars(), 2 * k * k1);
            assert_eq!(p.a_eq.len(), 2 * (k + k1 - 1));
            assert_eq!(p.a_ub.len(), 2 * (k - 1));
        }
    }

    #[test]
    fn constant_kernels_are_feasible() {
        let pmfs = fixture();
        let p = build_eo_lp(&pmfs, 3, &CostSpec::default()).unwrap();
        let q = [0.2, 0.5, 0.3];
        let x: Vec<f64> = (0..p.num_vars()).map(|v| q[v % 3]).collect();
        assert!(p.max_violation(&x) <= 1e-12);
    }

    #[test]
    fn equal_groups_need_no_randomization() {
        let f0 = pmf(&[3.0, 1.0, 2.0, 4.0]);
        let f1 = pmf(&[1.0, 1.0, 4.0, 4.0]);
        let pmfs = ConditionalPmfSet::new([[f0.clone(), f0], [f1.clone(), f1]], Vec::new()).unwrap();
        let pair = solve_eo_kernels(&pmfs, 4, &CostSpec::default()).unwrap();
        assert!(pair.objective.abs() < 1e-12);
        let id = DMatrix::<f64>::identity(4, 4);
        assert!((&pair.k0 - &id).amax() < 1e-9);
        assert!((&pair.k1 - &id).amax() < 1e-9);

        // coarser output: row i goes to column ceil(i k1 / k)
        let pair = solve_eo_kernels(&pmfs, 2, &CostSpec::default()).unwrap();
        assert!(pair.objective.abs() < 1e-12);
        for (i, t) in CostSpec::default_target(4, 2).iter().enumerate() {
            assert!((pair.k0[(i, t - 1)] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn solved_kernels_satisfy_constraints() {
        let pmfs = fixture();
        for k1 in [2, 3, 4, 6] {
            let pair = solve_eo_kernels(&pmfs, k1, &CostSpec::default()).unwrap();
            check_pair(&pair);
        }
        let weighted = CostSpec {
            weights: Some(vec![1.0, 2.0, 3.0, 4.0]),
            alpha: 2.0,
            target: None,
        };
        check_pair(&solve_eo_kernels(&pmfs, 4, &weighted).unwrap());
    }

    #[test]
    fn one_group_alone_cannot_equalize() {
        let pmfs = one_sided_fixture();
        let two = solve(&build_eo_lp(&pmfs, 4, &CostSpec::default()).unwrap()).unwrap();
        assert_eq!(two.status, LpStatus::Optimal);
        let id = DMatrix::identity(4, 4);
        for g in 0..2 {
            let p = build_eo_lp_frozen(&pmfs, 4, &CostSpec::default(), g, &id).unwrap();
            assert_eq!(solve(&p).unwrap().status, LpStatus::Infeasible, "group {g}");
        }
    }

    #[test]
    fn cost_spec_validation() {
        assert_eq!(CostSpec::default_target(4, 2), vec![1, 1, 2, 2]);
        assert_eq!(CostSpec::default_target(3, 5), vec![2, 4, 5]);
        let bad = CostSpec {
            target: Some(vec![0, 1, 1, 1]),
            ..CostSpec::default()
        };
        assert!(bad.matrix(4, 2).is_err());
        let neg = CostSpec {
            alpha: -1.0,
            ..CostSpec::default()
        };
        assert!(neg.matrix(4, 2).is_err());
    }

    #[test]
    fn point_mass_row_always_hits_its_column() {
        let k = DMatrix::from_row_slice(2, 3, &[0.0, 1.0, 0.0, 0.2, 0.3, 0.5]);
        for seed in 0..200 {
            assert_eq!(apply_kernel(&k, 0, seed).unwrap(), 1);
        }
        assert!(apply_kernel(&k, 2, 0).is_err());
        assert_eq!(apply_kernel(&k, 1, 42).unwrap(), apply_kernel(&k, 1, 42).unwrap());
    }

    #[test]
    fn fair_coin_row() {
        let k = DMatrix::from_row_slice(1, 2, &[0.5, 0.5]);
        let ones = (0..10_000u64).filter(|&s| apply_kernel(&k, 0, s).unwrap() == 1).count();
        assert!((ones as i64 - 5000).abs() <= 200, "{ones}");
    }

    #[test]
    fn uniform_row_passes_chi_square() {
        let k = DMatrix::from_element(1, 4, 0.25);
        let mut counts = [0usize; 4];
        for s in 0..10_000u64 {
            counts[apply_kernel(&k, 0, s).unwrap()] += 1;
        }
        assert!(chi_square_gof(&counts, &[0.25; 4]).unwrap() > 0.001);
    }

    #[test]
    fn randomize_uses_group_kernels() {
        let pair = MarkovKernelPair {
            k0: DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0]),
            k1: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            parity_residual: 0.0,
            objective: 0.0,
        };
        let out = randomize(&pair, &[0, 1, 0, 1], &[0, 0, 1, 1], 3).unwrap();
        assert_eq!(out, vec![0, 1, 1, 0]);
    }

    fn random_pmfs() -> impl Strategy<Value = ConditionalPmfSet> {
        (3usize..=5).prop_flat_map(|k| {
            prop::collection::vec(prop::collection::vec(1u32..20, k), 4).prop_map(|v| {
                let p = |x: &Vec<u32>| pmf(&x.iter().map(|&c| c as f64).collect::<Vec<_>>());
                ConditionalPmfSet::new([[p(&v[0]), p(&v[1])], [p(&v[2]), p(&v[3])]], Vec::new())
                    .unwrap()
            })
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn kernels_are_valid_and_merging_preserves_parity(
            pmfs in random_pmfs(), k1 in 2usize..=5, cut in 1usize..4
        ) {
            let pair = solve_eo_kernels(&pmfs, k1, &CostSpec::default()).unwrap();
            check_pair(&pair);
            let cut = cut.min(k1 - 1);
            let map: Vec<usize> = (0..k1).map(|j| usize::from(j >= cut)).collect();
            let m0 = merge_columns(&pair.k0, &map, 2).unwrap();
            let m1 = merge_columns(&pair.k1, &map, 2).unwrap();
            prop_assert!(parity_residual(&pmfs, &m0, &m1) <= 1e-8);
        }
    }
}
