use serde::Serialize;

use crate::error::{Error, Result};
use crate::stats::quantile;

/// Histograms `f[y][a]` of a discretized score over a common bin grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConditionalPmfSet {
    pub f: [[Vec<f64>; 2]; 2],
    pub bin_edges: Vec<f64>,
}

impl ConditionalPmfSet {
    /// Validates that all four vectors are pmfs of a common length `k` and
    /// that `bin_edges` has `k + 1` entries (pass an empty vector when there
    /// is no underlying score grid).
    pub fn new(f: [[Vec<f64>; 2]; 2], bin_edges: Vec<f64>) -> Result<Self> {
        let k = f[0][0].len();
        if k < 2 {
            return Err(Error::TooSmall { min: 2, got: k });
        }
        for (y, row) in f.iter().enumerate() {
            for (a, p) in row.iter().enumerate() {
                if p.len() != k {
                    return Err(Error::DimensionMismatch {
                        expected: k,
                        got: p.len(),
                    });
                }
                if p.iter().any(|v| v.is_nan() || *v < 0.0) || (p.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidArgument(format!(
                        "f[y={y}][a={a}] is not a probability vector"
                    )));
                }
            }
        }
        if !bin_edges.is_empty() && bin_edges.len() != k + 1 {
            return Err(Error::DimensionMismatch {
                expected: k + 1,
                got: bin_edges.len(),
            });
        }
        Ok(ConditionalPmfSet { f, bin_edges })
    }

    pub fn k(&self) -> usize {
        self.f[0][0].len()
    }

    pub fn get(&self, y: usize, a: usize) -> &[f64] {
        &self.f[y][a]
    }
}

/// `k + 1` equal-quantile edges of `s`: the minimum, the `j/k` quantiles and
/// the maximum.
pub fn quantile_edges(s: &[f64], k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::TooSmall { min: 2, got: k });
    }
    (0..=k).map(|j| quantile(s, j as f64 / k as f64)).collect()
}

/// Bin of `s` on `edges`: the number of interior edges strictly below `s`,
/// so bins are closed on the right and values outside the grid fall into
/// the end bins.
pub fn assign_bin(edges: &[f64], s: f64) -> usize {
    let interior = &edges[1..edges.len() - 1];
    interior.partition_point(|&e| e < s)
}

pub(crate) fn check_binary(v: &[usize], name: &str) -> Result<()> {
    match v.iter().find(|&&x| x > 1) {
        Some(x) => Err(Error::InvalidArgument(format!("{name} must be 0/1, found {x}"))),
        None => Ok(()),
    }
}

/// Quantile-bins `s` into `k` bins on the pooled sample and histograms it
/// within each `(y, a)` cell.
pub fn estimate_conditional_pmfs(s: &[f64], a: &[usize], y: &[usize], k: usize) -> Result<ConditionalPmfSet> {
    let n = s.len();
    for len in [a.len(), y.len()] {
        if len != n {
            return Err(Error::DimensionMismatch { expected: n, got: len });
        }
    }
    check_binary(a, "a")?;
    check_binary(y, "y")?;
    let edges = quantile_edges(s, k)?;
    let mut counts = [[vec![0usize; k], vec![0usize; k]], [vec![0usize; k], vec![0usize; k]]];
    for i in 0..n {
        counts[y[i]][a[i]][assign_bin(&edges, s[i])] += 1;
    }
    let mut f: [[Vec<f64>; 2]; 2] = Default::default();
    for yy in 0..2 {
        for aa in 0..2 {
            let c = &counts[yy][aa];
            let total: usize = c.iter().sum();
            if total == 0 {
                return Err(Error::EmptyCell(format!("y={yy}, a={aa}")));
            }
            f[yy][aa] = c.iter().map(|&x| x as f64 / total as f64).collect();
        }
    }
    ConditionalPmfSet::new(f, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_scores_give_point_masses() {
        let s = vec![3.0; 8];
        let a = vec![0, 0, 1, 1, 0, 0, 1, 1];
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let p = estimate_conditional_pmfs(&s, &a, &y, 4).unwrap();
        for yy in 0..2 {
            for aa in 0..2 {
                assert_eq!(p.get(yy, aa), &[1.0, 0.0, 0.0, 0.0]);
            }
        }
    }

    #[test]
    fn score_equal_to_outcome() {
        let y = vec![0, 1, 0, 1, 0, 1, 0, 1];
        let s: Vec<f64> = y.iter().map(|&v| v as f64).collect();
        let a = vec![0, 0, 0, 0, 1, 1, 1, 1];
        let p = estimate_conditional_pmfs(&s, &a, &y, 2).unwrap();
        for aa in 0..2 {
            assert_eq!(p.get(1, aa), &[0.0, 1.0]);
            assert_eq!(p.get(0, aa), &[1.0, 0.0]);
        }
    }

    #[test]
    fn hand_counted_histograms() {
        // pooled median of 1..8 is 4.5: bin 0 holds 1..4, bin 1 holds 5..8
        let s = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
        let a = [0, 1, 0, 1, 0, 1, 0, 1];
        let y = [0, 0, 1, 1, 0, 0, 1, 1];
        let p = estimate_conditional_pmfs(&s, &a, &y, 2).unwrap();
        assert_eq!(p.bin_edges, vec![1.0, 4.5, 8.0]);
        // (y=0,a=0): s=1,5   (y=0,a=1): s=2,6   (y=1,a=0): s=3,7   (y=1,a=1): s=4,8
        for yy in 0..2 {
            for aa in 0..2 {
                assert_eq!(p.get(yy, aa), &[0.5, 0.5]);
            }
        }
        let y2 = [0, 0, 0, 0, 1, 1, 1, 1];
        let p = estimate_conditional_pmfs(&s, &a, &y2, 2).unwrap();
        assert_eq!(p.get(0, 0), &[1.0, 0.0]);
        assert_eq!(p.get(1, 1), &[0.0, 1.0]);
    }

    #[test]
    fn empty_cell_is_an_error() {
        let s = [1.0, 2.0, 3.0, 4.0];
        let a = [0, 0, 1, 1];
        let y = [0, 0, 0, 1];
        assert!(matches!(
            estimate_conditional_pmfs(&s, &a, &y, 2),
            Err(Error::EmptyCell(_))
        ));
    }

    #[test]
    fn bins_are_right_closed() {
        let edges = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(assign_bin(&edges, 1.0), 0);
        assert_eq!(assign_bin(&edges, 1.0001), 1);
        assert_eq!(assign_bin(&edges, -5.0), 0);
        assert_eq!(assign_bin(&edges, 9.0), 2);
    }
}
