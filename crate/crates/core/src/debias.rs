//! Bias-subspace estimation from matched pairs and orthogonal projection.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernels::sym_eig;

/// Orthonormal basis (`d × r`) of the estimated bias directions.
#[derive(Debug, Clone, PartialEq)]
pub struct BiasSubspace {
    pub basis: DMatrix<f64>,
}

impl BiasSubspace {
    pub fn rank(&self) -> usize {
        self.basis.ncols()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }
}

/// Top-`r` principal components of the mean-centered differences `v − w`.
pub fn estimate_bias_subspace(pairs: &[(Vec<f64>, Vec<f64>)], r: usize) -> Result<BiasSubspace> {
    let Some((first, _)) = pairs.first() else {
        return Err(Error::TooSmall { min: 1, got: 0 });
    };
    let d = first.len();
    if d == 0 {
        return Err(Error::InvalidArgument("vectors must be nonempty".into()));
    }
    for (v, w) in pairs {
        for u in [v, w] {
            if u.len() != d {
                return Err(Error::DimensionMismatch { expected: d, got: u.len() });
            }
            if u.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("vectors must be finite".into()));
            }
        }
    }
    if r == 0 {
        return Ok(BiasSubspace {
            basis: DMatrix::zeros(d, 0),
        });
    }
    if pairs.len() < r {
        return Err(Error::TooSmall { min: r, got: pairs.len() });
    }

    let m = pairs.len();
    let mut diffs = DMatrix::from_fn(m, d, |i, j| pairs[i].0[j] - pairs[i].1[j]);
    let means: Vec<f64> = (0..d).map(|j| diffs.column(j).mean()).collect();
    for (j, mean) in means.iter().enumerate() {
        diffs.column_mut(j).add_scalar_mut(-mean);
    }
    let scatter = diffs.transpose() * &diffs;
    let eig = sym_eig(&scatter)?;
    let top = eig.values.first().copied().unwrap_or(0.0).max(0.0);
    let tol = top * (d.max(m) as f64) * f64::EPSILON * 10.0;
    let available = eig.values.iter().filter(|&&l| l > tol && l > 0.0).count();
    if r > available {
        return Err(Error::RankTooLarge { requested: r, available });
    }
    Ok(BiasSubspace {
        basis: eig.vectors.columns(0, r).into_owned(),
    })
}

/// `x − B(Bᵀx)` for the basis `B`.
pub fn project_out(x: &[f64], s: &BiasSubspace) -> Result<Vec<f64>> {
    if x.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: s.dim(),
            got: x.len(),
        });
    }
    let v = DVector::from_column_slice(x);
    let coef = s.basis.tr_mul(&v);
    Ok((v - &s.basis * coef).iter().copied().collect())
}
