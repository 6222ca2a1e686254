//! Kernel functions, Gram matrices and the dense symmetric linear algebra the
//! tests are built on.
//!
//! All Gram matrices are dense `n x n`. Centering uses `M_n = I - 11'/n`, so a
//! centered Gram matrix `K = M_n G M_n` has zero row and column sums.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::data::DataColumn;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelKind {
    /// Gaussian kernel `exp(-(u-v)^2 / (2 h^2))`.
    Rbf,
    /// Indicator kernel `1{u = v}` on categorical codes.
    Delta,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub kind: KernelKind,
    /// Bandwidth `h`; ignored by the delta kernel.
    pub bandwidth: f64,
}

impl KernelSpec {
    pub fn rbf(bandwidth: f64) -> Result<Self> {
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {bandwidth}"
            )));
        }
        Ok(KernelSpec {
            kind: KernelKind::Rbf,
            bandwidth,
        })
    }

    pub fn delta() -> Self {
        KernelSpec {
            kind: KernelKind::Delta,
            bandwidth: 1.0,
        }
    }

    /// Delta for categorical columns, rbf with the median heuristic otherwise.
    pub fn default_for(col: &DataColumn) -> Self {
        match col {
            DataColumn::Categorical { .. } => KernelSpec::delta(),
            DataColumn::Continuous(v) => KernelSpec {
                kind: KernelKind::Rbf,
                bandwidth: median_bandwidth(v),
            },
        }
    }

    fn name(&self) -> &'static str {
        match self.kind {
            KernelKind::Rbf => "rbf",
            KernelKind::Delta => "delta",
        }
    }
}

/// A single observation fed to [`kernel_eval`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scalar {
    Real(f64),
    Code(usize),
}

pub fn kernel_eval(spec: &KernelSpec, u: Scalar, v: Scalar) -> Result<f64> {
    match (spec.kind, u, v) {
        (KernelKind::Rbf, Scalar::Real(u), Scalar::Real(v)) => Ok(rbf(u, v, spec.bandwidth)),
        (KernelKind::Delta, Scalar::Code(u), Scalar::Code(v)) => Ok(if u == v { 1.0 } else { 0.0 }),
        (_, Scalar::Real(_), _) | (_, _, Scalar::Real(_)) => Err(Error::KernelMismatch {
            kernel: spec.name(),
            column: "continuous",
        }),
        _ => Err(Error::KernelMismatch {
            kernel: spec.name(),
            column: "categorical",
        }),
    }
}

#[inline]
fn rbf(u: f64, v: f64, h: f64) -> f64 {
    let d = u - v;
    (-d * d / (2.0 * h * h)).exp()
}

/// Median of the pairwise distances `|v_i - v_j|`, `i < j`.
///
/// Falls back to the median of the strictly positive distances when more
/// than half of the pairs tie, and to 1 for a constant column.
pub fn median_bandwidth(values: &[f64]) -> f64 {
    let n = values.len();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push((values[i] - values[j]).abs());
        }
    }
    median_positive(d)
}

/// Median heuristic on Euclidean distances between feature rows.
pub fn median_bandwidth_rows(rows: &[Vec<f64>]) -> f64 {
    let n = rows.len();
    let mut d = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            d.push(sq_dist(&rows[i], &rows[j]).sqrt());
        }
    }
    median_positive(d)
}

fn median_positive(mut d: Vec<f64>) -> f64 {
    let med = median_in_place(&mut d);
    if med > 0.0 {
        return med;
    }
    let mut pos: Vec<f64> = d.into_iter().filter(|&x| x > 0.0).collect();
    if pos.is_empty() {
        return 1.0;
    }
    median_in_place(&mut pos)
}

fn median_in_place(d: &mut [f64]) -> f64 {
    if d.is_empty() {
        return 0.0;
    }
    let mid = d.len() / 2;
    let (_, m, _) = d.select_nth_unstable_by(mid, f64::total_cmp);
    let upper = *m;
    if d.len() % 2 == 1 {
        upper
    } else {
        let lower = d[..mid].iter().copied().fold(f64::NEG_INFINITY, f64::max);
        0.5 * (lower + upper)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

// ---------------------------------------------------------------------------
// Gram matrices
// ---------------------------------------------------------------------------

/// Symmetric kernel matrix together with its centering state.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: DMatrix<f64>,
    centered: bool,
}

impl GramMatrix {
    /// Wraps a square matrix, checking symmetry to `1e-12 * max|entry|`.
    pub fn new(entries: DMatrix<f64>, centered: bool) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let asym = max_asymmetry(&entries);
        if asym > 1e-12 * max_abs(&entries) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(GramMatrix { entries, centered })
    }

    pub fn zeros(n: usize) -> Self {
        GramMatrix {
            entries: DMatrix::zeros(n, n),
            centered: true,
        }
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn is_centered(&self) -> bool {
        self.centered
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn max_abs(&self) -> f64 {
        max_abs(&self.entries)
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

pub fn gram(col: &DataColumn, spec: &KernelSpec) -> Result<GramMatrix> {
    match (col, spec.kind) {
        (DataColumn::Continuous(v), KernelKind::Rbf) => gram_real(v, spec),
        (DataColumn::Categorical { codes, .. }, KernelKind::Delta) => Ok(gram_codes(codes)),
        (c, _) => Err(Error::KernelMismatch {
            kernel: spec.name(),
            column: c.kind_name(),
        }),
    }
}

/// Rbf Gram matrix of a real-valued sample.
pub fn gram_real(values: &[f64], spec: &KernelSpec) -> Result<GramMatrix> {
    if spec.kind != KernelKind::Rbf {
        return Err(Error::KernelMismatch {
            kernel: spec.name(),
            column: "continuous",
        });
    }
    let n = values.len();
    let h = spec.bandwidth;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = 1.0;
        for j in i + 1..n {
            let k = rbf(values[i], values[j], h);
            g[(i, j)] = k;
            g[(j, i)] = k;
        }
    }
    Ok(GramMatrix {
        entries: g,
        centered: false,
    })
}

/// Delta-kernel Gram matrix of categorical codes.
pub fn gram_codes(codes: &[usize]) -> GramMatrix {
    let n = codes.len();
    let g = DMatrix::from_fn(n, n, |i, j| if codes[i] == codes[j] { 1.0 } else { 0.0 });
    GramMatrix {
        entries: g,
        centered: false,
    }
}

/// Rbf Gram matrix of feature vectors under the Euclidean distance.
pub fn gram_rows(rows: &[Vec<f64>], bandwidth: f64) -> Result<GramMatrix> {
    KernelSpec::rbf(bandwidth)?;
    let n = rows.len();
    if let Some(r) = rows.iter().find(|r| r.len() != rows[0].len()) {
        return Err(Error::DimensionMismatch {
            expected: rows[0].len(),
            got: r.len(),
        });
    }
    let denom = 2.0 * bandwidth * bandwidth;
    let mut g = DMatrix::zeros(n, n);
    for i in 0..n {
        g[(i, i)] = 1.0;
        for j in i + 1..n {
            let k = (-sq_dist(&rows[i], &rows[j]) / denom).exp();
            g[(i, j)] = k;
            g[(j, i)] = k;
        }
    }
    Ok(GramMatrix {
        entries: g,
        centered: false,
    })
}

pub fn centering_matrix(n: usize) -> DMatrix<f64> {
    let c = 1.0 / n as f64;
    DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 - c } else { -c })
}

/// `M_n G M_n`. Idempotent.
pub fn center(g: &GramMatrix) -> GramMatrix {
    if g.centered {
        return g.clone();
    }
    let entries = center_matrix(&g.entries);
    GramMatrix {
        entries,
        centered: true,
    }
}

/// Double centering of an arbitrary square matrix.
pub(crate) fn center_matrix(g: &DMatrix<f64>) -> DMatrix<f64> {
    let n = g.nrows();
    let nf = n as f64;
    let row_means: Vec<f64> = (0..n).map(|i| g.row(i).sum() / nf).collect();
    let col_means: Vec<f64> = (0..n).map(|j| g.column(j).sum() / nf).collect();
    let grand = row_means.iter().sum::<f64>() / nf;
    let mut out = DMatrix::from_fn(n, n, |i, j| g[(i, j)] - row_means[i] - col_means[j] + grand);
    symmetrize(&mut out);
    out
}

pub fn hadamard(k1: &GramMatrix, k2: &GramMatrix) -> Result<GramMatrix> {
    if k1.dim() != k2.dim() {
        return Err(Error::DimensionMismatch {
            expected: k1.dim(),
            got: k2.dim(),
        });
    }
    Ok(GramMatrix {
        entries: k1.entries.component_mul(&k2.entries),
        centered: false,
    })
}

// ---------------------------------------------------------------------------
// Spectral helpers
// ---------------------------------------------------------------------------

/// Eigen-decomposition `S = sum_i values[i] * v_i v_i'` with eigenvalues in
/// descending order and orthonormal eigenvector columns.
#[derive(Debug, Clone)]
pub struct SymEig {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl SymEig {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        self.apply(|l| l)
    }

    /// `sum_i f(values[i]) v_i v_i'`.
    pub fn apply(&self, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
        let mut scaled = self.vectors.clone();
        for (j, &l) in self.values.iter().enumerate() {
            let s = f(l);
            scaled.column_mut(j).scale_mut(s);
        }
        let mut out = &scaled * self.vectors.transpose();
        symmetrize(&mut out);
        out
    }
}

pub fn sym_eig(s: &DMatrix<f64>) -> Result<SymEig> {
    if s.nrows() != s.ncols() {
        return Err(Error::DimensionMismatch {
            expected: s.nrows(),
            got: s.ncols(),
        });
    }
    let asym = max_asymmetry(s);
    if asym > 1e-10 * max_abs(s).max(f64::MIN_POSITIVE) {
        return Err(Error::NotSymmetric(asym));
    }
    let n = s.nrows();
    if n == 0 {
        return Ok(SymEig {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(s.clone());
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(SymEig { values, vectors })
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix; eigenvalues with
/// `|l| <= n * eps * max|l|` are treated as zero.
pub fn pinv_sym(s: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let eig = sym_eig(s)?;
    let cutoff = pinv_cutoff(&eig.values, s.nrows());
    Ok(eig.apply(|l| if l.abs() > cutoff { 1.0 / l } else { 0.0 }))
}

pub(crate) fn pinv_cutoff(values: &[f64], n: usize) -> f64 {
    let max = values.iter().fold(0.0f64, |m, l| m.max(l.abs()));
    n as f64 * f64::EPSILON * max
}

/// `(K + lambda M_n)^+` for a centered Gram matrix `K`.
pub fn reg_pinv(k: &GramMatrix, lambda: f64) -> Result<DMatrix<f64>> {
    if !k.centered {
        return Err(Error::NotCentered);
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "lambda must be positive, got {lambda}"
        )));
    }
    let n = k.dim();
    let mut s = &k.entries + centering_matrix(n) * lambda;
    symmetrize(&mut s);
    pinv_sym(&s)
}

pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in i + 1..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

pub(crate) fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0f64, |a, &x| a.max(x.abs()))
}

fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i + 1..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Smallest eigenvalue; used for PSD checks.
pub fn min_eigenvalue(s: &DMatrix<f64>) -> Result<f64> {
    Ok(sym_eig(s)?.values.last().copied().unwrap_or(0.0))
}

/// Row sums of a matrix, handy for centering checks.
pub fn row_sums(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_iterator(m.nrows(), m.row_iter().map(|r| r.sum()))
}
