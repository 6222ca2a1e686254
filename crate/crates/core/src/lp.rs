//! Dense two-phase primal simplex.
//!
//! Problems have the form
//!
//! ```text
//! minimize c'x  subject to  A_eq x = b_eq,  A_ub x <= b_ub,  lo <= x <= hi
//! ```
//!
//! with finite lower bounds. Entering columns are priced by the most negative
//! reduced cost, falling back to Bland's rule during long degenerate runs;
//! ratio ties go to the lowest basic index. The method terminates on
//! degenerate problems and is fully deterministic.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-9;
const DEGENERATE_RUN: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub c: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    /// Per-variable `(lo, hi)`; `hi` may be `f64::INFINITY`.
    pub bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    /// Empty unless the status is optimal.
    pub x: Vec<f64>,
    pub objective: f64,
    pub status: LpStatus,
    pub max_violation: f64,
}

impl LpProblem {
    /// Nonnegative variables with no constraints yet.
    pub fn new(c: Vec<f64>) -> Self {
        let n = c.len();
        LpProblem {
            c,
            a_eq: Vec::new(),
            b_eq: Vec::new(),
            a_ub: Vec::new(),
            b_ub: Vec::new(),
            bounds: vec![(0.0, f64::INFINITY); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn add_eq(&mut self, row: Vec<f64>, b: f64) {
        self.a_eq.push(row);
        self.b_eq.push(b);
    }

    pub fn add_ub(&mut self, row: Vec<f64>, b: f64) {
        self.a_ub.push(row);
        self.b_ub.push(b);
    }

    pub fn set_bounds(&mut self, var: usize, lo: f64, hi: f64) {
        self.bounds[var] = (lo, hi);
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.c.len();
        if self.bounds.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.bounds.len(),
            });
        }
        if self.a_eq.len() != self.b_eq.len() || self.a_ub.len() != self.b_ub.len() {
            return Err(Error::Lp("constraint rows and right-hand sides differ in count".into()));
        }
        for row in self.a_eq.iter().chain(&self.a_ub) {
            if row.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Lp("non-finite constraint coefficient".into()));
            }
        }
        if self.c.iter().chain(&self.b_eq).chain(&self.b_ub).any(|v| !v.is_finite()) {
            return Err(Error::Lp("non-finite cost or right-hand side".into()));
        }
        for &(lo, hi) in &self.bounds {
            if !lo.is_finite() || hi.is_nan() || hi == f64::NEG_INFINITY {
                return Err(Error::Lp(format!("unsupported bounds [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    /// Largest violation of any constraint or bound at `x`.
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
        let mut v: f64 = 0.0;
        for (row, b) in self.a_eq.iter().zip(&self.b_eq) {
            v = v.max((dot(row) - b).abs());
        }
        for (row, b) in self.a_ub.iter().zip(&self.b_ub) {
            v = v.max(dot(row) - b);
        }
        for (xi, &(lo, hi)) in x.iter().zip(&self.bounds) {
            v = v.max(lo - xi).max(xi - hi);
        }
        v
    }

    /// `max |b|` over all right-hand sides and finite bounds.
    pub fn rhs_scale(&self) -> f64 {
        self.b_eq
            .iter()
            .chain(&self.b_ub)
            .copied()
            .chain(self.bounds.iter().flat_map(|&(l, h)| [l, h]))
            .filter(|v| v.is_finite())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Simplex tableau stored row-major; the last row is the objective and the
/// last column the right-hand side.
struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.t[r * (self.cols + 1) + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn obj(&self, c: usize) -> f64 {
        self.at(self.rows, c)
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let w = self.cols + 1;
        let p = self.t[r * w + c];
        for j in 0..w {
            self.t[r * w + j] /= p;
        }
        self.t[r * w + c] = 1.0;
        let prow: Vec<f64> = self.t[r * w..(r + 1) * w].to_vec();
        for i in 0..=self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * w + c];
            if f == 0.0 {
                continue;
            }
            for (t, p) in self.t[i * w..(i + 1) * w].iter_mut().zip(&prow) {
                *t -= f * p;
            }
            self.t[i * w + c] = 0.0;
        }
        self.basis[r] = c;
    }

    /// Rebuilds the objective row for costs `cost` (indexed by column),
    /// expressing it in terms of the current nonbasic variables.
    fn set_objective(&mut self, cost: &[f64]) {
        let w = self.cols + 1;
        let base = self.rows * w;
        self.t[base..base + self.cols].copy_from_slice(&cost[..self.cols]);
        self.t[base + self.cols] = 0.0;
        for r in 0..self.rows {
            let cb = cost[self.basis[r]];
            if cb != 0.0 {
                for j in 0..w {
                    self.t[base + j] -= cb * self.t[r * w + j];
                }
            }
        }
    }

    /// Pivots over columns `< active_cols` until optimal. Returns false on an
    /// unbounded direction.
    ///
    /// The entering column is the most negative reduced cost; after
    /// `DEGENERATE_RUN` consecutive degenerate pivots the rule switches to
    /// Bland's lowest-index choice until the objective moves again, which
    /// rules out cycling.
    fn optimize(&mut self, active_cols: usize, max_iter: usize) -> Result<bool> {
        let mut degenerate_run = 0usize;
        for _ in 0..max_iter {
            let bland = degenerate_run >= DEGENERATE_RUN;
            let entering = if bland {
                (0..active_cols).find(|&j| self.obj(j) < -PIVOT_TOL)
            } else {
                (0..active_cols)
                    .filter(|&j| self.obj(j) < -PIVOT_TOL)
                    .min_by(|&a, &b| self.obj(a).total_cmp(&self.obj(b)))
            };
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                let a = self.at(r, c);
                if a > PIVOT_TOL {
                    let ratio = self.rhs(r) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((br, best)) => {
                            if ratio < best - 1e-12
                                || (ratio <= best + 1e-12 && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, best))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, ratio)) => {
                    if ratio.abs() <= 1e-12 {
                        degenerate_run += 1;
                    } else {
                        degenerate_run = 0;
                    }
                    self.pivot(r, c)
                }
            }
        }
        Err(Error::Lp("simplex iteration limit reached".into()))
    }

    fn drop_row(&mut self, r: usize) {
        let w = self.cols + 1;
        self.t.drain(r * w..(r + 1) * w);
        self.basis.remove(r);
        self.rows -= 1;
    }
}

/// Solves `p`. Infeasibility and unboundedness are reported through the
/// status; an error means the problem itself is malformed.
pub fn solve(p: &LpProblem) -> Result<LpSolution> {
    p.validate()?;
    let n = p.num_vars();
    let not_optimal = |status| LpSolution {
        x: Vec::new(),
        objective: match status {
            LpStatus::Unbounded => f64::NEG_INFINITY,
            _ => f64::INFINITY,
        },
        status,
        max_violation: 0.0,
    };
    if p.bounds.iter().any(|&(lo, hi)| hi < lo) {
        return Ok(not_optimal(LpStatus::Infeasible));
    }

    // Shift x = lo + x'. Fixed variables leave the problem entirely.
    let free: Vec<usize> = (0..n).filter(|&i| p.bounds[i].1 > p.bounds[i].0).collect();
    let lo: Vec<f64> = p.bounds.iter().map(|b| b.0).collect();
    let shifted = |row: &[f64], b: f64| b - row.iter().zip(&lo).map(|(a, l)| a * l).sum::<f64>();

    // Rows of the standard form: (coefficients over free vars, slack sign, rhs).
    let mut rows: Vec<(Vec<f64>, Option<f64>, f64)> = Vec::new();
    for (row, &b) in p.a_eq.iter().zip(&p.b_eq) {
        rows.push((free.iter().map(|&i| row[i]).collect(), None, shifted(row, b)));
    }
    for (row, &b) in p.a_ub.iter().zip(&p.b_ub) {
        rows.push((free.iter().map(|&i| row[i]).collect(), Some(1.0), shifted(row, b)));
    }
    for (k, &i) in free.iter().enumerate() {
        let (l, h) = p.bounds[i];
        if h.is_finite() {
            let mut r = vec![0.0; free.len()];
            r[k] = 1.0;
            rows.push((r, Some(1.0), h - l));
        }
    }
    for row in rows.iter_mut() {
        if row.2 < 0.0 {
            row.0.iter_mut().for_each(|v| *v = -*v);
            row.1 = row.1.map(|s| -s);
            row.2 = -row.2;
        }
    }

    let nf = free.len();
    let m = rows.len();
    let n_slack = rows.iter().filter(|r| r.1.is_some()).count();
    let needs_art: Vec<bool> = rows.iter().map(|r| r.1 != Some(1.0)).collect();
    let n_art = needs_art.iter().filter(|&&b| b).count();
    let real_cols = nf + n_slack;
    let cols = real_cols + n_art;
    let w = cols + 1;

    let mut tab = Tableau {
        rows: m,
        cols,
        t: vec![0.0; (m + 1) * w],
        basis: vec![0; m],
    };
    let (mut s_idx, mut a_idx) = (nf, real_cols);
    for (r, (coef, slack, rhs)) in rows.iter().enumerate() {
        tab.t[r * w..r * w + nf].copy_from_slice(coef);
        tab.t[r * w + cols] = *rhs;
        if let Some(sign) = slack {
            tab.t[r * w + s_idx] = *sign;
            if *sign == 1.0 {
                tab.basis[r] = s_idx;
            }
            s_idx += 1;
        }
        if needs_art[r] {
            tab.t[r * w + a_idx] = 1.0;
            tab.basis[r] = a_idx;
            a_idx += 1;
        }
    }
    let max_iter = 50_000 + 200 * (m + cols);

    if n_art > 0 {
        let mut cost = vec![0.0; cols];
        cost[real_cols..].iter_mut().for_each(|v| *v = 1.0);
        tab.set_objective(&cost);
        tab.optimize(cols, max_iter)?;
        let infeas: f64 = (0..tab.rows)
            .filter(|&r| tab.basis[r] >= real_cols)
            .map(|r| tab.rhs(r))
            .sum();
        if infeas > 1e-9 * (1.0 + p.rhs_scale()) {
            return Ok(not_optimal(LpStatus::Infeasible));
        }
        // Drive zero-level artificials out of the basis; rows where that is
        // impossible are linearly dependent and can be removed.
        let mut r = 0;
        while r < tab.rows {
            if tab.basis[r] >= real_cols {
                let col = (0..real_cols)
                    .filter(|&j| tab.at(r, j).abs() > PIVOT_TOL)
                    .max_by(|&a, &b| tab.at(r, a).abs().total_cmp(&tab.at(r, b).abs()));
                match col {
                    Some(j) => tab.pivot(r, j),
                    None => {
                        tab.drop_row(r);
                        continue;
                    }
                }
            }
            r += 1;
        }
        // artificial columns stay in the tableau but are never re-entered
        for r in 0..=tab.rows {
            for j in real_cols..cols {
                tab.t[r * w + j] = 0.0;
            }
        }
    }

    let mut cost = vec![0.0; cols];
    for (k, &i) in free.iter().enumerate() {
        cost[k] = p.c[i];
    }
    tab.set_objective(&cost);
    if !tab.optimize(real_cols, max_iter)? {
        return Ok(not_optimal(LpStatus::Unbounded));
    }

    let mut xs = vec![0.0; real_cols];
    for r in 0..tab.rows {
        xs[tab.basis[r]] = tab.rhs(r);
    }
    refine(&tab, &rows, nf, &mut xs);

    let mut x = lo.clone();
    for (k, &i) in free.iter().enumerate() {
        let v = if xs[k] < 0.0 && xs[k] > -1e-9 { 0.0 } else { xs[k] };
        x[i] += v;
    }
    let objective = p.c.iter().zip(&x).map(|(c, x)| c * x).sum();
    let max_violation = p.max_violation(&x);
    Ok(LpSolution {
        x,
        objective,
        status: LpStatus::Optimal,
        max_violation,
    })
}

/// Recomputes the basic values by solving `B x_B = b` on the original
/// standard-form columns, which removes the error accumulated by pivoting.
fn refine(tab: &Tableau, rows: &[(Vec<f64>, Option<f64>, f64)], nf: usize, xs: &mut [f64]) {
    // With dependent rows removed the basis is tall; solve it in the
    // least-squares sense, which is exact for a consistent system.
    let m = rows.len();
    let k = tab.rows;
    if k == 0 {
        return;
    }
    let mut slack_col = vec![None; m];
    let mut s = nf;
    for (r, row) in rows.iter().enumerate() {
        if row.1.is_some() {
            slack_col[r] = Some(s);
            s += 1;
        }
    }
    let column = |j: usize| -> DVector<f64> {
        DVector::from_fn(m, |r, _| {
            if j < nf {
                rows[r].0[j]
            } else if slack_col[r] == Some(j) {
                rows[r].1.unwrap()
            } else {
                0.0
            }
        })
    };
    let b = DVector::from_fn(m, |r, _| rows[r].2);
    let basis_cols: Vec<DVector<f64>> = tab.basis.iter().map(|&j| column(j)).collect();
    let bmat = DMatrix::from_columns(&basis_cols);
    let solved = if k == m {
        bmat.clone().lu().solve(&b)
    } else {
        let bt = bmat.transpose();
        (&bt * &bmat).lu().solve(&(bt * &b))
    };
    if let Some(sol) = solved {
        let residual = (&bmat * &sol - &b).amax();
        let current = DVector::from_iterator(k, tab.basis.iter().map(|&j| xs[j]));
        let old_residual = (&bmat * &current - &b).amax();
        if sol.iter().all(|v| v.is_finite()) && residual <= old_residual {
            for (r, &j) in tab.basis.iter().enumerate() {
                xs[j] = sol[r];
            }
        }
    }
}
