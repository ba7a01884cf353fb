//! Small dense linear feasibility problems: find `w` with `E w = e` and `G w <= g`.
//!
//! Strategy: take the minimum-norm least-squares solution of the equality
//! block; if it already satisfies the inequalities it is returned as is.
//! Otherwise the inequalities are restricted to the null space of the
//! equality block and a phase-one simplex (Bland's rule) looks for a point in
//! that affine slice. Every returned point is re-checked against the original
//! constraints before it is handed out.

use super::matrix::{dot, Matrix};
use super::subspace::orthonormal_rowspace_basis;
use super::svd::least_squares_solve;
use crate::error::{Error, Result};

/// Relative rank cutoff for the equality block's null space.
const NULL_SPACE_TOL: f64 = 1e-12;
const PIVOT_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityProblem {
    equality_lhs: Matrix,
    equality_rhs: Vec<f64>,
    inequality_lhs: Matrix,
    inequality_rhs: Vec<f64>,
}

impl FeasibilityProblem {
    pub fn new(
        equality_lhs: Matrix,
        equality_rhs: Vec<f64>,
        inequality_lhs: Matrix,
        inequality_rhs: Vec<f64>,
    ) -> Result<Self> {
        if equality_lhs.cols() != inequality_lhs.cols() {
            return Err(Error::input(format!(
                "equality block has {} columns but inequality block has {}",
                equality_lhs.cols(),
                inequality_lhs.cols()
            )));
        }
        if equality_lhs.rows() != equality_rhs.len() || inequality_lhs.rows() != inequality_rhs.len() {
            return Err(Error::input("constraint right-hand side length mismatch"));
        }
        if equality_rhs.iter().chain(&inequality_rhs).any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite constraint right-hand side"));
        }
        Ok(Self {
            equality_lhs,
            equality_rhs,
            inequality_lhs,
            inequality_rhs,
        })
    }

    /// A problem in `n` variables with no constraints.
    pub fn unconstrained(n: usize) -> Self {
        Self {
            equality_lhs: Matrix::zeros(0, n),
            equality_rhs: Vec::new(),
            inequality_lhs: Matrix::zeros(0, n),
            inequality_rhs: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.equality_lhs.cols()
    }

    pub fn equality_lhs(&self) -> &Matrix {
        &self.equality_lhs
    }

    pub fn equality_rhs(&self) -> &[f64] {
        &self.equality_rhs
    }

    pub fn inequality_lhs(&self) -> &Matrix {
        &self.inequality_lhs
    }

    pub fn inequality_rhs(&self) -> &[f64] {
        &self.inequality_rhs
    }

    /// Largest constraint violation at `w`: `|E w - e|` for equalities and
    /// `max(0, G w - g)` for inequalities.
    pub fn max_violation(&self, w: &[f64]) -> f64 {
        let eq = self
            .equality_lhs
            .row_iter()
            .zip(&self.equality_rhs)
            .map(|(r, b)| (dot(r, w) - b).abs());
        let ineq = self
            .inequality_lhs
            .row_iter()
            .zip(&self.inequality_rhs)
            .map(|(r, b)| (dot(r, w) - b).max(0.0));
        eq.chain(ineq).fold(0.0, f64::max)
    }

    pub fn is_satisfied(&self, w: &[f64], tol: f64) -> bool {
        w.len() == self.num_vars() && w.iter().all(|v| v.is_finite()) && self.max_violation(w) <= tol
    }
}

/// Returns a point satisfying every constraint within `tol`, or `None` when
/// the problem is infeasible or no point could be certified.
pub fn feasible_point(p: &FeasibilityProblem, tol: f64) -> Result<Option<Vec<f64>>> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::input(format!("tolerance must be non-negative, got {tol}")));
    }
    let n = p.num_vars();

    let (w0, null_basis) = if p.equality_lhs.rows() == 0 {
        let identity = (0..n)
            .map(|j| {
                let mut e = vec![0.0; n];
                e[j] = 1.0;
                e
            })
            .collect::<Vec<_>>();
        (vec![0.0; n], identity)
    } else {
        let rhs = Matrix::new(p.equality_rhs.len(), 1, p.equality_rhs.clone())?;
        let (x, _) = least_squares_solve(&p.equality_lhs, &rhs)?;
        let w0 = x.column(0);
        let range = orthonormal_rowspace_basis(&p.equality_lhs, NULL_SPACE_TOL)?;
        (w0, range.orthogonal_complement().vectors().to_vec())
    };

    if p.is_satisfied(&w0, tol) {
        return Ok(Some(w0));
    }
    // The equality block alone is inconsistent.
    let eq_only = FeasibilityProblem {
        inequality_lhs: Matrix::zeros(0, n),
        inequality_rhs: Vec::new(),
        ..p.clone()
    };
    if !eq_only.is_satisfied(&w0, tol) || null_basis.is_empty() {
        return Ok(None);
    }

    // Inequalities in null-space coordinates: (G N) z <= g - G w0.
    let reduced: Vec<Vec<f64>> = p
        .inequality_lhs
        .row_iter()
        .map(|g| null_basis.iter().map(|nb| dot(g, nb)).collect())
        .collect();
    let slack: Vec<f64> = p
        .inequality_lhs
        .row_iter()
        .zip(&p.inequality_rhs)
        .map(|(g, h)| h - dot(g, &w0))
        .collect();

    let Some(z) = phase_one(&reduced, &slack, null_basis.len(), tol) else {
        return Ok(None);
    };
    let mut w = w0;
    for (zk, nb) in z.iter().zip(&null_basis) {
        for (wi, ni) in w.iter_mut().zip(nb) {
            *wi += zk * ni;
        }
    }
    Ok(p.is_satisfied(&w, tol).then_some(w))
}

/// Phase-one simplex for `A z <= b` with free `z` (split as `z+ - z-`).
/// Returns `None` if the minimal total infeasibility exceeds `tol`.
fn phase_one(a: &[Vec<f64>], b: &[f64], p: usize, tol: f64) -> Option<Vec<f64>> {
    let m = a.len();
    let n_art = b.iter().filter(|&&v| v < 0.0).count();
    // columns: z+ (p), z- (p), slack (m), artificial (n_art), rhs
    let n_cols = 2 * p + m + n_art;
    let rhs = n_cols;
    let mut t = vec![vec![0.0; n_cols + 1]; m];
    let mut basis = vec![0usize; m];
    let mut next_art = 2 * p + m;

    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for k in 0..p {
            t[i][k] = sign * a[i][k];
            t[i][p + k] = -sign * a[i][k];
        }
        t[i][2 * p + i] = sign;
        t[i][rhs] = sign * b[i];
        if b[i] < 0.0 {
            t[i][next_art] = 1.0;
            basis[i] = next_art;
            next_art += 1;
        } else {
            basis[i] = 2 * p + i;
        }
    }

    let is_art = |j: usize| j >= 2 * p + m && j < n_cols;
    let mut obj = vec![0.0; n_cols + 1];
    for i in 0..m {
        if is_art(basis[i]) {
            for j in 0..=n_cols {
                if !is_art(j) {
                    obj[j] -= t[i][j];
                }
            }
        }
    }

    let max_iter = 1000 + 50 * (m + n_cols);
    for _ in 0..max_iter {
        let Some(enter) = (0..n_cols).find(|&j| obj[j] < -PIVOT_EPS) else {
            break;
        };
        let mut leave: Option<(usize, f64)> = None;
        for i in 0..m {
            if t[i][enter] > PIVOT_EPS {
                let ratio = t[i][rhs] / t[i][enter];
                leave = match leave {
                    Some((li, lr))
                        if ratio > lr + PIVOT_EPS
                            || ((ratio - lr).abs() <= PIVOT_EPS && basis[i] > basis[li]) =>
                    {
                        Some((li, lr))
                    }
                    _ => Some((i, ratio)),
                };
            }
        }
        // Unbounded direction cannot occur in phase one (objective bounded below by 0).
        let (row, _) = leave?;
        pivot(&mut t, &mut obj, row, enter);
        basis[row] = enter;
    }

    if -obj[rhs] > tol {
        return None;
    }
    let mut z = vec![0.0; p];
    for (i, &bj) in basis.iter().enumerate() {
        if bj < p {
            z[bj] += t[i][rhs];
        } else if bj < 2 * p {
            z[bj - p] -= t[i][rhs];
        }
    }
    Some(z)
}

fn pivot(t: &mut [Vec<f64>], obj: &mut [f64], row: usize, col: usize) {
    let piv = t[row][col];
    for v in t[row].iter_mut() {
        *v /= piv;
    }
    let pivot_row = t[row].clone();
    for (i, r) in t.iter_mut().enumerate() {
        if i == row {
            continue;
        }
        let f = r[col];
        if f != 0.0 {
            for (v, pv) in r.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
        }
    }
    let f = obj[col];
    if f != 0.0 {
        for (v, pv) in obj.iter_mut().zip(&pivot_row) {
            *v -= f * pv;
        }
    }
}
