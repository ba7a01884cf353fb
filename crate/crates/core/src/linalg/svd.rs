//! Thin singular value decomposition by one-sided Jacobi rotations.
//!
//! One-sided Jacobi computes small singular values to high relative accuracy,
//! which matters here: every rank decision in the crate is a comparison of a
//! singular value against `rel_tol * sigma_max`.

use super::matrix::{dot, norm, Matrix};
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 80;

/// `a = U diag(s) V^T` with `k = min(rows, cols)` singular triplets.
#[derive(Debug, Clone)]
pub struct Svd {
    /// Left singular vectors, `k` columns of length `rows`. A column whose
    /// singular value is exactly zero is the zero vector.
    pub u: Vec<Vec<f64>>,
    /// Singular values in non-increasing order.
    pub s: Vec<f64>,
    /// Right singular vectors, `k` columns of length `cols`, orthonormal.
    pub v: Vec<Vec<f64>>,
}

impl Svd {
    pub fn sigma_max(&self) -> f64 {
        self.s.first().copied().unwrap_or(0.0)
    }

    /// Number of singular values strictly above `rel_tol * sigma_max`.
    pub fn rank(&self, rel_tol: f64) -> usize {
        let cutoff = rel_tol * self.sigma_max();
        self.s.iter().take_while(|&&s| s > cutoff && s > 0.0).count()
    }
}

pub fn svd(a: &Matrix) -> Svd {
    if a.rows() >= a.cols() {
        one_sided_jacobi(a)
    } else {
        let t = one_sided_jacobi(&a.transpose());
        Svd {
            u: t.v,
            s: t.s,
            v: t.u,
        }
    }
}

/// Requires `rows >= cols`.
fn one_sided_jacobi(a: &Matrix) -> Svd {
    let (m, n) = a.shape();
    debug_assert!(m >= n);
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = dot(&cols[p], &cols[p]);
                let beta = dot(&cols[q], &cols[q]);
                let gamma = dot(&cols[p], &cols[q]);
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            break;
        }
    }

    let mut triplets: Vec<(f64, Vec<f64>, Vec<f64>)> = cols
        .into_iter()
        .zip(v)
        .map(|(c, vj)| {
            let sigma = norm(&c);
            let u = if sigma > 0.0 {
                c.iter().map(|x| x / sigma).collect()
            } else {
                vec![0.0; m]
            };
            (sigma, u, vj)
        })
        .collect();
    triplets.sort_by(|x, y| y.0.total_cmp(&x.0));

    let mut out = Svd {
        u: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        v: Vec::with_capacity(n),
    };
    for (s, u, vj) in triplets {
        out.s.push(s);
        out.u.push(u);
        out.v.push(vj);
    }
    out
}

fn rotate(vecs: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (head, tail) = vecs.split_at_mut(q);
    let (xp, xq) = (&mut head[p], &mut tail[0]);
    for (a, b) in xp.iter_mut().zip(xq.iter_mut()) {
        let (ap, aq) = (*a, *b);
        *a = c * ap - s * aq;
        *b = s * ap + c * aq;
    }
}

/// Number of singular values strictly greater than `rel_tol` times the largest.
///
/// The zero matrix (and any empty matrix) has rank 0.
pub fn numerical_rank(m: &Matrix, rel_tol: f64) -> Result<usize> {
    check_tol(rel_tol)?;
    m.ensure_finite()?;
    Ok(svd(m).rank(rel_tol))
}

/// Minimum-norm least-squares solution of `a x = b`.
///
/// Returns `x` (cols(a) x cols(b)) minimizing `||a x - b||_F`, together with
/// that minimal norm. Singular values below `max(rows, cols) * eps * sigma_max`
/// are treated as zero.
pub fn least_squares_solve(a: &Matrix, b: &Matrix) -> Result<(Matrix, f64)> {
    if a.rows() != b.rows() {
        return Err(Error::input(format!(
            "least squares: a has {} rows but b has {}",
            a.rows(),
            b.rows()
        )));
    }
    a.ensure_finite()?;
    b.ensure_finite()?;
    let (m, n) = a.shape();
    let k = b.cols();
    let dec = svd(a);
    let cutoff = (m.max(n) as f64) * f64::EPSILON * dec.sigma_max();

    let mut x = Matrix::zeros(n, k);
    for ((sigma, u), v) in dec.s.iter().zip(&dec.u).zip(&dec.v) {
        if *sigma <= cutoff || *sigma == 0.0 {
            continue;
        }
        for c in 0..k {
            let coef = (0..m).map(|i| u[i] * b[(i, c)]).sum::<f64>() / sigma;
            for r in 0..n {
                let cur = x[(r, c)];
                x.set(r, c, cur + coef * v[r]);
            }
        }
    }
    let residual = a.matmul(&x)?.sub(b)?.frobenius_norm();
    Ok((x, residual))
}

pub(crate) fn check_tol(rel_tol: f64) -> Result<()> {
    if rel_tol > 0.0 && rel_tol.is_finite() {
        Ok(())
    } else {
        Err(Error::input(format!("tolerance must be positive, got {rel_tol}")))
    }
}
