use super::matrix::{dot, norm, Matrix};
use super::svd::{check_tol, svd};
use crate::error::{Error, Result};

/// Orthonormality tolerance for basis vectors, per inner product.
pub const ORTHONORMAL_TOL: f64 = 1e-10;

/// Orthonormal basis of a linear subspace of `R^ambient_dim`.
///
/// `dim() == 0` is the zero subspace `{0}`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceBasis {
    ambient_dim: usize,
    vectors: Vec<Vec<f64>>,
}

impl SubspaceBasis {
    pub fn zero(ambient_dim: usize) -> Self {
        Self {
            ambient_dim,
            vectors: Vec::new(),
        }
    }

    /// Wraps vectors that are already orthonormal, checking that they are.
    pub fn from_orthonormal(ambient_dim: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if vectors.len() > ambient_dim {
            return Err(Error::input(format!(
                "{} basis vectors exceed ambient dimension {ambient_dim}",
                vectors.len()
            )));
        }
        for (i, v) in vectors.iter().enumerate() {
            if v.len() != ambient_dim {
                return Err(Error::input(format!(
                    "basis vector {i} has length {}, expected {ambient_dim}",
                    v.len()
                )));
            }
            if v.iter().any(|x| !x.is_finite()) {
                return Err(Error::input(format!("basis vector {i} is not finite")));
            }
            for (j, w) in vectors[..=i].iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                if (dot(v, w) - target).abs() > ORTHONORMAL_TOL {
                    return Err(Error::input(format!(
                        "basis vectors {j} and {i} are not orthonormal"
                    )));
                }
            }
        }
        Ok(Self {
            ambient_dim,
            vectors,
        })
    }

    /// Orthonormal basis of the span of arbitrary vectors.
    pub fn span_of<V: AsRef<[f64]>>(ambient_dim: usize, vectors: &[V], rel_tol: f64) -> Result<Self> {
        if vectors.is_empty() {
            check_tol(rel_tol)?;
            return Ok(Self::zero(ambient_dim));
        }
        let m = Matrix::from_rows(vectors)?;
        if m.cols() != ambient_dim {
            return Err(Error::input("vector length does not match ambient dimension"));
        }
        orthonormal_rowspace_basis(&m, rel_tol)
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn dim(&self) -> usize {
        self.vectors.len()
    }

    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Basis vectors as the rows of a `dim x ambient_dim` matrix.
    pub fn to_matrix(&self) -> Matrix {
        let data = self.vectors.iter().flatten().copied().collect();
        Matrix::from_raw(self.dim(), self.ambient_dim, data)
    }

    /// Orthogonal projection of `x` onto the subspace.
    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.ambient_dim];
        for b in &self.vectors {
            let c = dot(b, x);
            for (o, bi) in out.iter_mut().zip(b) {
                *o += c * bi;
            }
        }
        out
    }

    /// Orthonormal basis of the orthogonal complement.
    pub fn orthogonal_complement(&self) -> Self {
        let n = self.ambient_dim;
        if self.dim() == 0 {
            let vectors = (0..n)
                .map(|j| {
                    let mut e = vec![0.0; n];
                    e[j] = 1.0;
                    e
                })
                .collect();
            return Self {
                ambient_dim: n,
                vectors,
            };
        }
        // I - B^T B has eigenvalues exactly 0 or 1; its unit singular directions
        // span the complement.
        let mut p = Matrix::identity(n);
        for b in &self.vectors {
            for i in 0..n {
                for j in 0..n {
                    let cur = p[(i, j)];
                    p.set(i, j, cur - b[i] * b[j]);
                }
            }
        }
        let dec = svd(&p);
        let vectors = dec
            .s
            .iter()
            .zip(dec.v)
            .filter(|(s, _)| **s > 0.5)
            .map(|(_, v)| v)
            .collect();
        Self {
            ambient_dim: n,
            vectors: reorthonormalize(vectors),
        }
    }
}

/// Orthonormal basis of the row space of `m`, with dimension
/// `numerical_rank(m, rel_tol)` and ambient dimension `cols(m)`.
pub fn orthonormal_rowspace_basis(m: &Matrix, rel_tol: f64) -> Result<SubspaceBasis> {
    check_tol(rel_tol)?;
    m.ensure_finite()?;
    let dec = svd(m);
    let r = dec.rank(rel_tol);
    let vectors = dec.v.into_iter().take(r).collect();
    Ok(SubspaceBasis {
        ambient_dim: m.cols(),
        vectors: reorthonormalize(vectors),
    })
}

/// Two passes of modified Gram-Schmidt over vectors that are already
/// orthonormal up to rounding.
fn reorthonormalize(mut vs: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    for _ in 0..2 {
        for i in 0..vs.len() {
            let (done, rest) = vs.split_at_mut(i);
            let v = &mut rest[0];
            for q in done.iter() {
                let c = dot(q, v);
                for (vi, qi) in v.iter_mut().zip(q) {
                    *vi -= c * qi;
                }
            }
            let n = norm(v);
            for vi in v.iter_mut() {
                *vi /= n;
            }
        }
    }
    vs
}

fn check_ambient(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<()> {
    if u.ambient_dim == v.ambient_dim {
        Ok(())
    } else {
        Err(Error::input(format!(
            "ambient dimensions differ: {} vs {}",
            u.ambient_dim, v.ambient_dim
        )))
    }
}

/// Cosines of the principal angles between two subspaces, largest first.
///
/// These are the singular values of the `dim(u) x dim(v)` matrix of pairwise
/// inner products, clamped to `[0, 1]`. Empty if either subspace is `{0}`;
/// exactly one for every angle when both bases are identical.
pub fn principal_angle_cosines(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<Vec<f64>> {
    check_ambient(u, v)?;
    if u.dim() == 0 || v.dim() == 0 {
        return Ok(Vec::new());
    }
    if u == v {
        return Ok(vec![1.0; u.dim()]);
    }
    let data = u
        .vectors
        .iter()
        .flat_map(|a| v.vectors.iter().map(move |b| dot(a, b)))
        .collect();
    let cross = Matrix::from_raw(u.dim(), v.dim(), data);
    let k = u.dim().min(v.dim());
    Ok(svd(&cross)
        .s
        .into_iter()
        .take(k)
        .map(|s| s.clamp(0.0, 1.0))
        .collect())
}

/// Whether two subspaces coincide: both dimensions equal the numerical rank of
/// all basis vectors stacked together.
pub fn spans_equal(u: &SubspaceBasis, v: &SubspaceBasis, rel_tol: f64) -> Result<bool> {
    check_ambient(u, v)?;
    check_tol(rel_tol)?;
    if u.dim() != v.dim() {
        return Ok(false);
    }
    if u.dim() == 0 {
        return Ok(true);
    }
    let stacked = u.to_matrix().vstack(&v.to_matrix())?;
    Ok(svd(&stacked).rank(rel_tol) == u.dim())
}
