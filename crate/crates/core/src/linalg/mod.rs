//! Dense linear algebra for desk-scale problems.
//!
//! Every rank decision takes a relative tolerance: a singular value counts
//! when it is strictly greater than `rel_tol * sigma_max`.

mod feasibility;
mod matrix;
mod subspace;
mod svd;

pub use feasibility::{feasible_point, FeasibilityProblem};
pub use matrix::{dot, norm, Matrix};
pub use subspace::{
    orthonormal_rowspace_basis, principal_angle_cosines, spans_equal, SubspaceBasis, ORTHONORMAL_TOL,
};
pub use svd::{least_squares_solve, numerical_rank, svd, Svd};
