//! Subspace-match analysis of learned neural network representations.
//!
//! The crate is organised bottom-up:
//!
//! - [`linalg`]: dense matrices, orthonormal bases, numerical rank, principal
//!   angles, least squares and small linear feasibility problems.
//! - [`network`]: feedforward ReLU networks, forward evaluation, activation
//!   recording, function-preserving rescalings and the JSON file format.
//! - [`repmatch`]: activation vectors, span representations, exact match,
//!   isomorphism verdicts and layer-by-layer comparison of two networks.
//! - [`forge`]: counterexample fixtures and synthesis of twin networks that
//!   agree at the output but differ at the hidden layer.
//! - [`experiments`]: full-batch training of twin networks from different
//!   seeds and aggregation of per-layer match scores.
//!
//! Batch work (per-input activation recording, per-layer comparison, per-row
//! synthesis, independent training runs) is dispatched through [`Execution`],
//! which uses rayon when the `parallel` feature is enabled and falls back to a
//! plain sequential loop otherwise.

pub mod error;
pub mod exec;
pub mod experiments;
pub mod forge;
pub mod linalg;
pub mod network;
pub mod repmatch;

pub use error::{Error, Result};
pub use exec::Execution;
pub use linalg::{FeasibilityProblem, Matrix, SubspaceBasis};
pub use network::{Activation, ActivationRecord, Dataset, Layer, Network};
pub use repmatch::{LayerMatch, LinearMap, MatchReport};

/// Default relative tolerance for every rank decision.
pub const DEFAULT_RANK_TOL: f64 = 1e-8;

/// Default absolute tolerance for output-equality checks.
pub const DEFAULT_OUTPUT_TOL: f64 = 1e-9;
