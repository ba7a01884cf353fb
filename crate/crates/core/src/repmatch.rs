//! Activation vectors, span representations and subspace match between the
//! layers of two networks evaluated on the same inputs.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{orthonormal_rowspace_basis, principal_angle_cosines, spans_equal, Matrix, SubspaceBasis};
use crate::network::{record_activations_with, ActivationRecord, Dataset, Network};

/// Activation vector of one neuron: its post-activation outputs over the
/// dataset, length `d`. Layer 0 is the input.
pub fn neuron_activation_vector(rec: &ActivationRecord, layer: usize, neuron: usize) -> Result<Vec<f64>> {
    let post = rec
        .post(layer)
        .ok_or_else(|| Error::input(format!("no layer {layer} in record")))?;
    if neuron >= post.rows() {
        return Err(Error::input(format!(
            "layer {layer} has {} neurons, asked for {neuron}",
            post.rows()
        )));
    }
    Ok(post.row(neuron).to_vec())
}

/// Orthonormal basis of the span of the activation vectors of `subset`
/// (all neurons of the layer when `None`), a subspace of `R^d`.
pub fn layer_representation(
    rec: &ActivationRecord,
    layer: usize,
    subset: Option<&[usize]>,
    rel_tol: f64,
) -> Result<SubspaceBasis> {
    let post = rec
        .post(layer)
        .ok_or_else(|| Error::input(format!("no layer {layer} in record")))?;
    if post.cols() == 0 {
        return Err(Error::input("empty dataset"));
    }
    match subset {
        None => orthonormal_rowspace_basis(post, rel_tol),
        Some(idx) => {
            let rows = idx
                .iter()
                .map(|&v| neuron_activation_vector(rec, layer, v))
                .collect::<Result<Vec<_>>>()?;
            SubspaceBasis::span_of(post.cols(), &rows, rel_tol)
        }
    }
}

/// Two neuron sets are an exact match when their representations coincide.
pub fn exact_match(u: &SubspaceBasis, v: &SubspaceBasis, rel_tol: f64) -> Result<bool> {
    spans_equal(u, v, rel_tol)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsomorphismVerdict {
    pub isomorphic: bool,
    pub dim_a: usize,
    pub dim_b: usize,
}

/// Finite-dimensional real vector spaces are isomorphic iff their dimensions agree.
pub fn isomorphism_verdict(u: &SubspaceBasis, v: &SubspaceBasis) -> IsomorphismVerdict {
    IsomorphismVerdict {
        isomorphic: u.dim() == v.dim(),
        dim_a: u.dim(),
        dim_b: v.dim(),
    }
}

/// Linear map of the ambient space carrying `domain` onto `codomain`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub matrix: Matrix,
    pub domain: SubspaceBasis,
    pub codomain: SubspaceBasis,
}

impl LinearMap {
    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.matrix.matvec(x)
    }
}

/// Witness of an isomorphism between equal-dimensional subspaces.
///
/// Sends the `i`-th basis vector of `u` to the `i`-th basis vector of `v` and
/// the orthogonal complement of `u` to zero, i.e. `M = sum_i v_i u_i^T`.
/// Returns `None` when the dimensions differ.
pub fn subspace_isomorphism(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<Option<LinearMap>> {
    if u.ambient_dim() != v.ambient_dim() {
        return Err(Error::input("ambient dimensions differ"));
    }
    if u.dim() != v.dim() {
        return Ok(None);
    }
    let n = u.ambient_dim();
    let mut data = vec![0.0; n * n];
    for (ui, vi) in u.vectors().iter().zip(v.vectors()) {
        for r in 0..n {
            for c in 0..n {
                data[r * n + c] += vi[r] * ui[c];
            }
        }
    }
    Ok(Some(LinearMap {
        matrix: Matrix::new(n, n, data)?,
        domain: u.clone(),
        codomain: v.clone(),
    }))
}

/// Graded similarity in `[0, 1]`: the sum of squared principal-angle cosines
/// divided by the larger dimension. Two zero subspaces score 1.
pub fn match_score(u: &SubspaceBasis, v: &SubspaceBasis) -> Result<f64> {
    let cosines = principal_angle_cosines(u, v)?;
    Ok(score_from_cosines(&cosines, u.dim(), v.dim()))
}

fn score_from_cosines(cosines: &[f64], dim_a: usize, dim_b: usize) -> f64 {
    let denom = dim_a.max(dim_b);
    if denom == 0 {
        return 1.0;
    }
    let s: f64 = cosines.iter().map(|c| c * c).sum();
    (s / denom as f64).clamp(0.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerMatch {
    #[serde(rename = "layer")]
    pub layer_index: usize,
    pub dim_a: usize,
    pub dim_b: usize,
    pub exact_match: bool,
    pub isomorphic: bool,
    pub score: f64,
    #[serde(rename = "cosines")]
    pub principal_cosines: Vec<f64>,
}

impl LayerMatch {
    /// Compares two representations of the same layer.
    pub fn between(layer_index: usize, u: &SubspaceBasis, v: &SubspaceBasis, rel_tol: f64) -> Result<Self> {
        let cosines = principal_angle_cosines(u, v)?;
        Ok(Self {
            layer_index,
            dim_a: u.dim(),
            dim_b: v.dim(),
            exact_match: exact_match(u, v, rel_tol)?,
            isomorphic: isomorphism_verdict(u, v).isomorphic,
            score: score_from_cosines(&cosines, u.dim(), v.dim()),
            principal_cosines: cosines,
        })
    }
}

/// Per-layer comparison of two networks, layer 0 (inputs) through the output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub layers: Vec<LayerMatch>,
}

impl MatchReport {
    pub fn layer(&self, i: usize) -> Option<&LayerMatch> {
        self.layers.iter().find(|l| l.layer_index == i)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Aligned plain-text table, one row per layer.
    pub fn to_table(&self) -> String {
        let header = ["layer", "dim_a", "dim_b", "exact_match", "isomorphic", "score", "cosines"];
        let rows: Vec<[String; 7]> = self
            .layers
            .iter()
            .map(|l| {
                let cos = l
                    .principal_cosines
                    .iter()
                    .map(|c| format!("{c:.6}"))
                    .collect::<Vec<_>>()
                    .join(" ");
                [
                    l.layer_index.to_string(),
                    l.dim_a.to_string(),
                    l.dim_b.to_string(),
                    l.exact_match.to_string(),
                    l.isomorphic.to_string(),
                    format!("{:.6}", l.score),
                    if cos.is_empty() { "-".into() } else { cos },
                ]
            })
            .collect();
        let mut widths = header.map(str::len);
        for r in &rows {
            for (w, cell) in widths.iter_mut().zip(r) {
                *w = (*w).max(cell.len());
            }
        }
        let mut out = String::new();
        let mut line = |cells: &[&str]| {
            let last = cells.len() - 1;
            for (i, (c, w)) in cells.iter().zip(widths).enumerate() {
                if i == last {
                    let _ = write!(out, "{c}");
                } else {
                    let _ = write!(out, "{c:<w$}  ");
                }
            }
            out.push('\n');
        };
        line(&header);
        for r in &rows {
            line(&r.iter().map(String::as_str).collect::<Vec<_>>());
        }
        out
    }
}

pub fn compare_networks(net_a: &Network, net_b: &Network, data: &Dataset, rel_tol: f64) -> Result<MatchReport> {
    compare_networks_with(net_a, net_b, data, rel_tol, Execution::default())
}

pub fn compare_networks_with(
    net_a: &Network,
    net_b: &Network,
    data: &Dataset,
    rel_tol: f64,
    exec: Execution,
) -> Result<MatchReport> {
    if net_a.widths() != net_b.widths() {
        return Err(Error::input(format!(
            "architectures differ: {:?} vs {:?}",
            net_a.widths(),
            net_b.widths()
        )));
    }
    let rec_a = record_activations_with(net_a, data, exec)?;
    let rec_b = record_activations_with(net_b, data, exec)?;
    compare_records_with(&rec_a, &rec_b, rel_tol, exec)
}

/// Layer-by-layer comparison of two activation records over the same inputs.
pub fn compare_records_with(
    rec_a: &ActivationRecord,
    rec_b: &ActivationRecord,
    rel_tol: f64,
    exec: Execution,
) -> Result<MatchReport> {
    if rec_a.num_layers() != rec_b.num_layers() || rec_a.num_inputs() != rec_b.num_inputs() {
        return Err(Error::input("activation records have different shapes"));
    }
    let layers = exec.try_map_range(rec_a.num_layers(), |i| {
        let u = layer_representation(rec_a, i, None, rel_tol)?;
        let v = layer_representation(rec_b, i, None, rel_tol)?;
        LayerMatch::between(i, &u, &v, rel_tol)
    })?;
    Ok(MatchReport { layers })
}
