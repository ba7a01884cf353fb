//! Counterexample fixtures and twin synthesis.
//!
//! A twin is a one-hidden-layer ReLU network whose hidden activations over a
//! dataset follow a prescribed non-negative pattern while its outputs
//! reproduce a reference network's outputs on the same dataset. Each hidden
//! row is realized independently as a linear feasibility problem: inputs
//! where the target is positive become equalities `w . a_j = t_j`, inputs
//! where it is zero become `w . a_j <= 0`. The output layer is then fitted by
//! minimum-norm least squares.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{feasible_point, least_squares_solve, FeasibilityProblem, Matrix};
use crate::network::{record_activations, Activation, Dataset, Layer, Network};
use crate::repmatch::LayerMatch;
use crate::repmatch::layer_representation;

/// Two networks and the inputs they are compared on.
#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub net_a: Network,
    pub net_b: Network,
    pub data: Dataset,
}

fn antipodal_pair() -> Dataset {
    Dataset::new(vec![vec![1.0, 1.0], vec![-1.0, -1.0]], None).expect("static dataset")
}

fn net(w1: [[f64; 2]; 2], w2: [[f64; 2]; 2]) -> Network {
    Network::from_weights(vec![
        Matrix::from_rows(&w1).expect("static weights"),
        Matrix::from_rows(&w2).expect("static weights"),
    ])
    .expect("static network")
}

/// The hand-picked 2-2-2 pair: identity vs. reflected hidden weights, shared
/// output weights `[[1,-1],[1,-1]]`, inputs `(1,1)` and `(-1,-1)`.
pub fn example1_fixture() -> Fixture {
    Fixture {
        net_a: net([[1.0, 0.0], [0.0, 1.0]], [[1.0, -1.0], [1.0, -1.0]]),
        net_b: net([[1.0, 0.0], [0.0, -1.0]], [[1.0, -1.0], [1.0, -1.0]]),
        data: antipodal_pair(),
    }
}

/// A pair that agrees at the output (zero on both inputs) while its hidden
/// representations are the two coordinate lines of `R^2`.
pub fn corrected_fixture() -> Fixture {
    Fixture {
        net_a: net([[1.0, 0.0], [0.0, 1.0]], [[1.0, -1.0], [1.0, -1.0]]),
        net_b: net([[-0.5, -0.5], [-1.0, -1.0]], [[2.0, -1.0], [2.0, -1.0]]),
        data: antipodal_pair(),
    }
}

/// Desired post-ReLU activations of the hidden layer, `hidden_dim x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct ForgeTarget {
    hidden_pattern: Matrix,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetDoc {
    pattern: Vec<Vec<f64>>,
}

impl ForgeTarget {
    pub fn new(hidden_pattern: Matrix) -> Result<Self> {
        hidden_pattern.ensure_finite()?;
        if let Some(v) = hidden_pattern.as_slice().iter().find(|v| **v < 0.0) {
            return Err(Error::input(format!("target pattern has negative entry {v}")));
        }
        Ok(Self { hidden_pattern })
    }

    pub fn pattern(&self) -> &Matrix {
        &self.hidden_pattern
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: TargetDoc = serde_json::from_str(text)?;
        if doc.pattern.is_empty() {
            return Err(Error::parse("pattern", "pattern must have at least one row"));
        }
        let m = Matrix::from_rows(&doc.pattern).map_err(|e| Error::parse("pattern", e.to_string()))?;
        Self::new(m).map_err(|e| Error::parse("pattern", e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&TargetDoc {
            pattern: self.hidden_pattern.to_rows(),
        })
        .expect("pattern serializes")
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Finds a weight row `w` with `relu(w . a_j) = target_row[j]` (within `tol`)
/// for every input, or `None` when no such row exists.
pub fn realize_hidden_row(data: &Dataset, target_row: &[f64], tol: f64) -> Result<Option<Vec<f64>>> {
    if target_row.len() != data.len() {
        return Err(Error::input(format!(
            "target row has {} entries for {} inputs",
            target_row.len(),
            data.len()
        )));
    }
    if let Some(v) = target_row.iter().find(|v| !(**v >= 0.0 && v.is_finite())) {
        return Err(Error::input(format!("target entry {v} is not a non-negative number")));
    }
    let n = data.input_dim();
    let (mut eq, mut eq_rhs, mut ineq) = (Vec::new(), Vec::new(), Vec::new());
    for (a, &t) in data.inputs().iter().zip(target_row) {
        if t > 0.0 {
            eq.extend_from_slice(a);
            eq_rhs.push(t);
        } else {
            ineq.extend_from_slice(a);
        }
    }
    let n_ineq = ineq.len() / n;
    let problem = FeasibilityProblem::new(
        Matrix::new(eq_rhs.len(), n, eq)?,
        eq_rhs,
        Matrix::new(n_ineq, n, ineq)?,
        vec![0.0; n_ineq],
    )?;
    feasible_point(&problem, tol)
}

pub fn forge_twin(data: &Dataset, reference: &Network, target: &ForgeTarget, tol: f64) -> Result<Network> {
    forge_twin_with(data, reference, target, tol, Execution::default())
}

/// Builds a one-hidden-layer twin of `reference` whose hidden activations on
/// `data` follow `target` and whose outputs match the reference's within `tol`.
pub fn forge_twin_with(
    data: &Dataset,
    reference: &Network,
    target: &ForgeTarget,
    tol: f64,
    exec: Execution,
) -> Result<Network> {
    let layers = reference.layers();
    if layers.len() != 2 || layers[0].activation != Activation::Relu || layers[1].activation != Activation::Identity {
        return Err(Error::input(
            "reference must be a one-hidden-layer network with a ReLU hidden layer and identity output",
        ));
    }
    let pattern = target.pattern();
    if pattern.cols() != data.len() {
        return Err(Error::input(format!(
            "target pattern has {} columns for {} inputs",
            pattern.cols(),
            data.len()
        )));
    }
    if pattern.rows() != layers[0].out_dim() {
        return Err(Error::input(format!(
            "target pattern has {} rows, reference hidden layer has {} neurons",
            pattern.rows(),
            layers[0].out_dim()
        )));
    }

    let rows = exec.try_map_range(pattern.rows(), |r| {
        realize_hidden_row(data, pattern.row(r), tol)?.ok_or(Error::InfeasibleRow { row: r })
    })?;
    let hidden = Layer::new(Matrix::from_rows(&rows)?, None, Activation::Relu)?;

    // Fit W2 h_j (+ b2) = y_j for every input j: as a least-squares system,
    // H^T W2^T = Y^T with H = pattern (hidden x d) and Y = outputs (out x d).
    let rec = record_activations(reference, data)?;
    let outputs = rec.post(2).expect("two-layer record");
    let with_bias = layers[1].bias.is_some();
    let mut design = pattern.transpose();
    if with_bias {
        let ones = Matrix::new(1, data.len(), vec![1.0; data.len()])?;
        design = pattern.vstack(&ones)?.transpose();
    }
    let (solution, residual) = least_squares_solve(&design, &outputs.transpose())?;
    if residual > tol {
        return Err(Error::Residual { residual, tol });
    }
    let fitted = solution.transpose();
    let h = pattern.rows();
    let out_dim = fitted.rows();
    let weights = Matrix::new(
        out_dim,
        h,
        fitted.row_iter().flat_map(|r| r[..h].iter().copied()).collect(),
    )?;
    let bias = with_bias.then(|| fitted.row_iter().map(|r| r[h]).collect());
    let output = Layer::new(weights, bias, Activation::Identity)?;

    let twin = Network::new(vec![hidden, output])?;
    let deviation = max_output_deviation(reference, &twin, data)?;
    if deviation > tol {
        return Err(Error::Residual { residual: deviation, tol });
    }
    Ok(twin)
}

fn max_output_deviation(a: &Network, b: &Network, data: &Dataset) -> Result<f64> {
    let mut dev: f64 = 0.0;
    for x in data.inputs() {
        let (ya, yb) = (a.forward(x)?, b.forward(x)?);
        for (p, q) in ya.iter().zip(&yb) {
            dev = dev.max((p - q).abs());
        }
    }
    Ok(dev)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HiddenVerdict {
    pub layer: usize,
    pub exact_match: bool,
    pub isomorphic: bool,
    pub dims: (usize, usize),
    pub score: f64,
}

/// Whether two networks agree at the output on a dataset, and how their
/// hidden representations relate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CounterexampleVerdict {
    pub outputs_equal: bool,
    pub max_output_deviation: f64,
    pub tolerance: f64,
    pub hidden: Vec<HiddenVerdict>,
}

impl CounterexampleVerdict {
    /// Verdict for the first hidden layer.
    pub fn first_hidden(&self) -> Option<&HiddenVerdict> {
        self.hidden.first()
    }
}

/// `out_tol` bounds the output deviation; `rank_tol` drives the span decisions.
pub fn verify_counterexample(
    net_a: &Network,
    net_b: &Network,
    data: &Dataset,
    out_tol: f64,
    rank_tol: f64,
) -> Result<CounterexampleVerdict> {
    if !net_a.same_architecture(net_b) {
        return Err(Error::input("networks have different architectures"));
    }
    let deviation = max_output_deviation(net_a, net_b, data)?;
    let ra = record_activations(net_a, data)?;
    let rb = record_activations(net_b, data)?;
    let hidden = (1..net_a.num_layers())
        .map(|i| {
            let u = layer_representation(&ra, i, None, rank_tol)?;
            let v = layer_representation(&rb, i, None, rank_tol)?;
            let m = LayerMatch::between(i, &u, &v, rank_tol)?;
            Ok(HiddenVerdict {
                layer: i,
                exact_match: m.exact_match,
                isomorphic: m.isomorphic,
                dims: (m.dim_a, m.dim_b),
                score: m.score,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CounterexampleVerdict {
        outputs_equal: deviation <= out_tol,
        max_output_deviation: deviation,
        tolerance: out_tol,
        hidden,
    })
}
