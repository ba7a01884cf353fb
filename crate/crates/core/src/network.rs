//! Feedforward networks `f(x) = W_k s(W_{k-1} ... s(W_1 x))`, column-vector
//! convention (`output = W x`), with ReLU or identity activations.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::{dot, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    pub fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Relu => {
                if x > 0.0 {
                    x
                } else {
                    0.0
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative with the ReLU sub-gradient at zero taken as 0.
    pub fn derivative(self, pre: f64) -> f64 {
        match self {
            Activation::Relu => {
                if pre > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

/// Entrywise `max(0, x)`.
pub fn relu(x: &[f64]) -> Vec<f64> {
    x.iter().map(|&v| Activation::Relu.apply(v)).collect()
}

/// One affine layer followed by an activation. `weights[i][j]` connects
/// input `j` to neuron `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub weights: Matrix,
    pub bias: Option<Vec<f64>>,
    pub activation: Activation,
}

impl Layer {
    pub fn new(weights: Matrix, bias: Option<Vec<f64>>, activation: Activation) -> Result<Self> {
        if let Some(b) = &bias {
            if b.len() != weights.rows() {
                return Err(Error::input(format!(
                    "bias has length {}, layer has {} neurons",
                    b.len(),
                    weights.rows()
                )));
            }
            if b.iter().any(|v| !v.is_finite()) {
                return Err(Error::input("non-finite bias"));
            }
        }
        Ok(Self {
            weights,
            bias,
            activation,
        })
    }

    pub fn in_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.rows()
    }

    /// Pre-activation `W x + b`. `x` must have length `in_dim`.
    fn pre_activation(&self, x: &[f64]) -> Vec<f64> {
        let mut z: Vec<f64> = self.weights.row_iter().map(|r| dot(r, x)).collect();
        if let Some(b) = &self.bias {
            for (zi, bi) in z.iter_mut().zip(b) {
                *zi += bi;
            }
        }
        z
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Layer>,
}

/// Pre- and post-activation values of every layer for one input.
#[derive(Debug, Clone, PartialEq)]
pub struct Trace {
    pub pre: Vec<Vec<f64>>,
    pub post: Vec<Vec<f64>>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::input("network needs at least one layer"));
        }
        for (i, pair) in layers.windows(2).enumerate() {
            if pair[0].out_dim() != pair[1].in_dim() {
                return Err(Error::input(format!(
                    "layer {i} outputs {} values but layer {} expects {}",
                    pair[0].out_dim(),
                    i + 1,
                    pair[1].in_dim()
                )));
            }
        }
        Ok(Self { layers })
    }

    /// Bias-free network with ReLU on every layer except the last.
    pub fn from_weights(weights: Vec<Matrix>) -> Result<Self> {
        let k = weights.len();
        let layers = weights
            .into_iter()
            .enumerate()
            .map(|(i, w)| {
                let act = if i + 1 == k {
                    Activation::Identity
                } else {
                    Activation::Relu
                };
                Layer::new(w, None, act)
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(layers)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].in_dim()
    }

    pub fn out_dim(&self) -> usize {
        self.layers[self.layers.len() - 1].out_dim()
    }

    /// Widths from input to output: `[in_dim, out_1, ..., out_k]`.
    pub fn widths(&self) -> Vec<usize> {
        std::iter::once(self.in_dim())
            .chain(self.layers.iter().map(Layer::out_dim))
            .collect()
    }

    /// Same widths and activations.
    pub fn same_architecture(&self, other: &Network) -> bool {
        self.widths() == other.widths()
            && self
                .layers
                .iter()
                .zip(&other.layers)
                .all(|(a, b)| a.activation == b.activation)
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.in_dim() {
            return Err(Error::input(format!(
                "input has length {}, network expects {}",
                input.len(),
                self.in_dim()
            )));
        }
        if input.iter().any(|v| !v.is_finite()) {
            return Err(Error::input("non-finite input"));
        }
        Ok(())
    }

    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        Ok(self.trace(input)?.post.pop().expect("non-empty network"))
    }

    /// Per-layer pre/post activations for one input.
    pub fn trace(&self, input: &[f64]) -> Result<Trace> {
        self.check_input(input)?;
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut post: Vec<Vec<f64>> = Vec::with_capacity(self.layers.len());
        for layer in &self.layers {
            let x = post.last().map_or(input, Vec::as_slice);
            let z = layer.pre_activation(x);
            let h = z.iter().map(|&v| layer.activation.apply(v)).collect();
            pre.push(z);
            post.push(h);
        }
        Ok(Trace { pre, post })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&NetworkDoc::from(self)).expect("network serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: NetworkDoc = serde_json::from_str(text)?;
        doc.try_into()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// `forward` as a free function.
pub fn forward(net: &Network, input: &[f64]) -> Result<Vec<f64>> {
    net.forward(input)
}

/// Returns a network computing the same function, with the neurons of the
/// ReLU layer `layer_index` reordered and positively rescaled.
///
/// New neuron `i` is old neuron `perm[i]` multiplied by `scales[i]`; the
/// following layer's columns are permuted and divided to compensate. This
/// relies on `relu(P D x) = P D relu(x)` for a permutation `P` and positive
/// diagonal `D`.
pub fn apply_scaled_permutation(
    net: &Network,
    layer_index: usize,
    perm: &[usize],
    scales: &[f64],
) -> Result<Network> {
    let layers = net.layers();
    let layer = layers
        .get(layer_index)
        .ok_or_else(|| Error::input(format!("no layer {layer_index}")))?;
    if layer.activation != Activation::Relu {
        return Err(Error::input(format!("layer {layer_index} is not a ReLU layer")));
    }
    let next = layers
        .get(layer_index + 1)
        .ok_or_else(|| Error::input(format!("layer {layer_index} has no following layer")))?;
    let width = layer.out_dim();
    if perm.len() != width || scales.len() != width {
        return Err(Error::input(format!(
            "permutation and scales must have length {width}"
        )));
    }
    let mut seen = vec![false; width];
    for &p in perm {
        if p >= width || std::mem::replace(&mut seen[p], true) {
            return Err(Error::input("perm is not a permutation"));
        }
    }
    if let Some(s) = scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::input(format!("scale {s} is not strictly positive")));
    }

    let in_dim = layer.in_dim();
    let mut w = Vec::with_capacity(width * in_dim);
    for (&p, &s) in perm.iter().zip(scales) {
        w.extend(layer.weights.row(p).iter().map(|v| s * v));
    }
    let bias = layer
        .bias
        .as_ref()
        .map(|b| perm.iter().zip(scales).map(|(&p, &s)| s * b[p]).collect());
    let new_layer = Layer::new(Matrix::new(width, in_dim, w)?, bias, layer.activation)?;

    let out = next.out_dim();
    let mut nw = Vec::with_capacity(out * width);
    for r in 0..out {
        let row = next.weights.row(r);
        nw.extend(perm.iter().zip(scales).map(|(&p, &s)| row[p] / s));
    }
    let new_next = Layer::new(Matrix::new(out, width, nw)?, next.bias.clone(), next.activation)?;

    let mut out_layers = layers.to_vec();
    out_layers[layer_index] = new_layer;
    out_layers[layer_index + 1] = new_next;
    Network::new(out_layers)
}

/// Inputs `a_1..a_d`, optionally labelled with class indices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DatasetDoc", into = "DatasetDoc")]
pub struct Dataset {
    inputs: Vec<Vec<f64>>,
    labels: Option<Vec<usize>>,
}

#[derive(Serialize, Deserialize)]
struct DatasetDoc {
    inputs: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<usize>>,
}

impl TryFrom<DatasetDoc> for Dataset {
    type Error = Error;

    fn try_from(doc: DatasetDoc) -> Result<Self> {
        Dataset::new(doc.inputs, doc.labels)
    }
}

impl From<Dataset> for DatasetDoc {
    fn from(d: Dataset) -> Self {
        DatasetDoc {
            inputs: d.inputs,
            labels: d.labels,
        }
    }
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, labels: Option<Vec<usize>>) -> Result<Self> {
        let Some(first) = inputs.first() else {
            return Err(Error::input("dataset needs at least one input"));
        };
        let n = first.len();
        for (i, x) in inputs.iter().enumerate() {
            if x.len() != n {
                return Err(Error::input(format!("input {i} has length {}, expected {n}", x.len())));
            }
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::input(format!("input {i} is not finite")));
            }
        }
        if let Some(l) = &labels {
            if l.len() != inputs.len() {
                return Err(Error::input(format!(
                    "{} labels for {} inputs",
                    l.len(),
                    inputs.len()
                )));
            }
        }
        Ok(Self { inputs, labels })
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.inputs
    }

    pub fn labels(&self) -> Option<&[usize]> {
        self.labels.as_deref()
    }

    /// Number of inputs `d`.
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    pub fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    /// Inputs as columns: `input_dim x d`.
    pub fn input_matrix(&self) -> Matrix {
        Matrix::from_columns(self.input_dim(), &self.inputs).expect("validated dataset")
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }
}

/// Activations of one layer over the dataset, `neurons x d`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerActivations {
    pub pre: Matrix,
    pub post: Matrix,
}

/// Activations of every layer over a dataset.
///
/// Index 0 is the raw input (`pre == post`); index `i >= 1` is the output of
/// network layer `i - 1`. Column `j` of every matrix belongs to input `a_j`,
/// so row `v` of `post` at layer `i` is the activation vector of neuron `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct ActivationRecord {
    layers: Vec<LayerActivations>,
}

impl ActivationRecord {
    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layer(&self, i: usize) -> Option<&LayerActivations> {
        self.layers.get(i)
    }

    pub fn post(&self, i: usize) -> Option<&Matrix> {
        self.layers.get(i).map(|l| &l.post)
    }

    pub fn layers(&self) -> &[LayerActivations] {
        &self.layers
    }

    /// Number of inputs `d`.
    pub fn num_inputs(&self) -> usize {
        self.layers[0].post.cols()
    }
}

pub fn record_activations(net: &Network, data: &Dataset) -> Result<ActivationRecord> {
    record_activations_with(net, data, Execution::default())
}

pub fn record_activations_with(net: &Network, data: &Dataset, exec: Execution) -> Result<ActivationRecord> {
    if data.input_dim() != net.in_dim() {
        return Err(Error::input(format!(
            "dataset inputs have length {}, network expects {}",
            data.input_dim(),
            net.in_dim()
        )));
    }
    let traces = exec
        .map(data.inputs(), |x| net.trace(x))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let input = data.input_matrix();
    let mut layers = vec![LayerActivations {
        pre: input.clone(),
        post: input,
    }];
    for (li, layer) in net.layers().iter().enumerate() {
        let width = layer.out_dim();
        let gather = |pick: fn(&Trace) -> &Vec<Vec<f64>>| {
            let cols: Vec<&[f64]> = traces.iter().map(|t| pick(t)[li].as_slice()).collect();
            Matrix::from_columns(width, &cols).expect("finite activations")
        };
        layers.push(LayerActivations {
            pre: gather(|t| &t.pre),
            post: gather(|t| &t.post),
        });
    }
    Ok(ActivationRecord { layers })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerDoc {
    weights: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bias: Option<Vec<f64>>,
    activation: Activation,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkDoc {
    layers: Vec<LayerDoc>,
}

impl From<&Network> for NetworkDoc {
    fn from(net: &Network) -> Self {
        NetworkDoc {
            layers: net
                .layers
                .iter()
                .map(|l| LayerDoc {
                    weights: l.weights.to_rows(),
                    bias: l.bias.clone(),
                    activation: l.activation,
                })
                .collect(),
        }
    }
}

impl TryFrom<NetworkDoc> for Network {
    type Error = Error;

    fn try_from(doc: NetworkDoc) -> Result<Self> {
        if doc.layers.is_empty() {
            return Err(Error::parse("layers", "network needs at least one layer"));
        }
        let mut layers = Vec::with_capacity(doc.layers.len());
        for (i, l) in doc.layers.into_iter().enumerate() {
            let at = |msg: String| Error::parse(format!("layers[{i}]"), msg);
            if l.weights.is_empty() || l.weights[0].is_empty() {
                return Err(at("weights must be a non-empty matrix".into()));
            }
            let weights = Matrix::from_rows(&l.weights).map_err(|e| at(e.to_string()))?;
            if let Some(prev) = layers.last().map(Layer::out_dim) {
                if weights.cols() != prev {
                    return Err(at(format!(
                        "weights have {} columns but previous layer has {prev} neurons",
                        weights.cols()
                    )));
                }
            }
            layers.push(Layer::new(weights, l.bias, l.activation).map_err(|e| at(e.to_string()))?);
        }
        Network::new(layers)
    }
}
