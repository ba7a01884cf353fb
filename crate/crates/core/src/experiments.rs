//! Twin-network experiments: train networks of the same architecture from
//! different seeds on shared data and compare their layers.
//!
//! Training is full-batch gradient descent on mean softmax cross-entropy with
//! hand-written backpropagation. Each run accumulates gradients over the
//! samples in a fixed order, so a `(config, data, seed)` triple always
//! produces bit-identical weights; parallelism is only across runs.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::linalg::Matrix;
use crate::network::{Dataset, Layer, Network};
use crate::repmatch::compare_networks_with;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Loss {
    SoftmaxCrossEntropy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    /// Widths from input to output, e.g. `[2, 16, 16, 2]`.
    pub layer_sizes: Vec<usize>,
    pub learning_rate: f64,
    pub epochs: usize,
    pub seed: u64,
    pub loss: Loss,
}

impl TrainConfig {
    pub fn new(layer_sizes: Vec<usize>, learning_rate: f64, epochs: usize, seed: u64) -> Result<Self> {
        let c = Self {
            layer_sizes,
            learning_rate,
            epochs,
            seed,
            loss: Loss::SoftmaxCrossEntropy,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 {
            return Err(Error::input("need at least an input and an output width"));
        }
        if self.layer_sizes.contains(&0) {
            return Err(Error::input("layer widths must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::input(format!("learning rate must be positive, got {}", self.learning_rate)));
        }
        Ok(())
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..self.clone() }
    }
}

/// Two Gaussian blobs in the plane with unit variance and means `(-1.5, 0)`
/// (label 0) and `(1.5, 0)` (label 1), `n_per_class` points each.
pub fn generate_dataset(n_per_class: usize, seed: u64) -> Result<Dataset> {
    if n_per_class == 0 {
        return Err(Error::input("n_per_class must be at least 1"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut inputs = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for (label, mean) in [(0usize, -1.5), (1, 1.5)] {
        for _ in 0..n_per_class {
            let x: f64 = mean + normal.sample(&mut rng);
            let y: f64 = normal.sample(&mut rng);
            inputs.push(vec![x, y]);
            labels.push(label);
        }
    }
    Dataset::new(inputs, Some(labels))
}

/// Bias-free network with weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
pub fn initialize(config: &TrainConfig) -> Result<Network> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let weights = config
        .layer_sizes
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = 1.0 / (fan_in as f64).sqrt();
            let data = (0..fan_in * fan_out)
                .map(|_| rng.random_range(-bound..=bound))
                .collect();
            Matrix::new(fan_out, fan_in, data)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::from_weights(weights)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LayerGradient {
    pub weights: Matrix,
    pub bias: Option<Vec<f64>>,
}

fn labels_for<'a>(net: &Network, data: &'a Dataset) -> Result<&'a [usize]> {
    let labels = data
        .labels()
        .ok_or_else(|| Error::input("training requires labelled data"))?;
    if let Some(l) = labels.iter().find(|&&l| l >= net.out_dim()) {
        return Err(Error::input(format!("label {l} out of range for {} outputs", net.out_dim())));
    }
    if data.input_dim() != net.in_dim() {
        return Err(Error::input("dataset input width does not match the network"));
    }
    Ok(labels)
}

/// Returns softmax probabilities and `-log p[label]`.
fn softmax_xent(logits: &[f64], label: usize) -> (Vec<f64>, f64) {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    let loss = sum.ln() - (logits[label] - max);
    (exps.into_iter().map(|e| e / sum).collect(), loss)
}

/// Mean softmax cross-entropy over the dataset.
pub fn loss(net: &Network, data: &Dataset) -> Result<f64> {
    let labels = labels_for(net, data)?;
    let mut total = 0.0;
    for (x, &y) in data.inputs().iter().zip(labels) {
        total += softmax_xent(&net.forward(x)?, y).1;
    }
    Ok(total / data.len() as f64)
}

/// Fraction of inputs whose largest logit is the label.
pub fn accuracy(net: &Network, data: &Dataset) -> Result<f64> {
    let labels = labels_for(net, data)?;
    let mut hits = 0usize;
    for (x, &y) in data.inputs().iter().zip(labels) {
        let out = net.forward(x)?;
        let best = out
            .iter()
            .enumerate()
            .fold(0, |b, (i, v)| if *v > out[b] { i } else { b });
        hits += usize::from(best == y);
    }
    Ok(hits as f64 / data.len() as f64)
}

/// Mean loss and its gradient with respect to every weight (and bias, where present).
pub fn loss_and_gradients(net: &Network, data: &Dataset) -> Result<(f64, Vec<LayerGradient>)> {
    let labels = labels_for(net, data)?;
    let layers = net.layers();
    let mut grads: Vec<LayerGradient> = layers
        .iter()
        .map(|l| LayerGradient {
            weights: Matrix::zeros(l.out_dim(), l.in_dim()),
            bias: l.bias.as_ref().map(|b| vec![0.0; b.len()]),
        })
        .collect();
    let scale = 1.0 / data.len() as f64;
    let mut total = 0.0;

    for (x, &y) in data.inputs().iter().zip(labels) {
        let trace = net.trace(x)?;
        let logits = trace.post.last().expect("non-empty network");
        let (probs, l) = softmax_xent(logits, y);
        total += l;

        // dL/d(pre-activation) of the current layer
        let mut delta: Vec<f64> = probs
            .iter()
            .enumerate()
            .map(|(i, p)| scale * (p - if i == y { 1.0 } else { 0.0 }))
            .collect();
        let last = layers.len() - 1;
        for (li, layer) in layers.iter().enumerate().rev() {
            if li == last {
                let act = layer.activation;
                for (d, z) in delta.iter_mut().zip(&trace.pre[li]) {
                    *d *= act.derivative(*z);
                }
            }
            let input = if li == 0 { x.as_slice() } else { trace.post[li - 1].as_slice() };
            let g = &mut grads[li];
            for (r, d) in delta.iter().enumerate() {
                if *d == 0.0 {
                    continue;
                }
                for (c, a) in input.iter().enumerate() {
                    let cur = g.weights[(r, c)];
                    g.weights.set(r, c, cur + d * a);
                }
            }
            if let Some(b) = &mut g.bias {
                for (bi, d) in b.iter_mut().zip(&delta) {
                    *bi += d;
                }
            }
            if li > 0 {
                let prev = &layers[li - 1];
                let mut next = vec![0.0; layer.in_dim()];
                for (r, d) in delta.iter().enumerate() {
                    for (n, w) in next.iter_mut().zip(layer.weights.row(r)) {
                        *n += d * w;
                    }
                }
                for (n, z) in next.iter_mut().zip(&trace.pre[li - 1]) {
                    *n *= prev.activation.derivative(*z);
                }
                delta = next;
            }
        }
    }
    Ok((total * scale, grads))
}

fn descend(net: &Network, grads: &[LayerGradient], lr: f64) -> Result<Network> {
    let layers = net
        .layers()
        .iter()
        .zip(grads)
        .map(|(l, g)| {
            let w = l
                .weights
                .as_slice()
                .iter()
                .zip(g.weights.as_slice())
                .map(|(w, d)| w - lr * d)
                .collect();
            let bias = match (&l.bias, &g.bias) {
                (Some(b), Some(gb)) => Some(b.iter().zip(gb).map(|(b, d)| b - lr * d).collect()),
                (b, _) => b.clone(),
            };
            Layer::new(Matrix::new(l.out_dim(), l.in_dim(), w)?, bias, l.activation)
        })
        .collect::<Result<Vec<_>>>()?;
    Network::new(layers)
}

/// Full-batch gradient descent from the seeded initialization.
pub fn train(config: &TrainConfig, data: &Dataset) -> Result<Network> {
    let mut net = initialize(config)?;
    if *config.layer_sizes.first().expect("validated") != data.input_dim() {
        return Err(Error::input("first layer width does not match the dataset"));
    }
    labels_for(&net, data)?;
    for _ in 0..config.epochs {
        let (_, grads) = loss_and_gradients(&net, data)?;
        net = descend(&net, &grads, config.learning_rate)?;
    }
    Ok(net)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairRun {
    pub seeds: (u64, u64),
    /// Match score per layer, layer 0 first.
    pub scores: Vec<f64>,
    /// Final training accuracy of both networks.
    pub accuracy: (f64, f64),
}

impl PairRun {
    /// Mean score over the hidden layers (all but the first and last).
    pub fn mean_hidden_score(&self) -> f64 {
        let hidden = &self.scores[1..self.scores.len() - 1];
        hidden.iter().sum::<f64>() / hidden.len().max(1) as f64
    }

    pub fn output_score(&self) -> f64 {
        *self.scores.last().expect("at least two layers")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerScoreSummary {
    pub layer: usize,
    pub mean_score: f64,
    pub min_score: f64,
    pub max_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwinSummary {
    pub config: TrainConfig,
    pub layers: Vec<LayerScoreSummary>,
    pub runs: Vec<PairRun>,
}

impl TwinSummary {
    pub fn seed_pairs(&self) -> Vec<(u64, u64)> {
        self.runs.iter().map(|r| r.seeds).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("summary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// `layer,mean_score,min_score,max_score`, one row per layer.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for l in &self.layers {
            w.serialize(l)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_csv()?)?;
        Ok(())
    }
}

pub fn twin_experiment(
    config: &TrainConfig,
    data: &Dataset,
    seed_pairs: &[(u64, u64)],
    rel_tol: f64,
) -> Result<TwinSummary> {
    twin_experiment_with(config, data, seed_pairs, rel_tol, Execution::default())
}

/// Trains one network per seed (each distinct seed once), compares each pair
/// layer by layer and aggregates the scores per layer.
pub fn twin_experiment_with(
    config: &TrainConfig,
    data: &Dataset,
    seed_pairs: &[(u64, u64)],
    rel_tol: f64,
    exec: Execution,
) -> Result<TwinSummary> {
    if seed_pairs.is_empty() {
        return Err(Error::input("need at least one seed pair"));
    }
    config.validate()?;
    let mut seeds: Vec<u64> = seed_pairs.iter().flat_map(|&(a, b)| [a, b]).collect();
    seeds.sort_unstable();
    seeds.dedup();
    let nets = exec
        .map(&seeds, |&s| train(&config.with_seed(s), data))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    let net_for = |s: u64| &nets[seeds.binary_search(&s).expect("seed trained")];

    let runs = exec
        .map(seed_pairs, |&(sa, sb)| -> Result<PairRun> {
            let (a, b) = (net_for(sa), net_for(sb));
            let report = compare_networks_with(a, b, data, rel_tol, Execution::Sequential)?;
            Ok(PairRun {
                seeds: (sa, sb),
                scores: report.layers.iter().map(|l| l.score).collect(),
                accuracy: (accuracy(a, data)?, accuracy(b, data)?),
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;

    let n_layers = runs[0].scores.len();
    let layers = (0..n_layers)
        .map(|i| {
            let col = runs.iter().map(|r| r.scores[i]);
            LayerScoreSummary {
                layer: i,
                mean_score: col.clone().sum::<f64>() / runs.len() as f64,
                min_score: col.clone().fold(f64::INFINITY, f64::min),
                max_score: col.fold(f64::NEG_INFINITY, f64::max),
            }
        })
        .collect();
    Ok(TwinSummary {
        config: config.clone(),
        layers,
        runs,
    })
}
