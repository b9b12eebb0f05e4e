//! Feed-forward classifiers with hand-written backpropagation.
//!
//! Everything is full-batch and deterministic: weights are drawn from a
//! seeded generator (uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases
//! zero), forward/backward run over the whole dataset, and there is no
//! stochastic shuffling anywhere. That keeps experiment replications exactly
//! reproducible from their seeds.

use std::fmt::Write as _;
use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Elementwise activation applied after each affine layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Tanh,
    Relu,
}

impl Activation {
    fn apply(&self, z: f64) -> f64 {
        match self {
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
            Activation::Relu => z.max(0.0),
        }
    }

    /// Derivative expressed through the activation value itself.
    fn derivative_from_output(&self, a: f64) -> f64 {
        match self {
            Activation::Identity => 1.0,
            Activation::Tanh => 1.0 - a * a,
            Activation::Relu => {
                if a > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Identity => "identity",
            Activation::Tanh => "tanh",
            Activation::Relu => "relu",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "identity" => Ok(Activation::Identity),
            "tanh" => Ok(Activation::Tanh),
            "relu" => Ok(Activation::Relu),
            other => Err(Error::invalid(format!("unknown activation '{other}'"))),
        }
    }
}

/// Transform applied to the last layer's output.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputKind {
    /// Row-wise softmax; outputs are probability rows summing to one.
    Softmax,
    /// No transform; used for embedding networks.
    Raw,
}

impl OutputKind {
    pub fn name(&self) -> &'static str {
        match self {
            OutputKind::Softmax => "softmax",
            OutputKind::Raw => "raw",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "softmax" => Ok(OutputKind::Softmax),
            "raw" => Ok(OutputKind::Raw),
            other => Err(Error::invalid(format!("unknown output kind '{other}'"))),
        }
    }
}

/// Classification loss between a reference label row and a predicted row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LabelLoss {
    /// Squared Euclidean distance between probability rows — the default:
    /// bounded, symmetric, and smooth, which suits both the transport ground
    /// cost and gradient training.
    #[default]
    SquaredError,
    /// `-sum_k y_k ln p_k` with predictions clamped away from zero.
    CrossEntropy,
    /// 1 if the argmaxes differ, else 0. Not differentiable; its gradient is
    /// defined as zero, so it is only useful for evaluation-style costs.
    ZeroOne,
}

const LOG_CLAMP: f64 = 1e-30;

impl LabelLoss {
    pub fn name(&self) -> &'static str {
        match self {
            LabelLoss::SquaredError => "squared",
            LabelLoss::CrossEntropy => "cross-entropy",
            LabelLoss::ZeroOne => "zero-one",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "squared" => Ok(LabelLoss::SquaredError),
            "cross-entropy" => Ok(LabelLoss::CrossEntropy),
            "zero-one" => Ok(LabelLoss::ZeroOne),
            other => Err(Error::invalid(format!("unknown label loss '{other}'"))),
        }
    }

    /// Loss between one reference row `y` and one predicted row `p`.
    pub fn value(&self, y: &[f64], p: &[f64]) -> f64 {
        match self {
            LabelLoss::SquaredError => y
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b) * (a - b))
                .sum(),
            LabelLoss::CrossEntropy => y
                .iter()
                .zip(p)
                .map(|(a, b)| {
                    if *a == 0.0 {
                        0.0
                    } else {
                        -a * b.max(LOG_CLAMP).ln()
                    }
                })
                .sum(),
            LabelLoss::ZeroOne => {
                if argmax(y) == argmax(p) {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Gradient of the *mean* batch loss with respect to predictions.
    pub fn batch_upstream(&self, targets: &Array2<f64>, pred: &Array2<f64>) -> Array2<f64> {
        let n = pred.nrows() as f64;
        match self {
            LabelLoss::SquaredError => (pred - targets) * (2.0 / n),
            LabelLoss::CrossEntropy => {
                let mut up = Array2::zeros(pred.raw_dim());
                for ((i, k), u) in up.indexed_iter_mut() {
                    let y = targets[(i, k)];
                    if y != 0.0 {
                        *u = -y / pred[(i, k)].max(LOG_CLAMP) / n;
                    }
                }
                up
            }
            LabelLoss::ZeroOne => Array2::zeros(pred.raw_dim()),
        }
    }

    /// Mean batch loss.
    pub fn batch_value(&self, targets: &Array2<f64>, pred: &Array2<f64>) -> f64 {
        let n = pred.nrows();
        let mut total = 0.0;
        for i in 0..n {
            total += self.value(
                targets.row(i).as_slice().expect("contiguous"),
                pred.row(i).as_slice().expect("contiguous"),
            );
        }
        total / n as f64
    }
}

fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (k, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = k;
        }
    }
    best
}

#[derive(Debug, Clone)]
struct Layer {
    weight: Array2<f64>, // fan_in x fan_out
    bias: Array1<f64>,
    activation: Activation,
}

/// A dense feed-forward network.
#[derive(Debug, Clone)]
pub struct FeedForwardModel {
    layers: Vec<Layer>,
    output: OutputKind,
}

/// Parameter gradients with the same layout as the model.
#[derive(Debug, Clone)]
pub struct ModelGradient {
    layers: Vec<(Array2<f64>, Array1<f64>)>,
}

impl ModelGradient {
    pub fn zeros_like(model: &FeedForwardModel) -> Self {
        ModelGradient {
            layers: model
                .layers
                .iter()
                .map(|l| (Array2::zeros(l.weight.raw_dim()), Array1::zeros(l.bias.raw_dim())))
                .collect(),
        }
    }

    pub fn add_scaled(&mut self, other: &ModelGradient, scale: f64) {
        for ((w, b), (ow, ob)) in self.layers.iter_mut().zip(other.layers.iter()) {
            w.scaled_add(scale, ow);
            b.scaled_add(scale, ob);
        }
    }

    /// Flattened view in the same order as `FeedForwardModel::params_flat`.
    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in &self.layers {
            out.extend(w.iter());
            out.extend(b.iter());
        }
        out
    }
}

impl FeedForwardModel {
    /// Builds a network with layer widths `sizes = [input, hidden..., output]`.
    /// Hidden layers use `hidden_activation`; the final layer is affine with
    /// the requested output transform. Weights are seeded uniform draws in
    /// `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases start at zero.
    pub fn new(
        sizes: &[usize],
        hidden_activation: Activation,
        output: OutputKind,
        seed: u64,
    ) -> Result<Self> {
        if sizes.len() < 2 {
            return Err(Error::invalid(
                "need at least input and output widths to build a model",
            ));
        }
        if sizes.iter().any(|&s| s == 0) {
            return Err(Error::invalid("layer widths must be positive"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut layers = Vec::with_capacity(sizes.len() - 1);
        for l in 0..sizes.len() - 1 {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let scale = 1.0 / (fan_in as f64).sqrt();
            let weight =
                Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-scale..scale));
            let activation = if l + 2 == sizes.len() {
                Activation::Identity
            } else {
                hidden_activation
            };
            layers.push(Layer {
                weight,
                bias: Array1::zeros(fan_out),
                activation,
            });
        }
        Ok(FeedForwardModel { layers, output })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map(|l| l.weight.nrows()).unwrap_or(0)
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map(|l| l.weight.ncols()).unwrap_or(0)
    }

    pub fn output_kind(&self) -> OutputKind {
        self.output
    }

    /// Layer widths `[input, hidden..., output]`.
    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![self.input_dim()];
        s.extend(self.layers.iter().map(|l| l.weight.ncols()));
        s
    }

    /// Forward pass on row-wise inputs (`N x input_dim`).
    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        Ok(self.forward_cached(x)?.1)
    }

    /// Forward pass keeping per-layer activations for backprop. Returns
    /// `(activations per layer, final output)`; the final output includes the
    /// softmax transform, the cached activations do not.
    fn forward_cached(&self, x: ArrayView2<'_, f64>) -> Result<(Vec<Array2<f64>>, Array2<f64>)> {
        if x.ncols() != self.input_dim() {
            return Err(Error::invalid(format!(
                "model expects {} input features, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len());
        let mut current = x.to_owned();
        for layer in &self.layers {
            let mut z = current.dot(&layer.weight);
            z += &layer.bias;
            z.mapv_inplace(|v| layer.activation.apply(v));
            activations.push(z.clone());
            current = z;
        }
        let out = match self.output {
            OutputKind::Raw => current,
            OutputKind::Softmax => softmax_rows(&current),
        };
        Ok((activations, out))
    }

    /// Backpropagates `upstream = dLoss/dOutput` through the network.
    /// Returns parameter gradients and the gradient with respect to the
    /// inputs (needed when this network sits on top of another one).
    pub fn backward(
        &self,
        x: ArrayView2<'_, f64>,
        upstream: &Array2<f64>,
    ) -> Result<(ModelGradient, Array2<f64>)> {
        let (activations, output) = self.forward_cached(x)?;
        if upstream.raw_dim() != output.raw_dim() {
            return Err(Error::invalid(format!(
                "upstream gradient is {:?}, output is {:?}",
                upstream.shape(),
                output.shape()
            )));
        }

        // dLoss/d(last pre-output activations).
        let mut delta = match self.output {
            OutputKind::Raw => upstream.clone(),
            OutputKind::Softmax => {
                // Softmax Jacobian per row: dz_k = p_k (u_k - sum_l u_l p_l).
                let mut d = Array2::zeros(output.raw_dim());
                for i in 0..output.nrows() {
                    let p = output.row(i);
                    let u = upstream.row(i);
                    let inner = p.dot(&u);
                    for k in 0..output.ncols() {
                        d[(i, k)] = p[k] * (u[k] - inner);
                    }
                }
                d
            }
        };

        let mut grads: Vec<(Array2<f64>, Array1<f64>)> = Vec::with_capacity(self.layers.len());
        for (l, layer) in self.layers.iter().enumerate().rev() {
            // delta currently holds dLoss/dA_l; convert to dLoss/dZ_l.
            let a = &activations[l];
            ndarray::Zip::from(&mut delta).and(a).for_each(|d, &av| {
                *d *= layer.activation.derivative_from_output(av);
            });
            let input: ArrayView2<'_, f64> = if l == 0 {
                x.view()
            } else {
                activations[l - 1].view()
            };
            let dw = input.t().dot(&delta);
            let db = delta.sum_axis(Axis(0));
            grads.push((dw, db));
            delta = delta.dot(&layer.weight.t());
        }
        grads.reverse();
        Ok((ModelGradient { layers: grads }, delta))
    }

    /// Gradient descent step `theta <- theta - rate * grad`.
    pub fn apply_gradient(&mut self, grad: &ModelGradient, rate: f64) {
        for (layer, (dw, db)) in self.layers.iter_mut().zip(grad.layers.iter()) {
            layer.weight.scaled_add(-rate, dw);
            layer.bias.scaled_add(-rate, db);
        }
    }

    /// Hard class decisions: row-wise argmax, ties to the lowest index.
    pub fn predict_labels(&self, x: ArrayView2<'_, f64>) -> Result<Vec<usize>> {
        let out = self.forward(x)?;
        Ok(out
            .rows()
            .into_iter()
            .map(|r| argmax(r.as_slice().expect("contiguous")))
            .collect())
    }

    /// All parameters flattened layer by layer (weights row-major, then bias).
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for layer in &self.layers {
            out.extend(layer.weight.iter());
            out.extend(layer.bias.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, params: &[f64]) -> Result<()> {
        let expected: usize = self
            .layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum();
        if params.len() != expected {
            return Err(Error::invalid(format!(
                "model has {expected} parameters, got {}",
                params.len()
            )));
        }
        let mut it = params.iter();
        for layer in &mut self.layers {
            for w in layer.weight.iter_mut() {
                *w = *it.next().unwrap();
            }
            for b in layer.bias.iter_mut() {
                *b = *it.next().unwrap();
            }
        }
        Ok(())
    }

    /// Writes the checkpoint text format (see `load`). Floats are rendered
    /// with shortest-round-trip formatting, so save/load is lossless.
    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = String::new();
        let _ = writeln!(text, "# feed-forward model checkpoint");
        let _ = writeln!(text, "output = {}", self.output.name());
        let _ = writeln!(text, "layers = {}", self.layers.len());
        for (l, layer) in self.layers.iter().enumerate() {
            let _ = writeln!(text, "layer{l}.activation = {}", layer.activation.name());
            let rows: Vec<String> = layer
                .weight
                .rows()
                .into_iter()
                .map(|r| {
                    let entries: Vec<String> = r.iter().map(|v| format!("{v}")).collect();
                    format!("[{}]", entries.join(", "))
                })
                .collect();
            let _ = writeln!(text, "layer{l}.weight = [{}]", rows.join(", "));
            let entries: Vec<String> = layer.bias.iter().map(|v| format!("{v}")).collect();
            let _ = writeln!(text, "layer{l}.bias = [{}]", entries.join(", "));
        }
        std::fs::write(path, text)?;
        Ok(())
    }

    /// Reads a checkpoint written by `save`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let parse_err = |line: usize, message: String| Error::Parse {
            path: path.display().to_string(),
            line,
            message,
        };

        let mut entries: Vec<(usize, String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| parse_err(idx + 1, "expected 'key = value'".into()))?;
            entries.push((idx + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let lookup = |key: &str| -> Result<(usize, String)> {
            entries
                .iter()
                .find(|(_, k, _)| k == key)
                .map(|(l, _, v)| (*l, v.clone()))
                .ok_or_else(|| parse_err(0, format!("missing key '{key}'")))
        };

        let (line, output_s) = lookup("output")?;
        let output = OutputKind::parse(&output_s).map_err(|e| parse_err(line, e.to_string()))?;
        let (line, count_s) = lookup("layers")?;
        let count: usize = count_s
            .parse()
            .map_err(|_| parse_err(line, format!("invalid layer count '{count_s}'")))?;
        if count == 0 {
            return Err(parse_err(line, "model must have at least one layer".into()));
        }

        let mut layers = Vec::with_capacity(count);
        for l in 0..count {
            let (line, act_s) = lookup(&format!("layer{l}.activation"))?;
            let activation =
                Activation::parse(&act_s).map_err(|e| parse_err(line, e.to_string()))?;
            let (line, weight_s) = lookup(&format!("layer{l}.weight"))?;
            let weight_rows = parse_nested_array(&weight_s)
                .map_err(|m| parse_err(line, m))?;
            let fan_out = weight_rows.first().map(|r| r.len()).unwrap_or(0);
            if fan_out == 0 || weight_rows.iter().any(|r| r.len() != fan_out) {
                return Err(parse_err(line, "weight rows must be non-empty and equal length".into()));
            }
            let fan_in = weight_rows.len();
            let weight = Array2::from_shape_vec(
                (fan_in, fan_out),
                weight_rows.into_iter().flatten().collect(),
            )
            .expect("shape checked");
            let (line, bias_s) = lookup(&format!("layer{l}.bias"))?;
            let bias_v = parse_flat_array(&bias_s).map_err(|m| parse_err(line, m))?;
            if bias_v.len() != fan_out {
                return Err(parse_err(
                    line,
                    format!("bias has {} entries, layer is {fan_out} wide", bias_v.len()),
                ));
            }
            layers.push(Layer {
                weight,
                bias: Array1::from_vec(bias_v),
                activation,
            });
        }
        for pair in layers.windows(2) {
            if pair[0].weight.ncols() != pair[1].weight.nrows() {
                return Err(parse_err(0, "adjacent layer widths do not match".into()));
            }
        }
        Ok(FeedForwardModel { layers, output })
    }
}

fn softmax_rows(z: &Array2<f64>) -> Array2<f64> {
    let mut out = z.clone();
    for mut row in out.rows_mut() {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        row.mapv_inplace(|v| v / sum);
    }
    out
}

fn parse_flat_array(s: &str) -> std::result::Result<Vec<f64>, String> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("expected [..] array, got '{s}'"))?;
    let trimmed = inner.trim();
    if trimmed.is_empty() {
        return Ok(Vec::new());
    }
    trimmed
        .split(',')
        .map(|tok| {
            let tok = tok.trim();
            tok.parse::<f64>()
                .map_err(|_| format!("invalid float '{tok}'"))
        })
        .collect()
}

fn parse_nested_array(s: &str) -> std::result::Result<Vec<Vec<f64>>, String> {
    let inner = s
        .strip_prefix('[')
        .and_then(|r| r.strip_suffix(']'))
        .ok_or_else(|| format!("expected [[..], ..] array, got '{s}'"))?;
    let mut rows = Vec::new();
    let mut depth = 0usize;
    let mut start = None;
    for (i, c) in inner.char_indices() {
        match c {
            '[' => {
                if depth == 0 {
                    start = Some(i);
                }
                depth += 1;
            }
            ']' => {
                if depth == 0 {
                    return Err("unbalanced brackets".into());
                }
                depth -= 1;
                if depth == 0 {
                    let row = &inner[start.unwrap()..=i];
                    rows.push(parse_flat_array(row)?);
                }
            }
            _ => {}
        }
    }
    if depth != 0 {
        return Err("unbalanced brackets".into());
    }
    if rows.is_empty() {
        return Err("matrix must have at least one row".into());
    }
    Ok(rows)
}

/// A labeled dataset for one domain: row-wise features, integer labels,
/// the domain identifier, and the number of classes.
#[derive(Debug, Clone)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub domain_id: usize,
    pub n_classes: usize,
}

impl LabeledDataset {
    pub fn new(
        features: Array2<f64>,
        labels: Vec<usize>,
        domain_id: usize,
        n_classes: usize,
    ) -> Result<Self> {
        if features.nrows() == 0 {
            return Err(Error::invalid("dataset needs at least one sample"));
        }
        if labels.len() != features.nrows() {
            return Err(Error::invalid(format!(
                "{} samples but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if n_classes == 0 {
            return Err(Error::invalid("dataset needs at least one class"));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= n_classes) {
            return Err(Error::invalid(format!(
                "label {bad} out of range for {n_classes} classes"
            )));
        }
        if features.iter().any(|x| !x.is_finite()) {
            return Err(Error::invalid("features must be finite"));
        }
        Ok(LabeledDataset {
            features,
            labels,
            domain_id,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// One-hot label matrix (`N x n_classes`).
    pub fn one_hot(&self) -> Array2<f64> {
        let mut y = Array2::zeros((self.len(), self.n_classes));
        for (i, &label) in self.labels.iter().enumerate() {
            y[(i, label)] = 1.0;
        }
        y
    }

    /// Fraction of samples the model classifies correctly.
    pub fn accuracy_of(&self, model: &FeedForwardModel) -> Result<f64> {
        let pred = model.predict_labels(self.features.view())?;
        let correct = pred
            .iter()
            .zip(self.labels.iter())
            .filter(|(a, b)| a == b)
            .count();
        Ok(correct as f64 / self.len() as f64)
    }
}

/// A frozen feature map: either the identity or a trained network applied
/// ahead of the classifier.
#[derive(Debug, Clone)]
pub enum Embedding {
    Identity,
    Network(FeedForwardModel),
}

impl Embedding {
    pub fn apply(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            Embedding::Identity => Ok(x.to_owned()),
            Embedding::Network(g) => g.forward(x),
        }
    }

    pub fn output_dim(&self, input_dim: usize) -> usize {
        match self {
            Embedding::Identity => input_dim,
            Embedding::Network(g) => g.output_dim(),
        }
    }
}

/// Configuration for multi-task pretraining of a shared embedding.
#[derive(Debug, Clone)]
pub struct MtlConfig {
    /// Widths of the embedding network including input and embedding size.
    pub embedding_sizes: Vec<usize>,
    /// Hidden widths of each task head (input = embedding size, output =
    /// number of classes are filled in automatically).
    pub head_hidden: Vec<usize>,
    pub activation: Activation,
    pub loss: LabelLoss,
    pub steps: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

/// A shared embedding with one classification head per source domain.
#[derive(Debug, Clone)]
pub struct MtlEmbedding {
    pub g: FeedForwardModel,
    pub heads: Vec<FeedForwardModel>,
}

/// Trains a shared embedding `g` and per-domain heads `f_j` by full-batch
/// gradient descent on `sum_j mean-loss_j(f_j(g(X_j)), y_j)`.
pub fn train_mtl_embedding(sources: &[LabeledDataset], config: &MtlConfig) -> Result<MtlEmbedding> {
    if sources.is_empty() {
        return Err(Error::invalid("multi-task training needs at least one source"));
    }
    let dim = sources[0].dim();
    let n_classes = sources[0].n_classes;
    if sources.iter().any(|s| s.dim() != dim || s.n_classes != n_classes) {
        return Err(Error::invalid(
            "sources disagree on feature dimension or class count",
        ));
    }
    if config.embedding_sizes.len() < 2 || config.embedding_sizes[0] != dim {
        return Err(Error::invalid(format!(
            "embedding sizes must start at the input dimension {dim}"
        )));
    }
    if !config.learning_rate.is_finite() || config.learning_rate <= 0.0 {
        return Err(Error::invalid("learning rate must be positive"));
    }

    let embed_dim = *config.embedding_sizes.last().unwrap();
    let mut g = FeedForwardModel::new(
        &config.embedding_sizes,
        config.activation,
        OutputKind::Raw,
        config.seed,
    )?;
    let mut heads = Vec::with_capacity(sources.len());
    let mut head_sizes = vec![embed_dim];
    head_sizes.extend_from_slice(&config.head_hidden);
    head_sizes.push(n_classes);
    for (j, _) in sources.iter().enumerate() {
        heads.push(FeedForwardModel::new(
            &head_sizes,
            config.activation,
            OutputKind::Softmax,
            config.seed.wrapping_add(1 + j as u64),
        )?);
    }

    let targets: Vec<Array2<f64>> = sources.iter().map(|s| s.one_hot()).collect();
    for _step in 0..config.steps {
        let mut g_grad = ModelGradient::zeros_like(&g);
        let mut head_grads = Vec::with_capacity(heads.len());
        for (j, source) in sources.iter().enumerate() {
            let embedded = g.forward(source.features.view())?;
            let pred = heads[j].forward(embedded.view())?;
            let upstream = config.loss.batch_upstream(&targets[j], &pred);
            let (head_grad, d_embedded) = heads[j].backward(embedded.view(), &upstream)?;
            let (g_part, _) = g.backward(source.features.view(), &d_embedded)?;
            g_grad.add_scaled(&g_part, 1.0);
            head_grads.push(head_grad);
        }
        g.apply_gradient(&g_grad, config.learning_rate);
        for (head, grad) in heads.iter_mut().zip(head_grads.iter()) {
            head.apply_gradient(grad, config.learning_rate);
        }
    }
    Ok(MtlEmbedding { g, heads })
}
