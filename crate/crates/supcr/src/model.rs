//! From-scratch feedforward networks with manual backpropagation, plus SGD
//! with momentum, weight decay, and cosine learning-rate annealing.
//!
//! Everything is dense `f64`: an [`Mlp`] is a stack of affine layers with
//! ReLU on the hidden ones and identity on the output. Parameters update
//! through flat slices so the encoder, projection head, and predictor can
//! share one optimizer state during joint training.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct DenseLayer {
    /// `d_in × d_out`
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Affine stack: ReLU on hidden layers, identity on the output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub layers: Vec<DenseLayer>,
}

/// Activations recorded by [`Mlp::forward`], sufficient for exact backprop.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layer_inputs: Vec<Array2<f64>>,
    pre_activations: Vec<Array2<f64>>,
}

/// Parameter gradients in the same shapes and order as the layers.
#[derive(Debug, Clone)]
pub struct MlpGrads {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

impl Mlp {
    /// Builds a network with the given layer widths (input first), weights
    /// and biases drawn uniformly from ±sqrt(1/fan_in).
    pub fn new(widths: &[usize], rng: &mut ChaCha8Rng) -> Result<Self> {
        if widths.len() < 2 {
            return Err(Error::Config("an MLP needs at least input and output widths".into()));
        }
        if widths.contains(&0) {
            return Err(Error::Config("layer widths must be positive".into()));
        }
        let mut layers = Vec::with_capacity(widths.len() - 1);
        for w in widths.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let bound = (1.0 / fan_in as f64).sqrt();
            let weight =
                Array2::from_shape_fn((fan_in, fan_out), |_| rng.gen_range(-bound..=bound));
            let bias = Array1::from_shape_fn(fan_out, |_| rng.gen_range(-bound..=bound));
            layers.push(DenseLayer { weight, bias });
        }
        Ok(Self { layers })
    }

    pub fn input_dim(&self) -> usize {
        self.layers.first().map_or(0, |l| l.weight.nrows())
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weight.ncols())
    }

    pub fn widths(&self) -> Vec<usize> {
        let mut w = vec![self.input_dim()];
        w.extend(self.layers.iter().map(|l| l.weight.ncols()));
        w
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn forward(&self, inputs: &Array2<f64>) -> Result<(Array2<f64>, ForwardCache)> {
        if inputs.ncols() != self.input_dim() {
            return Err(Error::Domain(format!(
                "input width {} does not match network input {}",
                inputs.ncols(),
                self.input_dim()
            )));
        }
        let depth = self.layers.len();
        let mut cache = ForwardCache {
            layer_inputs: Vec::with_capacity(depth),
            pre_activations: Vec::with_capacity(depth),
        };
        let mut current = inputs.clone();
        for (l, layer) in self.layers.iter().enumerate() {
            cache.layer_inputs.push(current.clone());
            let pre = current.dot(&layer.weight) + &layer.bias;
            cache.pre_activations.push(pre.clone());
            current = if l + 1 < depth { pre.mapv(|v| v.max(0.0)) } else { pre };
        }
        Ok((current, cache))
    }

    /// Forward pass without keeping the cache.
    pub fn infer(&self, inputs: &Array2<f64>) -> Result<Array2<f64>> {
        self.forward(inputs).map(|(out, _)| out)
    }

    /// Exact reverse-mode gradients for the parameters and the inputs.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: &Array2<f64>,
    ) -> Result<(MlpGrads, Array2<f64>)> {
        let depth = self.layers.len();
        if cache.layer_inputs.len() != depth {
            return Err(Error::Domain("cache does not match this network".into()));
        }
        if upstream.ncols() != self.output_dim()
            || upstream.nrows() != cache.layer_inputs[0].nrows()
        {
            return Err(Error::Domain(format!(
                "upstream gradient shape {:?} does not match outputs",
                upstream.dim()
            )));
        }
        let mut grads = MlpGrads {
            weights: vec![Array2::zeros((0, 0)); depth],
            biases: vec![Array1::zeros(0); depth],
        };
        let mut g = upstream.clone();
        for l in (0..depth).rev() {
            // g holds dL/d(post-activation of layer l)
            let dz = if l + 1 < depth {
                let mask = cache.pre_activations[l].mapv(|z| if z > 0.0 { 1.0 } else { 0.0 });
                &g * &mask
            } else {
                g
            };
            // dot may return a column-major result for transposed operands;
            // normalize so the flat optimizer views line up with the params
            grads.weights[l] =
                cache.layer_inputs[l].t().dot(&dz).as_standard_layout().into_owned();
            grads.biases[l] = dz.sum_axis(ndarray::Axis(0));
            g = dz.dot(&self.layers[l].weight.t());
        }
        Ok((grads, g))
    }

    /// Mutable flat views of every parameter tensor, weights before biases,
    /// layer by layer. Order matches [`MlpGrads::slices`].
    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        let mut out = Vec::with_capacity(2 * self.layers.len());
        for layer in &mut self.layers {
            out.push(layer.weight.as_slice_mut().expect("standard layout"));
            out.push(layer.bias.as_slice_mut().expect("standard layout"));
        }
        out
    }

    /// Order-stable fingerprint of all parameters, for freeze contracts.
    pub fn params_hash(&self) -> u64 {
        let mut h: u64 = 0xcbf2_9ce4_8422_2325;
        for layer in &self.layers {
            for v in layer.weight.iter().chain(layer.bias.iter()) {
                h ^= v.to_bits();
                h = h.wrapping_mul(0x0000_0100_0000_01b3);
            }
        }
        h
    }
}

impl MlpGrads {
    /// Flat views matching [`Mlp::param_slices_mut`] order.
    pub fn slices(&self) -> Vec<&[f64]> {
        let mut out = Vec::with_capacity(2 * self.weights.len());
        for (w, b) in self.weights.iter().zip(self.biases.iter()) {
            out.push(w.as_slice().expect("standard layout"));
            out.push(b.as_slice().expect("standard layout"));
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            w.mapv_inplace(|v| v * factor);
        }
        for b in &mut self.biases {
            b.mapv_inplace(|v| v * factor);
        }
    }

    pub fn add(&mut self, other: &MlpGrads) {
        for (w, o) in self.weights.iter_mut().zip(other.weights.iter()) {
            *w += o;
        }
        for (b, o) in self.biases.iter_mut().zip(other.biases.iter()) {
            *b += o;
        }
    }
}

/// Two-layer head `d_e -> d_e -> d_p` applied on top of the encoder during
/// contrastive training and discarded at inference.
#[derive(Debug, Clone)]
pub struct ProjectionHead {
    pub net: Mlp,
}

impl ProjectionHead {
    pub fn new(embed_dim: usize, proj_dim: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self { net: Mlp::new(&[embed_dim, embed_dim, proj_dim], rng)? })
    }
}

/// Single affine map from embeddings to targets.
#[derive(Debug, Clone)]
pub struct LinearPredictor {
    pub net: Mlp,
}

impl LinearPredictor {
    pub fn new(embed_dim: usize, target_dim: usize, rng: &mut ChaCha8Rng) -> Result<Self> {
        Ok(Self { net: Mlp::new(&[embed_dim, target_dim], rng)? })
    }

    pub fn predict(&self, embeddings: &Array2<f64>) -> Result<Array2<f64>> {
        self.net.infer(embeddings)
    }
}

/// Regression training objective.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RegressionLossKind {
    L1,
    Mse,
    Huber { beta: f64 },
}

impl RegressionLossKind {
    pub fn name(&self) -> &'static str {
        match self {
            RegressionLossKind::L1 => "l1",
            RegressionLossKind::Mse => "mse",
            RegressionLossKind::Huber { .. } => "huber",
        }
    }
}

/// Mean loss over all prediction entries and its gradient with respect to
/// the predictions. The L1 subgradient at zero error is zero.
pub fn regression_loss(
    pred: &Array2<f64>,
    target: &Array2<f64>,
    kind: RegressionLossKind,
) -> Result<(f64, Array2<f64>)> {
    if pred.dim() != target.dim() {
        return Err(Error::Domain(format!(
            "prediction shape {:?} does not match target shape {:?}",
            pred.dim(),
            target.dim()
        )));
    }
    if let RegressionLossKind::Huber { beta } = kind {
        if !(beta > 0.0) {
            return Err(Error::Config(format!("huber beta must be > 0, got {beta}")));
        }
    }
    let count = pred.len() as f64;
    let mut value = 0.0;
    let mut grad = Array2::zeros(pred.dim());
    for ((idx, p), t) in pred.indexed_iter().zip(target.iter()) {
        let e = p - t;
        match kind {
            RegressionLossKind::L1 => {
                value += e.abs();
                grad[idx] = e.signum_or_zero() / count;
            }
            RegressionLossKind::Mse => {
                value += e * e;
                grad[idx] = 2.0 * e / count;
            }
            RegressionLossKind::Huber { beta } => {
                if e.abs() <= beta {
                    value += 0.5 * e * e;
                    grad[idx] = e / count;
                } else {
                    value += beta * (e.abs() - 0.5 * beta);
                    grad[idx] = beta * e.signum_or_zero() / count;
                }
            }
        }
    }
    Ok((value / count, grad))
}

trait SignumOrZero {
    fn signum_or_zero(self) -> f64;
}

impl SignumOrZero for f64 {
    fn signum_or_zero(self) -> f64 {
        if self > 0.0 {
            1.0
        } else if self < 0.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// SGD-with-momentum state shared by all parameter tensors of a training
/// phase.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    /// Momentum coefficient in [0, 1).
    pub momentum: f64,
    pub weight_decay: f64,
    pub lr_base: f64,
    pub lr_min: f64,
    /// Schedule length for cosine annealing.
    pub total_steps: usize,
    buffers: Vec<Vec<f64>>,
}

impl OptimizerState {
    pub fn new(
        momentum: f64,
        weight_decay: f64,
        lr_base: f64,
        lr_min: f64,
        total_steps: usize,
    ) -> Result<Self> {
        if !(0.0..1.0).contains(&momentum) {
            return Err(Error::Config(format!("momentum must lie in [0, 1), got {momentum}")));
        }
        if !(lr_base > 0.0) || lr_min < 0.0 || lr_min > lr_base {
            return Err(Error::Config(format!(
                "learning rates must satisfy 0 <= lr_min <= lr_base, got ({lr_base}, {lr_min})"
            )));
        }
        Ok(Self { momentum, weight_decay, lr_base, lr_min, total_steps, buffers: Vec::new() })
    }
}

/// Cosine annealing from `lr_base` at step 0 to `lr_min` at `total_steps`;
/// steps beyond the schedule clamp to `lr_min`.
pub fn cosine_lr(step: usize, state: &OptimizerState) -> f64 {
    let total = state.total_steps.max(1);
    let s = step.min(total);
    state.lr_min
        + 0.5
            * (state.lr_base - state.lr_min)
            * (1.0 + (std::f64::consts::PI * s as f64 / total as f64).cos())
}

/// One SGD update: `m <- momentum * m + g + weight_decay * theta` followed
/// by `theta <- theta - lr * m`, with `lr` from the cosine schedule.
pub fn sgd_step(
    params: &mut [&mut [f64]],
    grads: &[&[f64]],
    state: &mut OptimizerState,
    step: usize,
) -> Result<()> {
    if params.len() != grads.len() {
        return Err(Error::Domain(format!(
            "{} parameter tensors vs {} gradient tensors",
            params.len(),
            grads.len()
        )));
    }
    if state.buffers.is_empty() {
        state.buffers = params.iter().map(|p| vec![0.0; p.len()]).collect();
    }
    if state.buffers.len() != params.len() {
        return Err(Error::Domain("optimizer state does not match parameter list".into()));
    }
    let lr = cosine_lr(step, state);
    for ((param, grad), buffer) in params.iter_mut().zip(grads.iter()).zip(state.buffers.iter_mut())
    {
        if param.len() != grad.len() || param.len() != buffer.len() {
            return Err(Error::Domain("parameter/gradient length mismatch".into()));
        }
        for i in 0..param.len() {
            buffer[i] = state.momentum * buffer[i] + grad[i] + state.weight_decay * param[i];
            param[i] -= lr * buffer[i];
        }
    }
    Ok(())
}

const MODEL_MAGIC: &str = "supcr-model v1";

fn write_mlp(out: &mut impl Write, name: &str, mlp: &Mlp) -> Result<()> {
    let widths: Vec<String> = mlp.widths().iter().map(|w| w.to_string()).collect();
    writeln!(out, "{name} widths {}", widths.join(" "))?;
    for (l, layer) in mlp.layers.iter().enumerate() {
        writeln!(out, "layer {l} weight {} {}", layer.weight.nrows(), layer.weight.ncols())?;
        for row in layer.weight.rows() {
            let mut line = String::new();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                let _ = write!(line, "{v:.16e}");
            }
            writeln!(out, "{line}")?;
        }
        writeln!(out, "layer {l} bias {}", layer.bias.len())?;
        let mut line = String::new();
        for (j, v) in layer.bias.iter().enumerate() {
            if j > 0 {
                line.push(' ');
            }
            let _ = write!(line, "{v:.16e}");
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Saves encoder and optional predictor as a versioned, diffable text file.
pub fn save_model(path: &Path, encoder: &Mlp, predictor: Option<&LinearPredictor>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{MODEL_MAGIC}")?;
    write_mlp(&mut out, "encoder", encoder)?;
    match predictor {
        Some(p) => {
            writeln!(out, "predictor present")?;
            write_mlp(&mut out, "predictor", &p.net)?;
        }
        None => writeln!(out, "predictor absent")?,
    }
    Ok(())
}

struct LineReader<I: Iterator<Item = std::io::Result<String>>> {
    lines: I,
    lineno: usize,
    path: String,
}

impl<I: Iterator<Item = std::io::Result<String>>> LineReader<I> {
    fn next_line(&mut self) -> Result<String> {
        self.lineno += 1;
        match self.lines.next() {
            Some(line) => Ok(line?),
            None => Err(Error::Config(format!(
                "{}: unexpected end of file at line {}",
                self.path, self.lineno
            ))),
        }
    }

    fn parse_floats(&mut self, expected: usize) -> Result<Vec<f64>> {
        let line = self.next_line()?;
        let values: std::result::Result<Vec<f64>, _> =
            line.split_whitespace().map(str::parse).collect();
        let values = values.map_err(|_| {
            Error::Config(format!("{}: line {}: expected floats", self.path, self.lineno))
        })?;
        if values.len() != expected {
            return Err(Error::Config(format!(
                "{}: line {}: expected {expected} values, got {}",
                self.path,
                self.lineno,
                values.len()
            )));
        }
        Ok(values)
    }
}

fn read_mlp<I: Iterator<Item = std::io::Result<String>>>(
    reader: &mut LineReader<I>,
    name: &str,
) -> Result<Mlp> {
    let header = reader.next_line()?;
    let mut parts = header.split_whitespace();
    if parts.next() != Some(name) || parts.next() != Some("widths") {
        return Err(Error::Config(format!(
            "{}: line {}: expected `{name} widths ...`",
            reader.path, reader.lineno
        )));
    }
    let widths: std::result::Result<Vec<usize>, _> = parts.map(str::parse).collect();
    let widths =
        widths.map_err(|_| Error::Config(format!("{}: bad widths on line {}", reader.path, reader.lineno)))?;
    if widths.len() < 2 {
        return Err(Error::Config(format!("{}: too few widths", reader.path)));
    }
    let mut layers = Vec::new();
    for (l, w) in widths.windows(2).enumerate() {
        let head = reader.next_line()?;
        if head != format!("layer {l} weight {} {}", w[0], w[1]) {
            return Err(Error::Config(format!(
                "{}: line {}: unexpected `{head}`",
                reader.path, reader.lineno
            )));
        }
        let mut weight = Array2::zeros((w[0], w[1]));
        for r in 0..w[0] {
            let row = reader.parse_floats(w[1])?;
            for (c, v) in row.into_iter().enumerate() {
                weight[[r, c]] = v;
            }
        }
        let head = reader.next_line()?;
        if head != format!("layer {l} bias {}", w[1]) {
            return Err(Error::Config(format!(
                "{}: line {}: unexpected `{head}`",
                reader.path, reader.lineno
            )));
        }
        let bias = Array1::from_vec(reader.parse_floats(w[1])?);
        layers.push(DenseLayer { weight, bias });
    }
    Ok(Mlp { layers })
}

/// Loads a model file written by [`save_model`].
pub fn load_model(path: &Path) -> Result<(Mlp, Option<LinearPredictor>)> {
    let file = BufReader::new(std::fs::File::open(path)?);
    let mut reader =
        LineReader { lines: file.lines(), lineno: 0, path: path.display().to_string() };
    let magic = reader.next_line()?;
    if magic != MODEL_MAGIC {
        return Err(Error::Config(format!(
            "{}: expected `{MODEL_MAGIC}` header, got `{magic}`",
            reader.path
        )));
    }
    let encoder = read_mlp(&mut reader, "encoder")?;
    let marker = reader.next_line()?;
    let predictor = match marker.as_str() {
        "predictor present" => Some(LinearPredictor { net: read_mlp(&mut reader, "predictor")? }),
        "predictor absent" => None,
        other => {
            return Err(Error::Config(format!(
                "{}: line {}: unexpected `{other}`",
                reader.path, reader.lineno
            )))
        }
    };
    Ok((encoder, predictor))
}
