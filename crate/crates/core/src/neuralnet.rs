//! Dense feedforward regressors trained with MSE and Adam.
//!
//! Each hidden layer computes `a_i = ReLU(W_i a_{i-1} + b_i)`; the output
//! layer is affine. Inputs are standardized thickness values plus
//! `log10(t_dose)`, the target is standardized `log10(t_sat)`.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::dataset::{Dataset, NormalizationStats};
use crate::streams::{self, StreamRng};

pub const MODEL_FORMAT: &str = "aldsat-model";
pub const MODEL_VERSION: u64 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid architecture {dims:?}: {reason}")]
    Architecture { dims: Vec<usize>, reason: String },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },
    #[error("model has no normalization statistics")]
    MissingStats,
    #[error("dataset has no records")]
    EmptyDataset,
    #[error("invalid training configuration: {0}")]
    Config(String),
    #[error("model file is missing field `{0}`")]
    MissingField(&'static str),
    #[error("unsupported model version {found} (expected {MODEL_VERSION})")]
    UnsupportedVersion { found: String },
    #[error("not a model file: format `{0}`")]
    Format(String),
    #[error("malformed model file: {0}")]
    Malformed(#[from] serde_json::Error),
    #[error("non-finite training loss at epoch {0}")]
    Diverged(usize),
    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, ModelError>;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.cols + j] = value;
    }
}

/// Layer widths `[d_in, h_1, .., h_k, 1]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Architecture {
    dims: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Architecture {
    type Error = ModelError;

    fn try_from(dims: Vec<usize>) -> Result<Self> {
        Self::new(dims)
    }
}

impl From<Architecture> for Vec<usize> {
    fn from(arch: Architecture) -> Self {
        arch.dims
    }
}

impl Architecture {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        let fail = |reason: &str| {
            Err(ModelError::Architecture {
                dims: dims.clone(),
                reason: reason.into(),
            })
        };
        if dims.len() < 2 {
            return fail("need at least an input and an output layer");
        }
        if dims.iter().any(|&d| d == 0) {
            return fail("layer widths must be positive");
        }
        if *dims.last().unwrap() != 1 {
            return fail("output layer must have width 1");
        }
        Ok(Self { dims })
    }

    /// Network over `n_points` thickness values plus the dose time.
    pub fn for_profile(n_points: usize, hidden: &[usize]) -> Result<Self> {
        let mut dims = vec![n_points + 1];
        dims.extend_from_slice(hidden);
        dims.push(1);
        Self::new(dims)
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn hidden(&self) -> &[usize] {
        &self.dims[1..self.dims.len() - 1]
    }

    pub fn n_layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// `sum(d_i * d_{i+1} + d_{i+1})`
    pub fn param_count(&self) -> usize {
        self.dims.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    /// `shallow`, `h30`, `h30-10`, ...
    pub fn label(&self) -> String {
        hidden_label(self.hidden())
    }
}

pub fn hidden_label(hidden: &[usize]) -> String {
    if hidden.is_empty() {
        "shallow".into()
    } else {
        let widths: Vec<String> = hidden.iter().map(usize::to_string).collect();
        format!("h{}", widths.join("-"))
    }
}

/// Per-parameter buffers shaped like a network: gradients and Adam moments.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

impl Gradients {
    pub fn zeros(arch: &Architecture) -> Self {
        let dims = arch.dims();
        Self {
            weights: dims.windows(2).map(|w| Matrix::zeros(w[1], w[0])).collect(),
            biases: dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }

    pub fn fill(&mut self, value: f64) {
        for s in self.slices_mut() {
            s.fill(value);
        }
    }

    /// Weight and bias slices in layer order.
    pub fn slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data.as_slice(), b.as_slice()])
            .collect()
    }

    fn slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.data.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }
}

/// Activations retained by the forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    /// `pre[l] = W_l a_l + b_l`
    pub pre: Vec<Vec<f64>>,
    /// `post[0]` is the input, `post[l + 1] = ReLU(pre[l])` for hidden layers.
    pub post: Vec<Vec<f64>>,
}

impl ForwardCache {
    pub fn new(arch: &Architecture) -> Self {
        let dims = arch.dims();
        Self {
            pre: dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
            post: dims[..dims.len() - 1].iter().map(|&d| vec![0.0; d]).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    pub architecture: Architecture,
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
    /// Standardization the network was trained under.
    pub stats: Option<NormalizationStats>,
}

/// Uniform `(-s, s)` weights with `s = sqrt(6 / fan_in)`, zero biases.
pub fn init_mlp(architecture: Architecture, init_seed: u64) -> Mlp {
    let mut rng = StreamRng::seed_from_u64(init_seed);
    let dims = architecture.dims().to_vec();
    let weights = dims
        .windows(2)
        .map(|w| {
            let (fan_in, fan_out) = (w[0], w[1]);
            let s = (6.0 / fan_in as f64).sqrt();
            Matrix {
                rows: fan_out,
                cols: fan_in,
                data: (0..fan_in * fan_out).map(|_| rng.gen_range(-s..s)).collect(),
            }
        })
        .collect();
    let biases = dims[1..].iter().map(|&d| vec![0.0; d]).collect();
    Mlp {
        architecture,
        weights,
        biases,
        stats: None,
    }
}

pub fn mse_loss(predictions: &[f64], targets: &[f64]) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(ModelError::Dimension {
            expected: targets.len(),
            actual: predictions.len(),
        });
    }
    if predictions.is_empty() {
        return Ok(0.0);
    }
    let sum: f64 = predictions
        .iter()
        .zip(targets)
        .map(|(p, t)| (p - t) * (p - t))
        .sum();
    Ok(sum / predictions.len() as f64)
}

impl Mlp {
    pub fn param_count(&self) -> usize {
        self.architecture.param_count()
    }

    fn check_input(&self, len: usize) -> Result<()> {
        let expected = self.architecture.input_dim();
        if len != expected {
            return Err(ModelError::Dimension {
                expected,
                actual: len,
            });
        }
        Ok(())
    }

    /// Output for one standardized input, keeping every activation.
    pub fn forward(&self, input: &[f64]) -> Result<(f64, ForwardCache)> {
        self.check_input(input.len())?;
        let mut cache = ForwardCache::new(&self.architecture);
        let y = self.forward_into(input, &mut cache);
        Ok((y, cache))
    }

    /// Output without retaining activations.
    pub fn evaluate(&self, input: &[f64]) -> Result<f64> {
        self.forward(input).map(|(y, _)| y)
    }

    pub(crate) fn forward_into(&self, input: &[f64], cache: &mut ForwardCache) -> f64 {
        cache.post[0].copy_from_slice(input);
        let last = self.weights.len() - 1;
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let (before, after) = cache.post.split_at_mut(l + 1);
            let a = &before[l];
            let z = &mut cache.pre[l];
            for (i, zi) in z.iter_mut().enumerate() {
                *zi = b[i] + dot(w.row(i), a);
            }
            if l < last {
                for (out, &zi) in after[0].iter_mut().zip(z.iter()) {
                    *out = relu(zi);
                }
            }
        }
        cache.pre[last][0]
    }

    /// Parameter gradients of a loss whose derivative with respect to the
    /// output is `d_output`.
    pub fn backward(&self, cache: &ForwardCache, d_output: f64) -> Result<Gradients> {
        if cache.pre.len() != self.weights.len()
            || cache
                .pre
                .iter()
                .zip(&self.biases)
                .any(|(z, b)| z.len() != b.len())
        {
            return Err(ModelError::Dimension {
                expected: self.weights.len(),
                actual: cache.pre.len(),
            });
        }
        let mut grads = Gradients::zeros(&self.architecture);
        let mut scratch = BackwardScratch::new(&self.architecture);
        self.backward_accumulate(cache, d_output, &mut grads, &mut scratch);
        Ok(grads)
    }

    /// Adds this sample's gradients into `grads`.
    pub(crate) fn backward_accumulate(
        &self,
        cache: &ForwardCache,
        d_output: f64,
        grads: &mut Gradients,
        scratch: &mut BackwardScratch,
    ) {
        let last = self.weights.len() - 1;
        let BackwardScratch { delta, next } = scratch;
        delta.clear();
        delta.push(d_output);
        for l in (0..=last).rev() {
            let a = &cache.post[l];
            let gw = &mut grads.weights[l];
            let gb = &mut grads.biases[l];
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                gb[i] += d;
                let row = &mut gw.data[i * gw.cols..(i + 1) * gw.cols];
                for (g, &x) in row.iter_mut().zip(a) {
                    *g += d * x;
                }
            }
            if l == 0 {
                break;
            }
            let w = &self.weights[l];
            let z = &cache.pre[l - 1];
            next.clear();
            next.resize(w.cols, 0.0);
            for (i, &d) in delta.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                for (n, &wij) in next.iter_mut().zip(w.row(i)) {
                    *n += wij * d;
                }
            }
            for (n, &zj) in next.iter_mut().zip(z) {
                if zj <= 0.0 {
                    *n = 0.0;
                }
            }
            std::mem::swap(delta, next);
        }
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| [w.data.as_mut_slice(), b.as_mut_slice()])
            .collect()
    }

    /// Weight and bias slices in layer order.
    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| [w.data.as_slice(), b.as_slice()])
            .collect()
    }

    /// Saturation time predicted from a raw thickness profile and dose time.
    pub fn predict_tsat(&self, thickness: &[f64], dose_time: f64) -> Result<f64> {
        let stats = self.stats.as_ref().ok_or(ModelError::MissingStats)?;
        self.check_input(thickness.len() + 1)?;
        if stats.n_inputs() != thickness.len() + 1 {
            return Err(ModelError::Dimension {
                expected: stats.n_inputs(),
                actual: thickness.len() + 1,
            });
        }
        let mut input = vec![0.0; thickness.len() + 1];
        stats.standardize_input(thickness, dose_time, &mut input);
        let y = self.evaluate(&input)?;
        Ok(stats.saturation_time(y))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

pub(crate) struct BackwardScratch {
    delta: Vec<f64>,
    next: Vec<f64>,
}

impl BackwardScratch {
    pub(crate) fn new(arch: &Architecture) -> Self {
        let widest = arch.dims().iter().copied().max().unwrap_or(1);
        Self {
            delta: Vec::with_capacity(widest),
            next: Vec::with_capacity(widest),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub shuffle_seed: u64,
    pub init_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            epochs: 100,
            batch_size: 64,
            shuffle_seed: streams::stream_seed(0, 1),
            init_seed: 0,
        }
    }
}

impl TrainConfig {
    /// Initialization and shuffling seeds derived from one training seed.
    pub fn with_seed(self, seed: u64) -> Self {
        Self {
            init_seed: seed,
            shuffle_seed: streams::stream_seed(seed, 1),
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(ModelError::Config(msg));
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be non-negative, got {}", self.learning_rate));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return bad(format!("betas must lie in [0, 1), got {} and {}", self.beta1, self.beta2));
        }
        if self.epsilon <= 0.0 {
            return bad(format!("epsilon must be positive, got {}", self.epsilon));
        }
        if self.batch_size == 0 {
            return bad("batch_size must be at least 1".into());
        }
        Ok(())
    }

    /// `epochs=100 batch=64 lr=0.001`
    pub fn summary(&self) -> String {
        format!(
            "epochs={} batch={} lr={}",
            self.epochs, self.batch_size, self.learning_rate
        )
    }
}

/// Adam moments for every parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Gradients,
    pub v: Gradients,
    pub step: u64,
}

impl AdamState {
    pub fn new(arch: &Architecture) -> Self {
        Self {
            m: Gradients::zeros(arch),
            v: Gradients::zeros(arch),
            step: 0,
        }
    }
}

/// One bias-corrected Adam update.
pub fn adam_step(mlp: &mut Mlp, grads: &Gradients, state: &mut AdamState, config: &TrainConfig) {
    state.step += 1;
    let t = state.step as i32;
    let (b1, b2) = (config.beta1, config.beta2);
    let correct1 = 1.0 - b1.powi(t);
    let correct2 = 1.0 - b2.powi(t);
    let lr = config.learning_rate;
    let eps = config.epsilon;
    let params = mlp.param_slices_mut();
    let g = grads.slices();
    let m = state.m.slices_mut();
    let v = state.v.slices_mut();
    for (((p, g), m), v) in params.into_iter().zip(g).zip(m).zip(v) {
        for k in 0..p.len() {
            m[k] = b1 * m[k] + (1.0 - b1) * g[k];
            v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
            let m_hat = m[k] / correct1;
            let v_hat = v[k] / correct2;
            p[k] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Training MSE of the untrained network.
    pub initial_loss: f64,
    /// Mean per-sample loss accumulated over each epoch.
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        self.epoch_losses.last().copied().unwrap_or(self.initial_loss)
    }
}

/// Standardized `(inputs, targets)` as flat row-major buffers.
fn design_matrix(dataset: &Dataset, stats: &NormalizationStats) -> (Vec<f64>, Vec<f64>) {
    let width = dataset.meta.n_points + 1;
    let mut inputs = vec![0.0; dataset.len() * width];
    let mut targets = Vec::with_capacity(dataset.len());
    for (r, row) in dataset.records.iter().zip(inputs.chunks_exact_mut(width)) {
        stats.standardize_input(&r.thickness, r.dose_time, row);
        targets.push(stats.standardize_target(r.saturation_time));
    }
    (inputs, targets)
}

/// Minibatch Adam on the MSE of standardized `log10(t_sat)`.
///
/// The network adopts the dataset's normalization statistics. Each epoch
/// visits every sample once in a seeded shuffled order; the last batch may
/// be short.
pub fn train(mlp: &mut Mlp, dataset: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if dataset.is_empty() {
        return Err(ModelError::EmptyDataset);
    }
    let stats = dataset.stats.clone().ok_or(ModelError::MissingStats)?;
    let width = dataset.meta.n_points + 1;
    mlp.check_input(width)?;
    let (inputs, targets) = design_matrix(dataset, &stats);
    mlp.stats = Some(stats);

    let arch = mlp.architecture.clone();
    let mut cache = ForwardCache::new(&arch);
    let mut scratch = BackwardScratch::new(&arch);
    let mut grads = Gradients::zeros(&arch);
    let mut adam = AdamState::new(&arch);
    let mut rng = StreamRng::seed_from_u64(config.shuffle_seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    let n = dataset.len() as f64;

    let initial_loss = targets
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let y = mlp.forward_into(&inputs[i * width..(i + 1) * width], &mut cache);
            (y - t) * (y - t)
        })
        .sum::<f64>()
        / n;

    let mut epoch_losses = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(config.batch_size) {
            grads.fill(0.0);
            let scale = 2.0 / batch.len() as f64;
            for &i in batch {
                let y = mlp.forward_into(&inputs[i * width..(i + 1) * width], &mut cache);
                let err = y - targets[i];
                total += err * err;
                mlp.backward_accumulate(&cache, scale * err, &mut grads, &mut scratch);
            }
            adam_step(mlp, &grads, &mut adam, config);
        }
        let loss = total / n;
        if !loss.is_finite() {
            return Err(ModelError::Diverged(epoch));
        }
        epoch_losses.push(loss);
    }
    Ok(TrainReport {
        initial_loss,
        epoch_losses,
    })
}

/// Initializes from `config.init_seed` and trains.
pub fn fit(architecture: Architecture, dataset: &Dataset, config: &TrainConfig) -> Result<(Mlp, TrainReport)> {
    let mut mlp = init_mlp(architecture, config.init_seed);
    let report = train(&mut mlp, dataset, config)?;
    Ok((mlp, report))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    format: String,
    version: u64,
    architecture: Architecture,
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
    stats: NormalizationStats,
    #[serde(default)]
    training: Option<TrainConfig>,
}

/// Serializes a network, its statistics and (optionally) how it was trained.
pub fn model_to_json(mlp: &Mlp, training: Option<&TrainConfig>) -> Result<String> {
    let file = ModelFile {
        format: MODEL_FORMAT.into(),
        version: MODEL_VERSION,
        architecture: mlp.architecture.clone(),
        weights: mlp.weights.clone(),
        biases: mlp.biases.clone(),
        stats: mlp.stats.clone().ok_or(ModelError::MissingStats)?,
        training: training.copied(),
    };
    let mut text = serde_json::to_string_pretty(&file)?;
    text.push('\n');
    Ok(text)
}

/// Inverse of [`model_to_json`].
pub fn model_from_json(text: &str) -> Result<(Mlp, Option<TrainConfig>)> {
    let value: Value = serde_json::from_str(text)?;
    let obj = value.as_object().ok_or(ModelError::MissingField("format"))?;
    match obj.get("format") {
        Some(Value::String(f)) if f == MODEL_FORMAT => {}
        Some(other) => return Err(ModelError::Format(other.to_string())),
        None => return Err(ModelError::MissingField("format")),
    }
    match obj.get("version") {
        Some(v) if v.as_u64() == Some(MODEL_VERSION) => {}
        Some(v) => return Err(ModelError::UnsupportedVersion { found: v.to_string() }),
        None => return Err(ModelError::MissingField("version")),
    }
    for field in ["architecture", "weights", "biases", "stats"] {
        if obj.get(field).is_none_or(Value::is_null) {
            return Err(ModelError::MissingField(field));
        }
    }
    let file: ModelFile = serde_json::from_value(value)?;
    let arch = file.architecture;
    let template = Gradients::zeros(&arch);
    let shapes_ok = file.weights.len() == template.weights.len()
        && file
            .weights
            .iter()
            .zip(&template.weights)
            .all(|(w, t)| w.rows == t.rows && w.cols == t.cols && w.data.len() == w.rows * w.cols)
        && file.biases.len() == template.biases.len()
        && file
            .biases
            .iter()
            .zip(&template.biases)
            .all(|(b, t)| b.len() == t.len());
    if !shapes_ok {
        return Err(ModelError::Architecture {
            dims: arch.dims().to_vec(),
            reason: "parameter shapes do not match".into(),
        });
    }
    if file.stats.n_inputs() != arch.input_dim() {
        return Err(ModelError::Dimension {
            expected: arch.input_dim(),
            actual: file.stats.n_inputs(),
        });
    }
    Ok((
        Mlp {
            architecture: arch,
            weights: file.weights,
            biases: file.biases,
            stats: Some(file.stats),
        },
        file.training,
    ))
}

pub fn save_model(mlp: &Mlp, training: Option<&TrainConfig>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, model_to_json(mlp, training)?)?;
    Ok(())
}

pub fn load_model(path: impl AsRef<Path>) -> Result<(Mlp, Option<TrainConfig>)> {
    model_from_json(&fs::read_to_string(path)?)
}
