//! Fully-connected CSI autoencoder with hand-rolled training.
//!
//! Architecture (one model per zone):
//!
//! ```text
//! encoder: FC(D -> H) -> BatchNorm(H) -> act -> FC(H -> L)
//! decoder: FC(L -> H) -> BatchNorm(H) -> act -> FC(H -> D)
//! ```
//!
//! with `D` the real input dimension, `L` the codeword length, and
//! `H = beta * L` the hidden width. The latent and final layers are
//! linear. Forward, backward (including the batch-statistic terms of
//! batch normalization), and the Adam optimizer are implemented directly
//! so every gradient is auditable against finite differences.

use ndarray::{Array1, Array2, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::rng;

/// Batch-normalization variance guard.
pub const BN_EPSILON: f64 = 1e-5;
/// Running-statistics update momentum: `running = (1 - m) running + m batch`.
pub const BN_MOMENTUM: f64 = 0.1;

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    /// Saturating tanh.
    Tanh,
    /// Identity (used for exactly-solvable linear regimes).
    Linear,
}

impl Activation {
    pub fn apply(&self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Linear => x,
        }
    }

    /// Derivative expressed through the activation output `a = act(x)`.
    pub fn derivative_from_output(&self, a: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - a * a,
            Activation::Linear => 1.0,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }
}

impl std::str::FromStr for Activation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "tanh" => Ok(Activation::Tanh),
            "linear" => Ok(Activation::Linear),
            other => Err(Error::config(format!(
                "unknown activation '{other}' (expected 'tanh' or 'linear')"
            ))),
        }
    }
}

/// Shape of one encoder-decoder pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LayerSpec {
    /// Real input dimension `D` (twice the complex coefficient count).
    pub input_dim: usize,
    /// Codeword length `L`.
    pub latent_dim: usize,
    /// Hidden expansion factor `beta`; hidden width is `beta * L`.
    pub expansion: usize,
    pub activation: Activation,
}

impl LayerSpec {
    pub fn new(
        input_dim: usize,
        latent_dim: usize,
        expansion: usize,
        activation: Activation,
    ) -> Result<Self> {
        let spec = Self {
            input_dim,
            latent_dim,
            expansion,
            activation,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_dim == 0 || self.latent_dim == 0 || self.expansion == 0 {
            return Err(Error::config("layer dimensions must be at least 1"));
        }
        if self.latent_dim > self.input_dim {
            return Err(Error::config(format!(
                "codeword length {} exceeds input dimension {}",
                self.latent_dim, self.input_dim
            )));
        }
        Ok(())
    }

    /// Hidden width `H = beta * L`.
    pub fn hidden_dim(&self) -> usize {
        self.expansion * self.latent_dim
    }
}

/// Dense layer, weight stored `(input, output)` row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Linear {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Linear {
    /// `x (B, in) -> x W + b (B, out)`.
    fn forward(&self, x: &Array2<f64>) -> Array2<f64> {
        x.dot(&self.weight) + &self.bias
    }
}

/// Batch-normalization layer over feature columns.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchNorm {
    pub gamma: Array1<f64>,
    pub beta: Array1<f64>,
    pub running_mean: Array1<f64>,
    pub running_var: Array1<f64>,
}

impl BatchNorm {
    fn new(dim: usize) -> Self {
        Self {
            gamma: Array1::ones(dim),
            beta: Array1::zeros(dim),
            running_mean: Array1::zeros(dim),
            running_var: Array1::ones(dim),
        }
    }
}

/// All tensors of one encoder-decoder pair.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub spec: LayerSpec,
    pub enc_fc1: Linear,
    pub enc_bn: BatchNorm,
    pub enc_fc2: Linear,
    pub dec_fc1: Linear,
    pub dec_bn: BatchNorm,
    pub dec_fc2: Linear,
}

/// Forward/backward mode: training uses batch statistics in the
/// normalization layers, inference uses the stored running statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

fn xavier_uniform(rows: usize, cols: usize, rng: &mut impl Rng) -> Array2<f64> {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-bound..bound))
}

/// Initializes a model: Xavier-uniform weights sampled row-major,
/// zero biases, identity normalization layers.
pub fn init_model(spec: &LayerSpec, seed: u64) -> Result<ModelParams> {
    spec.validate()?;
    let d = spec.input_dim;
    let h = spec.hidden_dim();
    let l = spec.latent_dim;
    let mut r = rng::stream(seed);
    Ok(ModelParams {
        spec: *spec,
        enc_fc1: Linear {
            weight: xavier_uniform(d, h, &mut r),
            bias: Array1::zeros(h),
        },
        enc_bn: BatchNorm::new(h),
        enc_fc2: Linear {
            weight: xavier_uniform(h, l, &mut r),
            bias: Array1::zeros(l),
        },
        dec_fc1: Linear {
            weight: xavier_uniform(l, h, &mut r),
            bias: Array1::zeros(h),
        },
        dec_bn: BatchNorm::new(h),
        dec_fc2: Linear {
            weight: xavier_uniform(h, d, &mut r),
            bias: Array1::zeros(d),
        },
    })
}

/// Per-column batch mean and biased variance.
fn batch_stats(z: &Array2<f64>) -> (Array1<f64>, Array1<f64>) {
    let b = z.nrows() as f64;
    let mean = z.sum_axis(Axis(0)) / b;
    let mut var = Array1::zeros(z.ncols());
    for row in z.rows() {
        for (j, &v) in row.iter().enumerate() {
            let d = v - mean[j];
            var[j] += d * d;
        }
    }
    var.mapv_inplace(|v| v / b);
    (mean, var)
}

struct BnForward {
    /// Normalized activations before scale/shift.
    x_hat: Array2<f64>,
    /// Output `gamma * x_hat + beta`.
    y: Array2<f64>,
    /// Batch mean (train mode) or running mean (infer mode).
    mean: Array1<f64>,
    /// Biased batch variance (train mode) or running variance (infer).
    var: Array1<f64>,
}

fn bn_forward(bn: &BatchNorm, z: &Array2<f64>, mode: Mode) -> BnForward {
    let (mean, var) = match mode {
        Mode::Train => batch_stats(z),
        Mode::Infer => (bn.running_mean.clone(), bn.running_var.clone()),
    };
    let inv_std: Array1<f64> = var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
    let mut x_hat = z.clone();
    for mut row in x_hat.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = (*v - mean[j]) * inv_std[j];
        }
    }
    let mut y = x_hat.clone();
    for mut row in y.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v = bn.gamma[j] * *v + bn.beta[j];
        }
    }
    BnForward { x_hat, y, mean, var }
}

/// Gradient of the loss with respect to the normalization input, plus the
/// scale/shift gradients. `d_y` is the gradient at the layer output.
///
/// With batch statistics the input appears in the mean and variance, so
/// `dL/dz = gamma / (B sqrt(var + eps)) * (B dY - sum_b dY - x_hat * sum_b(dY x_hat))`.
fn bn_backward(
    bn: &BatchNorm,
    fwd: &BnForward,
    d_y: &Array2<f64>,
) -> (Array2<f64>, Array1<f64>, Array1<f64>) {
    let b = d_y.nrows() as f64;
    let cols = d_y.ncols();
    let mut d_gamma = Array1::zeros(cols);
    let mut d_beta = Array1::zeros(cols);
    for (dy_row, xh_row) in d_y.rows().into_iter().zip(fwd.x_hat.rows()) {
        for j in 0..cols {
            d_gamma[j] += dy_row[j] * xh_row[j];
            d_beta[j] += dy_row[j];
        }
    }
    let inv_std: Array1<f64> = fwd.var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
    let mut d_z = Array2::zeros(d_y.raw_dim());
    for ((mut dz_row, dy_row), xh_row) in d_z
        .rows_mut()
        .into_iter()
        .zip(d_y.rows())
        .zip(fwd.x_hat.rows())
    {
        for j in 0..cols {
            dz_row[j] = bn.gamma[j] * inv_std[j] / b
                * (b * dy_row[j] - d_beta[j] - xh_row[j] * d_gamma[j]);
        }
    }
    (d_z, d_gamma, d_beta)
}

/// Inference-mode normalization gradient: statistics are constants, so
/// `dL/dz = dY * gamma / sqrt(var + eps)` feature-wise.
fn bn_backward_infer(bn: &BatchNorm, fwd: &BnForward, d_y: &Array2<f64>) -> Array2<f64> {
    let inv_std: Array1<f64> = fwd.var.mapv(|v| 1.0 / (v + BN_EPSILON).sqrt());
    let mut d_z = d_y.clone();
    for mut row in d_z.rows_mut() {
        for (j, v) in row.iter_mut().enumerate() {
            *v *= bn.gamma[j] * inv_std[j];
        }
    }
    d_z
}

struct ForwardCache {
    a1: Array2<f64>,
    enc_bn: BnForward,
    latent: Array2<f64>,
    a3: Array2<f64>,
    dec_bn: BnForward,
    output: Array2<f64>,
}

fn forward_full(params: &ModelParams, x: &Array2<f64>, mode: Mode) -> Result<ForwardCache> {
    if x.ncols() != params.spec.input_dim {
        return Err(Error::data(format!(
            "batch has {} features, model expects {}",
            x.ncols(),
            params.spec.input_dim
        )));
    }
    if x.nrows() == 0 {
        return Err(Error::data("batch must contain at least one sample"));
    }
    let act = params.spec.activation;
    let z1 = params.enc_fc1.forward(x);
    let enc_bn = bn_forward(&params.enc_bn, &z1, mode);
    let a1 = enc_bn.y.mapv(|v| act.apply(v));
    let latent = params.enc_fc2.forward(&a1);
    let z3 = params.dec_fc1.forward(&latent);
    let dec_bn = bn_forward(&params.dec_bn, &z3, mode);
    let a3 = dec_bn.y.mapv(|v| act.apply(v));
    let output = params.dec_fc2.forward(&a3);
    Ok(ForwardCache {
        a1,
        enc_bn,
        latent,
        a3,
        dec_bn,
        output,
    })
}

/// Encodes a batch of input vectors (rows) into codewords.
pub fn encode(params: &ModelParams, x: &Array2<f64>, mode: Mode) -> Result<Array2<f64>> {
    Ok(forward_full(params, x, mode)?.latent)
}

/// Decodes a batch of codewords (rows) into reconstructed input vectors.
pub fn decode(params: &ModelParams, latent: &Array2<f64>, mode: Mode) -> Result<Array2<f64>> {
    if latent.ncols() != params.spec.latent_dim {
        return Err(Error::data(format!(
            "latent batch has {} features, model expects {}",
            latent.ncols(),
            params.spec.latent_dim
        )));
    }
    if latent.nrows() == 0 {
        return Err(Error::data("batch must contain at least one sample"));
    }
    let act = params.spec.activation;
    let z3 = params.dec_fc1.forward(latent);
    let dec_bn = bn_forward(&params.dec_bn, &z3, mode);
    let a3 = dec_bn.y.mapv(|v| act.apply(v));
    Ok(params.dec_fc2.forward(&a3))
}

/// Full reconstruction of a batch.
pub fn reconstruct(params: &ModelParams, x: &Array2<f64>, mode: Mode) -> Result<Array2<f64>> {
    Ok(forward_full(params, x, mode)?.output)
}

/// Gradients for every trainable tensor, mirroring [`ModelParams`].
#[derive(Debug, Clone)]
pub struct Gradients {
    pub enc_fc1: Linear,
    pub enc_bn_gamma: Array1<f64>,
    pub enc_bn_beta: Array1<f64>,
    pub enc_fc2: Linear,
    pub dec_fc1: Linear,
    pub dec_bn_gamma: Array1<f64>,
    pub dec_bn_beta: Array1<f64>,
    pub dec_fc2: Linear,
}

/// Mean-squared reconstruction loss over every element of the batch:
/// `L = ||X_hat - X||_F^2 / (B D)`.
pub fn loss_only(params: &ModelParams, x: &Array2<f64>, mode: Mode) -> Result<f64> {
    let cache = forward_full(params, x, mode)?;
    let diff = &cache.output - x;
    Ok(diff.iter().map(|v| v * v).sum::<f64>() / (x.nrows() * x.ncols()) as f64)
}

/// Loss and exact gradients for one training batch (batch-statistic
/// normalization). Returns the batch mean/variance of both normalization
/// layers so the caller can maintain running statistics.
pub fn loss_and_gradients(
    params: &ModelParams,
    x: &Array2<f64>,
    mode: Mode,
) -> Result<(f64, Gradients, BatchMoments)> {
    let act = params.spec.activation;
    let cache = forward_full(params, x, mode)?;
    let b = x.nrows() as f64;
    let d = x.ncols() as f64;

    let diff = &cache.output - x;
    let loss = diff.iter().map(|v| v * v).sum::<f64>() / (b * d);

    // Output layer.
    let d_out = diff.mapv(|v| 2.0 * v / (b * d));
    let d_w4 = cache.a3.t().dot(&d_out);
    let d_b4 = d_out.sum_axis(Axis(0));
    let d_a3 = d_out.dot(&params.dec_fc2.weight.t());

    // Decoder activation and normalization.
    let d_y3 = &d_a3 * &cache.a3.mapv(|a| act.derivative_from_output(a));
    let (d_z3, d_gamma3, d_beta3) = match mode {
        Mode::Train => bn_backward(&params.dec_bn, &cache.dec_bn, &d_y3),
        Mode::Infer => {
            let d_z = bn_backward_infer(&params.dec_bn, &cache.dec_bn, &d_y3);
            let mut d_gamma = Array1::zeros(d_y3.ncols());
            let mut d_beta = Array1::zeros(d_y3.ncols());
            for (dy_row, xh_row) in d_y3.rows().into_iter().zip(cache.dec_bn.x_hat.rows()) {
                for j in 0..d_y3.ncols() {
                    d_gamma[j] += dy_row[j] * xh_row[j];
                    d_beta[j] += dy_row[j];
                }
            }
            (d_z, d_gamma, d_beta)
        }
    };

    // Decoder input layer.
    let d_w3 = cache.latent.t().dot(&d_z3);
    let d_b3 = d_z3.sum_axis(Axis(0));
    let d_latent = d_z3.dot(&params.dec_fc1.weight.t());

    // Encoder output layer.
    let d_w2 = cache.a1.t().dot(&d_latent);
    let d_b2 = d_latent.sum_axis(Axis(0));
    let d_a1 = d_latent.dot(&params.enc_fc2.weight.t());

    // Encoder activation and normalization.
    let d_y1 = &d_a1 * &cache.a1.mapv(|a| act.derivative_from_output(a));
    let (d_z1, d_gamma1, d_beta1) = match mode {
        Mode::Train => bn_backward(&params.enc_bn, &cache.enc_bn, &d_y1),
        Mode::Infer => {
            let d_z = bn_backward_infer(&params.enc_bn, &cache.enc_bn, &d_y1);
            let mut d_gamma = Array1::zeros(d_y1.ncols());
            let mut d_beta = Array1::zeros(d_y1.ncols());
            for (dy_row, xh_row) in d_y1.rows().into_iter().zip(cache.enc_bn.x_hat.rows()) {
                for j in 0..d_y1.ncols() {
                    d_gamma[j] += dy_row[j] * xh_row[j];
                    d_beta[j] += dy_row[j];
                }
            }
            (d_z, d_gamma, d_beta)
        }
    };

    // Encoder input layer.
    let d_w1 = x.t().dot(&d_z1);
    let d_b1 = d_z1.sum_axis(Axis(0));

    let grads = Gradients {
        enc_fc1: Linear {
            weight: d_w1,
            bias: d_b1,
        },
        enc_bn_gamma: d_gamma1,
        enc_bn_beta: d_beta1,
        enc_fc2: Linear {
            weight: d_w2,
            bias: d_b2,
        },
        dec_fc1: Linear {
            weight: d_w3,
            bias: d_b3,
        },
        dec_bn_gamma: d_gamma3,
        dec_bn_beta: d_beta3,
        dec_fc2: Linear {
            weight: d_w4,
            bias: d_b4,
        },
    };
    let moments = BatchMoments {
        enc_mean: cache.enc_bn.mean,
        enc_var: cache.enc_bn.var,
        dec_mean: cache.dec_bn.mean,
        dec_var: cache.dec_bn.var,
    };
    Ok((loss, grads, moments))
}

/// Batch statistics of the two normalization layers for one batch.
#[derive(Debug, Clone)]
pub struct BatchMoments {
    pub enc_mean: Array1<f64>,
    pub enc_var: Array1<f64>,
    pub dec_mean: Array1<f64>,
    pub dec_var: Array1<f64>,
}

/// Optimizer configuration for [`train`].
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// Seed for the per-epoch shuffles.
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 100,
            batch_size: 128,
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epoch count must be at least 1"));
        }
        if self.batch_size < 2 {
            return Err(Error::config(
                "batch size must be at least 2 (batch statistics need two samples)",
            ));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::config("learning rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("Adam betas must lie in [0, 1)"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("Adam epsilon must be positive"));
        }
        Ok(())
    }
}

/// Per-epoch mean training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub epoch_losses: Vec<f64>,
}

impl TrainReport {
    pub fn final_loss(&self) -> f64 {
        *self.epoch_losses.last().expect("at least one epoch")
    }
}

struct Adam {
    m: Array1<f64>,
    v: Array1<f64>,
    t: u64,
}

impl Adam {
    fn new(dim: usize) -> Self {
        Self {
            m: Array1::zeros(dim),
            v: Array1::zeros(dim),
            t: 0,
        }
    }

    fn step(&mut self, params: &mut Array1<f64>, grads: &Array1<f64>, cfg: &TrainConfig) {
        self.t += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.t as i32);
        let bc2 = 1.0 - cfg.beta2.powi(self.t as i32);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = cfg.beta1 * self.m[i] + (1.0 - cfg.beta1) * g;
            self.v[i] = cfg.beta2 * self.v[i] + (1.0 - cfg.beta2) * g * g;
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.epsilon);
        }
    }
}

/// Trains a model in place on row-vector samples with mini-batch Adam.
///
/// Each epoch shuffles the sample order with a seed derived from
/// `(config.seed, epoch)`, so training is a pure function of
/// `(initial params, data, config)`. A trailing batch of size one is
/// merged into the previous batch to keep batch statistics well defined.
pub fn train(params: &mut ModelParams, data: &Array2<f64>, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    if data.nrows() < 2 {
        return Err(Error::data("training needs at least 2 samples"));
    }
    if data.ncols() != params.spec.input_dim {
        return Err(Error::data(format!(
            "training data has {} features, model expects {}",
            data.ncols(),
            params.spec.input_dim
        )));
    }
    if data.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric("training data contains non-finite values"));
    }

    let n = data.nrows();
    let mut optimizer = Adam::new(num_trainable(&params.spec));
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut indices: Vec<usize> = (0..n).collect();

    for epoch in 0..config.epochs {
        let mut r = rng::substream(config.seed, epoch as u64);
        rng::shuffle(&mut indices, &mut r);

        let mut batch_starts: Vec<(usize, usize)> = Vec::new();
        let mut start = 0;
        while start < n {
            let end = (start + config.batch_size).min(n);
            batch_starts.push((start, end));
            start = end;
        }
        // Merge a trailing singleton into its predecessor.
        if batch_starts.len() > 1 && batch_starts.last().unwrap().1 - batch_starts.last().unwrap().0 == 1
        {
            let (_, end) = batch_starts.pop().unwrap();
            batch_starts.last_mut().unwrap().1 = end;
        }

        let mut epoch_loss = 0.0;
        let mut seen = 0usize;
        for &(s, e) in &batch_starts {
            let batch_rows = e - s;
            let mut batch = Array2::zeros((batch_rows, params.spec.input_dim));
            for (bi, &si) in indices[s..e].iter().enumerate() {
                batch.row_mut(bi).assign(&data.row(si));
            }
            let (loss, grads, moments) = loss_and_gradients(params, &batch, Mode::Train)?;
            if !loss.is_finite() {
                return Err(Error::numeric(format!(
                    "training loss diverged at epoch {epoch}"
                )));
            }
            epoch_loss += loss * batch_rows as f64;
            seen += batch_rows;

            update_running_stats(&mut params.enc_bn, &moments.enc_mean, &moments.enc_var, batch_rows);
            update_running_stats(&mut params.dec_bn, &moments.dec_mean, &moments.dec_var, batch_rows);

            let mut flat = flatten_trainable(params);
            let flat_grads = flatten_gradients(&grads);
            optimizer.step(&mut flat, &flat_grads, config);
            assign_trainable(params, &flat)?;
        }
        epoch_losses.push(epoch_loss / seen as f64);
    }
    Ok(TrainReport { epoch_losses })
}

/// `running = (1 - m) running + m batch`, with the unbiased variance
/// (factor `B / (B - 1)`) entering the running variance.
fn update_running_stats(bn: &mut BatchNorm, mean: &Array1<f64>, var: &Array1<f64>, batch: usize) {
    debug_assert!(batch >= 2, "running stats need at least 2 samples");
    let unbias = batch as f64 / (batch as f64 - 1.0);
    for j in 0..bn.running_mean.len() {
        bn.running_mean[j] = (1.0 - BN_MOMENTUM) * bn.running_mean[j] + BN_MOMENTUM * mean[j];
        bn.running_var[j] = (1.0 - BN_MOMENTUM) * bn.running_var[j] + BN_MOMENTUM * var[j] * unbias;
    }
}

/// Parameter counts of one encoder-decoder pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCounts {
    pub encoder: u64,
    pub decoder: u64,
}

impl ParamCounts {
    pub fn total(&self) -> u64 {
        self.encoder + self.decoder
    }
}

/// Exact stored-parameter counts: each dense layer contributes
/// `(in + 1) out`, each normalization layer `2 H` (scale and shift).
pub fn count_parameters(spec: &LayerSpec) -> ParamCounts {
    let d = spec.input_dim as u64;
    let h = spec.hidden_dim() as u64;
    let l = spec.latent_dim as u64;
    ParamCounts {
        encoder: (d + 1) * h + 2 * h + (h + 1) * l,
        decoder: (l + 1) * h + 2 * h + (h + 1) * d,
    }
}

/// Real-multiplication counts for one inference pass of a single input:
/// a dense layer costs `in * out`, a normalization layer two multiplies
/// per feature (normalize, then scale).
pub fn count_multiplications(spec: &LayerSpec) -> ParamCounts {
    let d = spec.input_dim as u64;
    let h = spec.hidden_dim() as u64;
    let l = spec.latent_dim as u64;
    ParamCounts {
        encoder: d * h + 2 * h + h * l,
        decoder: l * h + 2 * h + h * d,
    }
}

/// Number of trainable scalars (running statistics excluded).
pub fn num_trainable(spec: &LayerSpec) -> usize {
    count_parameters(spec).total() as usize
}

fn push_linear(out: &mut Vec<f64>, layer: &Linear) {
    out.extend(layer.weight.iter());
    out.extend(layer.bias.iter());
}

/// Flattens the trainable tensors in normative order: encoder dense-in
/// (weights row-major, then bias), normalization scale, normalization
/// shift, encoder dense-out, then the decoder mirror.
pub fn flatten_trainable(params: &ModelParams) -> Array1<f64> {
    let mut out = Vec::with_capacity(num_trainable(&params.spec));
    push_linear(&mut out, &params.enc_fc1);
    out.extend(params.enc_bn.gamma.iter());
    out.extend(params.enc_bn.beta.iter());
    push_linear(&mut out, &params.enc_fc2);
    push_linear(&mut out, &params.dec_fc1);
    out.extend(params.dec_bn.gamma.iter());
    out.extend(params.dec_bn.beta.iter());
    push_linear(&mut out, &params.dec_fc2);
    Array1::from_vec(out)
}

/// Flattens gradients in the same order as [`flatten_trainable`].
pub fn flatten_gradients(grads: &Gradients) -> Array1<f64> {
    let mut out = Vec::new();
    push_linear(&mut out, &grads.enc_fc1);
    out.extend(grads.enc_bn_gamma.iter());
    out.extend(grads.enc_bn_beta.iter());
    push_linear(&mut out, &grads.enc_fc2);
    push_linear(&mut out, &grads.dec_fc1);
    out.extend(grads.dec_bn_gamma.iter());
    out.extend(grads.dec_bn_beta.iter());
    push_linear(&mut out, &grads.dec_fc2);
    Array1::from_vec(out)
}

fn take_into_linear(layer: &mut Linear, flat: &Array1<f64>, cursor: &mut usize) {
    for v in layer.weight.iter_mut() {
        *v = flat[*cursor];
        *cursor += 1;
    }
    for v in layer.bias.iter_mut() {
        *v = flat[*cursor];
        *cursor += 1;
    }
}

fn take_into_vec(vec: &mut Array1<f64>, flat: &Array1<f64>, cursor: &mut usize) {
    for v in vec.iter_mut() {
        *v = flat[*cursor];
        *cursor += 1;
    }
}

/// Writes a flat trainable vector back into the model
/// (inverse of [`flatten_trainable`]; running statistics untouched).
pub fn assign_trainable(params: &mut ModelParams, flat: &Array1<f64>) -> Result<()> {
    if flat.len() != num_trainable(&params.spec) {
        return Err(Error::data(format!(
            "flat vector has {} entries, model has {} trainable parameters",
            flat.len(),
            num_trainable(&params.spec)
        )));
    }
    let mut cursor = 0;
    take_into_linear(&mut params.enc_fc1, flat, &mut cursor);
    take_into_vec(&mut params.enc_bn.gamma, flat, &mut cursor);
    take_into_vec(&mut params.enc_bn.beta, flat, &mut cursor);
    take_into_linear(&mut params.enc_fc2, flat, &mut cursor);
    take_into_linear(&mut params.dec_fc1, flat, &mut cursor);
    take_into_vec(&mut params.dec_bn.gamma, flat, &mut cursor);
    take_into_vec(&mut params.dec_bn.beta, flat, &mut cursor);
    take_into_linear(&mut params.dec_fc2, flat, &mut cursor);
    debug_assert_eq!(cursor, flat.len());
    Ok(())
}

/// Relative error between analytic and central finite-difference
/// gradients over every trainable parameter of `params` at `x`.
///
/// Returns `(worst_relative_error, parameter_count)`. The relative error
/// of one coordinate is `|g_a - g_fd| / max(1e-6, |g_a| + |g_fd|)`; the
/// denominator floor keeps coordinates whose true gradient is
/// structurally zero (e.g. a bias immediately absorbed by batch-mean
/// subtraction) from amplifying finite-difference rounding noise, which
/// sits around `1e-12` for an order-one loss at this step size.
pub fn gradient_check(
    params: &ModelParams,
    x: &Array2<f64>,
    mode: Mode,
    step: f64,
) -> Result<(f64, usize)> {
    let (_, grads, _) = loss_and_gradients(params, x, mode)?;
    let analytic = flatten_gradients(&grads);
    let base = flatten_trainable(params);
    let mut probe = params.clone();
    let mut worst = 0.0f64;
    for i in 0..base.len() {
        let mut shifted = base.clone();
        shifted[i] = base[i] + step;
        assign_trainable(&mut probe, &shifted)?;
        let up = loss_only(&probe, x, mode)?;
        shifted[i] = base[i] - step;
        assign_trainable(&mut probe, &shifted)?;
        let down = loss_only(&probe, x, mode)?;
        let fd = (up - down) / (2.0 * step);
        let denom = (analytic[i].abs() + fd.abs()).max(1e-6);
        worst = worst.max((analytic[i] - fd).abs() / denom);
    }
    Ok((worst, base.len()))
}
