//! Dense feedforward binary classifier trained with Adam on binary
//! cross-entropy.
//!
//! Hidden layers use the rectifier, the output layer a single sigmoid unit.
//! Layer `l` computes `z = a · Wᵀ + b` with `W` shaped `(dims[l+1], dims[l])`.

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::math::{self, sigmoid};
use crate::{Error, Result};

/// Input, two hidden layers, output.
pub const LAYER_DIMS: [usize; 4] = [5, 128, 64, 1];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Trailing fraction of the training rows held out for validation loss.
    pub validation_fraction: f64,
    pub shuffle_seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 10,
            batch_size: 32,
            validation_fraction: 0.20,
            shuffle_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "NetworkParams", try_from = "NetworkParams")]
pub struct Network {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
    pub seed: u64,
}

/// Serialized form of [`Network`]: weights as row-major nested arrays.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NetworkParams {
    pub layer_dims: Vec<usize>,
    pub weights: Vec<Vec<Vec<f64>>>,
    pub biases: Vec<Vec<f64>>,
    pub seed: u64,
}

impl From<Network> for NetworkParams {
    fn from(net: Network) -> Self {
        NetworkParams {
            layer_dims: net.layer_dims,
            weights: net
                .weights
                .iter()
                .map(|w| w.rows().into_iter().map(|r| r.to_vec()).collect())
                .collect(),
            biases: net.biases.iter().map(|b| b.to_vec()).collect(),
            seed: net.seed,
        }
    }
}

impl TryFrom<NetworkParams> for Network {
    type Error = Error;

    fn try_from(p: NetworkParams) -> Result<Self> {
        let layers = p.layer_dims.len().saturating_sub(1);
        if layers == 0 || p.weights.len() != layers || p.biases.len() != layers {
            return Err(Error::ShapeMismatch(format!(
                "{} layer dims, {} weight matrices, {} bias vectors",
                p.layer_dims.len(),
                p.weights.len(),
                p.biases.len()
            )));
        }
        let mut weights = Vec::with_capacity(layers);
        let mut biases = Vec::with_capacity(layers);
        for l in 0..layers {
            let (fan_in, fan_out) = (p.layer_dims[l], p.layer_dims[l + 1]);
            let rows = &p.weights[l];
            if rows.len() != fan_out || rows.iter().any(|r| r.len() != fan_in) {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l} weights are not {fan_out}x{fan_in}"
                )));
            }
            if p.biases[l].len() != fan_out {
                return Err(Error::ShapeMismatch(format!(
                    "layer {l} bias is not length {fan_out}"
                )));
            }
            let flat: Vec<f64> = rows.iter().flatten().copied().collect();
            if flat.iter().chain(&p.biases[l]).any(|v| !v.is_finite()) {
                return Err(Error::Malformed(format!(
                    "layer {l} has non-finite parameters"
                )));
            }
            weights.push(Array2::from_shape_vec((fan_out, fan_in), flat).expect("checked shape"));
            biases.push(Array1::from(p.biases[l].clone()));
        }
        Ok(Network {
            layer_dims: p.layer_dims,
            weights,
            biases,
            seed: p.seed,
        })
    }
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// Input to each layer; `inputs[0]` is the batch itself.
    pub inputs: Vec<Array2<f64>>,
    /// Pre-activation of each layer.
    pub pre: Vec<Array2<f64>>,
    /// Output probabilities, one per row.
    pub output: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Array2<f64>>,
    pub biases: Vec<Array1<f64>>,
}

/// Network with the default architecture and seeded initialization.
pub fn init_network(seed: u64) -> Network {
    Network::init(&LAYER_DIMS, seed)
}

impl Network {
    /// Uniform `±sqrt(6 / (fan_in + fan_out))` weights, zero biases.
    pub fn init(layer_dims: &[usize], seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for pair in layer_dims.windows(2) {
            let (fan_in, fan_out) = (pair[0], pair[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(Array2::from_shape_simple_fn((fan_out, fan_in), || {
                rng.gen_range(-limit..limit)
            }));
            biases.push(Array1::zeros(fan_out));
        }
        Network {
            layer_dims: layer_dims.to_vec(),
            weights,
            biases,
            seed,
        }
    }

    pub fn n_layers(&self) -> usize {
        self.weights.len()
    }

    pub fn n_params(&self) -> usize {
        self.weights.iter().map(|w| w.len()).sum::<usize>()
            + self.biases.iter().map(|b| b.len()).sum::<usize>()
    }

    pub fn forward(&self, x: ArrayView2<'_, f64>) -> Result<ForwardCache> {
        if x.ncols() != self.layer_dims[0] {
            return Err(Error::ShapeMismatch(format!(
                "network expects {} inputs, got {}",
                self.layer_dims[0],
                x.ncols()
            )));
        }
        let last = self.n_layers() - 1;
        let mut inputs = Vec::with_capacity(self.n_layers());
        let mut pre = Vec::with_capacity(self.n_layers());
        let mut a = x.to_owned();
        for (l, (w, b)) in self.weights.iter().zip(&self.biases).enumerate() {
            let z = a.dot(&w.t()) + b;
            let next = if l == last {
                z.mapv(sigmoid)
            } else {
                z.mapv(|v| v.max(0.0))
            };
            inputs.push(a);
            pre.push(z);
            a = next;
        }
        Ok(ForwardCache {
            inputs,
            pre,
            output: a.column(0).to_vec(),
        })
    }

    /// Gradients of the mean binary cross-entropy of `cache.output` vs `y`.
    pub fn backward(&self, cache: &ForwardCache, y: &[u8]) -> Result<Gradients> {
        let batch = y.len();
        let stale = cache.inputs.len() != self.n_layers()
            || cache.pre.len() != self.n_layers()
            || cache.output.len() != batch
            || cache
                .inputs
                .iter()
                .zip(&self.weights)
                .any(|(a, w)| a.nrows() != batch || a.ncols() != w.ncols());
        if stale {
            return Err(Error::ShapeMismatch(
                "forward cache does not match this network and batch".into(),
            ));
        }
        if batch == 0 {
            return Err(Error::Empty("backward pass on zero samples"));
        }
        let mut delta = Array2::from_shape_fn((batch, 1), |(i, _)| {
            (cache.output[i] - f64::from(y[i])) / batch as f64
        });
        let mut weights = vec![Array2::zeros((0, 0)); self.n_layers()];
        let mut biases = vec![Array1::zeros(0); self.n_layers()];
        for l in (0..self.n_layers()).rev() {
            weights[l] = delta.t().dot(&cache.inputs[l]);
            biases[l] = delta.sum_axis(Axis(0));
            if l > 0 {
                let mut back = delta.dot(&self.weights[l]);
                back.zip_mut_with(&cache.pre[l - 1], |d, &z| {
                    if z <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = back;
            }
        }
        Ok(Gradients { weights, biases })
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        Ok(self.forward(x)?.output)
    }

    /// Class 1 when the output probability is at least one half.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
        Ok(crate::logistic::threshold(&self.predict_proba(x)?))
    }

    /// Mutable views of every parameter tensor: `w0, b0, w1, b1, ...`.
    pub fn params_mut(&mut self) -> Vec<&mut [f64]> {
        self.weights
            .iter_mut()
            .zip(self.biases.iter_mut())
            .flat_map(|(w, b)| {
                [
                    w.as_slice_mut().expect("standard layout"),
                    b.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }
}

impl Gradients {
    /// Views in the same order as [`Network::params_mut`].
    pub fn as_slices(&self) -> Vec<&[f64]> {
        self.weights
            .iter()
            .zip(&self.biases)
            .flat_map(|(w, b)| {
                [
                    w.as_slice().expect("standard layout"),
                    b.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }
}

/// Predicted classes of `x`.
pub fn predict_network(model: &Network, x: ArrayView2<'_, f64>) -> Result<Vec<u8>> {
    model.predict(x)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub step_count: u64,
    pub first_moment: Vec<Vec<f64>>,
    pub second_moment: Vec<Vec<f64>>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl AdamState {
    /// Zeroed moments for tensors of the given lengths, default
    /// hyperparameters.
    pub fn new(lengths: &[usize]) -> Self {
        AdamState {
            step_count: 0,
            first_moment: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            second_moment: lengths.iter().map(|&n| vec![0.0; n]).collect(),
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }

    pub fn for_network(net: &Network) -> Self {
        let lengths: Vec<usize> = net
            .weights
            .iter()
            .zip(&net.biases)
            .flat_map(|(w, b)| [w.len(), b.len()])
            .collect();
        AdamState::new(&lengths)
    }
}

/// One bias-corrected Adam update of every parameter tensor.
pub fn adam_step(params: &mut [&mut [f64]], grads: &[&[f64]], state: &mut AdamState) -> Result<()> {
    let shapes_ok = params.len() == grads.len()
        && params.len() == state.first_moment.len()
        && params
            .iter()
            .zip(grads)
            .zip(&state.first_moment)
            .all(|((p, g), m)| p.len() == g.len() && p.len() == m.len());
    if !shapes_ok {
        return Err(Error::ShapeMismatch(
            "adam parameter/gradient shapes differ".into(),
        ));
    }
    state.step_count += 1;
    let t = state.step_count as i32;
    let (b1, b2) = (state.beta1, state.beta2);
    let correct1 = 1.0 - b1.powi(t);
    let correct2 = 1.0 - b2.powi(t);
    for (k, (param, grad)) in params.iter_mut().zip(grads).enumerate() {
        let m = &mut state.first_moment[k];
        let v = &mut state.second_moment[k];
        for i in 0..param.len() {
            let g = grad[i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            let m_hat = m[i] / correct1;
            let v_hat = v[i] / correct2;
            param[i] -= state.learning_rate * m_hat / (v_hat.sqrt() + state.epsilon);
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub epoch: usize,
    pub train_loss: f64,
    /// `None` when no rows were held out.
    pub val_loss: Option<f64>,
}

/// Trains a fresh [`init_network`]`(seed)` on `x`, `y`.
///
/// The trailing `validation_fraction` of rows is held out; the remaining rows
/// are visited in a freshly shuffled order each epoch, in mini-batches of
/// `batch_size` with the short last batch kept.
pub fn train_network(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    config: &TrainConfig,
    seed: u64,
) -> Result<(Network, Vec<EpochLoss>)> {
    train_network_from(init_network(seed), x, y, config)
}

/// Same as [`train_network`] starting from an existing network.
pub fn train_network_from(
    mut net: Network,
    x: ArrayView2<'_, f64>,
    y: &[u8],
    config: &TrainConfig,
) -> Result<(Network, Vec<EpochLoss>)> {
    let n = x.nrows();
    if n != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "{n} rows vs {} labels",
            y.len()
        )));
    }
    if config.batch_size == 0 || n <= config.batch_size {
        return Err(Error::InvalidParam(format!(
            "need more rows ({n}) than batch size ({})",
            config.batch_size
        )));
    }
    if !(0.0..1.0).contains(&config.validation_fraction) {
        return Err(Error::InvalidParam(format!(
            "validation fraction {}",
            config.validation_fraction
        )));
    }
    let n_val = (n as f64 * config.validation_fraction).floor() as usize;
    let n_fit = n - n_val;
    let (x_fit, y_fit) = (x.slice(ndarray::s![..n_fit, ..]), &y[..n_fit]);
    let (x_val, y_val) = (x.slice(ndarray::s![n_fit.., ..]), &y[n_fit..]);

    let mut rng = ChaCha8Rng::seed_from_u64(config.shuffle_seed);
    let mut adam = AdamState::for_network(&net);
    let mut order: Vec<usize> = (0..n_fit).collect();
    let mut history = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        shuffle(&mut order, &mut rng);
        for batch in order.chunks(config.batch_size) {
            let xb = x_fit.select(Axis(0), batch);
            let yb: Vec<u8> = batch.iter().map(|&i| y_fit[i]).collect();
            let cache = net.forward(xb.view())?;
            let grads = net.backward(&cache, &yb)?;
            adam_step(&mut net.params_mut(), &grads.as_slices(), &mut adam)?;
        }
        let train_loss = math::binary_cross_entropy(&net.predict_proba(x_fit)?, y_fit)?;
        let val_loss = if n_val > 0 {
            Some(math::binary_cross_entropy(
                &net.predict_proba(x_val)?,
                y_val,
            )?)
        } else {
            None
        };
        if !train_loss.is_finite() || val_loss.is_some_and(|v| !v.is_finite()) {
            return Err(Error::Divergence(format!(
                "network loss {train_loss} at epoch {epoch}"
            )));
        }
        history.push(EpochLoss {
            epoch: epoch + 1,
            train_loss,
            val_loss,
        });
    }
    Ok((net, history))
}

/// Fisher-Yates with 64-bit draws so the order is the same on every target.
fn shuffle(items: &mut [usize], rng: &mut ChaCha8Rng) {
    for i in (1..items.len()).rev() {
        let j = rng.gen_range(0..=i as u64) as usize;
        items.swap(i, j);
    }
}
