//! Dense layer stack with hand-derived reverse-mode gradients.
//!
//! The architecture is a static sequence, so no general autodiff is needed:
//! each layer caches what its backward pass requires during the training
//! forward, and `Stack::backward` walks the sequence in reverse.

use rand::Rng;

use super::tensor::Tensor2;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Declarative layer description; dims must chain consistently in a stack.
#[derive(Debug, Clone, PartialEq)]
pub enum LayerSpec {
    /// `bias` is false for linears feeding a batchnorm: the normalization
    /// subtracts the batch mean, so such a bias is a dead parameter (its
    /// role is played by the batchnorm beta).
    Linear {
        input: usize,
        output: usize,
        bias: bool,
    },
    ReLU,
    BatchNorm {
        dim: usize,
    },
    Dropout {
        rate: f64,
    },
    Sigmoid,
}

impl LayerSpec {
    pub fn linear(input: usize, output: usize) -> Self {
        Self::Linear {
            input,
            output,
            bias: true,
        }
    }

    pub fn linear_no_bias(input: usize, output: usize) -> Self {
        Self::Linear {
            input,
            output,
            bias: false,
        }
    }
}

const BN_EPS: f64 = 1e-5;
const BN_MOMENTUM: f64 = 0.9;

#[derive(Debug, Clone)]
pub struct LinearLayer {
    pub weight: Tensor2,       // output x input
    pub bias: Option<Tensor2>, // 1 x output
    pub grad_weight: Tensor2,
    pub grad_bias: Option<Tensor2>,
    cached_input: Option<Tensor2>,
}

impl LinearLayer {
    pub fn new<R: Rng + ?Sized>(input: usize, output: usize, bias: bool, rng: &mut R) -> Self {
        // Kaiming-uniform fan-in init for the ReLU stacks.
        let limit = (6.0 / input as f64).sqrt();
        let weight = Tensor2::from_fn(output, input, |_, _| {
            (rng.random::<f64>() * 2.0 - 1.0) * limit
        });
        Self {
            weight,
            bias: bias.then(|| Tensor2::zeros(1, output)),
            grad_weight: Tensor2::zeros(output, input),
            grad_bias: bias.then(|| Tensor2::zeros(1, output)),
            cached_input: None,
        }
    }

    pub fn forward(&mut self, x: &Tensor2, mode: Mode) -> Result<Tensor2> {
        if x.cols() != self.weight.cols() {
            return Err(Error::ShapeMismatch(format!(
                "linear: input width {} vs weight input {}",
                x.cols(),
                self.weight.cols()
            )));
        }
        let mut y = x.matmul_nt(&self.weight)?;
        if let Some(bias) = &self.bias {
            y.add_row_broadcast(bias)?;
        }
        if mode == Mode::Train {
            self.cached_input = Some(x.clone());
        }
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor2) -> Result<Tensor2> {
        let x = self
            .cached_input
            .as_ref()
            .ok_or_else(|| Error::Invalid("linear backward without cached forward".into()))?;
        self.grad_weight = dy.matmul_tn(x)?;
        if self.grad_bias.is_some() {
            self.grad_bias = Some(dy.column_sums());
        }
        dy.matmul_nn(&self.weight)
    }
}

#[derive(Debug, Clone)]
struct BatchNormCache {
    x_hat: Tensor2,
    inv_std: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BatchNormLayer {
    pub gamma: Tensor2, // 1 x dim
    pub beta: Tensor2,  // 1 x dim
    pub running_mean: Vec<f64>,
    pub running_var: Vec<f64>,
    pub grad_gamma: Tensor2,
    pub grad_beta: Tensor2,
    cache: Option<BatchNormCache>,
}

impl BatchNormLayer {
    pub fn new(dim: usize) -> Self {
        Self {
            gamma: Tensor2::from_fn(1, dim, |_, _| 1.0),
            beta: Tensor2::zeros(1, dim),
            running_mean: vec![0.0; dim],
            running_var: vec![1.0; dim],
            grad_gamma: Tensor2::zeros(1, dim),
            grad_beta: Tensor2::zeros(1, dim),
            cache: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.gamma.cols()
    }

    pub fn forward(&mut self, x: &Tensor2, mode: Mode) -> Result<Tensor2> {
        let d = self.dim();
        if x.cols() != d {
            return Err(Error::ShapeMismatch(format!(
                "batchnorm: input width {} vs dim {d}",
                x.cols()
            )));
        }
        let n = x.rows();
        let mut y = Tensor2::zeros(n, d);
        match mode {
            Mode::Eval => {
                for i in 0..n {
                    let xr = x.row(i);
                    let yr = y.row_mut(i);
                    for j in 0..d {
                        let x_hat =
                            (xr[j] - self.running_mean[j]) / (self.running_var[j] + BN_EPS).sqrt();
                        yr[j] = self.gamma.data()[j] * x_hat + self.beta.data()[j];
                    }
                }
            }
            Mode::Train => {
                // Batch statistics over all rows (descriptor rows of the
                // whole batch pooled together).
                let mut mean = vec![0.0; d];
                for i in 0..n {
                    for (m, v) in mean.iter_mut().zip(x.row(i)) {
                        *m += v;
                    }
                }
                for m in &mut mean {
                    *m /= n as f64;
                }
                let mut var = vec![0.0; d];
                for i in 0..n {
                    for (j, v) in x.row(i).iter().enumerate() {
                        let c = v - mean[j];
                        var[j] += c * c;
                    }
                }
                for v in &mut var {
                    *v /= n as f64;
                }
                let inv_std: Vec<f64> = var.iter().map(|&v| 1.0 / (v + BN_EPS).sqrt()).collect();
                let mut x_hat = Tensor2::zeros(n, d);
                for i in 0..n {
                    let xr = x.row(i);
                    let hr = x_hat.row_mut(i);
                    for j in 0..d {
                        hr[j] = (xr[j] - mean[j]) * inv_std[j];
                    }
                }
                for i in 0..n {
                    let hr = x_hat.row(i);
                    let yr = y.row_mut(i);
                    for j in 0..d {
                        yr[j] = self.gamma.data()[j] * hr[j] + self.beta.data()[j];
                    }
                }
                for j in 0..d {
                    self.running_mean[j] =
                        BN_MOMENTUM * self.running_mean[j] + (1.0 - BN_MOMENTUM) * mean[j];
                    self.running_var[j] =
                        BN_MOMENTUM * self.running_var[j] + (1.0 - BN_MOMENTUM) * var[j];
                }
                self.cache = Some(BatchNormCache { x_hat, inv_std });
            }
        }
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor2) -> Result<Tensor2> {
        let cache = self
            .cache
            .as_ref()
            .ok_or_else(|| Error::Invalid("batchnorm backward without train forward".into()))?;
        let (n, d) = dy.shape();
        let x_hat = &cache.x_hat;

        let mut dgamma = vec![0.0; d];
        let mut dbeta = vec![0.0; d];
        for i in 0..n {
            let dr = dy.row(i);
            let hr = x_hat.row(i);
            for j in 0..d {
                dgamma[j] += dr[j] * hr[j];
                dbeta[j] += dr[j];
            }
        }
        self.grad_gamma = Tensor2::from_vec(1, d, dgamma.clone())?;
        self.grad_beta = Tensor2::from_vec(1, d, dbeta.clone())?;

        // dx = (gamma * inv_std / N) * (N dy - sum(dy) - x_hat * sum(dy * x_hat))
        let mut dx = Tensor2::zeros(n, d);
        let nf = n as f64;
        for i in 0..n {
            let dr = dy.row(i);
            let hr = x_hat.row(i);
            let xr = dx.row_mut(i);
            for j in 0..d {
                let term = nf * dr[j] - dbeta[j] - hr[j] * dgamma[j];
                xr[j] = self.gamma.data()[j] * cache.inv_std[j] * term / nf;
            }
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone, Default)]
pub struct ReluLayer {
    mask: Option<Vec<bool>>,
}

impl ReluLayer {
    pub fn new() -> Self {
        Self { mask: None }
    }

    pub fn forward(&mut self, x: &Tensor2, mode: Mode) -> Tensor2 {
        let mut y = x.clone();
        if mode == Mode::Train {
            let mask = x.data().iter().map(|&v| v > 0.0).collect();
            self.mask = Some(mask);
        }
        for v in y.data_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        y
    }

    pub fn backward(&mut self, dy: &Tensor2) -> Result<Tensor2> {
        let mask = self
            .mask
            .as_ref()
            .ok_or_else(|| Error::Invalid("relu backward without train forward".into()))?;
        let mut dx = dy.clone();
        for (v, &keep) in dx.data_mut().iter_mut().zip(mask) {
            if !keep {
                *v = 0.0;
            }
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone)]
pub struct DropoutLayer {
    pub rate: f64,
    mask: Option<Vec<f64>>,
}

impl DropoutLayer {
    pub fn new(rate: f64) -> Self {
        Self { rate, mask: None }
    }

    /// Inverted dropout: kept activations are scaled by `1/(1-rate)` so eval
    /// needs no rescaling. Rate 0 is the identity and consumes no rng.
    pub fn forward<R: Rng + ?Sized>(&mut self, x: &Tensor2, mode: Mode, rng: &mut R) -> Tensor2 {
        if mode == Mode::Eval || self.rate == 0.0 {
            self.mask = None;
            return x.clone();
        }
        let keep = 1.0 - self.rate;
        let mask: Vec<f64> = (0..x.data().len())
            .map(|_| {
                if rng.random::<f64>() < self.rate {
                    0.0
                } else {
                    1.0 / keep
                }
            })
            .collect();
        let mut y = x.clone();
        for (v, m) in y.data_mut().iter_mut().zip(&mask) {
            *v *= m;
        }
        self.mask = Some(mask);
        y
    }

    pub fn backward(&mut self, dy: &Tensor2) -> Result<Tensor2> {
        match &self.mask {
            None => Ok(dy.clone()),
            Some(mask) => {
                let mut dx = dy.clone();
                for (v, m) in dx.data_mut().iter_mut().zip(mask) {
                    *v *= m;
                }
                Ok(dx)
            }
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct SigmoidLayer {
    output: Option<Tensor2>,
}

impl SigmoidLayer {
    pub fn new() -> Self {
        Self { output: None }
    }

    pub fn forward(&mut self, x: &Tensor2, mode: Mode) -> Tensor2 {
        let mut y = x.clone();
        for v in y.data_mut() {
            *v = 1.0 / (1.0 + (-*v).exp());
        }
        if mode == Mode::Train {
            self.output = Some(y.clone());
        }
        y
    }

    pub fn backward(&mut self, dy: &Tensor2) -> Result<Tensor2> {
        let y = self
            .output
            .as_ref()
            .ok_or_else(|| Error::Invalid("sigmoid backward without train forward".into()))?;
        let mut dx = dy.clone();
        for (v, s) in dx.data_mut().iter_mut().zip(y.data()) {
            *v *= s * (1.0 - s);
        }
        Ok(dx)
    }
}

#[derive(Debug, Clone)]
pub enum Layer {
    Linear(LinearLayer),
    ReLU(ReluLayer),
    BatchNorm(BatchNormLayer),
    Dropout(DropoutLayer),
    Sigmoid(SigmoidLayer),
}

impl Layer {
    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        x: &Tensor2,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Tensor2> {
        match self {
            Layer::Linear(l) => l.forward(x, mode),
            Layer::ReLU(l) => Ok(l.forward(x, mode)),
            Layer::BatchNorm(l) => l.forward(x, mode),
            Layer::Dropout(l) => Ok(l.forward(x, mode, rng)),
            Layer::Sigmoid(l) => Ok(l.forward(x, mode)),
        }
    }

    pub fn backward(&mut self, dy: &Tensor2) -> Result<Tensor2> {
        match self {
            Layer::Linear(l) => l.backward(dy),
            Layer::ReLU(l) => l.backward(dy),
            Layer::BatchNorm(l) => l.backward(dy),
            Layer::Dropout(l) => l.backward(dy),
            Layer::Sigmoid(l) => l.backward(dy),
        }
    }
}

/// Named tensor view used for checkpoints: trainable parameters and
/// persistent buffers (batchnorm running statistics).
pub enum StateRole {
    Param,
    Buffer,
}

/// A sequential layer stack.
#[derive(Debug, Clone, Default)]
pub struct Stack {
    pub layers: Vec<Layer>,
}

impl Stack {
    /// Build from specs with seeded initialization, verifying that declared
    /// dims chain consistently.
    pub fn build<R: Rng + ?Sized>(
        specs: &[LayerSpec],
        input_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let mut layers = Vec::with_capacity(specs.len());
        let mut dim = input_dim;
        for spec in specs {
            match *spec {
                LayerSpec::Linear {
                    input,
                    output,
                    bias,
                } => {
                    if input != dim {
                        return Err(Error::ShapeMismatch(format!(
                            "linear expects input {input} but stack carries {dim}"
                        )));
                    }
                    layers.push(Layer::Linear(LinearLayer::new(input, output, bias, rng)));
                    dim = output;
                }
                LayerSpec::ReLU => layers.push(Layer::ReLU(ReluLayer::new())),
                LayerSpec::BatchNorm { dim: d } => {
                    if d != dim {
                        return Err(Error::ShapeMismatch(format!(
                            "batchnorm dim {d} but stack carries {dim}"
                        )));
                    }
                    layers.push(Layer::BatchNorm(BatchNormLayer::new(d)));
                }
                LayerSpec::Dropout { rate } => {
                    if !(0.0..1.0).contains(&rate) {
                        return Err(Error::Invalid(format!("dropout rate {rate} outside [0,1)")));
                    }
                    layers.push(Layer::Dropout(DropoutLayer::new(rate)));
                }
                LayerSpec::Sigmoid => layers.push(Layer::Sigmoid(SigmoidLayer::new())),
            }
        }
        Ok(Self { layers })
    }

    pub fn forward<R: Rng + ?Sized>(
        &mut self,
        x: &Tensor2,
        mode: Mode,
        rng: &mut R,
    ) -> Result<Tensor2> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur, mode, rng)?;
        }
        Ok(cur)
    }

    pub fn backward(&mut self, dy: &Tensor2) -> Result<Tensor2> {
        let mut cur = dy.clone();
        for layer in self.layers.iter_mut().rev() {
            cur = layer.backward(&cur)?;
        }
        Ok(cur)
    }

    /// Visit `(param, grad)` pairs in a fixed order.
    pub fn visit_params(&mut self, f: &mut impl FnMut(&mut Tensor2, &mut Tensor2)) {
        for layer in &mut self.layers {
            match layer {
                Layer::Linear(l) => {
                    f(&mut l.weight, &mut l.grad_weight);
                    if let (Some(bias), Some(grad)) = (&mut l.bias, &mut l.grad_bias) {
                        f(bias, grad);
                    }
                }
                Layer::BatchNorm(l) => {
                    f(&mut l.gamma, &mut l.grad_gamma);
                    f(&mut l.beta, &mut l.grad_beta);
                }
                _ => {}
            }
        }
    }

    /// Named tensors for checkpointing, including batchnorm running stats.
    pub fn state_entries(&self, prefix: &str) -> Vec<(String, StateRole, Vec<usize>, Vec<f64>)> {
        let mut out = Vec::new();
        for (i, layer) in self.layers.iter().enumerate() {
            match layer {
                Layer::Linear(l) => {
                    out.push((
                        format!("{prefix}.{i}.weight"),
                        StateRole::Param,
                        vec![l.weight.rows(), l.weight.cols()],
                        l.weight.data().to_vec(),
                    ));
                    if let Some(bias) = &l.bias {
                        out.push((
                            format!("{prefix}.{i}.bias"),
                            StateRole::Param,
                            vec![1, bias.cols()],
                            bias.data().to_vec(),
                        ));
                    }
                }
                Layer::BatchNorm(l) => {
                    out.push((
                        format!("{prefix}.{i}.gamma"),
                        StateRole::Param,
                        vec![1, l.dim()],
                        l.gamma.data().to_vec(),
                    ));
                    out.push((
                        format!("{prefix}.{i}.beta"),
                        StateRole::Param,
                        vec![1, l.dim()],
                        l.beta.data().to_vec(),
                    ));
                    out.push((
                        format!("{prefix}.{i}.running_mean"),
                        StateRole::Buffer,
                        vec![1, l.dim()],
                        l.running_mean.clone(),
                    ));
                    out.push((
                        format!("{prefix}.{i}.running_var"),
                        StateRole::Buffer,
                        vec![1, l.dim()],
                        l.running_var.clone(),
                    ));
                }
                _ => {}
            }
        }
        out
    }

    /// Load named tensors produced by [`Stack::state_entries`]. Returns an
    /// error naming the first tensor whose name or shape does not match.
    pub fn load_state(
        &mut self,
        prefix: &str,
        lookup: &mut impl FnMut(&str) -> Option<(Vec<usize>, Vec<f64>)>,
    ) -> Result<()> {
        for (i, layer) in self.layers.iter_mut().enumerate() {
            match layer {
                Layer::Linear(l) => {
                    let w = fetch(
                        lookup,
                        &format!("{prefix}.{i}.weight"),
                        &[l.weight.rows(), l.weight.cols()],
                    )?;
                    l.weight = Tensor2::from_vec(l.weight.rows(), l.weight.cols(), w)?;
                    if let Some(bias) = &mut l.bias {
                        let b = fetch(lookup, &format!("{prefix}.{i}.bias"), &[1, bias.cols()])?;
                        *bias = Tensor2::from_vec(1, bias.cols(), b)?;
                    }
                }
                Layer::BatchNorm(l) => {
                    let d = l.dim();
                    let g = fetch(lookup, &format!("{prefix}.{i}.gamma"), &[1, d])?;
                    l.gamma = Tensor2::from_vec(1, d, g)?;
                    let b = fetch(lookup, &format!("{prefix}.{i}.beta"), &[1, d])?;
                    l.beta = Tensor2::from_vec(1, d, b)?;
                    l.running_mean = fetch(lookup, &format!("{prefix}.{i}.running_mean"), &[1, d])?;
                    l.running_var = fetch(lookup, &format!("{prefix}.{i}.running_var"), &[1, d])?;
                }
                _ => {}
            }
        }
        Ok(())
    }

    pub fn param_count(&mut self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |p, _| n += p.data().len());
        n
    }

    /// Flatten all trainable parameters (fixed order).
    pub fn flat_params(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params(&mut |p, _| out.extend_from_slice(p.data()));
        out
    }

    pub fn set_flat_params(&mut self, values: &[f64]) {
        let mut offset = 0;
        self.visit_params(&mut |p, _| {
            let n = p.data().len();
            p.data_mut().copy_from_slice(&values[offset..offset + n]);
            offset += n;
        });
    }

    pub fn flat_grads(&mut self) -> Vec<f64> {
        let mut out = Vec::new();
        self.visit_params(&mut |_, g| out.extend_from_slice(g.data()));
        out
    }
}

fn fetch(
    lookup: &mut impl FnMut(&str) -> Option<(Vec<usize>, Vec<f64>)>,
    name: &str,
    expect_dims: &[usize],
) -> Result<Vec<f64>> {
    let (dims, data) =
        lookup(name).ok_or_else(|| Error::Format(format!("checkpoint missing tensor `{name}`")))?;
    if dims != expect_dims {
        return Err(Error::Format(format!(
            "checkpoint tensor `{name}` has shape {dims:?}, expected {expect_dims:?}"
        )));
    }
    Ok(data)
}
