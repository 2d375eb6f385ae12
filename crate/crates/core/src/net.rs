//! Fully connected ReLU classifier with manual backpropagation and Adam.

use crate::error::{Error, Result};
use crate::math::{softmax_rows, Matrix};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct MlpNetwork {
    dims: Vec<usize>,
    /// `weights[l]` is `dims[l] × dims[l + 1]`.
    weights: Vec<Matrix>,
    biases: Vec<Vec<f64>>,
}

/// Parameter-shaped gradient (or Adam moment) buffers.
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub weights: Vec<Matrix>,
    pub biases: Vec<Vec<f64>>,
}

/// Per-layer values retained by [`MlpNetwork::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    dims: Vec<usize>,
    /// Input of every layer; `activations[0]` is the batch itself.
    activations: Vec<Matrix>,
    /// Hidden pre-activations (before the ReLU).
    pre_activations: Vec<Matrix>,
}

impl ForwardCache {
    pub fn batch_size(&self) -> usize {
        self.activations[0].rows()
    }

    pub fn pre_activations(&self) -> &[Matrix] {
        &self.pre_activations
    }

    pub fn activations(&self) -> &[Matrix] {
        &self.activations
    }
}

impl MlpNetwork {
    /// He-initialized network: weights `N(0, 2 / fan_in)`, zero biases.
    pub fn init(layer_dims: &[usize], rng: &mut SeededRng) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::construction(format!(
                "layer dims must have at least two positive entries, got {layer_dims:?}"
            )));
        }
        let weights = layer_dims
            .windows(2)
            .map(|w| {
                let std = (2.0 / w[0] as f64).sqrt();
                let values = (0..w[0] * w[1]).map(|_| rng.normal() * std).collect();
                Matrix::new(w[0], w[1], values)
            })
            .collect::<Result<Vec<_>>>()?;
        let biases = layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect();
        Ok(Self {
            dims: layer_dims.to_vec(),
            weights,
            biases,
        })
    }

    /// Network with every parameter zero.
    pub fn zeros(layer_dims: &[usize]) -> Result<Self> {
        if layer_dims.len() < 2 || layer_dims.contains(&0) {
            return Err(Error::construction(format!(
                "invalid layer dims {layer_dims:?}"
            )));
        }
        Ok(Self {
            dims: layer_dims.to_vec(),
            weights: layer_dims
                .windows(2)
                .map(|w| Matrix::zeros(w[0], w[1]))
                .collect(),
            biases: layer_dims[1..].iter().map(|&d| vec![0.0; d]).collect(),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn input_dim(&self) -> usize {
        self.dims[0]
    }

    pub fn classes(&self) -> usize {
        *self.dims.last().unwrap()
    }

    pub fn weights(&self) -> &[Matrix] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [Matrix] {
        &mut self.weights
    }

    pub fn biases(&self) -> &[Vec<f64>] {
        &self.biases
    }

    pub fn biases_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.biases
    }

    fn layers(&self) -> usize {
        self.weights.len()
    }

    fn affine(&self, layer: usize, input: &Matrix) -> Result<Matrix> {
        let mut z = input.matmul(&self.weights[layer])?;
        let bias = &self.biases[layer];
        for r in 0..z.rows() {
            for (v, b) in z.row_mut(r).iter_mut().zip(bias) {
                *v += b;
            }
        }
        Ok(z)
    }

    fn check_input(&self, x: &Matrix) -> Result<()> {
        if x.cols() != self.input_dim() {
            return Err(Error::invalid(format!(
                "network expects {} input features, got {}",
                self.input_dim(),
                x.cols()
            )));
        }
        Ok(())
    }

    /// Raw logits plus the cache needed by [`MlpNetwork::backward`].
    pub fn forward(&self, x: &Matrix) -> Result<(Matrix, ForwardCache)> {
        self.check_input(x)?;
        let mut activations = vec![x.clone()];
        let mut pre_activations = Vec::with_capacity(self.layers() - 1);
        for l in 0..self.layers() - 1 {
            let z = self.affine(l, activations.last().unwrap())?;
            let mut a = z.clone();
            relu(&mut a);
            pre_activations.push(z);
            activations.push(a);
        }
        let logits = self.affine(self.layers() - 1, activations.last().unwrap())?;
        Ok((
            logits,
            ForwardCache {
                dims: self.dims.clone(),
                activations,
                pre_activations,
            },
        ))
    }

    /// Logits without keeping a cache.
    pub fn logits(&self, x: &Matrix) -> Result<Matrix> {
        self.check_input(x)?;
        let mut a = x.clone();
        for l in 0..self.layers() - 1 {
            a = self.affine(l, &a)?;
            relu(&mut a);
        }
        self.affine(self.layers() - 1, &a)
    }

    /// Softmax probabilities for every row of `x`.
    pub fn predict_proba(&self, x: &Matrix) -> Result<Matrix> {
        softmax_rows(&self.logits(x)?)
    }

    /// Exact parameter gradients of a scalar loss whose gradient with
    /// respect to the logits is `grad_logits`.
    pub fn backward(&self, cache: &ForwardCache, grad_logits: &Matrix) -> Result<Gradients> {
        if cache.dims != self.dims {
            return Err(Error::invalid("forward cache was produced by a different architecture"));
        }
        if grad_logits.shape() != (cache.batch_size(), self.classes()) {
            return Err(Error::invalid(format!(
                "grad_logits {:?} does not match cached batch of {} rows x {} classes",
                grad_logits.shape(),
                cache.batch_size(),
                self.classes()
            )));
        }
        let layers = self.layers();
        let mut weights = vec![None; layers];
        let mut biases = vec![Vec::new(); layers];
        let mut delta = grad_logits.clone();
        for l in (0..layers).rev() {
            let input = &cache.activations[l];
            weights[l] = Some(input.t_matmul(&delta)?);
            biases[l] = column_sums(&delta);
            if l > 0 {
                let mut upstream = delta.matmul_t(&self.weights[l])?;
                let z = &cache.pre_activations[l - 1];
                for (g, &pre) in upstream.values_mut().iter_mut().zip(z.values()) {
                    if pre <= 0.0 {
                        *g = 0.0;
                    }
                }
                delta = upstream;
            }
        }
        Ok(Gradients {
            weights: weights.into_iter().map(Option::unwrap).collect(),
            biases,
        })
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            weights: self
                .weights
                .iter()
                .map(|w| Matrix::zeros(w.rows(), w.cols()))
                .collect(),
            biases: self.biases.iter().map(|b| vec![0.0; b.len()]).collect(),
        }
    }

    /// Every parameter, flattened in a fixed order.
    pub fn flat_parameters(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.values());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn parameter_count(&self) -> usize {
        self.weights
            .iter()
            .zip(&self.biases)
            .map(|(w, b)| w.values().len() + b.len())
            .sum()
    }

    /// Mutable access to the parameter at `index` of [`MlpNetwork::flat_parameters`].
    pub fn parameter_mut(&mut self, mut index: usize) -> &mut f64 {
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let wn = w.values().len();
            if index < wn {
                return &mut w.values_mut()[index];
            }
            index -= wn;
            if index < b.len() {
                return &mut b[index];
            }
            index -= b.len();
        }
        panic!("parameter index out of range");
    }
}

impl Gradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for (w, b) in self.weights.iter().zip(&self.biases) {
            out.extend_from_slice(w.values());
            out.extend_from_slice(b);
        }
        out
    }

    pub fn scale(&mut self, factor: f64) {
        for w in &mut self.weights {
            w.scale(factor);
        }
        for b in &mut self.biases {
            b.iter_mut().for_each(|v| *v *= factor);
        }
    }

    fn matches(&self, net: &MlpNetwork) -> bool {
        self.weights.len() == net.weights.len()
            && self
                .weights
                .iter()
                .zip(&net.weights)
                .all(|(g, w)| g.shape() == w.shape())
            && self
                .biases
                .iter()
                .zip(&net.biases)
                .all(|(g, b)| g.len() == b.len())
    }
}

fn relu(m: &mut Matrix) {
    for v in m.values_mut() {
        if *v < 0.0 {
            *v = 0.0;
        }
    }
}

fn column_sums(m: &Matrix) -> Vec<f64> {
    let mut sums = vec![0.0; m.cols()];
    for row in m.iter_rows() {
        for (s, v) in sums.iter_mut().zip(row) {
            *s += v;
        }
    }
    sums
}

/// Bias-corrected Adam moments for one network.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    step: u64,
    first: Gradients,
    second: Gradients,
}

impl AdamState {
    pub fn new(net: &MlpNetwork, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            step: 0,
            first: net.zero_gradients(),
            second: net.zero_gradients(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one Adam update to `net` in place.
    pub fn step(&mut self, net: &mut MlpNetwork, grads: &Gradients) -> Result<()> {
        if !grads.matches(net) || !self.first.matches(net) {
            return Err(Error::invalid("gradient shapes do not match the network"));
        }
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (self.beta1, self.beta2);
        let correction1 = 1.0 - b1.powi(t);
        let correction2 = 1.0 - b2.powi(t);
        let lr = self.learning_rate;
        let eps = self.epsilon;

        let update = |param: &mut [f64], g: &[f64], m: &mut [f64], v: &mut [f64]| {
            for i in 0..param.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                let m_hat = m[i] / correction1;
                let v_hat = v[i] / correction2;
                param[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        };

        for l in 0..net.weights.len() {
            update(
                net.weights[l].values_mut(),
                grads.weights[l].values(),
                self.first.weights[l].values_mut(),
                self.second.weights[l].values_mut(),
            );
            update(
                &mut net.biases[l],
                &grads.biases[l],
                &mut self.first.biases[l],
                &mut self.second.biases[l],
            );
        }
        Ok(())
    }
}
