//! A small fully-connected network with exact gradients and Adam.
//!
//! Parameters live in one flat vector, layer by layer, each layer laid out as
//! its `out x in` row-major weight matrix followed by its bias. Gradient
//! records use the same layout, which keeps the optimizer a plain loop.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Identity,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Identity => z,
        }
    }

    #[inline]
    fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::Relu => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Identity => 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    sizes: Vec<usize>,
    activations: Vec<Activation>,
    offsets: Vec<usize>,
    params: Vec<f64>,
}

/// Per-layer inputs and pre-activations from one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardCache {
    inputs: Vec<Vec<f64>>,
    preacts: Vec<Vec<f64>>,
}

/// Gradients accumulated over `batch_size` samples.
///
/// `params` and `preact` hold sums of per-sample gradients of the per-sample
/// loss, so the gradient of the batch-mean loss is `params / batch_size`.
/// `preact_abs` sums `|dL/dz|` per neuron, which is what gradient-magnitude
/// neuron scores average.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientRecord {
    pub params: Vec<f64>,
    pub preact: Vec<Vec<f64>>,
    pub preact_abs: Vec<Vec<f64>>,
    pub batch_size: usize,
}

impl GradientRecord {
    pub fn zeros_like(net: &Mlp) -> Self {
        let preact: Vec<Vec<f64>> = net.sizes[1..].iter().map(|&n| vec![0.0; n]).collect();
        Self {
            params: vec![0.0; net.params.len()],
            preact_abs: preact.clone(),
            preact,
            batch_size: 0,
        }
    }

    pub fn accumulate(&mut self, other: &GradientRecord) -> Result<()> {
        if other.params.len() != self.params.len() {
            return Err(Error::Shape {
                expected: self.params.len(),
                got: other.params.len(),
            });
        }
        for (a, b) in self.params.iter_mut().zip(&other.params) {
            *a += b;
        }
        for (la, lb) in self.preact.iter_mut().zip(&other.preact) {
            for (a, b) in la.iter_mut().zip(lb) {
                *a += b;
            }
        }
        for (la, lb) in self.preact_abs.iter_mut().zip(&other.preact_abs) {
            for (a, b) in la.iter_mut().zip(lb) {
                *a += b;
            }
        }
        self.batch_size += other.batch_size;
        Ok(())
    }

    /// Gradient of the batch-mean loss.
    pub fn mean_params(&self) -> Vec<f64> {
        let n = self.batch_size.max(1) as f64;
        self.params.iter().map(|g| g / n).collect()
    }

    /// Batch mean of `|dL/dz|` per layer and neuron.
    pub fn mean_preact_abs(&self) -> Vec<Vec<f64>> {
        let n = self.batch_size.max(1) as f64;
        self.preact_abs
            .iter()
            .map(|l| l.iter().map(|g| g / n).collect())
            .collect()
    }
}

impl Mlp {
    /// All-zero network. `sizes` lists the input width followed by every layer's
    /// width; hidden layers use `hidden`, the output layer is always linear.
    pub fn zeros(sizes: &[usize], hidden: Activation) -> Result<Self> {
        if sizes.len() < 2 || sizes.iter().any(|&n| n == 0) {
            return Err(Error::Config(
                "network needs at least one non-empty layer".into(),
            ));
        }
        let layers = sizes.len() - 1;
        let mut activations = vec![hidden; layers];
        activations[layers - 1] = Activation::Identity;
        let mut offsets = Vec::with_capacity(layers + 1);
        let mut total = 0;
        for w in sizes.windows(2) {
            offsets.push(total);
            total += w[1] * w[0] + w[1];
        }
        offsets.push(total);
        Ok(Self {
            sizes: sizes.to_vec(),
            activations,
            offsets,
            params: vec![0.0; total],
        })
    }

    /// Relu network initialized uniformly in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes, Activation::Relu)?;
        for l in 0..net.layer_count() {
            let bound = 1.0 / libm::sqrt(net.sizes[l] as f64);
            let (lo, hi) = (net.offsets[l], net.offsets[l + 1]);
            for p in &mut net.params[lo..hi] {
                *p = (2.0 * rng.random::<f64>() - 1.0) * bound;
            }
        }
        Ok(net)
    }

    pub fn layer_count(&self) -> usize {
        self.sizes.len() - 1
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        self.sizes[self.sizes.len() - 1]
    }

    pub fn activation(&self, layer: usize) -> Activation {
        self.activations[layer]
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn weight_range(&self, layer: usize) -> core::ops::Range<usize> {
        let lo = self.offsets[layer];
        lo..lo + self.sizes[layer + 1] * self.sizes[layer]
    }

    fn bias_range(&self, layer: usize) -> core::ops::Range<usize> {
        self.weight_range(layer).end..self.offsets[layer + 1]
    }

    /// Row-major `out x in` weight matrix of `layer`.
    pub fn weights(&self, layer: usize) -> &[f64] {
        &self.params[self.weight_range(layer)]
    }

    pub fn weights_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.weight_range(layer);
        &mut self.params[r]
    }

    pub fn bias(&self, layer: usize) -> &[f64] {
        &self.params[self.bias_range(layer)]
    }

    pub fn bias_mut(&mut self, layer: usize) -> &mut [f64] {
        let r = self.bias_range(layer);
        &mut self.params[r]
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, ForwardCache)> {
        if input.len() != self.input_dim() {
            return Err(Error::Shape {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        let layers = self.layer_count();
        let mut inputs = Vec::with_capacity(layers);
        let mut preacts = Vec::with_capacity(layers);
        let mut x = input.to_vec();
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let w = self.weights(l);
            let b = self.bias(l);
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &w[o * n_in..(o + 1) * n_in];
                    b[o] + row.iter().zip(&x).map(|(a, c)| a * c).sum::<f64>()
                })
                .collect();
            let act = self.activations[l];
            let y = z.iter().map(|&v| act.apply(v)).collect();
            inputs.push(x);
            preacts.push(z);
            x = y;
        }
        Ok((x, ForwardCache { inputs, preacts }))
    }

    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.forward(input).map(|(y, _)| y)
    }

    /// Exact gradients of a scalar loss whose gradient w.r.t. the network
    /// output is `loss_grad`.
    pub fn backward(&self, cache: &ForwardCache, loss_grad: &[f64]) -> Result<GradientRecord> {
        let layers = self.layer_count();
        if cache.preacts.len() != layers
            || cache
                .preacts
                .iter()
                .zip(&self.sizes[1..])
                .any(|(z, &n)| z.len() != n)
        {
            return Err(Error::Shape {
                expected: layers,
                got: cache.preacts.len(),
            });
        }
        if loss_grad.len() != self.output_dim() {
            return Err(Error::Shape {
                expected: self.output_dim(),
                got: loss_grad.len(),
            });
        }
        let mut record = GradientRecord::zeros_like(self);
        record.batch_size = 1;
        let mut upstream = loss_grad.to_vec();
        for l in (0..layers).rev() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let act = self.activations[l];
            let delta: Vec<f64> = upstream
                .iter()
                .zip(&cache.preacts[l])
                .map(|(g, &z)| g * act.derivative(z))
                .collect();
            let x = &cache.inputs[l];
            let wr = self.weight_range(l);
            let br = self.bias_range(l);
            for o in 0..n_out {
                let row = &mut record.params[wr.start + o * n_in..wr.start + (o + 1) * n_in];
                for (g, xi) in row.iter_mut().zip(x) {
                    *g = delta[o] * xi;
                }
            }
            record.params[br].copy_from_slice(&delta);
            record.preact_abs[l] = delta.iter().map(|d| d.abs()).collect();
            if l > 0 {
                let w = self.weights(l);
                upstream = (0..n_in)
                    .map(|i| (0..n_out).map(|o| w[o * n_in + i] * delta[o]).sum())
                    .collect();
            }
            record.preact[l] = delta;
        }
        Ok(record)
    }
}

/// Bias-corrected Adam.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    step_count: u64,
}

impl Adam {
    pub fn new(n_params: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            m: vec![0.0; n_params],
            v: vec![0.0; n_params],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.m
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.v
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) -> Result<()> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(Error::Shape {
                expected: self.m.len(),
                got: if params.len() != self.m.len() {
                    params.len()
                } else {
                    grads.len()
                },
            });
        }
        self.step_count += 1;
        let t = self.step_count as i32;
        let c1 = 1.0 - libm::pow(self.beta1, t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, t as f64);
        for i in 0..params.len() {
            let g = grads[i];
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.m[i] / c1;
            let v_hat = self.v[i] / c2;
            params[i] -= self.lr * m_hat / (libm::sqrt(v_hat) + self.eps);
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding::stream;

    #[test]
    fn zero_weights_output_bias() {
        let mut net = Mlp::zeros(&[3, 2], Activation::Relu).unwrap();
        net.bias_mut(0).copy_from_slice(&[0.5, -2.0]);
        assert_eq!(net.predict(&[1.0, 2.0, 3.0]).unwrap(), vec![0.5, -2.0]);
    }

    #[test]
    fn relu_hidden_layer() {
        let mut net = Mlp::zeros(&[2, 2, 2], Activation::Relu).unwrap();
        net.weights_mut(0).copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        net.weights_mut(1).copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        let (_, cache) = net.forward(&[-1.0, 2.0]).unwrap();
        // hidden post-activation is what reaches the linear output layer
        assert_eq!(cache.inputs[1], vec![0.0, 2.0]);
        assert_eq!(net.predict(&[-1.0, 2.0]).unwrap(), vec![0.0, 2.0]);
    }

    #[test]
    fn output_layer_is_linear() {
        let net = Mlp::zeros(&[2, 4, 3], Activation::Relu).unwrap();
        assert_eq!(net.activation(0), Activation::Relu);
        assert_eq!(net.activation(1), Activation::Identity);
    }

    #[test]
    fn shape_errors() {
        let net = Mlp::init(&[3, 4, 2], &mut stream(0, "n", 0)).unwrap();
        assert!(matches!(net.forward(&[1.0]), Err(Error::Shape { .. })));
        let (_, cache) = net.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            net.backward(&cache, &[1.0]),
            Err(Error::Shape { .. })
        ));
        let other = Mlp::init(&[3, 5, 2], &mut stream(0, "n", 1)).unwrap();
        let (_, other_cache) = other.forward(&[1.0, 2.0, 3.0]).unwrap();
        assert!(net.backward(&other_cache, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn zero_upstream_gives_zero_gradients() {
        let net = Mlp::init(&[4, 6, 3], &mut stream(1, "n", 0)).unwrap();
        let (_, cache) = net.forward(&[0.1, -0.2, 0.3, 0.9]).unwrap();
        let g = net.backward(&cache, &[0.0; 3]).unwrap();
        assert!(g.params.iter().all(|&x| x == 0.0));
        assert!(g.preact.iter().flatten().all(|&x| x == 0.0));
    }

    #[test]
    fn single_linear_layer_closed_form() {
        let mut net = Mlp::init(&[3, 1], &mut stream(2, "n", 0)).unwrap();
        net.bias_mut(0)[0] = 0.25;
        let x = [0.5, -1.5, 2.0];
        let y = 0.7;
        let (out, cache) = net.forward(&x).unwrap();
        let r = out[0] - y;
        let g = net.backward(&cache, &[2.0 * r]).unwrap();
        for i in 0..3 {
            assert!((g.params[i] - 2.0 * r * x[i]).abs() < 1e-15);
        }
        assert!((g.params[3] - 2.0 * r).abs() < 1e-15);
    }

    #[test]
    fn init_bounds_and_determinism() {
        let a = Mlp::init(&[16, 64, 64, 2], &mut stream(3, "n", 0)).unwrap();
        let b = Mlp::init(&[16, 64, 64, 2], &mut stream(3, "n", 0)).unwrap();
        assert_eq!(a, b);
        for l in 0..a.layer_count() {
            let bound = 1.0 / (a.sizes()[l] as f64).sqrt();
            assert!(a
                .weights(l)
                .iter()
                .chain(a.bias(l))
                .all(|w| w.abs() <= bound));
        }
    }

    #[test]
    fn adam_zero_gradient_keeps_params() {
        let mut p = vec![1.0, -2.0];
        let mut opt = Adam::new(2, 0.1);
        opt.step(&mut p, &[0.5, 0.5]).unwrap();
        let before = p.clone();
        let m_before = opt.first_moment().to_vec();
        opt.step(&mut p, &[0.0, 0.0]).unwrap();
        // the first moment still carries momentum, so use a fresh optimizer
        let mut fresh = Adam::new(2, 0.1);
        let mut q = before.clone();
        fresh.step(&mut q, &[0.0, 0.0]).unwrap();
        assert_eq!(q, before);
        for (m, m0) in opt.first_moment().iter().zip(m_before) {
            assert!(m.abs() < m0.abs());
        }
        assert_eq!(opt.step_count(), 2);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        for g in [3.0, -0.02, 250.0] {
            let mut p = vec![0.0];
            let mut opt = Adam::new(1, 0.01);
            opt.step(&mut p, &[g]).unwrap();
            assert!(((p[0].abs() - 0.01) / 0.01).abs() < 0.01);
            assert_eq!(p[0].signum(), -g.signum());
        }
    }
}
