//! Fully connected network with ReLU hidden layers and a two-way softmax
//! output, trained on mean cross-entropy with Adam.
//!
//! With no hidden layers the network is the plain linear + softmax head.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EpochLoss;

/// Dense layer; `weights` is row-major `outputs x inputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dense {
    pub inputs: usize,
    pub outputs: usize,
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl Dense {
    fn zeros(inputs: usize, outputs: usize) -> Self {
        Dense { inputs, outputs, weights: vec![0.0; inputs * outputs], bias: vec![0.0; outputs] }
    }

    /// Uniform Glorot initialisation, zero bias.
    fn xavier(inputs: usize, outputs: usize, rng: &mut impl Rng) -> Self {
        let limit = (6.0 / (inputs + outputs) as f64).sqrt();
        let weights = (0..inputs * outputs).map(|_| rng.random_range(-limit..limit)).collect();
        Dense { inputs, outputs, weights, bias: vec![0.0; outputs] }
    }

    fn forward(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        for o in 0..self.outputs {
            let row = &self.weights[o * self.inputs..(o + 1) * self.inputs];
            out.push(self.bias[o] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>());
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub layers: Vec<Dense>,
}

/// Parameter gradients, laid out like [`Network::layers`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<Dense>,
}

impl Gradients {
    /// All entries in parameter order (per layer: weights, then bias).
    pub fn flatten(&self) -> Vec<f64> {
        self.layers.iter().flat_map(|l| l.weights.iter().chain(&l.bias).copied()).collect()
    }
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|z| (z - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_softmax_at(logits: &[f64], class: usize) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + logits.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    logits[class] - lse
}

impl Network {
    /// `sizes` lists every width from input to output, e.g. `[d, 30, 10, 2]`.
    pub fn new(sizes: &[usize], rng: &mut impl Rng) -> Self {
        assert!(sizes.len() >= 2, "need at least input and output widths");
        Network { layers: sizes.windows(2).map(|w| Dense::xavier(w[0], w[1], rng)).collect() }
    }

    pub fn zeros(sizes: &[usize]) -> Self {
        Network { layers: sizes.windows(2).map(|w| Dense::zeros(w[0], w[1])).collect() }
    }

    pub fn input_width(&self) -> usize {
        self.layers[0].inputs
    }

    /// Pre-activations of every layer for one input.
    fn forward_all(&self, x: &[f64]) -> Vec<Vec<f64>> {
        let mut pre = Vec::with_capacity(self.layers.len());
        let mut act = x.to_vec();
        for (li, layer) in self.layers.iter().enumerate() {
            let mut z = Vec::new();
            layer.forward(&act, &mut z);
            act = if li + 1 < self.layers.len() { z.iter().map(|v| v.max(0.0)).collect() } else { z.clone() };
            pre.push(z);
        }
        pre
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.forward_all(x).pop().expect("at least one layer")
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(x))
    }

    /// Mean cross-entropy over a batch.
    pub fn loss(&self, xs: &[&[f64]], ys: &[usize]) -> f64 {
        let total: f64 = xs.iter().zip(ys).map(|(x, &y)| -log_softmax_at(&self.logits(x), y)).sum();
        total / xs.len() as f64
    }

    /// Backpropagated gradient of [`Network::loss`] (mean over the batch).
    pub fn gradient(&self, xs: &[&[f64]], ys: &[usize]) -> Gradients {
        assert!(!xs.is_empty(), "batch must be non-empty");
        let mut grads = Gradients { layers: self.layers.iter().map(|l| Dense::zeros(l.inputs, l.outputs)).collect() };
        let scale = 1.0 / xs.len() as f64;
        for (x, &y) in xs.iter().zip(ys) {
            let pre = self.forward_all(x);
            let last = self.layers.len() - 1;
            let mut delta = softmax(&pre[last]);
            delta[y] -= 1.0;
            for li in (0..=last).rev() {
                let layer = &self.layers[li];
                let input: Vec<f64> =
                    if li == 0 { x.to_vec() } else { pre[li - 1].iter().map(|v| v.max(0.0)).collect() };
                let g = &mut grads.layers[li];
                for o in 0..layer.outputs {
                    let d = delta[o] * scale;
                    g.bias[o] += d;
                    let row = &mut g.weights[o * layer.inputs..(o + 1) * layer.inputs];
                    for (gw, a) in row.iter_mut().zip(&input) {
                        *gw += d * a;
                    }
                }
                if li > 0 {
                    let mut prev = vec![0.0; layer.inputs];
                    for o in 0..layer.outputs {
                        let row = &layer.weights[o * layer.inputs..(o + 1) * layer.inputs];
                        for (p, w) in prev.iter_mut().zip(row) {
                            *p += delta[o] * w;
                        }
                    }
                    for (p, z) in prev.iter_mut().zip(&pre[li - 1]) {
                        if *z <= 0.0 {
                            *p = 0.0;
                        }
                    }
                    delta = prev;
                }
            }
        }
        grads
    }

    pub fn num_params(&self) -> usize {
        self.layers.iter().map(|l| l.weights.len() + l.bias.len()).sum()
    }

    fn param_slot(&mut self, mut i: usize) -> &mut f64 {
        for l in &mut self.layers {
            if i < l.weights.len() {
                return &mut l.weights[i];
            }
            i -= l.weights.len();
            if i < l.bias.len() {
                return &mut l.bias[i];
            }
            i -= l.bias.len();
        }
        panic!("parameter index out of range")
    }

    /// Parameter `i` in [`Gradients::flatten`] order.
    pub fn param(&self, i: usize) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.bias))
            .nth(i)
            .copied()
            .expect("parameter index out of range")
    }

    pub fn set_param(&mut self, i: usize, v: f64) {
        *self.param_slot(i) = v;
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig { learning_rate: 1e-3, beta1: 0.9, beta2: 0.999, epsilon: 1e-8 }
    }
}

struct Adam {
    cfg: AdamConfig,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    fn new(cfg: AdamConfig, n: usize) -> Self {
        Adam { cfg, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    fn step(&mut self, net: &mut Network, grads: &Gradients) {
        self.t += 1;
        let c = self.cfg;
        let bc1 = 1.0 - c.beta1.powi(self.t);
        let bc2 = 1.0 - c.beta2.powi(self.t);
        let mut k = 0;
        for (layer, g) in net.layers.iter_mut().zip(&grads.layers) {
            for (p, gp) in layer.weights.iter_mut().chain(layer.bias.iter_mut()).zip(g.weights.iter().chain(&g.bias)) {
                self.m[k] = c.beta1 * self.m[k] + (1.0 - c.beta1) * gp;
                self.v[k] = c.beta2 * self.v[k] + (1.0 - c.beta2) * gp * gp;
                let m_hat = self.m[k] / bc1;
                let v_hat = self.v[k] / bc2;
                *p -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
                k += 1;
            }
        }
    }
}

/// Mini-batch training with a seeded shuffle each epoch. The log records
/// the full-training-set loss after every epoch.
pub fn train_network(
    rows: &[&[f64]],
    ys: &[usize],
    sizes: &[usize],
    epochs: usize,
    batch_size: usize,
    adam: AdamConfig,
    seed: u64,
) -> (Network, Vec<EpochLoss>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = Network::new(sizes, &mut rng);
    let mut opt = Adam::new(adam, net.num_params());
    let mut order: Vec<usize> = (0..rows.len()).collect();
    let mut log = Vec::with_capacity(epochs);
    let batch_size = batch_size.max(1);
    for epoch in 0..epochs {
        order.shuffle(&mut rng);
        for chunk in order.chunks(batch_size) {
            let bx: Vec<&[f64]> = chunk.iter().map(|&i| rows[i]).collect();
            let by: Vec<usize> = chunk.iter().map(|&i| ys[i]).collect();
            let g = net.gradient(&bx, &by);
            opt.step(&mut net, &g);
        }
        log.push(EpochLoss { epoch: epoch + 1, loss: net.loss(rows, ys) });
    }
    (net, log)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_network_is_uniform() {
        let net = Network::zeros(&[4, 2]);
        assert_eq!(net.predict_proba(&[1.0, -2.0, 3.0, 0.5]), vec![0.5, 0.5]);
    }

    #[test]
    fn zero_input_zero_weights_gradient() {
        let net = Network::zeros(&[3, 4, 2]);
        let x = [0.0, 0.0, 0.0];
        let g = net.gradient(&[&x], &[1]);
        assert!(g.layers[0].weights.iter().chain(&g.layers[0].bias).all(|&v| v == 0.0));
        // probs (0.5, 0.5) minus one-hot(1)
        assert_eq!(g.layers[1].bias, vec![0.5, -0.5]);
    }

    #[test]
    fn duplicated_batch_gives_same_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let net = Network::new(&[3, 5, 2], &mut rng);
        let x = [0.3, -1.2, 0.8];
        let single = net.gradient(&[&x], &[0]).flatten();
        let double = net.gradient(&[&x, &x], &[0, 0]).flatten();
        for (a, b) in single.iter().zip(&double) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn param_access_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut net = Network::new(&[2, 3, 2], &mut rng);
        assert_eq!(net.num_params(), 2 * 3 + 3 + 3 * 2 + 2);
        net.set_param(10, 4.5);
        assert_eq!(net.param(10), 4.5);
        assert_eq!(net.layers[1].weights[1], 4.5);
    }
}
