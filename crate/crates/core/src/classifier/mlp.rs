//! One-hidden-layer perceptron: tanh hidden units, softmax output, cross-entropy loss.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Weights and biases; `w1` is `hidden x input` and `w2` is `output x hidden`, row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Network {
    pub input: usize,
    pub hidden: usize,
    pub output: usize,
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Gradients laid out like [`Network`]'s parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Grads {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl Grads {
    pub fn zeros(net: &Network) -> Self {
        Self {
            w1: vec![0.0; net.w1.len()],
            b1: vec![0.0; net.b1.len()],
            w2: vec![0.0; net.w2.len()],
            b2: vec![0.0; net.b2.len()],
        }
    }

    fn clear(&mut self) {
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            v.iter_mut().for_each(|g| *g = 0.0);
        }
    }

    pub fn flat(&self) -> Vec<f64> {
        [&self.w1, &self.b1, &self.w2, &self.b2]
            .into_iter()
            .flatten()
            .copied()
            .collect()
    }
}

pub(crate) fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = z.iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

impl Network {
    pub fn zeros(input: usize, hidden: usize, output: usize) -> Self {
        Self {
            input,
            hidden,
            output,
            w1: vec![0.0; hidden * input],
            b1: vec![0.0; hidden],
            w2: vec![0.0; output * hidden],
            b2: vec![0.0; output],
        }
    }

    /// Xavier-uniform weights, zero biases.
    pub fn xavier(input: usize, hidden: usize, output: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut net = Self::zeros(input, hidden, output);
        let l1 = (6.0 / (input + hidden) as f64).sqrt();
        let l2 = (6.0 / (hidden + output) as f64).sqrt();
        net.w1.iter_mut().for_each(|w| *w = rng.gen_range(-l1..l1));
        net.w2.iter_mut().for_each(|w| *w = rng.gen_range(-l2..l2));
        net
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub(crate) fn param_mut(&mut self, mut i: usize) -> &mut f64 {
        for v in [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2] {
            if i < v.len() {
                return &mut v[i];
            }
            i -= v.len();
        }
        panic!("parameter index out of range");
    }

    fn hidden_activations(&self, x: &[f64]) -> Vec<f64> {
        (0..self.hidden)
            .map(|j| {
                let row = &self.w1[j * self.input..(j + 1) * self.input];
                let z: f64 = row.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.b1[j];
                z.tanh()
            })
            .collect()
    }

    fn logits(&self, h: &[f64]) -> Vec<f64> {
        (0..self.output)
            .map(|k| {
                let row = &self.w2[k * self.hidden..(k + 1) * self.hidden];
                row.iter().zip(h).map(|(w, v)| w * v).sum::<f64>() + self.b2[k]
            })
            .collect()
    }

    /// Class probabilities for an already normalized input.
    pub fn forward(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.logits(&self.hidden_activations(x)))
    }

    /// Cross-entropy of one sample.
    pub fn loss(&self, x: &[f64], target: usize) -> f64 {
        let z = self.logits(&self.hidden_activations(x));
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let log_sum = z.iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
        log_sum - z[target]
    }

    /// Adds the gradient of one sample's loss to `g`, returns the loss.
    pub fn accumulate_gradient(&self, x: &[f64], target: usize, g: &mut Grads) -> f64 {
        let h = self.hidden_activations(x);
        let z = self.logits(&h);
        let p = softmax(&z);
        let mut dz = p.clone();
        dz[target] -= 1.0;

        let mut dh = vec![0.0; self.hidden];
        for k in 0..self.output {
            g.b2[k] += dz[k];
            for j in 0..self.hidden {
                g.w2[k * self.hidden + j] += dz[k] * h[j];
                dh[j] += dz[k] * self.w2[k * self.hidden + j];
            }
        }
        for j in 0..self.hidden {
            let da = dh[j] * (1.0 - h[j] * h[j]);
            g.b1[j] += da;
            let row = &mut g.w1[j * self.input..(j + 1) * self.input];
            for (gw, v) in row.iter_mut().zip(x) {
                *gw += da * v;
            }
        }
        -p[target].max(f64::MIN_POSITIVE).ln()
    }

    pub fn gradient(&self, x: &[f64], target: usize) -> Grads {
        let mut g = Grads::zeros(self);
        self.accumulate_gradient(x, target, &mut g);
        g
    }
}

/// Mini-batch gradient descent with momentum and weight decay.
pub(crate) struct Sgd {
    velocity: Grads,
    grads: Grads,
    pub learning_rate: f64,
    pub momentum: f64,
    pub weight_decay: f64,
}

impl Sgd {
    pub fn new(net: &Network, learning_rate: f64, momentum: f64, weight_decay: f64) -> Self {
        Self {
            velocity: Grads::zeros(net),
            grads: Grads::zeros(net),
            learning_rate,
            momentum,
            weight_decay,
        }
    }

    /// One update from the samples at `batch`; returns their summed loss.
    pub fn step(&mut self, net: &mut Network, xs: &[Vec<f64>], ys: &[usize], batch: &[usize]) -> f64 {
        self.grads.clear();
        let mut loss = 0.0;
        for &i in batch {
            loss += net.accumulate_gradient(&xs[i], ys[i], &mut self.grads);
        }
        let scale = 1.0 / batch.len() as f64;
        let (lr, mu, wd) = (self.learning_rate, self.momentum, self.weight_decay);
        let update = |p: &mut [f64], g: &[f64], v: &mut [f64], decay: f64| {
            for ((p, g), v) in p.iter_mut().zip(g).zip(v.iter_mut()) {
                *v = mu * *v - lr * (g * scale + decay * *p);
                *p += *v;
            }
        };
        update(&mut net.w1, &self.grads.w1, &mut self.velocity.w1, wd);
        update(&mut net.b1, &self.grads.b1, &mut self.velocity.b1, 0.0);
        update(&mut net.w2, &self.grads.w2, &mut self.velocity.w2, wd);
        update(&mut net.b2, &self.grads.b2, &mut self.velocity.b2, 0.0);
        loss
    }
}
