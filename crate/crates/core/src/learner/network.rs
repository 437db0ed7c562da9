//! A small fully connected Q-network: ReLU hidden layers, linear output,
//! trained with Adam on the squared temporal-difference error.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};

/// One training sample: state, action index and regression target.
#[derive(Debug, Clone, Copy)]
pub struct Sample<'a> {
    /// Encoded state.
    pub state: &'a [f64],
    /// Output index whose value is regressed.
    pub action: usize,
    /// Target `y`.
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq)]
struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Multi-layer perceptron with all parameters in one flat vector.
///
/// Layer `k` stores its `out x in` weight matrix row-major followed by its
/// `out` biases.
#[derive(Debug, Clone, PartialEq)]
pub struct QNetwork {
    sizes: Vec<usize>,
    params: Vec<f64>,
    adam: Adam,
}

impl QNetwork {
    /// All-zero network with layer widths `sizes` (input first, output last).
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::InvalidParameter("network needs at least two non-empty layers".into()));
        }
        let count = sizes.windows(2).map(|w| w[1] * (w[0] + 1)).sum();
        Ok(QNetwork {
            sizes: sizes.to_vec(),
            params: vec![0.0; count],
            adam: Adam {
                m: vec![0.0; count],
                v: vec![0.0; count],
                t: 0,
            },
        })
    }

    /// He-uniform weights, zero biases.
    pub fn random<R: Rng + ?Sized>(sizes: &[usize], rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let mut offset = 0;
        for w in net.sizes.clone().windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = libm::sqrt(6.0 / fan_in as f64);
            for p in &mut net.params[offset..offset + fan_in * fan_out] {
                *p = rng.random_range(-limit..limit);
            }
            offset += fan_out * (fan_in + 1);
        }
        Ok(net)
    }

    /// Layer widths, input first.
    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// Input width.
    pub fn input_len(&self) -> usize {
        self.sizes[0]
    }

    /// Output width.
    pub fn output_len(&self) -> usize {
        *self.sizes.last().expect("at least two layers")
    }

    /// Flat parameter vector.
    pub fn params(&self) -> &[f64] {
        &self.params
    }

    /// Mutable flat parameter vector.
    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Output values, checking the input width.
    pub fn try_forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        if input.len() != self.input_len() {
            return Err(Error::PointDimension {
                expected: self.input_len(),
                found: input.len(),
            });
        }
        Ok(self.forward(input))
    }

    /// Output values. Panics on a width mismatch.
    pub fn forward(&self, input: &[f64]) -> Vec<f64> {
        self.activations(input).pop().expect("output layer")
    }

    /// Post-activation values of every layer, input included.
    fn activations(&self, input: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(input.len(), self.input_len(), "network input width");
        let mut acts = Vec::with_capacity(self.sizes.len());
        acts.push(input.to_vec());
        let mut offset = 0;
        let layers = self.sizes.len() - 1;
        for (k, w) in self.sizes.windows(2).enumerate() {
            let (fan_in, fan_out) = (w[0], w[1]);
            let weights = &self.params[offset..offset + fan_in * fan_out];
            let biases = &self.params[offset + fan_in * fan_out..offset + fan_out * (fan_in + 1)];
            let prev = &acts[k];
            let mut out = biases.to_vec();
            for (o, row) in out.iter_mut().zip(weights.chunks_exact(fan_in)) {
                for (x, wt) in prev.iter().zip(row) {
                    if *x != 0.0 {
                        *o += x * wt;
                    }
                }
            }
            if k + 1 < layers {
                for o in &mut out {
                    *o = o.max(0.0);
                }
            }
            acts.push(out);
            offset += fan_out * (fan_in + 1);
        }
        acts
    }

    /// Mean squared error `mean (y - Q(s, a))^2` over `samples`.
    pub fn loss(&self, samples: &[Sample<'_>]) -> f64 {
        if samples.is_empty() {
            return 0.0;
        }
        samples
            .iter()
            .map(|s| {
                let e = s.target - self.forward(s.state)[s.action];
                e * e
            })
            .sum::<f64>()
            / samples.len() as f64
    }

    /// Loss and its gradient with respect to every parameter.
    pub fn loss_and_gradient(&self, samples: &[Sample<'_>]) -> (f64, Vec<f64>) {
        let mut grad = vec![0.0; self.params.len()];
        if samples.is_empty() {
            return (0.0, grad);
        }
        let scale = 1.0 / samples.len() as f64;
        let mut loss = 0.0;
        let layers = self.sizes.len() - 1;
        let offsets: Vec<usize> = self
            .sizes
            .windows(2)
            .scan(0, |acc, w| {
                let start = *acc;
                *acc += w[1] * (w[0] + 1);
                Some(start)
            })
            .collect();
        for s in samples {
            let acts = self.activations(s.state);
            let q = acts[layers][s.action];
            let err = s.target - q;
            loss += err * err * scale;
            // dL/d(output) is non-zero only at the chosen action.
            let mut delta = vec![0.0; self.output_len()];
            delta[s.action] = -2.0 * err * scale;
            for k in (0..layers).rev() {
                let (fan_in, fan_out) = (self.sizes[k], self.sizes[k + 1]);
                let off = offsets[k];
                let prev = &acts[k];
                for (o, &dl) in delta.iter().enumerate() {
                    if dl == 0.0 {
                        continue;
                    }
                    let row = &mut grad[off + o * fan_in..off + (o + 1) * fan_in];
                    for (g, &x) in row.iter_mut().zip(prev) {
                        *g += dl * x;
                    }
                    grad[off + fan_in * fan_out + o] += dl;
                }
                if k == 0 {
                    break;
                }
                let weights = &self.params[off..off + fan_in * fan_out];
                let mut next = vec![0.0; fan_in];
                for (o, &dl) in delta.iter().enumerate() {
                    if dl == 0.0 {
                        continue;
                    }
                    for (n, &w) in next.iter_mut().zip(&weights[o * fan_in..(o + 1) * fan_in]) {
                        *n += dl * w;
                    }
                }
                // ReLU derivative of the hidden layer feeding this one.
                for (n, &a) in next.iter_mut().zip(prev) {
                    if a <= 0.0 {
                        *n = 0.0;
                    }
                }
                delta = next;
            }
        }
        (loss, grad)
    }

    /// One Adam step along `-grad`.
    pub fn apply_gradient(&mut self, grad: &[f64], learning_rate: f64) {
        let adam = &mut self.adam;
        adam.t += 1;
        let c1 = 1.0 - libm::pow(BETA1, adam.t as f64);
        let c2 = 1.0 - libm::pow(BETA2, adam.t as f64);
        for (((p, g), m), v) in self
            .params
            .iter_mut()
            .zip(grad)
            .zip(&mut adam.m)
            .zip(&mut adam.v)
        {
            *m = BETA1 * *m + (1.0 - BETA1) * g;
            *v = BETA2 * *v + (1.0 - BETA2) * g * g;
            *p -= learning_rate * (*m / c1) / (libm::sqrt(*v / c2) + ADAM_EPS);
        }
    }
}
