use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully connected network with tanh hidden layers and a linear output.
///
/// All weights live in one flat vector; layer `l` occupies a row-major
/// `out×in` weight block followed by its `out` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    sizes: Vec<usize>,
    params: Vec<f64>,
}

/// Activations recorded by [`Mlp::forward`] for the backward pass.
#[derive(Clone, Debug)]
pub struct MlpCache {
    /// Input, then the post-tanh output of each hidden layer.
    layers: Vec<Vec<f64>>,
}

impl Mlp {
    /// `sizes = [input, hidden.., output]`, all zero.
    pub fn zeros(sizes: &[usize]) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::Config(format!("invalid layer sizes {sizes:?}")));
        }
        let n = sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum();
        Ok(Self {
            sizes: sizes.to_vec(),
            params: vec![0.0; n],
        })
    }

    /// Scaled-normal init (`std = gain/√fan_in`, `output_gain` for the last
    /// layer) with zero biases.
    pub fn init<R: Rng + ?Sized>(sizes: &[usize], output_gain: f64, rng: &mut R) -> Result<Self> {
        let mut net = Self::zeros(sizes)?;
        let layers = sizes.len() - 1;
        let mut offset = 0;
        for l in 0..layers {
            let (fan_in, fan_out) = (sizes[l], sizes[l + 1]);
            let gain = if l + 1 == layers { output_gain } else { 1.0 };
            let std = gain / (fan_in as f64).sqrt();
            for w in &mut net.params[offset..offset + fan_in * fan_out] {
                *w = std * rng.sample::<f64, _>(StandardNormal);
            }
            offset += fan_in * fan_out + fan_out;
        }
        Ok(net)
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    pub fn input_dim(&self) -> usize {
        self.sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    fn check_input(&self, input: &[f64]) -> Result<()> {
        if input.len() != self.input_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.input_dim(),
                got: input.len(),
            });
        }
        Ok(())
    }

    fn layer_forward(&self, offset: usize, l: usize, x: &[f64], out: &mut Vec<f64>) {
        let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
        let w = &self.params[offset..offset + fan_in * fan_out];
        let b = &self.params[offset + fan_in * fan_out..offset + fan_in * fan_out + fan_out];
        out.clear();
        out.extend(
            w.chunks_exact(fan_in)
                .zip(b)
                .map(|(row, bias)| bias + row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>()),
        );
    }

    /// Forward pass without recording activations.
    pub fn predict(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input)?;
        let layers = self.sizes.len() - 1;
        let mut x = input.to_vec();
        let mut y = Vec::new();
        let mut offset = 0;
        for l in 0..layers {
            self.layer_forward(offset, l, &x, &mut y);
            if l + 1 < layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
            std::mem::swap(&mut x, &mut y);
        }
        Ok(x)
    }

    pub fn forward(&self, input: &[f64]) -> Result<(Vec<f64>, MlpCache)> {
        self.check_input(input)?;
        let layers = self.sizes.len() - 1;
        let mut cache = MlpCache {
            layers: Vec::with_capacity(layers),
        };
        let mut x = input.to_vec();
        let mut offset = 0;
        for l in 0..layers {
            let mut y = Vec::new();
            self.layer_forward(offset, l, &x, &mut y);
            if l + 1 < layers {
                y.iter_mut().for_each(|v| *v = v.tanh());
            }
            offset += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
            cache.layers.push(std::mem::replace(&mut x, y));
        }
        Ok((x, cache))
    }

    /// Accumulates `∂loss/∂params` into `grad` given `∂loss/∂output`, and
    /// returns `∂loss/∂input`.
    pub fn backward(&self, cache: &MlpCache, grad_output: &[f64], grad: &mut [f64]) -> Result<Vec<f64>> {
        if grad_output.len() != self.output_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.output_dim(),
                got: grad_output.len(),
            });
        }
        if grad.len() != self.params.len() {
            return Err(Error::ShapeMismatch {
                expected: self.params.len(),
                got: grad.len(),
            });
        }
        let layers = self.sizes.len() - 1;
        let mut offsets = Vec::with_capacity(layers);
        let mut off = 0;
        for l in 0..layers {
            offsets.push(off);
            off += self.sizes[l] * self.sizes[l + 1] + self.sizes[l + 1];
        }

        let mut delta = grad_output.to_vec();
        for l in (0..layers).rev() {
            let (fan_in, fan_out) = (self.sizes[l], self.sizes[l + 1]);
            let x = &cache.layers[l];
            let offset = offsets[l];
            {
                let (gw, gb) =
                    grad[offset..offset + fan_in * fan_out + fan_out].split_at_mut(fan_in * fan_out);
                for (j, d) in delta.iter().enumerate() {
                    gb[j] += d;
                    for (g, xi) in gw[j * fan_in..(j + 1) * fan_in].iter_mut().zip(x) {
                        *g += d * xi;
                    }
                }
            }
            let w = &self.params[offset..offset + fan_in * fan_out];
            let mut prev = vec![0.0; fan_in];
            for (j, d) in delta.iter().enumerate() {
                for (p, wji) in prev.iter_mut().zip(&w[j * fan_in..(j + 1) * fan_in]) {
                    *p += d * wji;
                }
            }
            if l > 0 {
                // x is the tanh output of the previous layer
                for (p, h) in prev.iter_mut().zip(x) {
                    *p *= 1.0 - h * h;
                }
            }
            delta = prev;
        }
        Ok(delta)
    }
}
