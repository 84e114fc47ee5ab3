use std::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::mlp::Mlp;
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -5.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Diagonal Gaussian policy `π(a | s, z)` whose mean is an MLP over the
/// concatenated observation and context, with a state-independent log-std.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianPolicy {
    pub mean_net: Mlp,
    log_std: Vec<f64>,
}

/// Concatenates observation and context into the network input.
pub fn policy_input(observation: &[f64], context: &[f64]) -> Vec<f64> {
    let mut x = Vec::with_capacity(observation.len() + context.len());
    x.extend_from_slice(observation);
    x.extend_from_slice(context);
    x
}

impl GaussianPolicy {
    pub fn new(mean_net: Mlp, initial_log_std: f64) -> Self {
        let n = mean_net.output_dim();
        Self {
            mean_net,
            log_std: vec![initial_log_std.clamp(LOG_STD_MIN, LOG_STD_MAX); n],
        }
    }

    pub fn action_dim(&self) -> usize {
        self.log_std.len()
    }

    pub fn input_dim(&self) -> usize {
        self.mean_net.input_dim()
    }

    pub fn log_std(&self) -> &[f64] {
        &self.log_std
    }

    pub fn set_log_std(&mut self, values: &[f64]) {
        for (d, v) in self.log_std.iter_mut().zip(values) {
            *d = v.clamp(LOG_STD_MIN, LOG_STD_MAX);
        }
    }

    pub fn mean(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.mean_net.predict(input)
    }

    pub fn log_prob_given_mean(&self, mean: &[f64], action: &[f64]) -> f64 {
        mean.iter()
            .zip(action)
            .zip(&self.log_std)
            .map(|((m, a), ls)| {
                let z = (a - m) / ls.exp();
                -0.5 * z * z - ls - 0.5 * (2.0 * PI).ln()
            })
            .sum()
    }

    pub fn log_prob(&self, input: &[f64], action: &[f64]) -> Result<f64> {
        if action.len() != self.action_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        Ok(self.log_prob_given_mean(&self.mean(input)?, action))
    }

    /// Samples `mean + std ⊙ ε`; with `deterministic` returns the mean. The
    /// log-prob is always that of the returned action.
    pub fn act<R: Rng + ?Sized>(
        &self,
        input: &[f64],
        rng: &mut R,
        deterministic: bool,
    ) -> Result<(Vec<f64>, f64)> {
        let mean = self.mean(input)?;
        let action: Vec<f64> = if deterministic {
            mean.clone()
        } else {
            mean.iter()
                .zip(&self.log_std)
                .map(|(m, ls)| m + ls.exp() * rng.sample::<f64, _>(StandardNormal))
                .collect()
        };
        let lp = self.log_prob_given_mean(&mean, &action);
        Ok((action, lp))
    }

    /// Differential entropy of the action distribution.
    pub fn entropy(&self) -> f64 {
        self.log_std
            .iter()
            .map(|ls| ls + 0.5 * (2.0 * PI * std::f64::consts::E).ln())
            .sum()
    }

    /// Flat parameters: mean network weights then log-std.
    pub fn params(&self) -> Vec<f64> {
        let mut p = self.mean_net.params().to_vec();
        p.extend_from_slice(&self.log_std);
        p
    }

    pub fn param_count(&self) -> usize {
        self.mean_net.param_count() + self.log_std.len()
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::ShapeMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        let n = self.mean_net.param_count();
        self.mean_net.params_mut().copy_from_slice(&params[..n]);
        self.set_log_std(&params[n..]);
        Ok(())
    }

    /// Gradient of `log π(action | input)` w.r.t. the flat parameters,
    /// accumulated into `grad` with weight `scale`; returns the log-prob.
    pub fn accumulate_log_prob_grad(
        &self,
        input: &[f64],
        action: &[f64],
        scale: f64,
        grad: &mut [f64],
    ) -> Result<f64> {
        self.accumulate_log_prob_grad_with(input, action, grad, |_| scale)
    }

    /// Like [`accumulate_log_prob_grad`](Self::accumulate_log_prob_grad), but
    /// the weight is chosen from the log-prob after the forward pass. A zero
    /// weight skips the backward pass.
    pub fn accumulate_log_prob_grad_with(
        &self,
        input: &[f64],
        action: &[f64],
        grad: &mut [f64],
        scale_for: impl FnOnce(f64) -> f64,
    ) -> Result<f64> {
        if action.len() != self.action_dim() {
            return Err(Error::ShapeMismatch {
                expected: self.action_dim(),
                got: action.len(),
            });
        }
        if grad.len() != self.param_count() {
            return Err(Error::ShapeMismatch {
                expected: self.param_count(),
                got: grad.len(),
            });
        }
        let (mean, cache) = self.mean_net.forward(input)?;
        let lp = self.log_prob_given_mean(&mean, action);
        let scale = scale_for(lp);
        if scale == 0.0 {
            return Ok(lp);
        }
        let n = self.mean_net.param_count();
        let mut d_mean = Vec::with_capacity(mean.len());
        for (k, ((m, a), ls)) in mean.iter().zip(action).zip(&self.log_std).enumerate() {
            let var = (2.0 * ls).exp();
            let diff = a - m;
            d_mean.push(scale * diff / var);
            grad[n + k] += scale * (diff * diff / var - 1.0);
        }
        self.mean_net.backward(&cache, &d_mean, &mut grad[..n])?;
        Ok(lp)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn policy(log_std: f64) -> GaussianPolicy {
        let mut rng = stream(11, &[]);
        GaussianPolicy::new(Mlp::init(&[3, 8, 8, 2], 1.0, &mut rng).unwrap(), log_std)
    }

    #[test]
    fn tiny_std_keeps_actions_at_mean() {
        let p = policy(-5.0);
        let mut rng = stream(12, &[]);
        let x = [0.1, 0.2, 0.3];
        let mean = p.mean(&x).unwrap();
        for _ in 0..1000 {
            let (a, _) = p.act(&x, &mut rng, false).unwrap();
            for (ai, mi) in a.iter().zip(&mean) {
                assert!((ai - mi).abs() < 0.05);
            }
        }
    }

    #[test]
    fn returned_log_prob_matches_density() {
        let p = policy(-0.5);
        let mut rng = stream(13, &[]);
        let x = [0.4, -0.1, 1.2];
        for _ in 0..20 {
            let (a, lp) = p.act(&x, &mut rng, false).unwrap();
            assert!((lp - p.log_prob(&x, &a).unwrap()).abs() < 1e-10);
        }
        let (a, lp) = p.act(&x, &mut rng, true).unwrap();
        assert_eq!(a, p.mean(&x).unwrap());
        assert!((lp - p.log_prob(&x, &a).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn log_std_is_clamped() {
        let mut p = policy(10.0);
        assert_eq!(p.log_std(), &[LOG_STD_MAX; 2]);
        p.set_log_std(&[-9.0, 0.0]);
        assert_eq!(p.log_std(), &[LOG_STD_MIN, 0.0]);
    }
}
