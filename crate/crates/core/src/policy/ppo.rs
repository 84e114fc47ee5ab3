use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gaussian::{policy_input, GaussianPolicy};
use super::mlp::Mlp;
use super::optim::{clip_grad_norm, Optimizer, OptimizerKind};
use super::trajectory::Trajectory;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PpoConfig {
    pub clip: f64,
    pub gamma: f64,
    pub gae_lambda: f64,
    pub learning_rate: f64,
    pub value_learning_rate: f64,
    pub epochs: usize,
    pub minibatch_size: usize,
    pub entropy_coef: f64,
    /// Global L2 gradient-norm cap per minibatch step; 0 disables.
    pub max_grad_norm: f64,
    pub optimizer: OptimizerKind,
    pub normalize_advantages: bool,
}

impl Default for PpoConfig {
    fn default() -> Self {
        Self {
            clip: 0.2,
            gamma: 0.99,
            gae_lambda: 0.95,
            learning_rate: 3e-4,
            value_learning_rate: 1e-3,
            epochs: 10,
            minibatch_size: 64,
            entropy_coef: 0.0,
            max_grad_norm: 0.5,
            optimizer: OptimizerKind::Rms,
            normalize_advantages: true,
        }
    }
}

impl PpoConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, v: String| Err(Error::Config(format!("ppo.{key} = {v} is out of range")));
        if !(self.clip > 0.0 && self.clip < 1.0) {
            return bad("clip", self.clip.to_string());
        }
        if !(self.gamma > 0.0 && self.gamma <= 1.0) {
            return bad("gamma", self.gamma.to_string());
        }
        if !(0.0..=1.0).contains(&self.gae_lambda) {
            return bad("gae_lambda", self.gae_lambda.to_string());
        }
        if !(self.learning_rate > 0.0) {
            return bad("learning_rate", self.learning_rate.to_string());
        }
        if !(self.value_learning_rate > 0.0) {
            return bad("value_learning_rate", self.value_learning_rate.to_string());
        }
        if self.epochs == 0 {
            return bad("epochs", "0".into());
        }
        if self.minibatch_size == 0 {
            return bad("minibatch_size", "0".into());
        }
        if !(self.entropy_coef >= 0.0) {
            return bad("entropy_coef", self.entropy_coef.to_string());
        }
        if !(self.max_grad_norm >= 0.0) {
            return bad("max_grad_norm", self.max_grad_norm.to_string());
        }
        Ok(())
    }
}

/// Policy and value network shapes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NetworkConfig {
    pub hidden: Vec<usize>,
    pub initial_log_std: f64,
    /// Init scale of the policy's output layer.
    pub policy_output_gain: f64,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64, 64],
            initial_log_std: 0.0,
            policy_output_gain: 0.01,
        }
    }
}

/// Context-conditioned policy plus state-value function `V(s, z)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActorCritic {
    pub policy: GaussianPolicy,
    pub value: Mlp,
}

impl ActorCritic {
    pub fn new<R: Rng + ?Sized>(
        observation_dim: usize,
        context_dim: usize,
        action_dim: usize,
        net: &NetworkConfig,
        rng: &mut R,
    ) -> Result<Self> {
        let input = observation_dim + context_dim;
        let sizes = |out: usize| {
            let mut s = vec![input];
            s.extend(&net.hidden);
            s.push(out);
            s
        };
        let mean = Mlp::init(&sizes(action_dim), net.policy_output_gain, rng)?;
        let value = Mlp::init(&sizes(1), 1.0, rng)?;
        Ok(Self {
            policy: GaussianPolicy::new(mean, net.initial_log_std),
            value,
        })
    }

    pub fn value_of(&self, input: &[f64]) -> Result<f64> {
        Ok(self.value.predict(input)?[0])
    }

    pub fn hidden(&self) -> Vec<usize> {
        let s = self.value.sizes();
        s[1..s.len() - 1].to_vec()
    }

    pub fn is_finite(&self) -> bool {
        self.policy.params().iter().all(|p| p.is_finite())
            && self.value.params().iter().all(|p| p.is_finite())
    }
}

/// Flattened training data for one PPO update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PpoBatch {
    pub inputs: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub old_log_probs: Vec<f64>,
    pub advantages: Vec<f64>,
    pub returns: Vec<f64>,
}

impl PpoBatch {
    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }
}

/// Generalized advantage estimation for one trajectory segment.
///
/// `bootstrap` is `V(s_T)` for a cut segment and 0 after a terminal state.
/// Returns `(advantages, value targets)` with `target_t = A_t + V(s_t)`.
pub fn compute_gae(
    rewards: &[f64],
    values: &[f64],
    bootstrap: f64,
    gamma: f64,
    lambda: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert_eq!(rewards.len(), values.len());
    let n = rewards.len();
    let mut adv = vec![0.0; n];
    let mut running = 0.0;
    for t in (0..n).rev() {
        let next = if t + 1 < n { values[t + 1] } else { bootstrap };
        let delta = rewards[t] + gamma * next - values[t];
        running = delta + gamma * lambda * running;
        adv[t] = running;
    }
    let targets = adv.iter().zip(values).map(|(a, v)| a + v).collect();
    (adv, targets)
}

/// Builds the PPO batch: values under the current critic, GAE per
/// trajectory, bootstrapping every segment that did not end terminally.
pub fn build_batch(agent: &ActorCritic, trajectories: &[Trajectory], config: &PpoConfig) -> Result<PpoBatch> {
    let mut batch = PpoBatch::default();
    for traj in trajectories {
        if traj.is_empty() {
            continue;
        }
        let inputs: Vec<Vec<f64>> = traj
            .observations
            .iter()
            .map(|o| policy_input(o, &traj.context))
            .collect();
        let values = inputs.iter().map(|x| agent.value_of(x)).collect::<Result<Vec<_>>>()?;
        let bootstrap = if traj.terminal {
            0.0
        } else {
            agent.value_of(&policy_input(&traj.final_observation, &traj.context))?
        };
        let (adv, targets) = compute_gae(&traj.rewards, &values, bootstrap, config.gamma, config.gae_lambda);
        batch.inputs.extend(inputs);
        batch.actions.extend(traj.actions.iter().cloned());
        batch.old_log_probs.extend(&traj.log_probs);
        batch.advantages.extend(adv);
        batch.returns.extend(targets);
    }
    Ok(batch)
}

/// Shifts and scales to mean 0, std 1. Left untouched below two samples.
pub fn normalize_advantages(adv: &mut [f64]) {
    if adv.len() < 2 {
        return;
    }
    let n = adv.len() as f64;
    let mean = adv.iter().sum::<f64>() / n;
    let var = adv.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt() + 1e-8;
    adv.iter_mut().for_each(|a| *a = (*a - mean) / std);
}

/// Diagnostics of one minibatch surrogate evaluation.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SurrogateEval {
    pub loss: f64,
    pub clipped: usize,
}

/// Clipped-surrogate loss `−mean(min(r·A, clip(r)·A)) − c·H` over `indices`
/// and its gradient (added into `grad`). Samples on the clipped branch of
/// the min contribute exactly zero gradient.
pub fn surrogate_loss_and_grad(
    policy: &GaussianPolicy,
    batch: &PpoBatch,
    advantages: &[f64],
    indices: &[usize],
    clip: f64,
    entropy_coef: f64,
    grad: &mut [f64],
) -> Result<SurrogateEval> {
    let n = indices.len() as f64;
    let mut out = SurrogateEval::default();
    for &i in indices {
        let adv = advantages[i];
        let old = batch.old_log_probs[i];
        let mut ratio = 0.0;
        policy.accumulate_log_prob_grad_with(&batch.inputs[i], &batch.actions[i], grad, |lp| {
            ratio = (lp - old).exp();
            let clipped_active = (adv > 0.0 && ratio > 1.0 + clip) || (adv < 0.0 && ratio < 1.0 - clip);
            if clipped_active {
                0.0
            } else {
                -adv * ratio / n
            }
        })?;
        let unclipped = ratio * adv;
        let clipped = ratio.clamp(1.0 - clip, 1.0 + clip) * adv;
        if clipped < unclipped {
            out.clipped += 1;
        }
        out.loss -= unclipped.min(clipped) / n;
    }
    if entropy_coef != 0.0 {
        out.loss -= entropy_coef * policy.entropy();
        let k = policy.mean_net.param_count();
        grad[k..].iter_mut().for_each(|g| *g -= entropy_coef);
    }
    Ok(out)
}

/// Squared-error value loss `½·mean((V − target)²)` over `indices`, gradient
/// added into `grad`.
pub fn value_loss_and_grad(value: &Mlp, batch: &PpoBatch, indices: &[usize], grad: &mut [f64]) -> Result<f64> {
    let n = indices.len() as f64;
    let mut loss = 0.0;
    for &i in indices {
        let (out, cache) = value.forward(&batch.inputs[i])?;
        let err = out[0] - batch.returns[i];
        loss += 0.5 * err * err / n;
        value.backward(&cache, &[err / n], grad)?;
    }
    Ok(loss)
}

/// Mean `k3` estimate of KL(old ‖ new) over the batch.
pub fn approx_kl(policy: &GaussianPolicy, batch: &PpoBatch) -> Result<f64> {
    if batch.is_empty() {
        return Ok(0.0);
    }
    let mut kl = 0.0;
    for i in 0..batch.len() {
        let log_ratio = policy.log_prob(&batch.inputs[i], &batch.actions[i])? - batch.old_log_probs[i];
        kl += log_ratio.exp() - 1.0 - log_ratio;
    }
    Ok(kl / batch.len() as f64)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PpoStats {
    pub policy_loss: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub entropy: f64,
    /// Every sample was clipped during the update.
    pub flagged: bool,
}

/// Policy/value networks with their optimizer state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PpoLearner {
    pub agent: ActorCritic,
    pub policy_optimizer: Optimizer,
    pub value_optimizer: Optimizer,
}

impl PpoLearner {
    pub fn new(agent: ActorCritic, config: &PpoConfig) -> Self {
        let policy_optimizer = Optimizer::new(config.optimizer, config.learning_rate, agent.policy.param_count());
        let value_optimizer = Optimizer::new(config.optimizer, config.value_learning_rate, agent.value.param_count());
        Self {
            agent,
            policy_optimizer,
            value_optimizer,
        }
    }

    /// Runs `epochs` passes of shuffled minibatch updates. A non-finite loss
    /// or gradient restores the networks and optimizers to their state
    /// before the call and returns an error.
    pub fn update<R: Rng + ?Sized>(&mut self, batch: &PpoBatch, config: &PpoConfig, rng: &mut R) -> Result<PpoStats> {
        if batch.is_empty() {
            return Err(Error::Empty("ppo batch".into()));
        }
        let backup = self.clone();
        match self.update_inner(batch, config, rng) {
            Ok(stats) => Ok(stats),
            Err(e) => {
                *self = backup;
                Err(e)
            }
        }
    }

    fn update_inner<R: Rng + ?Sized>(&mut self, batch: &PpoBatch, config: &PpoConfig, rng: &mut R) -> Result<PpoStats> {
        let mut advantages = batch.advantages.clone();
        if config.normalize_advantages {
            normalize_advantages(&mut advantages);
        }
        let mut order: Vec<usize> = (0..batch.len()).collect();
        let mb = config.minibatch_size.min(batch.len());
        let (mut policy_loss, mut value_loss, mut clipped, mut evaluated, mut steps) = (0.0, 0.0, 0, 0, 0);
        let mut pgrad = vec![0.0; self.agent.policy.param_count()];
        let mut vgrad = vec![0.0; self.agent.value.param_count()];
        for _ in 0..config.epochs {
            order.shuffle(rng);
            for idx in order.chunks(mb) {
                pgrad.iter_mut().for_each(|g| *g = 0.0);
                vgrad.iter_mut().for_each(|g| *g = 0.0);
                let s = surrogate_loss_and_grad(
                    &self.agent.policy,
                    batch,
                    &advantages,
                    idx,
                    config.clip,
                    config.entropy_coef,
                    &mut pgrad,
                )?;
                let v = value_loss_and_grad(&self.agent.value, batch, idx, &mut vgrad)?;
                if !s.loss.is_finite() || !v.is_finite() {
                    return Err(Error::NonFinite(format!(
                        "ppo loss (policy {}, value {})",
                        s.loss, v
                    )));
                }
                let pn = clip_grad_norm(&mut pgrad, config.max_grad_norm);
                let vn = clip_grad_norm(&mut vgrad, config.max_grad_norm);
                if !pn.is_finite() || !vn.is_finite() {
                    return Err(Error::NonFinite("ppo gradient".into()));
                }
                let mut params = self.agent.policy.params();
                self.policy_optimizer.step(&mut params, &pgrad);
                self.agent.policy.set_params(&params)?;
                self.value_optimizer.step(self.agent.value.params_mut(), &vgrad);

                policy_loss += s.loss;
                value_loss += v;
                clipped += s.clipped;
                evaluated += idx.len();
                steps += 1;
            }
        }
        if !self.agent.is_finite() {
            return Err(Error::NonFinite("parameters after ppo update".into()));
        }
        let clip_fraction = clipped as f64 / evaluated as f64;
        let kl = approx_kl(&self.agent.policy, batch)?;
        if !kl.is_finite() {
            return Err(Error::NonFinite("approximate kl".into()));
        }
        Ok(PpoStats {
            policy_loss: policy_loss / steps as f64,
            value_loss: value_loss / steps as f64,
            approx_kl: kl,
            clip_fraction,
            entropy: self.agent.policy.entropy(),
            flagged: clip_fraction >= 1.0,
        })
    }
}

/// Builds a batch from `trajectories` and runs one PPO update.
pub fn ppo_update<R: Rng + ?Sized>(
    learner: &mut PpoLearner,
    trajectories: &[Trajectory],
    config: &PpoConfig,
    rng: &mut R,
) -> Result<PpoStats> {
    let batch = build_batch(&learner.agent, trajectories, config)?;
    learner.update(&batch, config, rng)
}
