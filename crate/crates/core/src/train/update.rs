use serde::{Deserialize, Serialize};

use super::rollout::{episode_rng, evaluate_contexts};
use super::standardize::ReturnStandardizer;
use crate::distributions::{Context, DrDistribution, Family, UniformPrior};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policy::ActorCritic;

/// Where the `K` contexts of a distribution update come from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingSource {
    Prior,
    Learned,
}

impl SamplingSource {
    pub fn default_for(family: Family) -> Self {
        match family {
            Family::Discrete => Self::Prior,
            Family::Gaussian => Self::Learned,
        }
    }
}

/// Settings of one distribution update.
#[derive(Clone, Debug, PartialEq)]
pub struct DistributionUpdateConfig {
    pub samples: usize,
    pub steps: usize,
    pub step_size: f64,
    pub kl_weight: f64,
    pub sampling: SamplingSource,
    /// Evaluate each context with the policy mean instead of sampled actions.
    pub deterministic: bool,
    pub gamma: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct DistributionUpdateStats {
    pub contexts: Vec<Context>,
    pub returns: Vec<f64>,
    pub standardized: Vec<f64>,
    pub rejected: usize,
    pub env_steps: usize,
    /// All contexts were rejected, so `φ` was left as is.
    pub skipped: bool,
}

/// Gradient of the regularized objective
/// `(1/K) Σ Ĵ_i log pφ(z_i) − α·KL(p ‖ pφ)` at the current `φ`.
pub fn objective_gradient(
    dist: &DrDistribution,
    prior: &UniformPrior,
    contexts: &[Context],
    standardized: &[f64],
    kl_weight: f64,
) -> Result<Vec<f64>> {
    let mut grad = vec![0.0; dist.params().len()];
    let k = contexts.len() as f64;
    for (z, j) in contexts.iter().zip(standardized) {
        if *j == 0.0 {
            continue;
        }
        for (g, s) in grad.iter_mut().zip(dist.grad_log_prob(z)?) {
            *g += j * s / k;
        }
    }
    if kl_weight != 0.0 {
        let (_, kl_grad) = dist.kl_from_prior(prior)?;
        for (g, kg) in grad.iter_mut().zip(kl_grad) {
            *g -= kl_weight * kg;
        }
    }
    Ok(grad)
}

/// `M` plain gradient-ascent steps on the regularized objective, reusing the
/// same `(z_i, Ĵ_i)` for every step.
pub fn ascend(
    dist: &mut DrDistribution,
    prior: &UniformPrior,
    contexts: &[Context],
    standardized: &[f64],
    config: &DistributionUpdateConfig,
) -> Result<()> {
    let mask = dist.trainable_mask();
    for _ in 0..config.steps {
        let grad = objective_gradient(dist, prior, contexts, standardized, config.kl_weight)?;
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::NonFinite("distribution gradient".into()));
        }
        let mut params = dist.params();
        for ((p, g), m) in params.iter_mut().zip(&grad).zip(&mask) {
            if *m {
                *p += config.step_size * g;
            }
        }
        dist.set_params(&params)?;
    }
    Ok(())
}

/// One distribution update with the policy frozen: sample `K` contexts,
/// evaluate one episode each, standardize the returns, then ascend.
#[allow(clippy::too_many_arguments)]
pub fn update_distribution(
    dist: &mut DrDistribution,
    prior: &UniformPrior,
    agent: &ActorCritic,
    env: &dyn Environment,
    config: &DistributionUpdateConfig,
    standardizer: &mut ReturnStandardizer,
    seed: u64,
    path: &[u64],
    workers: usize,
) -> Result<DistributionUpdateStats> {
    let mut sampler = episode_rng(seed, path, usize::MAX);
    let contexts: Vec<Context> = (0..config.samples)
        .map(|_| match config.sampling {
            SamplingSource::Prior => prior.sample(&mut sampler),
            SamplingSource::Learned => dist.sample(&mut sampler),
        })
        .collect();
    let episodes = evaluate_contexts(agent, env, &contexts, config.deterministic, seed, path, workers)?;
    let rejected = episodes.iter().filter(|t| t.rejected).count();
    let mut stats = DistributionUpdateStats {
        returns: episodes.iter().map(|t| t.discounted_return(config.gamma)).collect(),
        env_steps: episodes.iter().filter(|t| !t.rejected).map(|t| t.len()).sum(),
        rejected,
        contexts,
        ..Default::default()
    };
    if rejected == episodes.len() {
        log::warn!("all {rejected} distribution-update contexts were rejected; skipping the update");
        stats.skipped = true;
        return Ok(stats);
    }
    stats.standardized = standardizer.standardize(&stats.returns)?;
    ascend(dist, prior, &stats.contexts, &stats.standardized, config)?;
    Ok(stats)
}
