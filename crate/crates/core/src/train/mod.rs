//! The outer training loop: collect experience under `pφ`, update `φ` with
//! the policy frozen, then update the policy with `φ` fixed.

mod rollout;
mod standardize;
mod update;

use std::time::Instant;

use serde::{Deserialize, Serialize};

pub use rollout::{collect_rollouts, evaluate_contexts, run_episode, RolloutBuffer};
pub use standardize::{ReturnStandardizer, VARIANCE_FLOOR};
pub use update::{
    ascend, objective_gradient, update_distribution, DistributionUpdateConfig,
    DistributionUpdateStats, SamplingSource,
};

pub(crate) use rollout::{episode_rng, map_indexed};

use crate::distributions::{Context, DistributionSnapshot, DrDistribution, Family, UniformPrior};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policy::{
    epopt_filter, ppo_update, ActorCritic, EpoptConfig, NetworkConfig, OptimizerKind, PolicySnapshot, PpoConfig,
    PpoLearner, PpoStats, Trajectory,
};
use crate::rng::{label, stream, SeedLineage};

/// Which procedure updates the policy each epoch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyOptimizer {
    /// PPO on a buffer of `B` transitions.
    Ppo,
    /// PPO on the worst-percentile trajectories of a sampled population.
    EpoptPpo,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LsdrConfig {
    pub epochs: usize,
    pub buffer_size: usize,
    /// `K`: contexts evaluated per distribution update.
    pub dist_samples: usize,
    /// `M`: ascent steps per distribution update.
    pub dist_steps: usize,
    /// `λ`: distribution step size.
    pub dist_step_size: f64,
    /// `α`; unset means the family default.
    pub kl_weight: Option<f64>,
    /// Unset means the family default.
    pub sampling: Option<SamplingSource>,
    pub policy_optimizer: PolicyOptimizer,
    /// Skip the distribution update and sample contexts from the prior.
    pub fixed_dr: bool,
    /// Evaluate distribution-update episodes with sampled actions.
    pub stochastic_eval: bool,
    pub standardizer_decay: f64,
    /// Discount of the per-context return `J_i`; unset means `ppo.gamma`.
    pub context_return_gamma: Option<f64>,
    pub seed: u64,
    pub distribution_snapshot_every: usize,
    pub policy_snapshot_every: usize,
}

impl Default for LsdrConfig {
    fn default() -> Self {
        Self {
            epochs: 3000,
            buffer_size: 4000,
            dist_samples: 10,
            dist_steps: 10,
            dist_step_size: 1e-2,
            kl_weight: None,
            sampling: None,
            policy_optimizer: PolicyOptimizer::Ppo,
            fixed_dr: false,
            stochastic_eval: false,
            standardizer_decay: 0.99,
            context_return_gamma: None,
            seed: 0,
            distribution_snapshot_every: 10,
            policy_snapshot_every: 100,
        }
    }
}

impl LsdrConfig {
    pub fn kl_weight_for(&self, family: Family) -> f64 {
        self.kl_weight.unwrap_or(match family {
            Family::Discrete => 0.05,
            Family::Gaussian => 0.1,
        })
    }

    pub fn sampling_for(&self, family: Family) -> SamplingSource {
        self.sampling.unwrap_or(SamplingSource::default_for(family))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("epochs", self.epochs),
            ("buffer_size", self.buffer_size),
            ("dist_samples", self.dist_samples),
            ("dist_steps", self.dist_steps),
            ("distribution_snapshot_every", self.distribution_snapshot_every),
            ("policy_snapshot_every", self.policy_snapshot_every),
        ];
        if let Some((key, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("lsdr.{key} must be positive")));
        }
        if !(self.dist_step_size > 0.0 && self.dist_step_size.is_finite()) {
            return Err(Error::Config(format!(
                "lsdr.dist_step_size must be positive, got {}",
                self.dist_step_size
            )));
        }
        if let Some(a) = self.kl_weight {
            if !(a >= 0.0 && a.is_finite()) {
                return Err(Error::Config(format!("lsdr.kl_weight must be >= 0, got {a}")));
            }
        }
        if !(0.0..1.0).contains(&self.standardizer_decay) {
            return Err(Error::Config(format!(
                "lsdr.standardizer_decay must be in [0, 1), got {}",
                self.standardizer_decay
            )));
        }
        if let Some(g) = self.context_return_gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::Config(format!("lsdr.context_return_gamma must be in (0, 1], got {g}")));
            }
        }
        Ok(())
    }
}

/// Everything the training loop needs besides the environment.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrainConfig {
    pub lsdr: LsdrConfig,
    pub ppo: PpoConfig,
    pub epopt: EpoptConfig,
    pub network: NetworkConfig,
}

impl TrainConfig {
    /// Settings tuned for the 1-D linear reacher: 300 epochs of 2000
    /// transitions, Adam, and a larger step and KL weight for the
    /// distribution than the generic defaults. With the generic ones the
    /// discrete distribution drifts too slowly, or over-concentrates on the
    /// lightest masses, within that budget. Context returns are undiscounted
    /// since discounting favors masses that reach the goal early.
    pub fn linear_reacher() -> Self {
        let mut config = Self::default();
        config.lsdr.epochs = 300;
        config.lsdr.buffer_size = 2000;
        config.lsdr.dist_step_size = 0.1;
        config.lsdr.kl_weight = Some(0.5);
        config.lsdr.context_return_gamma = Some(1.0);
        config.lsdr.policy_snapshot_every = 50;
        config.ppo.optimizer = OptimizerKind::Adam;
        config
    }

    pub fn validate(&self) -> Result<()> {
        self.lsdr.validate()?;
        self.ppo.validate()?;
        self.epopt.validate()
    }

    pub fn distribution_update(&self, family: Family) -> DistributionUpdateConfig {
        DistributionUpdateConfig {
            samples: self.lsdr.dist_samples,
            steps: self.lsdr.dist_steps,
            step_size: self.lsdr.dist_step_size,
            kl_weight: self.lsdr.kl_weight_for(family),
            sampling: self.lsdr.sampling_for(family),
            deterministic: !self.lsdr.stochastic_eval,
            gamma: self.lsdr.context_return_gamma.unwrap_or(self.ppo.gamma),
        }
    }
}

/// Mutable training state; everything needed to resume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainState {
    /// Completed epochs.
    pub epoch: usize,
    pub distribution: DrDistribution,
    pub learner: PpoLearner,
    pub standardizer: ReturnStandardizer,
    pub total_env_steps: u64,
}

impl TrainState {
    /// Fresh networks (from the seed's init stream) and the family's
    /// initial distribution over the environment's prior.
    pub fn initial(
        config: &TrainConfig,
        env: &dyn Environment,
        family: Family,
        bins: usize,
        diagonal_only: bool,
    ) -> Result<Self> {
        let prior = env.context_spec().uniform_prior();
        let distribution = DrDistribution::initial(family, &prior, bins, diagonal_only)?;
        let mut rng = stream(config.lsdr.seed, &[label::INIT]);
        let agent = ActorCritic::new(
            env.observation_dim(),
            prior.dim(),
            env.action_dim(),
            &config.network,
            &mut rng,
        )?;
        Ok(Self {
            epoch: 0,
            distribution,
            learner: PpoLearner::new(agent, &config.ppo),
            standardizer: ReturnStandardizer::new(config.lsdr.standardizer_decay),
            total_env_steps: 0,
        })
    }
}

pub const METRICS_SCHEMA: &str = "lsdr.metrics/v1";

/// One row of the per-epoch metrics stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochMetrics {
    pub epoch: usize,
    /// Mean undiscounted return of the collected episodes.
    pub mean_return: f64,
    /// Fraction of collected complete episodes at or above the environment's
    /// success threshold.
    pub success_rate: f64,
    pub episodes: usize,
    pub entropy: f64,
    pub kl: f64,
    pub collect_steps: u64,
    pub dist_eval_steps: u64,
    pub env_steps: u64,
    pub total_env_steps: u64,
    pub dist_mean_return: Option<f64>,
    pub dist_skipped: bool,
    pub policy_loss: f64,
    pub value_loss: f64,
    pub approx_kl: f64,
    pub clip_fraction: f64,
    pub ppo_flagged: bool,
    pub policy_entropy: f64,
}

/// What a run produced. Snapshots are kept in memory as well as handed to
/// the observer.
#[derive(Clone, Debug, Default)]
pub struct TrainRunRecord {
    pub metrics: Vec<EpochMetrics>,
    pub distributions: Vec<DistributionSnapshot>,
    pub policies: Vec<PolicySnapshot>,
    pub final_state: Option<TrainState>,
}

impl TrainRunRecord {
    pub fn final_distribution(&self) -> Option<&DrDistribution> {
        self.final_state.as_ref().map(|s| &s.distribution)
    }

    pub fn final_agent(&self) -> Option<&ActorCritic> {
        self.final_state.as_ref().map(|s| &s.learner.agent)
    }

    pub fn total_env_steps(&self) -> u64 {
        self.final_state.as_ref().map_or(0, |s| s.total_env_steps)
    }
}

/// Hooks for persisting a run while it trains. All methods default to
/// no-ops.
pub trait TrainObserver {
    fn on_epoch(&mut self, _state: &TrainState, _metrics: &EpochMetrics, _wall_seconds: f64) -> Result<()> {
        Ok(())
    }

    fn on_distribution(&mut self, _snapshot: &DistributionSnapshot) -> Result<()> {
        Ok(())
    }

    fn on_policy(&mut self, _snapshot: &PolicySnapshot) -> Result<()> {
        Ok(())
    }

    fn on_error(&mut self, _state: &TrainState, _error: &Error) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl TrainObserver for NoObserver {}

/// Runs the remaining epochs of `state` and returns the record of this call.
///
/// Each epoch collects experience with the previous epoch's policy, then
/// updates `φ` (skipped in fixed-DR mode), then updates the policy. Random
/// streams derive from `(seed, epoch)`, so a resumed run continues exactly
/// as an uninterrupted one and the result does not depend on `workers`.
pub fn train(
    config: &TrainConfig,
    env: &dyn Environment,
    mut state: TrainState,
    workers: usize,
    observer: &mut dyn TrainObserver,
) -> Result<TrainRunRecord> {
    config.validate()?;
    let prior = env.context_spec().uniform_prior();
    if state.distribution.dim() != prior.dim() {
        return Err(Error::ShapeMismatch {
            expected: prior.dim(),
            got: state.distribution.dim(),
        });
    }
    let mut record = TrainRunRecord::default();
    if state.epoch == 0 {
        snapshot(config, env, &state, &mut record, observer, true, true)?;
    }
    while state.epoch < config.lsdr.epochs {
        let started = Instant::now();
        match run_epoch(config, env, &prior, &mut state, workers) {
            Ok(metrics) => {
                observer.on_epoch(&state, &metrics, started.elapsed().as_secs_f64())?;
                record.metrics.push(metrics);
            }
            Err(e) => {
                observer.on_error(&state, &e);
                return Err(e);
            }
        }
        let last = state.epoch == config.lsdr.epochs;
        let dist_due = state.epoch % config.lsdr.distribution_snapshot_every == 0 || last;
        let policy_due = state.epoch % config.lsdr.policy_snapshot_every == 0 || last;
        snapshot(config, env, &state, &mut record, observer, dist_due, policy_due)?;
    }
    record.final_state = Some(state);
    Ok(record)
}

fn snapshot(
    config: &TrainConfig,
    env: &dyn Environment,
    state: &TrainState,
    record: &mut TrainRunRecord,
    observer: &mut dyn TrainObserver,
    distribution: bool,
    policy: bool,
) -> Result<()> {
    let lineage = SeedLineage::new(config.lsdr.seed, &[label::EPOCH, state.epoch as u64]);
    if distribution {
        let snap = DistributionSnapshot::new(state.distribution.clone(), state.epoch, lineage.clone());
        observer.on_distribution(&snap)?;
        record.distributions.push(snap);
    }
    if policy {
        let snap = PolicySnapshot::new(
            state.learner.agent.clone(),
            env.id(),
            env.observation_dim(),
            state.distribution.dim(),
            state.epoch,
            lineage,
        );
        observer.on_policy(&snap)?;
        record.policies.push(snap);
    }
    Ok(())
}

fn run_epoch(
    config: &TrainConfig,
    env: &dyn Environment,
    prior: &UniformPrior,
    state: &mut TrainState,
    workers: usize,
) -> Result<EpochMetrics> {
    let seed = config.lsdr.seed;
    let epoch = state.epoch as u64;
    let path = |l: u64| [label::EPOCH, epoch, l];
    let fixed = config.lsdr.fixed_dr;

    // Collect with the current distribution snapshot.
    let dist_snapshot = state.distribution.clone();
    let sample = |rng: &mut crate::rng::StreamRng| -> Context {
        if fixed {
            prior.sample(rng)
        } else {
            dist_snapshot.sample(rng)
        }
    };
    let agent = &state.learner.agent;
    let (trajectories, collect_steps, all_episodes) = match config.lsdr.policy_optimizer {
        PolicyOptimizer::Ppo => {
            let buffer = collect_rollouts(
                agent,
                env,
                sample,
                config.lsdr.buffer_size,
                seed,
                &path(label::COLLECT),
                workers,
            )?;
            let steps = buffer.len() as u64;
            (buffer.trajectories.clone(), steps, buffer.trajectories)
        }
        PolicyOptimizer::EpoptPpo => {
            let p = path(label::EPOPT);
            let population = map_indexed(0..config.epopt.population, workers, |i| {
                let mut rng = episode_rng(seed, &p, i);
                let z = sample(&mut rng);
                run_episode(env, agent, z, &mut rng, false, env.horizon())
            })?;
            let steps = population.iter().map(|t| t.len() as u64).sum();
            (epopt_filter(population.clone(), &config.epopt)?, steps, population)
        }
    };
    let (mean_return, success_rate) = episode_summary(&all_episodes, env.success_threshold());

    // Distribution update with the policy frozen.
    let mut dist_stats = None;
    if !fixed {
        let update_config = config.distribution_update(state.distribution.family());
        let stats = update_distribution(
            &mut state.distribution,
            prior,
            &state.learner.agent,
            env,
            &update_config,
            &mut state.standardizer,
            seed,
            &path(label::DIST_UPDATE),
            workers,
        )?;
        dist_stats = Some(stats);
    }

    // Policy update with φ fixed.
    let mut rng = stream(seed, &path(label::PPO));
    let ppo: PpoStats = ppo_update(&mut state.learner, &trajectories, &config.ppo, &mut rng)?;

    let (kl, _) = state.distribution.kl_from_prior(prior)?;
    let dist_eval_steps = dist_stats.as_ref().map_or(0, |s| s.env_steps as u64);
    let env_steps = collect_steps + dist_eval_steps;
    state.total_env_steps += env_steps;
    let metrics = EpochMetrics {
        epoch: state.epoch,
        mean_return,
        success_rate,
        episodes: all_episodes.len(),
        entropy: state.distribution.entropy(),
        kl,
        collect_steps,
        dist_eval_steps,
        env_steps,
        total_env_steps: state.total_env_steps,
        dist_mean_return: dist_stats
            .as_ref()
            .map(|s| s.returns.iter().sum::<f64>() / s.returns.len() as f64),
        dist_skipped: dist_stats.as_ref().is_some_and(|s| s.skipped),
        policy_loss: ppo.policy_loss,
        value_loss: ppo.value_loss,
        approx_kl: ppo.approx_kl,
        clip_fraction: ppo.clip_fraction,
        ppo_flagged: ppo.flagged,
        policy_entropy: ppo.entropy,
    };
    if ppo.flagged {
        log::warn!("epoch {}: every PPO sample was clipped", state.epoch);
    }
    state.epoch += 1;
    Ok(metrics)
}

/// Mean undiscounted return and success rate over the episodes that ran to
/// an end (all segments if none did).
fn episode_summary(episodes: &[Trajectory], threshold: f64) -> (f64, f64) {
    let complete: Vec<&Trajectory> = episodes.iter().filter(|t| t.is_complete()).collect();
    let pool: Vec<&Trajectory> = if complete.is_empty() {
        episodes.iter().collect()
    } else {
        complete
    };
    if pool.is_empty() {
        return (0.0, 0.0);
    }
    let n = pool.len() as f64;
    let returns: Vec<f64> = pool.iter().map(|t| t.undiscounted_return()).collect();
    let mean = returns.iter().sum::<f64>() / n;
    let success = returns.iter().filter(|r| **r >= threshold).count() as f64 / n;
    (mean, success)
}

/// One collect-then-update PPO epoch on contexts from `sample_context`,
/// without touching any distribution. Returns the update statistics and the
/// mean undiscounted return of the collected episodes.
#[allow(clippy::too_many_arguments)]
pub fn ppo_epoch<S>(
    learner: &mut PpoLearner,
    env: &dyn Environment,
    sample_context: S,
    buffer_size: usize,
    ppo: &PpoConfig,
    seed: u64,
    path: &[u64],
    workers: usize,
) -> Result<(PpoStats, RolloutBuffer)>
where
    S: Fn(&mut crate::rng::StreamRng) -> Context + Sync + Send,
{
    let mut collect_path = path.to_vec();
    collect_path.push(label::COLLECT);
    let buffer = collect_rollouts(
        &learner.agent,
        env,
        sample_context,
        buffer_size,
        seed,
        &collect_path,
        workers,
    )?;
    let mut ppo_path = path.to_vec();
    ppo_path.push(label::PPO);
    let stats = ppo_update(learner, &buffer.trajectories, ppo, &mut stream(seed, &ppo_path))?;
    Ok((stats, buffer))
}
