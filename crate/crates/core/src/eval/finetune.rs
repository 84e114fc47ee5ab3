use serde::{Deserialize, Serialize};

use super::TestSet;
use crate::distributions::Context;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policy::{ActorCritic, PpoConfig, PpoLearner};
use crate::rng::label;
use crate::train::{evaluate_contexts, map_indexed, ppo_epoch};

/// Test-time fine-tuning settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FinetuneConfig {
    /// Environment steps of PPO training per test context; 0 evaluates the
    /// snapshot as is.
    pub budget: u64,
    /// Transitions per fine-tuning PPO update; one curve point follows each.
    pub buffer_size: usize,
    /// Deterministic rollouts averaged per curve point.
    pub eval_rollouts: usize,
    pub ppo: PpoConfig,
}

impl Default for FinetuneConfig {
    fn default() -> Self {
        Self {
            budget: 20_000,
            buffer_size: 2000,
            eval_rollouts: 10,
            ppo: PpoConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    /// Fine-tuning environment steps consumed before this evaluation.
    pub env_steps: u64,
    pub mean_return: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearningCurve {
    pub context_id: usize,
    pub context: Context,
    pub solvable: Option<bool>,
    pub points: Vec<CurvePoint>,
}

impl LearningCurve {
    /// Return before any fine-tuning.
    pub fn jumpstart(&self) -> f64 {
        self.points[0].mean_return
    }

    /// Return at the end of the fine-tuning budget.
    pub fn asymptotic(&self) -> f64 {
        self.points[self.points.len() - 1].mean_return
    }

    pub fn returns(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.mean_return).collect()
    }
}

/// Mean undiscounted return of `rollouts` deterministic-policy episodes.
pub fn evaluate_policy(
    agent: &ActorCritic,
    env: &dyn Environment,
    context: &Context,
    rollouts: usize,
    seed: u64,
    path: &[u64],
) -> Result<f64> {
    if rollouts == 0 {
        return Err(Error::Config("evaluation needs at least one rollout".into()));
    }
    let contexts = vec![context.clone(); rollouts];
    let episodes = evaluate_contexts(agent, env, &contexts, true, seed, path, 1)?;
    Ok(episodes.iter().map(|t| t.undiscounted_return()).sum::<f64>() / rollouts as f64)
}

/// Continues PPO from `agent` on each test context separately and records
/// the evaluation return after every update. Contexts run in parallel when
/// `workers > 1`; results are merged by context index.
pub fn finetune_eval(
    agent: &ActorCritic,
    test_set: &TestSet,
    env: &dyn Environment,
    config: &FinetuneConfig,
    seed: u64,
    workers: usize,
) -> Result<Vec<LearningCurve>> {
    config.ppo.validate()?;
    if config.buffer_size == 0 {
        return Err(Error::Config("finetune buffer_size must be positive".into()));
    }
    map_indexed(0..test_set.contexts.len(), workers, |i| {
        finetune_one(agent, &test_set.contexts[i], i, env, config, seed)
    })
}

fn finetune_one(
    agent: &ActorCritic,
    context: &Context,
    id: usize,
    env: &dyn Environment,
    config: &FinetuneConfig,
    seed: u64,
) -> Result<LearningCurve> {
    let base = [label::FINETUNE, id as u64];
    let eval_path = |point: usize| [label::FINETUNE, id as u64, label::EVAL, point as u64];
    let mut learner = PpoLearner::new(agent.clone(), &config.ppo);
    let mut points = vec![CurvePoint {
        env_steps: 0,
        mean_return: evaluate_policy(agent, env, context, config.eval_rollouts, seed, &eval_path(0))?,
    }];
    let mut used = 0u64;
    let mut update = 0u64;
    while used < config.budget {
        let steps = (config.budget - used).min(config.buffer_size as u64) as usize;
        let mut path = base.to_vec();
        path.push(update);
        ppo_epoch(&mut learner, env, |_| context.clone(), steps, &config.ppo, seed, &path, 1)?;
        used += steps as u64;
        update += 1;
        points.push(CurvePoint {
            env_steps: used,
            mean_return: evaluate_policy(
                &learner.agent,
                env,
                context,
                config.eval_rollouts,
                seed,
                &eval_path(points.len()),
            )?,
        });
    }
    Ok(LearningCurve {
        context_id: id,
        context: context.clone(),
        solvable: env.solvable(context),
        points,
    })
}
