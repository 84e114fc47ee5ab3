use serde::{Deserialize, Serialize};

use super::finetune::evaluate_policy;
use crate::distributions::{Context, SupportBox};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policy::{ActorCritic, NetworkConfig, PpoConfig, PpoLearner};
use crate::rng::{label, stream};
use crate::train::{map_indexed, ppo_epoch};

/// Per-cell training settings for a grid sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Cells per context dimension.
    pub cells: usize,
    /// PPO updates per cell.
    pub epochs: usize,
    pub buffer_size: usize,
    /// Evaluate every this many updates (and after the last one).
    pub eval_every: usize,
    pub eval_rollouts: usize,
    pub ppo: PpoConfig,
    pub network: NetworkConfig,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            cells: 20,
            epochs: 50,
            buffer_size: 2000,
            eval_every: 5,
            eval_rollouts: 10,
            ppo: PpoConfig::default(),
            network: NetworkConfig::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub index: Vec<usize>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Cell center, the context trained on.
    pub context: Context,
    pub best_return: f64,
    pub env_steps: u64,
    /// Analytic verdict, when the environment has one.
    pub solvable: Option<bool>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSweepResult {
    pub support: SupportBox,
    pub cells_per_dim: usize,
    pub success_threshold: f64,
    pub cells: Vec<GridCell>,
    pub total_env_steps: u64,
}

impl GridSweepResult {
    /// Whether the cell's best return reached the success threshold.
    pub fn solved(&self, cell: &GridCell) -> bool {
        cell.best_return >= self.success_threshold
    }

    /// Cells where the empirical verdict matches the analytic one, out of
    /// the cells that have an analytic verdict.
    pub fn oracle_agreement(&self) -> (usize, usize) {
        let judged: Vec<_> = self.cells.iter().filter_map(|c| c.solvable.map(|s| (c, s))).collect();
        let agree = judged.iter().filter(|(c, s)| self.solved(c) == *s).count();
        (agree, judged.len())
    }

    /// Per-dimension hull of the solved cells, or `None` if none was solved.
    pub fn empirical_range(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        let solved: Vec<&GridCell> = self.cells.iter().filter(|c| self.solved(c)).collect();
        if solved.is_empty() {
            return None;
        }
        let d = self.support.dim();
        let lower = (0..d)
            .map(|k| solved.iter().map(|c| c.lower[k]).fold(f64::INFINITY, f64::min))
            .collect();
        let upper = (0..d)
            .map(|k| solved.iter().map(|c| c.upper[k]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        Some((lower, upper))
    }
}

/// Non-overlapping cells tiling `support`, `cells` per dimension, in
/// row-major order of their multi-index.
pub fn grid_cells(support: &SupportBox, cells: usize) -> Result<Vec<(Vec<usize>, Vec<f64>, Vec<f64>)>> {
    if cells == 0 {
        return Err(Error::Config("grid needs at least one cell per dimension".into()));
    }
    let d = support.dim();
    let total = cells
        .checked_pow(d as u32)
        .ok_or_else(|| Error::Config("grid is too large".into()))?;
    Ok((0..total)
        .map(|flat| {
            let mut rem = flat;
            let mut index = vec![0; d];
            for k in (0..d).rev() {
                index[k] = rem % cells;
                rem /= cells;
            }
            let (lower, upper) = (0..d)
                .map(|k| {
                    let w = support.width(k) / cells as f64;
                    let lo = support.lower()[k] + w * index[k] as f64;
                    let hi = if index[k] + 1 == cells {
                        support.upper()[k]
                    } else {
                        lo + w
                    };
                    (lo, hi)
                })
                .unzip();
            (index, lower, upper)
        })
        .collect())
}

/// Trains an independent policy from scratch at the center of every grid
/// cell and records its best evaluation return.
pub fn grid_sweep(env: &dyn Environment, config: &SweepConfig, seed: u64, workers: usize) -> Result<GridSweepResult> {
    config.ppo.validate()?;
    if config.epochs == 0 || config.buffer_size == 0 || config.eval_every == 0 {
        return Err(Error::Config("sweep epochs, buffer_size and eval_every must be positive".into()));
    }
    let support = env.context_spec().prior.clone();
    let layout = grid_cells(&support, config.cells)?;
    let cells = map_indexed(0..layout.len(), workers, |i| {
        let (index, lower, upper) = layout[i].clone();
        let context = Context::new(lower.iter().zip(&upper).map(|(a, b)| 0.5 * (a + b)).collect());
        train_cell(env, config, seed, i, index, lower, upper, context)
    })?;
    let total_env_steps = cells.iter().map(|c| c.env_steps).sum();
    Ok(GridSweepResult {
        support,
        cells_per_dim: config.cells,
        success_threshold: env.success_threshold(),
        cells,
        total_env_steps,
    })
}

#[allow(clippy::too_many_arguments)]
fn train_cell(
    env: &dyn Environment,
    config: &SweepConfig,
    seed: u64,
    cell: usize,
    index: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    context: Context,
) -> Result<GridCell> {
    let base = [label::SWEEP, cell as u64];
    let mut init_path = base.to_vec();
    init_path.push(label::INIT);
    let agent = ActorCritic::new(
        env.observation_dim(),
        context.dim(),
        env.action_dim(),
        &config.network,
        &mut stream(seed, &init_path),
    )?;
    let mut learner = PpoLearner::new(agent, &config.ppo);
    let mut best = f64::NEG_INFINITY;
    let mut env_steps = 0;
    for epoch in 0..config.epochs {
        let mut path = base.to_vec();
        path.extend([label::EPOCH, epoch as u64]);
        ppo_epoch(&mut learner, env, |_| context.clone(), config.buffer_size, &config.ppo, seed, &path, 1)?;
        env_steps += config.buffer_size as u64;
        if (epoch + 1) % config.eval_every == 0 || epoch + 1 == config.epochs {
            let mut eval_path = base.to_vec();
            eval_path.extend([label::EVAL, epoch as u64]);
            let r = evaluate_policy(&learner.agent, env, &context, config.eval_rollouts, seed, &eval_path)?;
            best = best.max(r);
        }
    }
    Ok(GridCell {
        index,
        lower,
        upper,
        solvable: env.solvable(&context),
        context,
        best_return: best,
        env_steps,
    })
}
