use rayon::prelude::*;

use crate::distributions::Context;
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::policy::{policy_input, ActorCritic, Trajectory, Transition};
use crate::rng::{stream, StreamRng};

/// Runs one episode of at most `max_steps` transitions under `context`.
///
/// A context the environment rejects yields a single terminal transition
/// with the environment's minimal reward, so it stays in the batch as a
/// learning signal instead of aborting collection.
pub fn run_episode(
    env: &dyn Environment,
    agent: &ActorCritic,
    context: Context,
    rng: &mut StreamRng,
    deterministic: bool,
    max_steps: usize,
) -> Result<Trajectory> {
    let mut traj = Trajectory::new(context);
    let mut state = match env.reset(&traj.context, rng) {
        Ok(s) => s,
        Err(Error::RejectedContext { .. }) => {
            let obs = env.rejected_observation();
            let input = policy_input(&obs, &traj.context);
            let (action, lp) = agent.policy.act(&input, rng, deterministic)?;
            traj.push(obs.clone(), action, lp, env.rejected_context_reward());
            traj.final_observation = obs;
            traj.terminal = true;
            traj.rejected = true;
            return Ok(traj);
        }
        Err(e) => return Err(e),
    };
    let mut obs = env.observe(&state);
    while traj.len() < max_steps {
        let input = policy_input(&obs, &traj.context);
        let (action, lp) = agent.policy.act(&input, rng, deterministic)?;
        let res = env.step(&state, &action, &traj.context);
        let next = env.observe(&res.state);
        traj.push(std::mem::replace(&mut obs, next), action, lp, res.reward);
        state = res.state;
        if res.terminal {
            traj.terminal = true;
            break;
        }
        if res.truncated {
            traj.truncated = true;
            break;
        }
    }
    traj.final_observation = obs;
    Ok(traj)
}

/// Cuts a trajectory to its first `n` transitions; the cut segment is
/// bootstrapped from the value of the observation that followed.
fn truncate_to(mut traj: Trajectory, n: usize) -> Trajectory {
    if n >= traj.len() {
        return traj;
    }
    traj.final_observation = traj.observations[n].clone();
    traj.observations.truncate(n);
    traj.actions.truncate(n);
    traj.log_probs.truncate(n);
    traj.rewards.truncate(n);
    traj.terminal = false;
    traj.truncated = false;
    traj
}

/// Episodes collected for one policy update.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RolloutBuffer {
    pub trajectories: Vec<Trajectory>,
    pub capacity: usize,
}

impl RolloutBuffer {
    /// Number of transitions.
    pub fn len(&self) -> usize {
        self.trajectories.iter().map(Trajectory::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition<'_>> {
        self.trajectories.iter().flat_map(|t| t.transitions())
    }

    pub fn episode_count(&self) -> usize {
        self.trajectories.len()
    }

    /// Mean undiscounted return of the episodes that ran to an end; falls
    /// back to all segments when none did.
    pub fn mean_episode_return(&self) -> f64 {
        let complete: Vec<f64> = self
            .trajectories
            .iter()
            .filter(|t| t.is_complete())
            .map(Trajectory::undiscounted_return)
            .collect();
        let pool = if complete.is_empty() {
            self.trajectories.iter().map(Trajectory::undiscounted_return).collect()
        } else {
            complete
        };
        if pool.is_empty() {
            0.0
        } else {
            pool.iter().sum::<f64>() / pool.len() as f64
        }
    }
}

/// Runs `f(i)` for `i in range`, in parallel when `workers > 1`. Results come
/// back in index order either way.
pub(crate) fn map_indexed<T, F>(range: std::ops::Range<usize>, workers: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if workers <= 1 {
        range.map(f).collect()
    } else {
        range.into_par_iter().map(f).collect()
    }
}

/// Fills a buffer with at least `capacity` transitions.
///
/// Episode `i` draws its context from `sample_context` and acts with an RNG
/// derived from `(seed, path, i)`, so the buffer is identical for any worker
/// count. Episodes are generated in waves of `workers` and appended in index
/// order; the last one is cut at the buffer boundary.
pub fn collect_rollouts<S>(
    agent: &ActorCritic,
    env: &dyn Environment,
    sample_context: S,
    capacity: usize,
    seed: u64,
    path: &[u64],
    workers: usize,
) -> Result<RolloutBuffer>
where
    S: Fn(&mut StreamRng) -> Context + Sync + Send,
{
    if capacity == 0 {
        return Err(Error::Config("buffer size must be positive".into()));
    }
    let wave = workers.max(1);
    let mut buffer = RolloutBuffer {
        trajectories: Vec::new(),
        capacity,
    };
    let mut collected = 0;
    let mut next = 0;
    while collected < capacity {
        let episodes = map_indexed(next..next + wave, workers, |i| {
            let mut rng = episode_rng(seed, path, i);
            let z = sample_context(&mut rng);
            run_episode(env, agent, z, &mut rng, false, env.horizon())
        })?;
        next += wave;
        for traj in episodes {
            if collected >= capacity {
                break;
            }
            let traj = truncate_to(traj, capacity - collected);
            collected += traj.len();
            buffer.trajectories.push(traj);
        }
    }
    Ok(buffer)
}

/// Runs one complete episode per context with its own derived RNG.
pub fn evaluate_contexts(
    agent: &ActorCritic,
    env: &dyn Environment,
    contexts: &[Context],
    deterministic: bool,
    seed: u64,
    path: &[u64],
    workers: usize,
) -> Result<Vec<Trajectory>> {
    map_indexed(0..contexts.len(), workers, |i| {
        let mut rng = episode_rng(seed, path, i);
        run_episode(env, agent, contexts[i].clone(), &mut rng, deterministic, env.horizon())
    })
}

pub(crate) fn episode_rng(seed: u64, path: &[u64], index: usize) -> StreamRng {
    let mut p = path.to_vec();
    p.push(index as u64);
    stream(seed, &p)
}
