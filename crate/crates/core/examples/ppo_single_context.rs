//! PPO alone on one fixed, solvable reacher context.
//!
//! ```text
//! cargo run --release --example ppo_single_context -- [epochs] [seed] [mass / critical mass]
//! ```

use lsdr::envs::{Environment, LinearReacher, LinearReacherParams};
use lsdr::policy::{ActorCritic, PpoLearner};
use lsdr::rng::{label, stream};
use lsdr::train::{evaluate_contexts, ppo_epoch, TrainConfig};
use lsdr::Context;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(Ok(100), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(0), |s| s.parse())?;

    let params = LinearReacherParams::default();
    let mass = args.get(3).map_or(Ok(0.5), |s| s.parse::<f64>())? * params.critical_mass();
    let env = LinearReacher::new(params, &[0])?;
    let context = Context::scalar(mass);

    let TrainConfig { ppo, network, .. } = TrainConfig::linear_reacher();
    let agent = ActorCritic::new(env.observation_dim(), 1, env.action_dim(), &network, &mut stream(seed, &[label::INIT]))?;
    let mut learner = PpoLearner::new(agent, &ppo);
    println!("mass {mass:.3}, success threshold {:.2}", env.success_threshold());
    let started = std::time::Instant::now();
    for epoch in 0..epochs {
        let (stats, buffer) = ppo_epoch(
            &mut learner,
            &env,
            |_| context.clone(),
            2000,
            &ppo,
            seed,
            &[label::EPOCH, epoch as u64],
            1,
        )?;
        if epoch % 10 == 9 || epoch + 1 == epochs {
            let eval = evaluate_contexts(&learner.agent, &env, &[context.clone()], true, seed, &[label::EVAL], 1)?;
            println!(
                "epoch {:4}  train return {:7.2}  eval return {:7.2}  kl {:.4}  clip {:.2}  std {:.3}  [{:.1}s]",
                epoch + 1,
                buffer.mean_episode_return(),
                eval[0].undiscounted_return(),
                stats.approx_kl,
                stats.clip_fraction,
                learner.agent.policy.log_std()[0].exp(),
                started.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
