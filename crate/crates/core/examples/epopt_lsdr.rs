//! LSDR with EPOpt as the policy optimizer: each epoch samples a population
//! of episodes from the learned distribution and trains PPO on the worst
//! 10% only. Compares the learned range with plain PPO at the same seed.
//!
//! ```text
//! cargo run --release --example epopt_lsdr -- [epochs] [seed]
//! ```

use lsdr::distributions::DEFAULT_BINS;
use lsdr::envs::{LinearReacher, LinearReacherParams};
use lsdr::eval::solvable_mass;
use lsdr::train::{train, NoObserver, PolicyOptimizer, TrainConfig, TrainState};
use lsdr::Family;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(Ok(300), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(0), |s| s.parse())?;
    let env = LinearReacher::new(LinearReacherParams::default(), &[0])?;

    for optimizer in [PolicyOptimizer::Ppo, PolicyOptimizer::EpoptPpo] {
        let mut config = TrainConfig::linear_reacher();
        config.lsdr.epochs = epochs;
        config.lsdr.seed = seed;
        config.lsdr.policy_optimizer = optimizer;
        let started = std::time::Instant::now();
        let state = TrainState::initial(&config, &env, Family::Discrete, DEFAULT_BINS, false)?;
        let record = train(&config, &env, state, 1, &mut NoObserver)?;
        let dist = record.final_distribution().expect("epochs ran");
        let range = dist.fit_uniform_summary(0.95);
        let tail = &record.metrics[record.metrics.len().saturating_sub(10)..];
        let success = tail.iter().map(|m| m.success_rate).sum::<f64>() / tail.len() as f64;
        println!(
            "{optimizer:?}: range [{:.2}, {:.2}] (width {:.2})  solvable mass {:.3}  late success {success:.2}  env steps {}  [{:.0}s]",
            range.lower[0],
            range.upper[0],
            range.width(0),
            solvable_mass(dist, &env).unwrap_or(f64::NAN),
            record.total_env_steps(),
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
