//! Trains the reacher policy twice with the same seed, once on a learned
//! training distribution and once on the fixed uniform prior, then
//! fine-tunes both on a shared test set and compares jumpstart and final
//! return over the solvable test contexts.
//!
//! ```text
//! cargo run --release --example fixed_vs_learned -- [seed] [epochs] [finetune_budget] [context_return_gamma]
//! ```

use lsdr::envs::{Environment, LinearReacher, LinearReacherParams};
use lsdr::eval::{curve_summary, finetune_eval, make_test_set, FinetuneConfig, LearningCurve};
use lsdr::train::{train, NoObserver, TrainConfig, TrainState};
use lsdr::Family;

fn run(config: &TrainConfig, env: &LinearReacher, finetune: &FinetuneConfig) -> anyhow::Result<Vec<LearningCurve>> {
    let state = TrainState::initial(config, env, Family::Discrete, 100, false)?;
    let record = train(config, env, state, 1, &mut NoObserver)?;
    let test_set = make_test_set(&env.context_spec().uniform_prior(), 50, config.lsdr.seed)?;
    Ok(finetune_eval(record.final_agent().ok_or_else(|| anyhow::anyhow!("no epochs ran"))?, &test_set, env, finetune, config.lsdr.seed, 1)?)
}

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());

    let env = LinearReacher::new(LinearReacherParams::default(), &[0])?;
    let mut learned = TrainConfig::linear_reacher();
    learned.lsdr.seed = arg(1, "0").parse()?;
    learned.lsdr.epochs = arg(2, "300").parse()?;
    learned.lsdr.context_return_gamma = args.get(4).map(|g| g.parse()).transpose()?;
    let mut fixed = learned.clone();
    fixed.lsdr.fixed_dr = true;
    let finetune = FinetuneConfig {
        budget: arg(3, "10000").parse()?,
        eval_rollouts: 1,
        ppo: learned.ppo.clone(),
        ..FinetuneConfig::default()
    };

    let solvable = |c: &LearningCurve| c.solvable == Some(true);
    for (name, config) in [("learned", &learned), ("fixed", &fixed)] {
        let started = std::time::Instant::now();
        let curves = run(config, &env, &finetune)?;
        let (jump, last) = curve_summary(&curves, solvable).unwrap_or((f64::NAN, f64::NAN));
        let (jump_all, last_all) = curve_summary(&curves, |_| true).unwrap_or((f64::NAN, f64::NAN));
        println!(
            "{name:8} solvable: jumpstart {jump:7.2} final {last:7.2}   all: jumpstart {jump_all:7.2} final {last_all:7.2}   [{:.0}s]",
            started.elapsed().as_secs_f64()
        );
    }
    Ok(())
}
