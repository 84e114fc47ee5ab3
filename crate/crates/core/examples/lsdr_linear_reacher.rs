//! Learns a discrete training distribution over the reacher's mass and
//! reports how much of it lands on the solvable masses.
//!
//! ```text
//! cargo run --release --example lsdr_linear_reacher -- [epochs] [seed] [prior|learned|fixed]
//! ```

use lsdr::distributions::{RangeSummary, DEFAULT_BINS};
use lsdr::eval::solvable_mass;
use lsdr::envs::{LinearReacher, LinearReacherParams};
use lsdr::train::{train, EpochMetrics, SamplingSource, TrainConfig, TrainObserver, TrainState};
use lsdr::{Family, Result};

struct Progress<'a> {
    env: &'a LinearReacher,
    started: std::time::Instant,
}

impl TrainObserver for Progress<'_> {
    fn on_epoch(&mut self, state: &TrainState, m: &EpochMetrics, _wall: f64) -> Result<()> {
        if m.epoch % 10 == 9 {
            let range = state.distribution.fit_uniform_summary(0.95);
            println!(
                "epoch {:4}  return {:6.2}  success {:.2}  entropy {:.3}  kl {:.3}  solvable mass {:.3}  range [{:.2}, {:.2}]  jaccard {:.2}  [{:.0}s]",
                m.epoch + 1,
                m.mean_return,
                m.success_rate,
                m.entropy,
                m.kl,
                solvable_mass(&state.distribution, self.env).unwrap_or(f64::NAN),
                range.lower[0],
                range.upper[0],
                RangeSummary::jaccard((range.lower[0], range.upper[0]), (1.0, 2.0)),
                self.started.elapsed().as_secs_f64()
            );
        }
        Ok(())
    }
}

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or_else(|| default.to_string());

    let mut config = TrainConfig::linear_reacher();
    config.lsdr.epochs = arg(1, "300").parse()?;
    config.lsdr.seed = arg(2, "0").parse()?;
    match arg(3, "prior").as_str() {
        "prior" => config.lsdr.sampling = Some(SamplingSource::Prior),
        "learned" => config.lsdr.sampling = Some(SamplingSource::Learned),
        "fixed" => config.lsdr.fixed_dr = true,
        other => anyhow::bail!("unknown mode {other}"),
    }

    let env = LinearReacher::new(LinearReacherParams::default(), &[0])?;
    let state = TrainState::initial(&config, &env, Family::Discrete, DEFAULT_BINS, false)?;
    let mut progress = Progress {
        env: &env,
        started: std::time::Instant::now(),
    };
    let record = train(&config, &env, state, 1, &mut progress)?;
    println!("total env steps {}", record.total_env_steps());
    Ok(())
}
