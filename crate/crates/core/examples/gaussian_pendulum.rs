//! A full-covariance Gaussian distribution over pendulum mass and length,
//! learned jointly with a swing-up policy. Writes the confidence ellipses
//! of every snapshot to `pendulum_ellipses.svg`.
//!
//! ```text
//! cargo run --release --example gaussian_pendulum -- [epochs] [seed]
//! ```

use lsdr::config::RunConfig;
use lsdr::distributions::DistributionSnapshot;
use lsdr::envs::PENDULUM_ID;
use lsdr::plot::ellipse_plot;
use lsdr::policy::PolicySnapshot;
use lsdr::train::{train, EpochMetrics, TrainObserver, TrainState};
use lsdr::Result;

#[derive(Default)]
struct Collect(Vec<DistributionSnapshot>);

impl TrainObserver for Collect {
    fn on_epoch(&mut self, _state: &TrainState, m: &EpochMetrics, _wall: f64) -> Result<()> {
        if (m.epoch + 1) % 10 == 0 {
            println!(
                "epoch {:4}  return {:8.2}  success {:.2}  entropy {:.3}",
                m.epoch + 1,
                m.mean_return,
                m.success_rate,
                m.entropy
            );
        }
        Ok(())
    }

    fn on_distribution(&mut self, snapshot: &DistributionSnapshot) -> Result<()> {
        self.0.push(snapshot.clone());
        Ok(())
    }

    fn on_policy(&mut self, _snapshot: &PolicySnapshot) -> Result<()> {
        Ok(())
    }
}

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let overrides = vec![
        ("env".to_string(), PENDULUM_ID.to_string()),
        ("context_dims".to_string(), "[0, 1]".to_string()),
        ("lsdr.epochs".to_string(), args.get(1).cloned().unwrap_or_else(|| "50".into())),
        ("lsdr.seed".to_string(), args.get(2).cloned().unwrap_or_else(|| "0".into())),
    ];
    let config = RunConfig::load(None, &overrides)?;
    let env = config.build_env()?;
    let train_config = config.train_config();
    let state = TrainState::initial(&train_config, env.as_ref(), config.family, config.bins, config.diagonal_only)?;
    let mut snapshots = Collect::default();
    let record = train(&train_config, env.as_ref(), state, config.workers, &mut snapshots)?;
    let range = record.final_distribution().expect("epochs ran").fit_uniform_summary(0.95);
    for (name, (lo, hi)) in ["mass", "length"].iter().zip(range.lower.iter().zip(&range.upper)) {
        println!("{name:<6} 95% range [{lo:.3}, {hi:.3}]");
    }
    std::fs::write("pendulum_ellipses.svg", ellipse_plot(&snapshots.0, (0, 1))?)?;
    println!("wrote pendulum_ellipses.svg");
    Ok(())
}
