//! Why the KL term matters: without it, and with contexts for the update
//! drawn from the learned distribution itself, the distribution collapses
//! onto a handful of bins. With the KL term and prior sampling it keeps
//! covering the solvable region.
//!
//! ```text
//! cargo run --release --example collapse_ablation -- [epochs] [seed]
//! ```

use lsdr::distributions::DEFAULT_BINS;
use lsdr::envs::{LinearReacher, LinearReacherParams};
use lsdr::eval::{collapse_diagnostic, solvable_mass};
use lsdr::train::{train, NoObserver, SamplingSource, TrainConfig, TrainState};
use lsdr::Family;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let epochs: usize = args.get(1).map_or(Ok(300), |s| s.parse())?;
    let seed: u64 = args.get(2).map_or(Ok(0), |s| s.parse())?;
    let env = LinearReacher::new(LinearReacherParams::default(), &[0])?;
    let initial_entropy = (DEFAULT_BINS as f64).ln();

    for (name, kl_weight, sampling) in [
        ("no KL, learned sampling", 0.0, SamplingSource::Learned),
        ("default KL, prior sampling", 0.5, SamplingSource::Prior),
    ] {
        let mut config = TrainConfig::linear_reacher();
        config.lsdr.epochs = epochs;
        config.lsdr.seed = seed;
        config.lsdr.kl_weight = Some(kl_weight);
        config.lsdr.sampling = Some(sampling);
        let state = TrainState::initial(&config, &env, Family::Discrete, DEFAULT_BINS, false)?;
        let record = train(&config, &env, state, 1, &mut NoObserver)?;
        let diag = collapse_diagnostic(&record.metrics, initial_entropy)?;
        let dist = record.final_distribution().expect("epochs ran");
        let range = dist.fit_uniform_summary(0.95);
        println!(
            "{name:28} entropy {:.3} -> {:.3} (ratio {:.3})  solvable mass {:.3}  95% range [{:.2}, {:.2}]",
            diag.initial_entropy,
            diag.final_entropy,
            diag.ratio,
            solvable_mass(dist, &env).unwrap_or(f64::NAN),
            range.lower[0],
            range.upper[0]
        );
    }
    Ok(())
}
