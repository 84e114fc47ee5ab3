//! The empirical solvability oracle: train a fresh policy on every cell of
//! a grid over the reacher's mass and compare the cells it solves with the
//! analytic oracle.
//!
//! ```text
//! cargo run --release --example grid_sweep -- [cells] [epochs per cell]
//! ```

use lsdr::envs::{LinearReacher, LinearReacherParams};
use lsdr::eval::{grid_sweep, SweepConfig};
use lsdr::train::TrainConfig;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let preset = TrainConfig::linear_reacher();
    let config = SweepConfig {
        cells: args.get(1).map_or(Ok(10), |s| s.parse())?,
        epochs: args.get(2).map_or(Ok(50), |s| s.parse())?,
        ppo: preset.ppo,
        network: preset.network,
        ..SweepConfig::default()
    };
    let env = LinearReacher::new(LinearReacherParams::default(), &[0])?;
    let result = grid_sweep(&env, &config, 0, 1)?;
    for cell in &result.cells {
        println!(
            "mass [{:.2}, {:.2}]  best return {:7.2}  solved {:5}  oracle {:?}",
            cell.lower[0],
            cell.upper[0],
            cell.best_return,
            result.solved(cell),
            cell.solvable
        );
    }
    let (agree, judged) = result.oracle_agreement();
    println!("agreement with the analytic oracle: {agree}/{judged}");
    if let Some((lo, hi)) = result.empirical_range() {
        println!("empirical solvable range [{:.2}, {:.2}]", lo[0], hi[0]);
    }
    Ok(())
}
