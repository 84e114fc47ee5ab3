//! The reacher's exact solvability oracle. Full thrust from rest is the
//! fastest way to the goal, so a mass is solvable exactly when full thrust
//! reaches the goal within the horizon. The oracle is checked here against
//! full-thrust rollouts of the simulator.
//!
//! ```text
//! cargo run --release --example solvability_oracle
//! ```

use lsdr::envs::{rollout_with, Environment, LinearReacher, LinearReacherParams};
use lsdr::rng::stream;

fn main() -> anyhow::Result<()> {
    let params = LinearReacherParams::default();
    let env = LinearReacher::new(params.clone(), &[0])?;
    let critical = params.critical_mass();
    println!(
        "goal {:.2}, horizon {}, critical mass {critical:.4}, success threshold {:.2}",
        params.goal_distance,
        params.horizon,
        env.success_threshold()
    );
    println!("{:>6} {:>10} {:>9} {:>14} {:>9}", "mass", "max reach", "oracle", "bang return", "success");
    for i in 0..=10 {
        let mass = 1.0 + 0.2 * i as f64;
        let reach = params.max_reach(mass, 0.0, params.horizon);
        let (ret, _) = rollout_with(&env, &[mass], &mut stream(0, &[]), |_| vec![1.0])?;
        println!(
            "{mass:6.2} {reach:10.4} {:>9} {ret:14.2} {:>9}",
            env.solvable_oracle(&[mass]),
            ret >= env.success_threshold()
        );
    }
    Ok(())
}
