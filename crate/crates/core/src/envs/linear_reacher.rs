use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{
    clamp_action, ContextSpec, EnvState, Environment, StepResult, Validity, INSTABILITY_REWARD,
    LINEAR_REACHER_ID,
};
use crate::distributions::SupportBox;
use crate::error::{Error, Result};

pub(super) const REWARD_DESCRIPTION: &str = "progress_scale * Δx - action_penalty * a² per step, \
     plus goal_bonus (terminal) once x >= goal_distance";

/// Point mass on a line: `m ẍ = u_max·a − c ẋ`, `a ∈ [-1, 1]`, starting near
/// the origin and asked to reach `goal_distance` within `horizon` steps.
///
/// Context coordinates are `mass` and `damping`; whichever are not
/// randomized stay at their nominal values. `ρ_0` draws the position
/// uniformly from `±reset_noise`, at rest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LinearReacherParams {
    pub u_max: f64,
    pub goal_distance: f64,
    pub dt: f64,
    pub horizon: usize,
    pub progress_scale: f64,
    pub goal_bonus: f64,
    pub action_penalty: f64,
    pub max_speed: f64,
    pub reset_noise: f64,
    pub nominal_mass: f64,
    pub nominal_damping: f64,
    pub mass_range: (f64, f64),
    pub damping_range: (f64, f64),
}

impl Default for LinearReacherParams {
    fn default() -> Self {
        // Full thrust from rest covers dt²·(u_max/m)·T(T+1)/2 = 2/m, so the
        // undamped mass prior [1, 3] is solvable exactly on [1, 2]. The
        // action penalty over a full horizon outweighs the progress reward
        // of any push that falls short, so heavy and light masses call for
        // different behavior.
        Self {
            u_max: 2.0 / 51.0,
            goal_distance: 1.0,
            dt: 0.2,
            horizon: 50,
            progress_scale: 10.0,
            goal_bonus: 20.0,
            action_penalty: 0.1,
            max_speed: 1.0,
            reset_noise: 0.0,
            nominal_mass: 1.0,
            nominal_damping: 0.0,
            mass_range: (1.0, 3.0),
            damping_range: (0.0, 0.2),
        }
    }
}

impl LinearReacherParams {
    /// Distance covered from rest in `steps` steps of full thrust, under the
    /// same discrete dynamics (including the speed clamp) as the
    /// environment. Velocity and position are monotone in the action, so no
    /// other control sequence gets further.
    pub fn max_reach(&self, mass: f64, damping: f64, steps: usize) -> f64 {
        let (mut x, mut v) = (0.0, 0.0);
        for _ in 0..steps {
            v = (v + self.dt * (self.u_max - damping * v) / mass).min(self.max_speed);
            x += self.dt * v;
        }
        x
    }

    /// Solvable iff full thrust for the whole horizon reaches the goal from
    /// the nominal start.
    pub fn solvable(&self, mass: f64, damping: f64) -> bool {
        mass > 0.0 && self.max_reach(mass, damping, self.horizon) >= self.goal_distance
    }

    /// Mass at which the undamped task stops being solvable, assuming the
    /// speed clamp never binds.
    pub fn critical_mass(&self) -> f64 {
        let t = self.horizon as f64;
        self.u_max * self.dt * self.dt * t * (t + 1.0) / (2.0 * self.goal_distance)
    }
}

#[derive(Clone, Debug)]
pub struct LinearReacher {
    params: LinearReacherParams,
    /// Indices into `[mass, damping]` that the context vector carries.
    dims: Vec<usize>,
    spec: ContextSpec,
}

const NAMES: [&str; 2] = ["mass", "damping"];

impl LinearReacher {
    pub fn new(params: LinearReacherParams, context_dims: &[usize]) -> Result<Self> {
        if context_dims.is_empty() || context_dims.iter().any(|&d| d > 1) {
            return Err(Error::Config(format!(
                "linear reacher context dims must be a non-empty subset of [0 (mass), 1 (damping)], got {context_dims:?}"
            )));
        }
        let full = SupportBox::new(
            vec![params.mass_range.0, params.damping_range.0],
            vec![params.mass_range.1, params.damping_range.1],
            NAMES.iter().map(|s| s.to_string()).collect(),
        )?;
        let validity = [Validity::Positive, Validity::NonNegative];
        let spec = ContextSpec::new(
            full.select(context_dims)?,
            context_dims.iter().map(|&d| validity[d]).collect(),
        )?;
        Ok(Self {
            params,
            dims: context_dims.to_vec(),
            spec,
        })
    }

    pub fn params(&self) -> &LinearReacherParams {
        &self.params
    }

    /// `(mass, damping)` for a context vector.
    pub fn physical(&self, context: &[f64]) -> (f64, f64) {
        let mut mc = [self.params.nominal_mass, self.params.nominal_damping];
        for (&d, &v) in self.dims.iter().zip(context) {
            mc[d] = v;
        }
        (mc[0], mc[1])
    }

    /// Exact solvability of a (valid) context.
    pub fn solvable_oracle(&self, context: &[f64]) -> bool {
        let (m, c) = self.physical(context);
        self.params.solvable(m, c)
    }
}

impl Environment for LinearReacher {
    fn id(&self) -> &str {
        LINEAR_REACHER_ID
    }

    fn context_spec(&self) -> &ContextSpec {
        &self.spec
    }

    fn observation_dim(&self) -> usize {
        2
    }

    fn action_dim(&self) -> usize {
        1
    }

    fn horizon(&self) -> usize {
        self.params.horizon
    }

    fn reset(&self, context: &[f64], rng: &mut dyn RngCore) -> Result<EnvState> {
        self.spec.check(context)?;
        let n = self.params.reset_noise;
        let x = if n > 0.0 { rng.random_range(-n..=n) } else { 0.0 };
        Ok(EnvState {
            values: vec![x, 0.0],
            step: 0,
        })
    }

    fn step(&self, state: &EnvState, action: &[f64], context: &[f64]) -> StepResult {
        let p = &self.params;
        let (m, c) = self.physical(context);
        let a = clamp_action(action[0]);
        let (x, v) = (state.values[0], state.values[1]);

        let accel = (p.u_max * a - c * v) / m;
        let v_next = (v + p.dt * accel).clamp(-p.max_speed, p.max_speed);
        let x_next = x + p.dt * v_next;
        let step = state.step + 1;

        if !(x_next.is_finite() && v_next.is_finite()) {
            return StepResult {
                state: EnvState {
                    values: vec![x, v],
                    step,
                },
                reward: INSTABILITY_REWARD,
                terminal: true,
                truncated: false,
            };
        }

        let mut reward = p.progress_scale * (x_next - x) - p.action_penalty * a * a;
        let terminal = x_next >= p.goal_distance;
        if terminal {
            reward += p.goal_bonus;
        }
        StepResult {
            state: EnvState {
                values: vec![x_next, v_next],
                step,
            },
            reward,
            terminal,
            truncated: !terminal && step >= p.horizon,
        }
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        state.values.clone()
    }

    fn reward_bounds(&self) -> (f64, f64) {
        let p = &self.params;
        let travel = p.progress_scale * p.max_speed * p.dt;
        (-travel - p.action_penalty, travel + p.goal_bonus)
    }

    /// Midpoint between the best return that misses the goal,
    /// `progress_scale · (goal_distance + reset_noise)`, and the worst return
    /// that reaches it, `progress_scale · (goal_distance − reset_noise) +
    /// goal_bonus − action_penalty · horizon`.
    fn success_threshold(&self) -> f64 {
        let p = &self.params;
        let miss_best = p.progress_scale * (p.goal_distance + p.reset_noise);
        let hit_worst = p.progress_scale * (p.goal_distance - p.reset_noise) + p.goal_bonus
            - p.action_penalty * p.horizon as f64;
        0.5 * (miss_best + hit_worst)
    }

    fn at_goal(&self, state: &EnvState) -> bool {
        state.values[0] >= self.params.goal_distance
    }

    fn nominal_context(&self) -> Vec<f64> {
        let nominal = [self.params.nominal_mass, self.params.nominal_damping];
        self.dims.iter().map(|&d| nominal[d]).collect()
    }

    fn solvable(&self, context: &[f64]) -> Option<bool> {
        Some(self.solvable_oracle(context))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn unit_force() -> LinearReacher {
        let params = LinearReacherParams {
            u_max: 1.0,
            max_speed: 100.0,
            ..Default::default()
        };
        LinearReacher::new(params, &[0, 1]).unwrap()
    }

    #[test]
    fn one_euler_step_by_hand() {
        let params = LinearReacherParams {
            dt: 0.05,
            ..unit_force().params
        };
        let env = LinearReacher::new(params, &[0, 1]).unwrap();
        let s = EnvState {
            values: vec![0.0, 0.0],
            step: 0,
        };
        let r = env.step(&s, &[1.0], &[1.0, 0.0]);
        assert!((r.state.values[1] - 0.05).abs() < 1e-15);
        assert!((r.state.values[0] - 0.0025).abs() < 1e-15);
    }

    #[test]
    fn zero_action_at_rest_is_a_fixed_point() {
        let env = unit_force();
        let s = EnvState {
            values: vec![0.3, 0.0],
            step: 4,
        };
        let r = env.step(&s, &[0.0], &[1.5, 0.1]);
        assert_eq!(r.state.values, vec![0.3, 0.0]);
        assert_eq!(r.reward, 0.0);
        assert!(!r.terminal && !r.truncated);
    }

    #[test]
    fn reset_noise_and_rejection() {
        let params = LinearReacherParams {
            reset_noise: 0.01,
            ..Default::default()
        };
        let env = LinearReacher::new(params, &[0]).unwrap();
        let mut rng = stream(3, &[]);
        for _ in 0..100 {
            let s = env.reset(&[1.7], &mut rng).unwrap();
            assert!(s.values[0].abs() <= 0.01 && s.values[1] == 0.0);
            assert_eq!(s.step, 0);
        }
        match env.reset(&[-0.2], &mut rng) {
            Err(Error::RejectedContext { predicate, value }) => {
                assert_eq!(predicate, "mass > 0");
                assert_eq!(value, -0.2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn oracle_boundary_cases() {
        let params = LinearReacherParams {
            u_max: 1.0,
            dt: 0.05,
            horizon: 40,
            goal_distance: 1.0,
            ..Default::default()
        };
        // reach = 0.05² · 40·41/2 / m = 2.05 / m
        assert!((params.critical_mass() - 2.05).abs() < 1e-12);
        assert!(params.solvable(1.0, 0.0));
        assert!(params.solvable(2.05 - 1e-9, 0.0));
        assert!(!params.solvable(2.05 + 1e-9, 0.0));
        assert!(!params.solvable(3.0, 0.0));
        assert!(!params.solvable(2.0, 0.5));
    }

    #[test]
    fn default_prior_is_half_solvable() {
        let p = LinearReacherParams::default();
        let mid = 0.5 * (p.mass_range.0 + p.mass_range.1);
        assert!((p.critical_mass() - mid).abs() < 1e-12);
    }

    #[test]
    fn truncates_exactly_at_horizon() {
        let env = LinearReacher::new(LinearReacherParams::default(), &[0]).unwrap();
        let mut rng = stream(4, &[]);
        let mut s = env.reset(&[2.9], &mut rng).unwrap();
        for t in 1..=50 {
            let r = env.step(&s, &[0.0], &[2.9]);
            assert!(!r.terminal);
            assert_eq!(r.truncated, t == 50);
            s = r.state;
        }
    }

    #[test]
    fn unknown_context_dim_is_rejected() {
        assert!(LinearReacher::new(LinearReacherParams::default(), &[2]).is_err());
        assert!(LinearReacher::new(LinearReacherParams::default(), &[]).is_err());
    }
}
