use std::f64::consts::PI;

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{
    clamp_action, ContextSpec, EnvState, Environment, StepResult, Validity, INSTABILITY_REWARD,
    PENDULUM_ID,
};
use crate::distributions::SupportBox;
use crate::error::{Error, Result};

pub(super) const REWARD_DESCRIPTION: &str =
    "-(angle² + speed_weight·ω² + torque_weight·τ²) per step, angle measured from upright";

/// Torque-limited point-mass pendulum, angle measured from upright:
/// `m l² θ̈ = m g l sin θ − b θ̇ + τ`, `τ = u_max·a`.
///
/// Each control step integrates `substeps` semi-implicit Euler steps of
/// `dt`. `ρ_0` starts hanging down, `θ = π ± reset_noise`,
/// `θ̇ = 0 ± reset_noise`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PendulumParams {
    pub gravity: f64,
    pub dt: f64,
    pub substeps: usize,
    pub horizon: usize,
    pub u_max: f64,
    pub max_speed: f64,
    pub reset_noise: f64,
    pub speed_weight: f64,
    pub torque_weight: f64,
    pub goal_angle: f64,
    pub goal_speed: f64,
    pub nominal: [f64; 3],
    pub mass_range: (f64, f64),
    pub length_range: (f64, f64),
    pub damping_range: (f64, f64),
}

impl Default for PendulumParams {
    fn default() -> Self {
        Self {
            gravity: 9.81,
            dt: 0.01,
            substeps: 5,
            horizon: 200,
            u_max: 12.0,
            max_speed: 15.0,
            reset_noise: 0.05,
            speed_weight: 0.1,
            torque_weight: 0.001,
            goal_angle: 0.3,
            goal_speed: 1.0,
            nominal: [1.0, 1.0, 0.1],
            mass_range: (0.5, 2.0),
            length_range: (0.5, 1.5),
            damping_range: (0.0, 1.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Pendulum {
    params: PendulumParams,
    dims: Vec<usize>,
    spec: ContextSpec,
}

const NAMES: [&str; 3] = ["mass", "length", "damping"];

/// Wraps an angle to `[-π, π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

impl Pendulum {
    pub fn new(params: PendulumParams, context_dims: &[usize]) -> Result<Self> {
        if context_dims.is_empty() || context_dims.iter().any(|&d| d > 2) {
            return Err(Error::Config(format!(
                "pendulum context dims must be a non-empty subset of [0 (mass), 1 (length), 2 (damping)], got {context_dims:?}"
            )));
        }
        let full = SupportBox::new(
            vec![
                params.mass_range.0,
                params.length_range.0,
                params.damping_range.0,
            ],
            vec![
                params.mass_range.1,
                params.length_range.1,
                params.damping_range.1,
            ],
            NAMES.iter().map(|s| s.to_string()).collect(),
        )?;
        let validity = [Validity::Positive, Validity::Positive, Validity::NonNegative];
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

    pub fn params(&self) -> &PendulumParams {
        &self.params
    }

    /// `(mass, length, damping)` for a context vector.
    pub fn physical(&self, context: &[f64]) -> (f64, f64, f64) {
        let mut p = self.params.nominal;
        for (&d, &v) in self.dims.iter().zip(context) {
            p[d] = v;
        }
        (p[0], p[1], p[2])
    }

    /// Mechanical energy, zero potential at the pivot height.
    pub fn energy(&self, state: &EnvState, context: &[f64]) -> f64 {
        let (m, l, _) = self.physical(context);
        let (theta, omega) = (state.values[0], state.values[1]);
        0.5 * m * l * l * omega * omega + m * self.params.gravity * l * theta.cos()
    }

    /// Angular acceleration for the given state and torque.
    pub fn angular_acceleration(&self, theta: f64, omega: f64, torque: f64, context: &[f64]) -> f64 {
        let (m, l, b) = self.physical(context);
        let inertia = m * l * l;
        self.params.gravity / l * theta.sin() + (torque - b * omega) / inertia
    }
}

impl Environment for Pendulum {
    fn id(&self) -> &str {
        PENDULUM_ID
    }

    fn context_spec(&self) -> &ContextSpec {
        &self.spec
    }

    fn observation_dim(&self) -> usize {
        3
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
        Ok(EnvState {
            values: vec![PI + rng.random_range(-n..=n), rng.random_range(-n..=n)],
            step: 0,
        })
    }

    fn step(&self, state: &EnvState, action: &[f64], context: &[f64]) -> StepResult {
        let p = &self.params;
        let torque = p.u_max * clamp_action(action[0]);
        let (theta0, omega0) = (state.values[0], state.values[1]);

        let angle = normalize_angle(theta0);
        let reward = -(angle * angle
            + p.speed_weight * omega0 * omega0
            + p.torque_weight * torque * torque);

        let (mut theta, mut omega) = (theta0, omega0);
        for _ in 0..p.substeps {
            omega += p.dt * self.angular_acceleration(theta, omega, torque, context);
            omega = omega.clamp(-p.max_speed, p.max_speed);
            theta += p.dt * omega;
        }
        let step = state.step + 1;
        if !(theta.is_finite() && omega.is_finite()) {
            return StepResult {
                state: EnvState {
                    values: vec![theta0, omega0],
                    step,
                },
                reward: INSTABILITY_REWARD,
                terminal: true,
                truncated: false,
            };
        }
        StepResult {
            state: EnvState {
                values: vec![theta, omega],
                step,
            },
            reward,
            terminal: false,
            truncated: step >= p.horizon,
        }
    }

    fn observe(&self, state: &EnvState) -> Vec<f64> {
        let (theta, omega) = (state.values[0], state.values[1]);
        vec![theta.cos(), theta.sin(), omega / 5.0]
    }

    fn reward_bounds(&self) -> (f64, f64) {
        let p = &self.params;
        let worst = PI * PI
            + p.speed_weight * p.max_speed * p.max_speed
            + p.torque_weight * p.u_max * p.u_max;
        (-worst, 0.0)
    }

    /// Mean squared angle error over the episode below `(π/4)²`.
    fn success_threshold(&self) -> f64 {
        -(PI / 4.0).powi(2) * self.params.horizon as f64
    }

    fn at_goal(&self, state: &EnvState) -> bool {
        normalize_angle(state.values[0]).abs() < self.params.goal_angle
            && state.values[1].abs() < self.params.goal_speed
    }

    fn nominal_context(&self) -> Vec<f64> {
        self.dims.iter().map(|&d| self.params.nominal[d]).collect()
    }
}
