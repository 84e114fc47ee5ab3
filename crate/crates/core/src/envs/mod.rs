//! Context-parameterized episodic environments.
//!
//! An [`Environment`] is stateless: all episode state lives in [`EnvState`],
//! so one instance can be shared by any number of rollout workers. The
//! context vector is passed to [`Environment::reset`] and every
//! [`Environment::step`]; contexts failing the physical validity predicates
//! of the [`ContextSpec`] are rejected at reset.

mod linear_reacher;
mod pendulum;

use rand::RngCore;
use serde::{Deserialize, Serialize};

pub use linear_reacher::{LinearReacher, LinearReacherParams};
pub use pendulum::{Pendulum, PendulumParams};

use crate::distributions::{SupportBox, UniformPrior};
use crate::error::{Error, Result};

/// Physical validity predicate on one context coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Validity {
    Positive,
    NonNegative,
}

impl Validity {
    pub fn holds(self, v: f64) -> bool {
        match self {
            Self::Positive => v > 0.0,
            Self::NonNegative => v >= 0.0,
        }
    }

    fn describe(self, name: &str) -> String {
        match self {
            Self::Positive => format!("{name} > 0"),
            Self::NonNegative => format!("{name} >= 0"),
        }
    }
}

/// Names, prior box and validity predicates of an environment's context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContextSpec {
    pub prior: SupportBox,
    pub validity: Vec<Validity>,
}

impl ContextSpec {
    pub fn new(prior: SupportBox, validity: Vec<Validity>) -> Result<Self> {
        if validity.len() != prior.dim() {
            return Err(Error::ShapeMismatch {
                expected: prior.dim(),
                got: validity.len(),
            });
        }
        // the box corners must not all be invalid
        let center = prior.center();
        for (i, v) in validity.iter().enumerate() {
            if !v.holds(prior.upper()[i]) && !v.holds(center[i]) {
                return Err(Error::InvalidSupport(format!(
                    "prior for `{}` lies outside its valid region",
                    prior.names()[i]
                )));
            }
        }
        Ok(Self { prior, validity })
    }

    pub fn dim(&self) -> usize {
        self.prior.dim()
    }

    pub fn names(&self) -> &[String] {
        self.prior.names()
    }

    pub fn uniform_prior(&self) -> UniformPrior {
        UniformPrior::new(self.prior.clone())
    }

    pub fn check(&self, context: &[f64]) -> Result<()> {
        if context.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                got: context.len(),
            });
        }
        for ((v, rule), name) in context.iter().zip(&self.validity).zip(self.names()) {
            if !v.is_finite() || !rule.holds(*v) {
                return Err(Error::RejectedContext {
                    predicate: rule.describe(name),
                    value: *v,
                });
            }
        }
        Ok(())
    }

    pub fn is_valid(&self, context: &[f64]) -> bool {
        self.check(context).is_ok()
    }
}

/// Continuous environment state plus the step counter.
#[derive(Clone, Debug, PartialEq)]
pub struct EnvState {
    pub values: Vec<f64>,
    pub step: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepResult {
    pub state: EnvState,
    pub reward: f64,
    /// The episode ended inside the MDP (goal reached, simulation unstable).
    pub terminal: bool,
    /// The horizon was reached without a terminal event.
    pub truncated: bool,
}

impl StepResult {
    pub fn done(&self) -> bool {
        self.terminal || self.truncated
    }
}

/// Reward returned (with `terminal`) when integration produces non-finite
/// state.
pub const INSTABILITY_REWARD: f64 = -100.0;

pub trait Environment: Send + Sync {
    fn id(&self) -> &str;

    fn context_spec(&self) -> &ContextSpec;

    /// Dimension of [`Environment::observe`]'s output.
    fn observation_dim(&self) -> usize;

    fn action_dim(&self) -> usize;

    fn horizon(&self) -> usize;

    /// Draws `s_0 ~ ρ_0` for a valid context.
    fn reset(&self, context: &[f64], rng: &mut dyn RngCore) -> Result<EnvState>;

    /// Deterministic transition; the action is clamped to `[-1, 1]`.
    fn step(&self, state: &EnvState, action: &[f64], context: &[f64]) -> StepResult;

    fn observe(&self, state: &EnvState) -> Vec<f64>;

    /// Bounds on the per-step reward over all states, actions and valid
    /// contexts (excluding the instability penalty).
    fn reward_bounds(&self) -> (f64, f64);

    /// Undiscounted episode return at or above which the goal was reached.
    fn success_threshold(&self) -> f64;

    /// Whether the state is in the goal set.
    fn at_goal(&self, state: &EnvState) -> bool;

    /// Context with all coordinates at their nominal values.
    fn nominal_context(&self) -> Vec<f64>;

    /// Exact solvability, when the environment has a closed form.
    fn solvable(&self, _context: &[f64]) -> Option<bool> {
        None
    }

    /// Return of the one-step episode recorded for a rejected context: the
    /// lowest per-step reward times the horizon.
    fn rejected_context_reward(&self) -> f64 {
        self.reward_bounds().0 * self.horizon() as f64
    }

    /// Observation recorded alongside a rejected context.
    fn rejected_observation(&self) -> Vec<f64> {
        vec![0.0; self.observation_dim()]
    }
}

pub(crate) fn clamp_action(a: f64) -> f64 {
    if a.is_nan() {
        0.0
    } else {
        a.clamp(-1.0, 1.0)
    }
}

/// Catalog entry for a built-in environment.
#[derive(Clone, Debug, Serialize)]
pub struct EnvDescriptor {
    pub id: &'static str,
    pub context_names: Vec<String>,
    pub context: ContextSpec,
    pub nominal_context: Vec<f64>,
    pub observation_dim: usize,
    pub action_dim: usize,
    pub horizon: usize,
    pub reward: &'static str,
    pub has_exact_oracle: bool,
}

pub const LINEAR_REACHER_ID: &str = "linear-reacher-1d";
pub const PENDULUM_ID: &str = "pendulum-swingup";

pub fn env_catalog() -> Vec<EnvDescriptor> {
    let describe = |env: &dyn Environment, reward: &'static str, oracle: bool, id| EnvDescriptor {
        id,
        context_names: env.context_spec().names().to_vec(),
        context: env.context_spec().clone(),
        nominal_context: env.nominal_context(),
        observation_dim: env.observation_dim(),
        action_dim: env.action_dim(),
        horizon: env.horizon(),
        reward,
        has_exact_oracle: oracle,
    };
    vec![
        describe(
            &LinearReacher::new(LinearReacherParams::default(), &[0, 1]).expect("built-in"),
            linear_reacher::REWARD_DESCRIPTION,
            true,
            LINEAR_REACHER_ID,
        ),
        describe(
            &Pendulum::new(PendulumParams::default(), &[0, 1, 2]).expect("built-in"),
            pendulum::REWARD_DESCRIPTION,
            false,
            PENDULUM_ID,
        ),
    ]
}

/// Builds a catalog environment randomizing the given context dimensions
/// (indices into the catalog entry's context names).
pub fn make_env(id: &str, context_dims: &[usize]) -> Result<Box<dyn Environment>> {
    match id {
        LINEAR_REACHER_ID => Ok(Box::new(LinearReacher::new(
            LinearReacherParams::default(),
            context_dims,
        )?)),
        PENDULUM_ID => Ok(Box::new(Pendulum::new(
            PendulumParams::default(),
            context_dims,
        )?)),
        other => Err(Error::Config(format!("unknown environment `{other}`"))),
    }
}

/// Rolls out one episode with a fixed action sequence generator; used by
/// tests and oracles that need the raw simulator.
pub fn rollout_with<F>(
    env: &dyn Environment,
    context: &[f64],
    rng: &mut dyn RngCore,
    mut controller: F,
) -> Result<(f64, EnvState)>
where
    F: FnMut(&EnvState) -> Vec<f64>,
{
    let mut state = env.reset(context, rng)?;
    let mut total = 0.0;
    loop {
        let action = controller(&state);
        let res = env.step(&state, &action, context);
        total += res.reward;
        state = res.state;
        if res.terminal || res.truncated {
            return Ok((total, state));
        }
    }
}
