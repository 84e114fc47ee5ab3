//! Context-conditioned Gaussian policy, value function, PPO and EPOpt.

mod epopt;
mod gaussian;
mod mlp;
mod optim;
mod ppo;
mod trajectory;

use serde::{Deserialize, Serialize};

pub use epopt::{epopt_filter, selected_indices, EpoptConfig};
pub use gaussian::{policy_input, GaussianPolicy, LOG_STD_MAX, LOG_STD_MIN};
pub use mlp::{Mlp, MlpCache};
pub use optim::{clip_grad_norm, Optimizer, OptimizerKind};
pub use ppo::{
    approx_kl, build_batch, compute_gae, normalize_advantages, ppo_update, surrogate_loss_and_grad,
    value_loss_and_grad, ActorCritic, NetworkConfig, PpoBatch, PpoConfig, PpoLearner, PpoStats,
    SurrogateEval,
};
pub use trajectory::{discounted_return, Trajectory, Transition};

use crate::error::{Error, Result};
use crate::rng::SeedLineage;

pub const POLICY_SCHEMA: &str = "lsdr.policy/v1";

/// Versioned on-disk form of the policy and value networks, with the
/// architecture it was built for.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicySnapshot {
    pub schema: String,
    pub epoch: usize,
    pub env_id: String,
    pub observation_dim: usize,
    pub context_dim: usize,
    pub action_dim: usize,
    pub hidden: Vec<usize>,
    pub lineage: SeedLineage,
    pub agent: ActorCritic,
}

impl PolicySnapshot {
    pub fn new(
        agent: ActorCritic,
        env_id: &str,
        observation_dim: usize,
        context_dim: usize,
        epoch: usize,
        lineage: SeedLineage,
    ) -> Self {
        Self {
            schema: POLICY_SCHEMA.to_string(),
            epoch,
            env_id: env_id.to_string(),
            observation_dim,
            context_dim,
            action_dim: agent.policy.action_dim(),
            hidden: agent.hidden(),
            lineage,
            agent,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Self = serde_json::from_str(text)?;
        if snap.schema != POLICY_SCHEMA {
            return Err(Error::Schema {
                path: "<policy snapshot>".into(),
                expected: POLICY_SCHEMA.into(),
                found: snap.schema,
            });
        }
        let input = snap.observation_dim + snap.context_dim;
        let consistent = snap.agent.policy.input_dim() == input
            && snap.agent.value.input_dim() == input
            && snap.agent.policy.action_dim() == snap.action_dim
            && snap.agent.hidden() == snap.hidden
            && snap.agent.value.output_dim() == 1;
        if !consistent {
            return Err(Error::Config(
                "policy snapshot architecture metadata does not match its weights".into(),
            ));
        }
        if !snap.agent.is_finite() {
            return Err(Error::NonFinite("policy snapshot weights".into()));
        }
        Ok(snap)
    }

    /// Fails unless the snapshot was built for this environment shape.
    pub fn check_compatible(&self, env_id: &str, observation_dim: usize, context_dim: usize, action_dim: usize) -> Result<()> {
        if self.env_id != env_id {
            return Err(Error::Config(format!(
                "policy snapshot is for `{}`, not `{env_id}`",
                self.env_id
            )));
        }
        if (self.observation_dim, self.context_dim, self.action_dim) != (observation_dim, context_dim, action_dim) {
            return Err(Error::Config(format!(
                "policy snapshot dims (obs {}, ctx {}, act {}) do not match the environment (obs {observation_dim}, ctx {context_dim}, act {action_dim})",
                self.observation_dim, self.context_dim, self.action_dim
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn snapshot_round_trips_and_checks_shape() {
        let agent = ActorCritic::new(2, 1, 1, &NetworkConfig::default(), &mut stream(3, &[])).unwrap();
        let snap = PolicySnapshot::new(agent, "linear-reacher-1d", 2, 1, 0, SeedLineage::new(3, &[]));
        let back = PolicySnapshot::from_json(&snap.to_json().unwrap()).unwrap();
        assert_eq!(back, snap);
        assert!(back.check_compatible("linear-reacher-1d", 2, 1, 1).is_ok());
        assert!(back.check_compatible("linear-reacher-1d", 2, 2, 1).is_err());
        let bad = snap.to_json().unwrap().replace(POLICY_SCHEMA, "lsdr.policy/v0");
        assert!(matches!(PolicySnapshot::from_json(&bad), Err(Error::Schema { .. })));
    }
}
