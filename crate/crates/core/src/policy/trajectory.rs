use serde::{Deserialize, Serialize};

use crate::distributions::Context;

/// One episode (or the truncated tail of one) collected under a single
/// context.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub context: Context,
    pub observations: Vec<Vec<f64>>,
    pub actions: Vec<Vec<f64>>,
    pub log_probs: Vec<f64>,
    pub rewards: Vec<f64>,
    /// Observation after the last transition.
    pub final_observation: Vec<f64>,
    /// Ended by a terminal event (no bootstrap).
    pub terminal: bool,
    /// Ended by the horizon or the buffer boundary (bootstrap from the value
    /// of `final_observation`).
    pub truncated: bool,
    /// The context failed its validity predicate; a single minimal-reward
    /// transition was recorded.
    pub rejected: bool,
}

/// `(s, z, a, r, s′, terminal, old log-prob)` view of one transition.
#[derive(Clone, Copy, Debug)]
pub struct Transition<'a> {
    pub observation: &'a [f64],
    pub context: &'a [f64],
    pub action: &'a [f64],
    pub reward: f64,
    pub next_observation: &'a [f64],
    pub terminal: bool,
    pub log_prob: f64,
}

impl Trajectory {
    pub fn new(context: Context) -> Self {
        Self {
            context,
            observations: Vec::new(),
            actions: Vec::new(),
            log_probs: Vec::new(),
            rewards: Vec::new(),
            final_observation: Vec::new(),
            terminal: false,
            truncated: false,
            rejected: false,
        }
    }

    pub fn len(&self) -> usize {
        self.rewards.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rewards.is_empty()
    }

    pub fn push(&mut self, observation: Vec<f64>, action: Vec<f64>, log_prob: f64, reward: f64) {
        self.observations.push(observation);
        self.actions.push(action);
        self.log_probs.push(log_prob);
        self.rewards.push(reward);
    }

    /// Whether the episode ran to an end (terminal or horizon) rather than
    /// being cut at the buffer boundary.
    pub fn is_complete(&self) -> bool {
        self.terminal || self.truncated
    }

    pub fn transitions(&self) -> impl Iterator<Item = Transition<'_>> {
        let n = self.len();
        (0..n).map(move |t| Transition {
            observation: &self.observations[t],
            context: &self.context,
            action: &self.actions[t],
            reward: self.rewards[t],
            next_observation: if t + 1 < n {
                &self.observations[t + 1]
            } else {
                &self.final_observation
            },
            terminal: self.terminal && t + 1 == n,
            log_prob: self.log_probs[t],
        })
    }

    /// `Σ_t γ^t r_t`.
    pub fn discounted_return(&self, gamma: f64) -> f64 {
        discounted_return(&self.rewards, gamma)
    }

    pub fn undiscounted_return(&self) -> f64 {
        self.rewards.iter().sum()
    }
}

/// `Σ_t γ^t r_t`, accumulated back to front.
pub fn discounted_return(rewards: &[f64], gamma: f64) -> f64 {
    rewards.iter().rev().fold(0.0, |acc, r| r + gamma * acc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn returns_of_simple_sequences() {
        assert_eq!(discounted_return(&[0.0; 5], 0.9), 0.0);
        assert_eq!(discounted_return(&[1.0, 1.0, 1.0], 0.5), 1.75);
        assert_eq!(discounted_return(&[], 0.5), 0.0);
    }

    #[test]
    fn transitions_chain_observations() {
        let mut t = Trajectory::new(Context::scalar(1.5));
        t.push(vec![0.0], vec![0.1], -1.0, 1.0);
        t.push(vec![1.0], vec![0.2], -1.1, 2.0);
        t.final_observation = vec![2.0];
        t.terminal = true;
        let tr: Vec<_> = t.transitions().collect();
        assert_eq!(tr[0].next_observation, &[1.0]);
        assert_eq!(tr[1].next_observation, &[2.0]);
        assert!(!tr[0].terminal && tr[1].terminal);
        assert_eq!(tr[1].context, &[1.5]);
    }
}
