use serde::{Deserialize, Serialize};

use super::Trajectory;
use crate::error::{Error, Result};

/// Worst-percentile trajectory selection.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EpoptConfig {
    /// Contexts sampled (one trajectory each) per epoch.
    pub population: usize,
    /// Fraction of the population kept, lowest returns first.
    pub percentile: f64,
}

impl Default for EpoptConfig {
    fn default() -> Self {
        Self {
            population: 100,
            percentile: 0.1,
        }
    }
}

impl EpoptConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.percentile > 0.0 && self.percentile <= 1.0) {
            return Err(Error::Config(format!(
                "epopt percentile must be in (0, 1], got {}",
                self.percentile
            )));
        }
        if self.population == 0 {
            return Err(Error::Config("epopt population must be positive".into()));
        }
        Ok(())
    }

    /// `⌈ε·N⌉` for a population of `n`.
    pub fn keep_count(&self, n: usize) -> usize {
        ((self.percentile * n as f64) - 1e-9).ceil().max(1.0) as usize
    }
}

/// Keeps the `⌈ε·N⌉` trajectories with the lowest undiscounted returns,
/// preserving collection order among the kept ones; ties go to the earlier
/// trajectory.
pub fn epopt_filter(trajectories: Vec<Trajectory>, config: &EpoptConfig) -> Result<Vec<Trajectory>> {
    if trajectories.is_empty() {
        return Err(Error::Empty("epopt population".into()));
    }
    config.validate()?;
    let returns: Vec<f64> = trajectories.iter().map(|t| t.undiscounted_return()).collect();
    let keep = selected_indices(&returns, config.keep_count(trajectories.len()));
    let mut mask = vec![false; trajectories.len()];
    keep.iter().for_each(|&i| mask[i] = true);
    Ok(trajectories
        .into_iter()
        .zip(mask)
        .filter_map(|(t, m)| m.then_some(t))
        .collect())
}

/// Indices of the `k` lowest values, stable with respect to input order.
pub fn selected_indices(returns: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..returns.len()).collect();
    idx.sort_by(|&a, &b| returns[a].total_cmp(&returns[b]));
    let mut kept: Vec<usize> = idx.into_iter().take(k).collect();
    kept.sort_unstable();
    kept
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::Context;

    fn traj(ret: f64) -> Trajectory {
        let mut t = Trajectory::new(Context::scalar(ret));
        t.push(vec![0.0], vec![0.0], 0.0, ret);
        t
    }

    #[test]
    fn keeps_ten_of_a_hundred() {
        let pop: Vec<_> = (0..100).map(|i| traj(((i * 37) % 100) as f64)).collect();
        let kept = epopt_filter(pop, &EpoptConfig::default()).unwrap();
        assert_eq!(kept.len(), 10);
        assert!(kept.iter().all(|t| t.undiscounted_return() < 10.0));
    }

    #[test]
    fn ties_keep_collection_order() {
        let pop: Vec<_> = (0..20).map(|_| traj(1.0)).collect();
        let ids: Vec<_> = (0..20).collect();
        let cfg = EpoptConfig {
            population: 20,
            percentile: 0.25,
        };
        assert_eq!(selected_indices(&vec![1.0; 20], cfg.keep_count(20)), ids[..5]);
        assert_eq!(epopt_filter(pop, &cfg).unwrap().len(), 5);
    }

    #[test]
    fn empty_population_is_an_error() {
        assert!(matches!(
            epopt_filter(Vec::new(), &EpoptConfig::default()),
            Err(Error::Empty(_))
        ));
    }

    #[test]
    fn keep_count_rounds_up() {
        let cfg = EpoptConfig {
            population: 7,
            percentile: 0.1,
        };
        assert_eq!(cfg.keep_count(7), 1);
        assert_eq!(cfg.keep_count(11), 2);
        assert_eq!(cfg.keep_count(100), 10);
    }
}
