//! Test-time protocols: test sets, fine-tuning curves, grid sweeps, range
//! reports and curve smoothing.

mod finetune;
mod range;
mod smooth;
mod sweep;

use serde::{Deserialize, Serialize};

pub use finetune::{evaluate_policy, finetune_eval, CurvePoint, FinetuneConfig, LearningCurve};
pub use range::{across_seeds, range_report, RangeReport, ReferenceRange, ReferenceSource, SeedRangeStats};
pub use smooth::smooth_curve;
pub use sweep::{grid_cells, grid_sweep, GridCell, GridSweepResult, SweepConfig};

use crate::distributions::{Context, DrDistribution, UniformPrior};
use crate::envs::Environment;
use crate::error::{Error, Result};
use crate::rng::{label, stream};
use crate::train::EpochMetrics;

/// Contexts drawn uniformly from the prior box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestSet {
    pub seed: u64,
    pub contexts: Vec<Context>,
}

pub fn make_test_set(prior: &UniformPrior, n: usize, seed: u64) -> Result<TestSet> {
    if n == 0 {
        return Err(Error::Config("test set size must be positive".into()));
    }
    let mut rng = stream(seed, &[label::TEST_SET]);
    Ok(TestSet {
        seed,
        contexts: (0..n).map(|_| prior.sample(&mut rng)).collect(),
    })
}

/// Pointwise mean with min/max envelope across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Band {
    pub mean: Vec<f64>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

/// Aggregates equally long series; longer ones are cut to the shortest.
pub fn aggregate_curves(series: &[Vec<f64>]) -> Result<Band> {
    let len = series
        .iter()
        .map(Vec::len)
        .min()
        .ok_or_else(|| Error::Empty("curves to aggregate".into()))?;
    let n = series.len() as f64;
    let column = |t: usize| series.iter().map(move |s| s[t]);
    Ok(Band {
        mean: (0..len).map(|t| column(t).sum::<f64>() / n).collect(),
        min: (0..len).map(|t| column(t).fold(f64::INFINITY, f64::min)).collect(),
        max: (0..len).map(|t| column(t).fold(f64::NEG_INFINITY, f64::max)).collect(),
    })
}

/// Mean jumpstart and asymptotic return over the curves selected by
/// `keep`.
pub fn curve_summary(curves: &[LearningCurve], keep: impl Fn(&LearningCurve) -> bool) -> Option<(f64, f64)> {
    let chosen: Vec<&LearningCurve> = curves.iter().filter(|c| keep(c)).collect();
    if chosen.is_empty() {
        return None;
    }
    let n = chosen.len() as f64;
    Some((
        chosen.iter().map(|c| c.jumpstart()).sum::<f64>() / n,
        chosen.iter().map(|c| c.asymptotic()).sum::<f64>() / n,
    ))
}

/// Probability a discrete distribution puts on bins whose centers the
/// environment's exact oracle calls solvable. `None` for the Gaussian family,
/// multi-dimensional distributions, or environments without an oracle.
pub fn solvable_mass(dist: &DrDistribution, env: &dyn Environment) -> Option<f64> {
    let DrDistribution::Discrete(d) = dist else {
        return None;
    };
    let mut mass = 0.0;
    for (b, p) in d.probabilities().iter().enumerate() {
        if env.solvable(&[d.bin_lower(b) + 0.5 * d.bin_width()])? {
            mass += p;
        }
    }
    Some(mass)
}

/// Entropy at the first and last recorded epochs and their ratio.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollapseDiagnostic {
    pub initial_entropy: f64,
    pub final_entropy: f64,
    pub ratio: f64,
}

/// Compares final entropy to `initial_entropy` (the entropy before any
/// update, e.g. `ln 100` for a uniform 100-bin distribution).
pub fn collapse_diagnostic(metrics: &[EpochMetrics], initial_entropy: f64) -> Result<CollapseDiagnostic> {
    let last = metrics.last().ok_or_else(|| Error::Empty("metrics".into()))?;
    Ok(CollapseDiagnostic {
        initial_entropy,
        final_entropy: last.entropy,
        ratio: last.entropy / initial_entropy,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::SupportBox;

    #[test]
    fn test_set_is_reproducible_and_inside() {
        let prior = UniformPrior::new(SupportBox::interval(1.0, 3.0, "mass").unwrap());
        let a = make_test_set(&prior, 50, 4).unwrap();
        assert_eq!(a, make_test_set(&prior, 50, 4).unwrap());
        assert_eq!(a.contexts.len(), 50);
        assert!(a.contexts.iter().all(|z| (1.0..=3.0).contains(&z[0])));
        assert_ne!(a, make_test_set(&prior, 50, 5).unwrap());
    }

    #[test]
    fn band_of_two_curves() {
        let b = aggregate_curves(&[vec![1.0, 2.0, 3.0], vec![3.0, 0.0]]).unwrap();
        assert_eq!(b.mean, vec![2.0, 1.0]);
        assert_eq!(b.min, vec![1.0, 0.0]);
        assert_eq!(b.max, vec![3.0, 2.0]);
    }
}
