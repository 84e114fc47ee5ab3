use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{RangeSummary, SupportBox, UniformPrior};
use crate::error::{Error, Result};

/// Piecewise-constant density over a 1-D support split into equal-width bins,
/// parameterized by unconstrained logits through a softmax.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DiscreteDistribution {
    support: SupportBox,
    logits: Vec<f64>,
}

pub const DEFAULT_BINS: usize = 100;

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

impl DiscreteDistribution {
    pub fn uniform(support: SupportBox, bins: usize) -> Result<Self> {
        Self::from_logits(support, vec![0.0; bins])
    }

    pub fn from_logits(support: SupportBox, logits: Vec<f64>) -> Result<Self> {
        let d = Self { support, logits };
        d.validate()?;
        Ok(d)
    }

    pub(super) fn validate(&self) -> Result<()> {
        if self.support.dim() != 1 {
            return Err(Error::InvalidSupport(format!(
                "discrete family needs a 1-D support, got {} dimensions",
                self.support.dim()
            )));
        }
        if self.logits.is_empty() {
            return Err(Error::Config("bin count must be positive".into()));
        }
        if let Some(v) = self.logits.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("logit {v}")));
        }
        Ok(())
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn bin_count(&self) -> usize {
        self.logits.len()
    }

    pub fn logits(&self) -> &[f64] {
        &self.logits
    }

    pub fn set_logits(&mut self, logits: &[f64]) -> Result<()> {
        if logits.len() != self.logits.len() {
            return Err(Error::ShapeMismatch {
                expected: self.logits.len(),
                got: logits.len(),
            });
        }
        if let Some(v) = logits.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("logit {v}")));
        }
        self.logits.copy_from_slice(logits);
        Ok(())
    }

    pub fn lower(&self) -> f64 {
        self.support.lower()[0]
    }

    pub fn upper(&self) -> f64 {
        self.support.upper()[0]
    }

    pub fn bin_width(&self) -> f64 {
        self.support.width(0) / self.bin_count() as f64
    }

    pub fn bin_lower(&self, bin: usize) -> f64 {
        self.lower() + bin as f64 * self.bin_width()
    }

    fn log_normalizer(&self) -> f64 {
        log_sum_exp(&self.logits)
    }

    pub fn log_probabilities(&self) -> Vec<f64> {
        let lse = self.log_normalizer();
        self.logits.iter().map(|l| l - lse).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.log_probabilities().into_iter().map(f64::exp).collect()
    }

    /// Index of the bin containing `z`; the upper bound belongs to the last bin.
    pub fn bin_index(&self, z: f64) -> Result<usize> {
        self.support.check(&[z])?;
        let raw = ((z - self.lower()) / self.bin_width()).floor();
        Ok((raw.max(0.0) as usize).min(self.bin_count() - 1))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let probs = self.probabilities();
        let mut u = rng.random::<f64>();
        let mut bin = probs.len() - 1;
        for (i, p) in probs.iter().enumerate() {
            if u < *p {
                bin = i;
                break;
            }
            u -= p;
        }
        let z = self.bin_lower(bin) + rng.random::<f64>() * self.bin_width();
        z.min(self.upper())
    }

    pub fn log_prob(&self, z: f64) -> Result<f64> {
        let bin = self.bin_index(z)?;
        Ok(self.logits[bin] - self.log_normalizer() - self.bin_width().ln())
    }

    /// `one_hot(bin(z)) − softmax(logits)`.
    pub fn grad_log_prob(&self, z: f64) -> Result<Vec<f64>> {
        let bin = self.bin_index(z)?;
        let mut g: Vec<f64> = self.probabilities().into_iter().map(|p| -p).collect();
        g[bin] += 1.0;
        Ok(g)
    }

    /// `KL(U ‖ q) = Σ_b (1/B) log((1/B) / q_b)` and its gradient `q − 1/B`.
    pub fn kl_from_uniform(&self, prior: &UniformPrior) -> Result<(f64, Vec<f64>)> {
        if prior.support != self.support {
            return Err(Error::Config(
                "prior support differs from the discrete distribution's support".into(),
            ));
        }
        let b = self.bin_count() as f64;
        let log_q = self.log_probabilities();
        let value = log_q.iter().map(|lq| (-b.ln() - lq) / b).sum::<f64>();
        let grad = log_q.iter().map(|lq| lq.exp() - 1.0 / b).collect();
        Ok((value.max(0.0), grad))
    }

    pub fn entropy(&self) -> f64 {
        self.log_probabilities()
            .iter()
            .map(|lq| {
                let q = lq.exp();
                if q > 0.0 {
                    -q * lq
                } else {
                    0.0
                }
            })
            .sum()
    }

    /// Contiguous bin interval holding at least `mass` of the probability,
    /// found by repeatedly dropping the lighter end bin. On equal ends the
    /// upper bin is dropped so the interval leans toward the lower end.
    pub fn fit_uniform_summary(&self, mass: f64) -> RangeSummary {
        let probs = self.probabilities();
        let (mut lo, mut hi) = (0usize, probs.len() - 1);
        let mut kept: f64 = probs.iter().sum();
        let target = mass - 1e-12;
        while lo < hi {
            let drop_upper = probs[hi] <= probs[lo];
            let candidate = if drop_upper { probs[hi] } else { probs[lo] };
            if kept - candidate < target {
                break;
            }
            kept -= candidate;
            if drop_upper {
                hi -= 1;
            } else {
                lo += 1;
            }
        }
        RangeSummary {
            lower: vec![self.bin_lower(lo)],
            upper: vec![if hi + 1 == probs.len() {
                self.upper()
            } else {
                self.bin_lower(hi + 1)
            }],
            mass: kept,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn unit(bins: usize) -> DiscreteDistribution {
        DiscreteDistribution::uniform(SupportBox::interval(0.0, 1.0, "z").unwrap(), bins).unwrap()
    }

    fn with_logits(logits: Vec<f64>) -> DiscreteDistribution {
        DiscreteDistribution::from_logits(SupportBox::interval(0.0, 1.0, "z").unwrap(), logits)
            .unwrap()
    }

    #[test]
    fn point_mass_on_first_bin_samples_inside_it() {
        let mut logits = vec![-1e3; 100];
        logits[0] = 0.0;
        let d = with_logits(logits);
        let mut rng = stream(1, &[]);
        for _ in 0..1000 {
            let z = d.sample(&mut rng);
            assert!((0.0..0.01).contains(&z), "{z}");
        }
    }

    #[test]
    fn uniform_density_is_one_on_unit_box() {
        let d = unit(100);
        assert!(d.log_prob(0.37).unwrap().abs() < 1e-12);
        assert!(d.log_prob(1.0).unwrap().abs() < 1e-12);
    }

    #[test]
    fn half_probability_bin_has_log_fifty() {
        // bin 0 carries 0.5, the other 99 share the rest
        let mut logits = vec![0.0; 100];
        logits[0] = 99f64.ln();
        let d = with_logits(logits);
        assert!((d.probabilities()[0] - 0.5).abs() < 1e-12);
        assert!((d.log_prob(0.005).unwrap() - 50f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn out_of_support_is_a_domain_error() {
        let d = unit(10);
        assert!(matches!(
            d.log_prob(-0.1),
            Err(Error::OutOfSupport { value, .. }) if value == -0.1
        ));
        assert!(d.grad_log_prob(1.2).is_err());
    }

    #[test]
    fn grad_with_two_equal_logits() {
        let d = unit(2);
        assert_eq!(d.grad_log_prob(0.2).unwrap(), vec![0.5, -0.5]);
    }

    #[test]
    fn grad_vanishes_on_saturated_bin() {
        let mut logits = vec![-800.0; 5];
        logits[2] = 0.0;
        let d = with_logits(logits);
        let g = d.grad_log_prob(0.5).unwrap();
        assert!(g.iter().all(|v| v.abs() < 1e-12), "{g:?}");
    }

    #[test]
    fn kl_is_zero_at_uniform() {
        let d = unit(100);
        let prior = UniformPrior::new(d.support().clone());
        let (kl, g) = d.kl_from_uniform(&prior).unwrap();
        assert!(kl.abs() < 1e-12);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn kl_rejects_other_support() {
        let d = unit(10);
        let prior = UniformPrior::new(SupportBox::interval(0.0, 2.0, "z").unwrap());
        assert!(matches!(d.kl_from_uniform(&prior), Err(Error::Config(_))));
    }

    #[test]
    fn entropy_limits() {
        assert!((unit(100).entropy() - 100f64.ln()).abs() < 1e-12);
        let mut logits = vec![-50.0; 100];
        logits[3] = 0.0;
        let h = with_logits(logits).entropy();
        assert!(h > 0.0 && h < 1e-12, "{h}");
    }

    #[test]
    fn summary_of_uniform_covers_95_percent() {
        let r = unit(100).fit_uniform_summary(0.95);
        let width = r.upper[0] - r.lower[0];
        assert!((width - 0.95).abs() <= 0.01 + 1e-12, "{width}");
        assert!(r.mass >= 0.95 - 1e-9);
    }

    #[test]
    fn summary_of_block_mass() {
        let logits = (0..100)
            .map(|i| if (10..20).contains(&i) { 0.0 } else { -1e4 })
            .collect();
        let r = with_logits(logits).fit_uniform_summary(0.95);
        assert!((r.lower[0] - 0.10).abs() < 1e-12);
        assert!((r.upper[0] - 0.20).abs() < 1e-12);
    }
}
