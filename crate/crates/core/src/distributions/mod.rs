//! Trainable domain-randomization distributions over simulator contexts.
//!
//! Two families are provided: a binned discrete distribution over a 1-D
//! support ([`DiscreteDistribution`]) and a multivariate Gaussian with a
//! lower-triangular scale factor ([`GaussianDistribution`]). Both expose
//! sampling, log-density, the score `∇φ log pφ(z)`, the closed-form
//! `KL(prior ‖ pφ)` with its gradient, entropy, and a fitted uniform range.
//! [`DrDistribution`] dispatches over the two so the training loop can treat
//! the parameters as one flat vector.

mod discrete;
mod gaussian;

use std::ops::Deref;

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use discrete::{DiscreteDistribution, DEFAULT_BINS};
pub use gaussian::{Ellipse, GaussianDistribution};

use crate::error::{Error, Result};
use crate::rng::SeedLineage;

/// A point in simulator-parameter space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Context(pub Vec<f64>);

impl Context {
    pub fn new(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn scalar(value: f64) -> Self {
        Self(vec![value])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }
}

impl Deref for Context {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for Context {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

/// Axis-aligned box with strictly positive volume.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    lower: Vec<f64>,
    upper: Vec<f64>,
    names: Vec<String>,
}

impl SupportBox {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, names: Vec<String>) -> Result<Self> {
        if lower.is_empty() {
            return Err(Error::InvalidSupport("zero-dimensional box".into()));
        }
        if lower.len() != upper.len() || lower.len() != names.len() {
            return Err(Error::InvalidSupport(format!(
                "bounds and names disagree in length ({}, {}, {})",
                lower.len(),
                upper.len(),
                names.len()
            )));
        }
        for (i, (&lo, &hi)) in lower.iter().zip(&upper).enumerate() {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidSupport(format!(
                    "dimension {i} (`{}`) needs finite lower < upper, got [{lo}, {hi}]",
                    names[i]
                )));
            }
        }
        Ok(Self {
            lower,
            upper,
            names,
        })
    }

    /// One-dimensional box with a single name.
    pub fn interval(lower: f64, upper: f64, name: &str) -> Result<Self> {
        Self::new(vec![lower], vec![upper], vec![name.to_string()])
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn width(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    pub fn widths(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.width(i)).collect()
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower
            .iter()
            .zip(&self.upper)
            .map(|(l, u)| 0.5 * (l + u))
            .collect()
    }

    pub fn volume(&self) -> f64 {
        self.widths().iter().product()
    }

    pub fn contains(&self, z: &[f64]) -> bool {
        z.len() == self.dim()
            && z
                .iter()
                .zip(self.lower.iter().zip(&self.upper))
                .all(|(v, (l, u))| *v >= *l && *v <= *u)
    }

    /// Checks membership and reports the first offending coordinate.
    pub fn check(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        for (dim, &value) in z.iter().enumerate() {
            let (lower, upper) = (self.lower[dim], self.upper[dim]);
            if !(value >= lower && value <= upper) {
                return Err(Error::OutOfSupport {
                    dim,
                    value,
                    lower,
                    upper,
                });
            }
        }
        Ok(())
    }

    /// Restricts the box to a subset of its dimensions.
    pub fn select(&self, dims: &[usize]) -> Result<Self> {
        let mut lower = Vec::with_capacity(dims.len());
        let mut upper = Vec::with_capacity(dims.len());
        let mut names = Vec::with_capacity(dims.len());
        for &d in dims {
            if d >= self.dim() {
                return Err(Error::Config(format!(
                    "context dimension {d} out of range (box has {})",
                    self.dim()
                )));
            }
            lower.push(self.lower[d]);
            upper.push(self.upper[d]);
            names.push(self.names[d].clone());
        }
        Self::new(lower, upper, names)
    }

    pub fn sample_uniform<R: Rng + ?Sized>(&self, rng: &mut R) -> Context {
        Context(
            self.lower
                .iter()
                .zip(&self.upper)
                .map(|(l, u)| l + rng.random::<f64>() * (u - l))
                .collect(),
        )
    }
}

/// The fixed, wide uniform prior `p(z)` over a support box.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformPrior {
    pub support: SupportBox,
}

impl UniformPrior {
    pub fn new(support: SupportBox) -> Self {
        Self { support }
    }

    pub fn dim(&self) -> usize {
        self.support.dim()
    }

    pub fn density(&self, z: &[f64]) -> f64 {
        if self.support.contains(z) {
            1.0 / self.support.volume()
        } else {
            0.0
        }
    }

    /// Entropy of the uniform, `log volume`.
    pub fn entropy(&self) -> f64 {
        self.support.volume().ln()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Context {
        self.support.sample_uniform(rng)
    }
}

/// Per-dimension interval fitted to a distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeSummary {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub mass: f64,
}

impl RangeSummary {
    pub fn width(&self, dim: usize) -> f64 {
        self.upper[dim] - self.lower[dim]
    }

    /// Jaccard index of two 1-D intervals.
    pub fn jaccard(a: (f64, f64), b: (f64, f64)) -> f64 {
        let inter = (a.1.min(b.1) - a.0.max(b.0)).max(0.0);
        let union = (a.1 - a.0) + (b.1 - b.0) - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

/// Which trainable family to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Discrete,
    Gaussian,
}

/// A trainable distribution `pφ(z)` of either family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum DrDistribution {
    Discrete(DiscreteDistribution),
    Gaussian(GaussianDistribution),
}

impl DrDistribution {
    /// The family's standard initialization: uniform bins, or a Gaussian at
    /// the box center with a tenth of the prior variance per dimension.
    pub fn initial(
        family: Family,
        prior: &UniformPrior,
        bins: usize,
        diagonal_only: bool,
    ) -> Result<Self> {
        match family {
            Family::Discrete => {
                if prior.dim() != 1 {
                    return Err(Error::Config(format!(
                        "the discrete family is one-dimensional, prior has {} dimensions",
                        prior.dim()
                    )));
                }
                Ok(Self::Discrete(DiscreteDistribution::uniform(
                    prior.support.clone(),
                    bins,
                )?))
            }
            Family::Gaussian => Ok(Self::Gaussian(GaussianDistribution::from_prior(
                &prior.support,
                diagonal_only,
            ))),
        }
    }

    pub fn family(&self) -> Family {
        match self {
            Self::Discrete(_) => Family::Discrete,
            Self::Gaussian(_) => Family::Gaussian,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Discrete(_) => 1,
            Self::Gaussian(g) => g.dim(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Context {
        match self {
            Self::Discrete(d) => Context::scalar(d.sample(rng)),
            Self::Gaussian(g) => Context(g.sample(rng)),
        }
    }

    pub fn log_prob(&self, z: &[f64]) -> Result<f64> {
        match self {
            Self::Discrete(d) => d.log_prob(scalar_of(z)?),
            Self::Gaussian(g) => g.log_prob(z),
        }
    }

    /// Score `∇φ log pφ(z)` in the flat parameter layout.
    pub fn grad_log_prob(&self, z: &[f64]) -> Result<Vec<f64>> {
        match self {
            Self::Discrete(d) => d.grad_log_prob(scalar_of(z)?),
            Self::Gaussian(g) => g.grad_log_prob(z),
        }
    }

    /// `KL(prior ‖ pφ)` and its gradient in the flat parameter layout.
    pub fn kl_from_prior(&self, prior: &UniformPrior) -> Result<(f64, Vec<f64>)> {
        match self {
            Self::Discrete(d) => d.kl_from_uniform(prior),
            Self::Gaussian(g) => g.kl_from_uniform(prior),
        }
    }

    pub fn entropy(&self) -> f64 {
        match self {
            Self::Discrete(d) => d.entropy(),
            Self::Gaussian(g) => g.entropy(),
        }
    }

    pub fn fit_uniform_summary(&self, mass: f64) -> RangeSummary {
        match self {
            Self::Discrete(d) => d.fit_uniform_summary(mass),
            Self::Gaussian(g) => g.fit_uniform_summary(mass),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            Self::Discrete(d) => d.logits().to_vec(),
            Self::Gaussian(g) => g.params(),
        }
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        match self {
            Self::Discrete(d) => d.set_logits(params),
            Self::Gaussian(g) => g.set_params(params),
        }
    }

    pub fn support(&self) -> &SupportBox {
        match self {
            Self::Discrete(d) => d.support(),
            Self::Gaussian(g) => g.support(),
        }
    }

    /// True where the distribution may produce a sample (used to mask
    /// parameters a gradient step must not touch, e.g. off-diagonal factor
    /// entries in diagonal mode).
    pub fn trainable_mask(&self) -> Vec<bool> {
        match self {
            Self::Discrete(d) => vec![true; d.bin_count()],
            Self::Gaussian(g) => g.trainable_mask(),
        }
    }
}

fn scalar_of(z: &[f64]) -> Result<f64> {
    match z {
        [v] => Ok(*v),
        _ => Err(Error::ShapeMismatch {
            expected: 1,
            got: z.len(),
        }),
    }
}

pub const DISTRIBUTION_SCHEMA: &str = "lsdr.distribution/v1";

/// Versioned on-disk form of a distribution.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistributionSnapshot {
    pub schema: String,
    pub epoch: usize,
    pub lineage: SeedLineage,
    pub distribution: DrDistribution,
}

impl DistributionSnapshot {
    pub fn new(distribution: DrDistribution, epoch: usize, lineage: SeedLineage) -> Self {
        Self {
            schema: DISTRIBUTION_SCHEMA.to_string(),
            epoch,
            lineage,
            distribution,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let snap: Self = serde_json::from_str(text)?;
        if snap.schema != DISTRIBUTION_SCHEMA {
            return Err(Error::Schema {
                path: "<distribution snapshot>".into(),
                expected: DISTRIBUTION_SCHEMA.into(),
                found: snap.schema,
            });
        }
        snap.distribution.validate()?;
        Ok(snap)
    }
}

impl DrDistribution {
    fn validate(&self) -> Result<()> {
        match self {
            Self::Discrete(d) => d.validate(),
            Self::Gaussian(g) => g.validate(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn support_box_rejects_inverted_bounds() {
        assert!(SupportBox::interval(1.0, 1.0, "m").is_err());
        assert!(SupportBox::interval(2.0, 1.0, "m").is_err());
        assert!(SupportBox::new(vec![0.0], vec![1.0, 2.0], vec!["a".into()]).is_err());
    }

    #[test]
    fn uniform_prior_density() {
        let b = SupportBox::new(vec![0.0, -1.0], vec![2.0, 1.0], vec!["a".into(), "b".into()])
            .unwrap();
        let p = UniformPrior::new(b);
        assert_eq!(p.density(&[1.0, 0.0]), 0.25);
        assert_eq!(p.density(&[3.0, 0.0]), 0.0);
    }

    #[test]
    fn out_of_support_names_value() {
        let b = SupportBox::interval(0.0, 1.0, "m").unwrap();
        match b.check(&[1.5]) {
            Err(Error::OutOfSupport { value, .. }) => assert_eq!(value, 1.5),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn jaccard_of_intervals() {
        assert_eq!(RangeSummary::jaccard((0.0, 1.0), (0.0, 1.0)), 1.0);
        assert_eq!(RangeSummary::jaccard((0.0, 1.0), (2.0, 3.0)), 0.0);
        assert!((RangeSummary::jaccard((0.0, 2.0), (1.0, 3.0)) - 1.0 / 3.0).abs() < 1e-15);
    }
}
