use std::fmt::Write;

use serde::{Deserialize, Serialize};

use super::sweep::GridSweepResult;
use crate::distributions::{DistributionSnapshot, RangeSummary};
use crate::envs::Environment;
use crate::error::{Error, Result};

/// Where a reference range came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ReferenceSource {
    Analytic,
    GridSweep,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRange {
    pub source: ReferenceSource,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl ReferenceRange {
    /// Hull of the solvable points of a regular grid over the prior, from the
    /// environment's exact oracle. `None` without an oracle or without any
    /// solvable point.
    pub fn analytic(env: &dyn Environment, points_per_dim: usize) -> Option<Self> {
        let prior = &env.context_spec().prior;
        let d = prior.dim();
        let n = points_per_dim.max(2);
        let total = n.checked_pow(d as u32)?;
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for flat in 0..total {
            let mut rem = flat;
            let z: Vec<f64> = (0..d)
                .map(|k| {
                    let i = rem % n;
                    rem /= n;
                    prior.lower()[k] + prior.width(k) * i as f64 / (n - 1) as f64
                })
                .collect();
            if env.solvable(&z)? {
                for k in 0..d {
                    lower[k] = lower[k].min(z[k]);
                    upper[k] = upper[k].max(z[k]);
                }
            }
        }
        lower[0].is_finite().then_some(Self {
            source: ReferenceSource::Analytic,
            lower,
            upper,
        })
    }

    pub fn from_sweep(sweep: &GridSweepResult) -> Option<Self> {
        sweep.empirical_range().map(|(lower, upper)| Self {
            source: ReferenceSource::GridSweep,
            lower,
            upper,
        })
    }
}

/// Fitted ranges over a distribution history, compared with a reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RangeReport {
    pub names: Vec<String>,
    pub prior_lower: Vec<f64>,
    pub prior_upper: Vec<f64>,
    pub series: Vec<(usize, RangeSummary)>,
    pub converged: RangeSummary,
    pub reference: Option<ReferenceRange>,
    /// Per-dimension Jaccard index of converged and reference intervals.
    pub jaccard: Option<Vec<f64>>,
}

pub fn range_report(
    history: &[DistributionSnapshot],
    mass: f64,
    reference: Option<ReferenceRange>,
) -> Result<RangeReport> {
    let last = history
        .last()
        .ok_or_else(|| Error::Empty("distribution history".into()))?;
    let support = last.distribution.support();
    let series: Vec<(usize, RangeSummary)> = history
        .iter()
        .map(|s| (s.epoch, s.distribution.fit_uniform_summary(mass)))
        .collect();
    let converged = series[series.len() - 1].1.clone();
    let jaccard = reference.as_ref().map(|r| {
        (0..support.dim())
            .map(|k| RangeSummary::jaccard((converged.lower[k], converged.upper[k]), (r.lower[k], r.upper[k])))
            .collect()
    });
    Ok(RangeReport {
        names: support.names().to_vec(),
        prior_lower: support.lower().to_vec(),
        prior_upper: support.upper().to_vec(),
        series,
        converged,
        reference,
        jaccard,
    })
}

impl RangeReport {
    /// Markdown table with one row per parameter: initial, converged and
    /// reference ranges.
    pub fn to_markdown(&self) -> String {
        let mut out = String::from("| parameter | initial range | converged range | reference range |\n");
        out.push_str("|---|---|---|---|\n");
        for (k, name) in self.names.iter().enumerate() {
            let reference = match &self.reference {
                Some(r) => format!("[{:.3}, {:.3}] ({})", r.lower[k], r.upper[k], source_name(r.source)),
                None => "n/a".into(),
            };
            let _ = writeln!(
                out,
                "| {name} | [{:.3}, {:.3}] | [{:.3}, {:.3}] | {reference} |",
                self.prior_lower[k], self.prior_upper[k], self.converged.lower[k], self.converged.upper[k]
            );
        }
        out
    }
}

fn source_name(s: ReferenceSource) -> &'static str {
    match s {
        ReferenceSource::Analytic => "analytic",
        ReferenceSource::GridSweep => "grid sweep",
    }
}

/// Mean and population standard deviation of converged range endpoints
/// across seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedRangeStats {
    pub seeds: usize,
    pub lower_mean: Vec<f64>,
    pub lower_std: Vec<f64>,
    pub upper_mean: Vec<f64>,
    pub upper_std: Vec<f64>,
}

pub fn across_seeds(ranges: &[RangeSummary]) -> Result<SeedRangeStats> {
    let first = ranges.first().ok_or_else(|| Error::Empty("range list".into()))?;
    let d = first.lower.len();
    let stat = |get: &dyn Fn(&RangeSummary) -> f64| {
        let n = ranges.len() as f64;
        let mean = ranges.iter().map(get).sum::<f64>() / n;
        let var = ranges.iter().map(|r| (get(r) - mean).powi(2)).sum::<f64>() / n;
        (mean, var.sqrt())
    };
    let (mut lower_mean, mut lower_std, mut upper_mean, mut upper_std) = (vec![], vec![], vec![], vec![]);
    for k in 0..d {
        let (m, s) = stat(&|r| r.lower[k]);
        lower_mean.push(m);
        lower_std.push(s);
        let (m, s) = stat(&|r| r.upper[k]);
        upper_mean.push(m);
        upper_std.push(s);
    }
    Ok(SeedRangeStats {
        seeds: ranges.len(),
        lower_mean,
        lower_std,
        upper_mean,
        upper_std,
    })
}

impl SeedRangeStats {
    pub fn to_markdown(&self, names: &[String]) -> String {
        let mut out = format!("| parameter | converged range over {} seeds (mean ± std) |\n|---|---|\n", self.seeds);
        for (k, name) in names.iter().enumerate() {
            let _ = writeln!(
                out,
                "| {name} | [{:.3} ± {:.3}, {:.3} ± {:.3}] |",
                self.lower_mean[k], self.lower_std[k], self.upper_mean[k], self.upper_std[k]
            );
        }
        out
    }
}
