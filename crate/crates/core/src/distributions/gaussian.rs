use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::{RangeSummary, SupportBox, UniformPrior};
use crate::error::{Error, Result};

/// Smallest allowed factor diagonal, as a fraction of the prior width.
pub const SCALE_FLOOR_FRACTION: f64 = 1e-6;

/// Multivariate normal `N(mean, L Lᵀ)` with `L` lower triangular.
///
/// The flat parameter layout is `[mean (d), log diag(L) (d), strictly lower
/// entries of L row by row (d(d-1)/2)]`. In diagonal mode the off-diagonal
/// entries stay at zero and receive zero gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussianDistribution {
    support: SupportBox,
    mean: Vec<f64>,
    log_diag: Vec<f64>,
    off_diag: Vec<f64>,
    diagonal_only: bool,
}

/// One confidence ellipse of a 2-D marginal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ellipse {
    pub dims: (usize, usize),
    pub center: [f64; 2],
    /// Major then minor semi-axis length.
    pub semi_axes: [f64; 2],
    /// Angle of the major axis from the first dimension's axis, radians.
    pub rotation: f64,
    pub k: f64,
}

impl Ellipse {
    pub fn point(&self, t: f64) -> [f64; 2] {
        let (x, y) = (self.semi_axes[0] * t.cos(), self.semi_axes[1] * t.sin());
        let (s, c) = self.rotation.sin_cos();
        [self.center[0] + c * x - s * y, self.center[1] + s * x + c * y]
    }
}

fn off_index(i: usize, j: usize) -> usize {
    debug_assert!(j < i);
    i * (i - 1) / 2 + j
}

impl GaussianDistribution {
    /// Mean at the box center, diagonal variance a tenth of the prior's.
    pub fn from_prior(support: &SupportBox, diagonal_only: bool) -> Self {
        let d = support.dim();
        let log_diag = support
            .widths()
            .iter()
            .map(|w| (w * w / 12.0 / 10.0).sqrt().ln())
            .collect();
        Self {
            support: support.clone(),
            mean: support.center(),
            log_diag,
            off_diag: vec![0.0; d * (d - 1) / 2],
            diagonal_only,
        }
    }

    /// Builds from an explicit mean and lower-triangular factor (row-major
    /// `d×d`, only the lower triangle is read).
    pub fn new(
        support: SupportBox,
        mean: Vec<f64>,
        factor: &[f64],
        diagonal_only: bool,
    ) -> Result<Self> {
        let d = support.dim();
        if mean.len() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                got: mean.len(),
            });
        }
        if factor.len() != d * d {
            return Err(Error::ShapeMismatch {
                expected: d * d,
                got: factor.len(),
            });
        }
        let mut log_diag = Vec::with_capacity(d);
        let mut off_diag = vec![0.0; d * (d - 1) / 2];
        for i in 0..d {
            let lii = factor[i * d + i];
            if !(lii > 0.0) {
                return Err(Error::Config(format!(
                    "factor diagonal entry {i} must be positive, got {lii}"
                )));
            }
            log_diag.push(lii.ln());
            for j in 0..i {
                if !diagonal_only {
                    off_diag[off_index(i, j)] = factor[i * d + j];
                }
            }
        }
        let mut g = Self {
            support,
            mean,
            log_diag,
            off_diag,
            diagonal_only,
        };
        g.apply_floor();
        g.validate()?;
        Ok(g)
    }

    pub(super) fn validate(&self) -> Result<()> {
        let d = self.support.dim();
        if self.mean.len() != d || self.log_diag.len() != d {
            return Err(Error::ShapeMismatch {
                expected: d,
                got: self.mean.len().min(self.log_diag.len()),
            });
        }
        if self.off_diag.len() != d * (d - 1) / 2 {
            return Err(Error::ShapeMismatch {
                expected: d * (d - 1) / 2,
                got: self.off_diag.len(),
            });
        }
        if self.params().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gaussian parameter".into()));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn support(&self) -> &SupportBox {
        &self.support
    }

    pub fn mean(&self) -> &[f64] {
        &self.mean
    }

    pub fn diagonal_only(&self) -> bool {
        self.diagonal_only
    }

    pub fn param_count(&self) -> usize {
        let d = self.dim();
        2 * d + d * (d - 1) / 2
    }

    pub fn params(&self) -> Vec<f64> {
        let mut p = Vec::with_capacity(self.param_count());
        p.extend_from_slice(&self.mean);
        p.extend_from_slice(&self.log_diag);
        p.extend_from_slice(&self.off_diag);
        p
    }

    pub fn set_params(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::ShapeMismatch {
                expected: self.param_count(),
                got: params.len(),
            });
        }
        if let Some(v) = params.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("gaussian parameter {v}")));
        }
        let d = self.dim();
        self.mean.copy_from_slice(&params[..d]);
        self.log_diag.copy_from_slice(&params[d..2 * d]);
        if self.diagonal_only {
            self.off_diag.iter_mut().for_each(|v| *v = 0.0);
        } else {
            self.off_diag.copy_from_slice(&params[2 * d..]);
        }
        self.apply_floor();
        Ok(())
    }

    pub(super) fn trainable_mask(&self) -> Vec<bool> {
        let d = self.dim();
        let mut m = vec![true; 2 * d];
        m.extend(std::iter::repeat_n(!self.diagonal_only, self.off_diag.len()));
        m
    }

    fn apply_floor(&mut self) {
        for (s, w) in self.log_diag.iter_mut().zip(self.support.widths()) {
            *s = s.max((SCALE_FLOOR_FRACTION * w).ln());
        }
    }

    pub fn factor(&self) -> DMatrix<f64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |i, j| {
            if i == j {
                self.log_diag[i].exp()
            } else if j < i {
                self.off_diag[off_index(i, j)]
            } else {
                0.0
            }
        })
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        let l = self.factor();
        &l * l.transpose()
    }

    pub fn std_devs(&self) -> Vec<f64> {
        let cov = self.covariance();
        (0..self.dim()).map(|i| cov[(i, i)].sqrt()).collect()
    }

    fn inverse_factor(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.factor()
            .solve_lower_triangular(&DMatrix::identity(d, d))
            .expect("factor diagonal is strictly positive")
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let d = self.dim();
        let eps = DVector::from_fn(d, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = self.factor() * eps;
        self.mean.iter().zip(x.iter()).map(|(m, v)| m + v).collect()
    }

    /// Whitened residual `y = L⁻¹(z − mean)`.
    fn whiten(&self, z: &[f64]) -> Result<DVector<f64>> {
        if z.len() != self.dim() {
            return Err(Error::ShapeMismatch {
                expected: self.dim(),
                got: z.len(),
            });
        }
        let r = DVector::from_iterator(self.dim(), z.iter().zip(&self.mean).map(|(a, b)| a - b));
        Ok(self
            .factor()
            .solve_lower_triangular(&r)
            .expect("factor diagonal is strictly positive"))
    }

    pub fn log_prob(&self, z: &[f64]) -> Result<f64> {
        let y = self.whiten(z)?;
        let d = self.dim() as f64;
        Ok(-0.5 * d * (2.0 * PI).ln() - self.log_diag.iter().sum::<f64>() - 0.5 * y.norm_squared())
    }

    pub fn grad_log_prob(&self, z: &[f64]) -> Result<Vec<f64>> {
        let l = self.factor();
        let y = self.whiten(z)?;
        // a = Σ⁻¹ (z − mean)
        let a = l
            .transpose()
            .solve_upper_triangular(&y)
            .expect("factor diagonal is strictly positive");
        let d = self.dim();
        let mut g = Vec::with_capacity(self.param_count());
        g.extend(a.iter().copied());
        for i in 0..d {
            g.push(l[(i, i)] * a[i] * y[i] - 1.0);
        }
        for i in 0..d {
            for j in 0..i {
                g.push(if self.diagonal_only { 0.0 } else { a[i] * y[j] });
            }
        }
        Ok(g)
    }

    /// `KL(U ‖ N)` against a uniform prior, in closed form:
    /// `−log V + ½ d log 2π + log det L + ½ [(c−μ)ᵀΣ⁻¹(c−μ) + tr(Σ⁻¹ D)]`
    /// with `c` the box center and `D = diag(width²/12)`.
    pub fn kl_from_uniform(&self, prior: &UniformPrior) -> Result<(f64, Vec<f64>)> {
        let d = self.dim();
        if prior.dim() != d {
            return Err(Error::Config(format!(
                "prior has {} dimensions, gaussian has {d}",
                prior.dim()
            )));
        }
        let l = self.factor();
        let linv = self.inverse_factor();
        let precision = linv.transpose() * &linv;
        let w = DVector::from_iterator(
            d,
            prior
                .support
                .center()
                .iter()
                .zip(&self.mean)
                .map(|(c, m)| c - m),
        );
        let box_var = DMatrix::from_diagonal(&DVector::from_iterator(
            d,
            prior.support.widths().iter().map(|w| w * w / 12.0),
        ));
        let second_moment = &w * w.transpose() + &box_var;
        let quad = (&precision * &second_moment).trace();
        let value = -prior.entropy()
            + 0.5 * d as f64 * (2.0 * PI).ln()
            + self.log_diag.iter().sum::<f64>()
            + 0.5 * quad;

        let pw = &precision * &w;
        let grad_factor = -(&precision * &second_moment * &precision * &l);
        let mut g = Vec::with_capacity(self.param_count());
        g.extend(pw.iter().map(|v| -v));
        for i in 0..d {
            g.push(1.0 + l[(i, i)] * grad_factor[(i, i)]);
        }
        for i in 0..d {
            for j in 0..i {
                g.push(if self.diagonal_only {
                    0.0
                } else {
                    grad_factor[(i, j)]
                });
            }
        }
        Ok((value, g))
    }

    /// `½ log((2πe)^d det Σ)`.
    pub fn entropy(&self) -> f64 {
        0.5 * self.dim() as f64 * (1.0 + (2.0 * PI).ln()) + self.log_diag.iter().sum::<f64>()
    }

    /// Per-dimension `mean ± k·std` with `k` the two-sided normal quantile
    /// for `mass`, clipped to the prior box padded by one width per side.
    pub fn fit_uniform_summary(&self, mass: f64) -> RangeSummary {
        let k = Normal::standard().inverse_cdf(0.5 * (1.0 + mass));
        let std = self.std_devs();
        let (mut lower, mut upper) = (Vec::new(), Vec::new());
        for i in 0..self.dim() {
            let w = self.support.width(i);
            let (lo_pad, hi_pad) = (self.support.lower()[i] - w, self.support.upper()[i] + w);
            lower.push((self.mean[i] - k * std[i]).clamp(lo_pad, hi_pad));
            upper.push((self.mean[i] + k * std[i]).clamp(lo_pad, hi_pad));
        }
        RangeSummary { lower, upper, mass }
    }

    /// Confidence ellipses at `k` standard deviations for every pair of
    /// dimensions.
    pub fn confidence_region(&self, k: f64) -> Result<Vec<Ellipse>> {
        let d = self.dim();
        if d < 2 {
            return Err(Error::Unsupported(
                "confidence regions need at least two dimensions".into(),
            ));
        }
        let cov = self.covariance();
        let mut out = Vec::new();
        for i in 0..d {
            for j in (i + 1)..d {
                let (a, b, c) = (cov[(i, i)], cov[(i, j)], cov[(j, j)]);
                let mid = 0.5 * (a + c);
                let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
                let (major, minor) = (mid + rad, (mid - rad).max(0.0));
                out.push(Ellipse {
                    dims: (i, j),
                    center: [self.mean[i], self.mean[j]],
                    semi_axes: [k * major.sqrt(), k * minor.sqrt()],
                    rotation: 0.5 * (2.0 * b).atan2(a - c),
                    k,
                });
            }
        }
        Ok(out)
    }
}
