use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const VARIANCE_FLOOR: f64 = 1e-8;

/// Exponentially averaged batch statistics of episode returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReturnStandardizer {
    pub decay: f64,
    mean: f64,
    var: f64,
    count: u64,
}

impl Default for ReturnStandardizer {
    fn default() -> Self {
        Self::new(0.99)
    }
}

impl ReturnStandardizer {
    pub fn new(decay: f64) -> Self {
        Self {
            decay,
            mean: 0.0,
            var: 0.0,
            count: 0,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        self.var
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    /// Folds the batch mean and variance into the running estimates (the
    /// first batch initializes them), then returns
    /// `(J − mean) / √(var + 1e-8)`.
    pub fn standardize(&mut self, returns: &[f64]) -> Result<Vec<f64>> {
        if returns.is_empty() {
            return Err(Error::Empty("returns to standardize".into()));
        }
        if returns.iter().any(|r| !r.is_finite()) {
            return Err(Error::NonFinite("episode return".into()));
        }
        let n = returns.len() as f64;
        let batch_mean = returns.iter().sum::<f64>() / n;
        let batch_var = returns.iter().map(|r| (r - batch_mean).powi(2)).sum::<f64>() / n;
        if self.count == 0 {
            self.mean = batch_mean;
            self.var = batch_var;
        } else {
            let b = self.decay;
            self.mean = b * self.mean + (1.0 - b) * batch_mean;
            self.var = b * self.var + (1.0 - b) * batch_var;
        }
        self.count += 1;
        let scale = (self.var + VARIANCE_FLOOR).sqrt();
        Ok(returns.iter().map(|r| (r - self.mean) / scale).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_first_batch_maps_to_zero() {
        let mut s = ReturnStandardizer::default();
        assert_eq!(s.standardize(&[0.0, 0.0, 0.0]).unwrap(), vec![0.0; 3]);
        let mut s = ReturnStandardizer::default();
        assert_eq!(s.standardize(&[4.0, 4.0]).unwrap(), vec![0.0; 2]);
    }

    #[test]
    fn zero_decay_is_a_batch_z_score() {
        let mut s = ReturnStandardizer::new(0.0);
        s.standardize(&[100.0, -3.0]).unwrap();
        let batch = [1.0, 2.0, 4.0, 7.0];
        let out = s.standardize(&batch).unwrap();
        let mean = 3.5;
        let sd = (batch.iter().map(|b| (b - mean) * (b - mean)).sum::<f64>() / 4.0 + 1e-8).sqrt();
        for (o, b) in out.iter().zip(batch) {
            assert!((o - (b - mean) / sd).abs() < 1e-10);
        }
    }

    #[test]
    fn empty_batch_is_an_error() {
        assert!(ReturnStandardizer::default().standardize(&[]).is_err());
    }
}
