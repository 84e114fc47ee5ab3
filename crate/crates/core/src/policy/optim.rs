use serde::{Deserialize, Serialize};

/// First-order update rule applied to a flat parameter vector.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizerKind {
    /// Per-parameter RMS normalization without momentum.
    Rms,
    /// RMS normalization with bias-corrected momentum.
    Adam,
}

/// Optimizer state; `step` descends the given loss gradient.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub learning_rate: f64,
    first: Vec<f64>,
    second: Vec<f64>,
    steps: u64,
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const RMS_DECAY: f64 = 0.99;
const EPS: f64 = 1e-8;

impl Optimizer {
    pub fn new(kind: OptimizerKind, learning_rate: f64, params: usize) -> Self {
        Self {
            kind,
            learning_rate,
            first: vec![0.0; params],
            second: vec![0.0; params],
            steps: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        debug_assert_eq!(params.len(), grad.len());
        self.steps += 1;
        let lr = self.learning_rate;
        match self.kind {
            OptimizerKind::Rms => {
                let bias = 1.0 - RMS_DECAY.powi(self.steps.min(i32::MAX as u64) as i32);
                for ((p, g), v) in params.iter_mut().zip(grad).zip(&mut self.second) {
                    *v = RMS_DECAY * *v + (1.0 - RMS_DECAY) * g * g;
                    *p -= lr * g / ((*v / bias).sqrt() + EPS);
                }
            }
            OptimizerKind::Adam => {
                let t = self.steps.min(i32::MAX as u64) as i32;
                let (c1, c2) = (1.0 - BETA1.powi(t), 1.0 - BETA2.powi(t));
                for (((p, g), m), v) in params
                    .iter_mut()
                    .zip(grad)
                    .zip(&mut self.first)
                    .zip(&mut self.second)
                {
                    *m = BETA1 * *m + (1.0 - BETA1) * g;
                    *v = BETA2 * *v + (1.0 - BETA2) * g * g;
                    *p -= lr * (*m / c1) / ((*v / c2).sqrt() + EPS);
                }
            }
        }
    }
}

/// Scales `grad` in place so its L2 norm is at most `max_norm`; returns the
/// norm before clipping.
pub fn clip_grad_norm(grad: &mut [f64], max_norm: f64) -> f64 {
    let norm = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grad.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_gradient_leaves_params() {
        for kind in [OptimizerKind::Rms, OptimizerKind::Adam] {
            let mut opt = Optimizer::new(kind, 0.1, 3);
            let mut p = vec![1.0, -2.0, 3.0];
            opt.step(&mut p, &[0.0; 3]);
            assert_eq!(p, vec![1.0, -2.0, 3.0]);
        }
    }

    #[test]
    fn descends_a_quadratic() {
        for kind in [OptimizerKind::Rms, OptimizerKind::Adam] {
            let mut opt = Optimizer::new(kind, 0.05, 2);
            let mut p = vec![3.0, -4.0];
            for _ in 0..2000 {
                let g: Vec<f64> = p.iter().map(|x| 2.0 * x).collect();
                opt.step(&mut p, &g);
            }
            assert!(p.iter().all(|x| x.abs() < 0.05), "{kind:?} {p:?}");
        }
    }

    #[test]
    fn clipping_bounds_norm() {
        let mut g = vec![3.0, 4.0];
        assert_eq!(clip_grad_norm(&mut g, 1.0), 5.0);
        assert!((g[0] - 0.6).abs() < 1e-15 && (g[1] - 0.8).abs() < 1e-15);
    }
}
