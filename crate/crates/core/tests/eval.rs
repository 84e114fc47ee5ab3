//! Evaluation protocols: smoothing against a direct least-squares solve,
//! range reports, test sets, fine-tuning and grid sweeps.

use lsdr::distributions::{DiscreteDistribution, DistributionSnapshot, SupportBox};
use lsdr::envs::{Environment, LinearReacher, LinearReacherParams};
use lsdr::eval::{
    across_seeds, finetune_eval, grid_sweep, make_test_set, range_report, smooth_curve, FinetuneConfig,
    ReferenceRange, SweepConfig, TestSet,
};
use lsdr::policy::{ActorCritic, NetworkConfig, OptimizerKind, PpoConfig, PpoLearner};
use lsdr::rng::{label, stream, SeedLineage};
use lsdr::train::ppo_epoch;
use lsdr::{Context, DrDistribution, UniformPrior};
use rand::Rng;

/// Least-squares polynomial value at `x = 0` by Gaussian elimination on the
/// normal equations, abscissae scaled to [-1, 1] for conditioning.
fn ls_value_at_zero(xs: &[f64], ys: &[f64], degree: usize) -> f64 {
    let scale = xs.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    let m = degree + 1;
    let mut a = vec![vec![0.0; m + 1]; m];
    for (x, y) in xs.iter().zip(ys) {
        let u = x / scale;
        for r in 0..m {
            for c in 0..m {
                a[r][c] += u.powi((r + c) as i32);
            }
            a[r][m] += u.powi(r as i32) * y;
        }
    }
    for col in 0..m {
        let pivot = (col..m).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs())).unwrap();
        a.swap(col, pivot);
        for row in 0..m {
            if row != col {
                let f = a[row][col] / a[col][col];
                for k in col..=m {
                    a[row][k] -= f * a[col][k];
                }
            }
        }
    }
    a[0][m] / a[0][0]
}

#[test]
fn smoothing_matches_a_direct_least_squares_solve() {
    let mut rng = stream(17, &[]);
    let series: Vec<f64> = (0..80)
        .map(|i| (i as f64 * 0.15).sin() + 0.2 * rng.random_range(-1.0..1.0))
        .collect();
    let (window, order) = (10, 5);
    let smoothed = smooth_curve(&series, window, order).unwrap();
    let n = series.len();
    let (left, right) = ((window - 1) / 2, window - 1 - (window - 1) / 2);
    for i in 0..n {
        let edge = i.min(n - 1 - i);
        let (lo, hi) = (i - left.min(edge), i + right.min(edge));
        let xs: Vec<f64> = (lo..=hi).map(|j| j as f64 - i as f64).collect();
        let degree = order.min(xs.len() - 1);
        let expected = ls_value_at_zero(&xs, &series[lo..=hi], degree);
        assert!((smoothed[i] - expected).abs() < 1e-9, "point {i}: {} vs {expected}", smoothed[i]);
    }
}

#[test]
fn smoothing_rejects_degenerate_windows() {
    assert!(smooth_curve(&[1.0; 20], 1, 0).is_err());
    assert!(smooth_curve(&[1.0; 20], 5, 5).is_err());
    assert!(smooth_curve(&[1.0; 4], 10, 5).is_err());
}

fn snapshot(logits: Vec<f64>, lower: f64, upper: f64) -> DistributionSnapshot {
    let support = SupportBox::interval(lower, upper, "z").unwrap();
    let dist = DrDistribution::Discrete(DiscreteDistribution::from_logits(support, logits).unwrap());
    DistributionSnapshot::new(dist, 0, SeedLineage::new(0, &[]))
}

#[test]
fn uniform_distribution_reports_the_prior_range() {
    let history = vec![snapshot(vec![0.0; 100], 1.0, 3.0)];
    let bin = 0.02;
    let full = range_report(&history, 1.0, None).unwrap();
    assert!((full.converged.lower[0] - 1.0).abs() <= bin && (full.converged.upper[0] - 3.0).abs() <= bin);
    // At the default 0.95 mass the fit is 95% of the box wide.
    let default = range_report(&history, 0.95, None).unwrap();
    let width = default.converged.upper[0] - default.converged.lower[0];
    assert!((width - 0.95 * 2.0).abs() <= bin, "width {width}");
}

#[test]
fn block_mass_reports_the_block() {
    let logits: Vec<f64> = (0..100).map(|b| if (10..20).contains(&b) { 0.0 } else { -1e3 }).collect();
    let report = range_report(&[snapshot(logits, 0.0, 1.0)], 0.95, None).unwrap();
    assert!((report.converged.lower[0] - 0.10).abs() <= 0.01);
    assert!((report.converged.upper[0] - 0.20).abs() <= 0.01);
    let md = report.to_markdown();
    assert!(md.contains("| z | [0.000, 1.000] | [0.100, 0.200] | n/a |"), "{md}");
}

#[test]
fn reacher_reference_range_is_the_solvable_interval() {
    let env = LinearReacher::new(LinearReacherParams::default(), &[0]).unwrap();
    let r = ReferenceRange::analytic(&env, 1001).unwrap();
    assert_eq!(r.lower, vec![1.0]);
    // The grid point at exactly m* may round either way.
    assert!((r.upper[0] - 2.0).abs() <= 0.0025, "{:?}", r.upper);
}

#[test]
fn across_seed_statistics_are_population_moments() {
    let ranges: Vec<_> = [(1.0, 2.0), (1.2, 2.4)]
        .iter()
        .map(|(lo, hi)| snapshot(vec![0.0; 10], *lo, *hi).distribution.fit_uniform_summary(1.0))
        .collect();
    let stats = across_seeds(&ranges).unwrap();
    assert!((stats.lower_mean[0] - 1.1).abs() < 1e-12 && (stats.lower_std[0] - 0.1).abs() < 1e-12);
    assert!((stats.upper_mean[0] - 2.2).abs() < 1e-12 && (stats.upper_std[0] - 0.2).abs() < 1e-12);
}

#[test]
fn test_set_mean_obeys_the_law_of_large_numbers() {
    let prior = UniformPrior::new(SupportBox::interval(1.0, 3.0, "mass").unwrap());
    let set = make_test_set(&prior, 100_000, 8).unwrap();
    assert!(set.contexts.iter().all(|c| (1.0..=3.0).contains(&c[0])));
    let mean = set.contexts.iter().map(|c| c[0]).sum::<f64>() / 1e5;
    // Uniform on a width-2 box: sd = 2/√12.
    let se = 2.0 / 12f64.sqrt() / 1e5f64.sqrt();
    assert!((mean - 2.0).abs() < 3.0 * se, "mean {mean}");
    assert_eq!(make_test_set(&prior, 50, 8).unwrap(), make_test_set(&prior, 50, 8).unwrap());
    assert!(make_test_set(&prior, 0, 8).is_err());
}

fn small_ppo() -> PpoConfig {
    PpoConfig {
        optimizer: OptimizerKind::Adam,
        ..PpoConfig::default()
    }
}

fn small_net() -> NetworkConfig {
    NetworkConfig {
        hidden: vec![16],
        ..NetworkConfig::default()
    }
}

fn reacher() -> LinearReacher {
    LinearReacher::new(LinearReacherParams::default(), &[0]).unwrap()
}

#[test]
fn finetuning_is_reproducible_and_budget_zero_only_evaluates() {
    let env = reacher();
    let agent = ActorCritic::new(2, 1, 1, &small_net(), &mut stream(0, &[])).unwrap();
    let set = TestSet {
        seed: 0,
        contexts: vec![Context::scalar(1.2), Context::scalar(2.6)],
    };
    let config = FinetuneConfig {
        budget: 1500,
        buffer_size: 500,
        eval_rollouts: 2,
        ppo: small_ppo(),
    };
    let a = finetune_eval(&agent, &set, &env, &config, 3, 1).unwrap();
    let b = finetune_eval(&agent, &set, &env, &config, 3, 2).unwrap();
    assert_eq!(a, b);
    assert_eq!(a[0].points.iter().map(|p| p.env_steps).collect::<Vec<_>>(), vec![0, 500, 1000, 1500]);
    assert_eq!(a[1].solvable, Some(false));

    let zero = FinetuneConfig { budget: 0, ..config };
    let c = finetune_eval(&agent, &set, &env, &zero, 3, 1).unwrap();
    assert!(c.iter().all(|curve| curve.points.len() == 1));
    assert_eq!(c[0].jumpstart(), a[0].jumpstart());
}

#[test]
fn unsolvable_context_stays_below_the_goal_threshold() {
    let env = reacher();
    let agent = ActorCritic::new(2, 1, 1, &small_net(), &mut stream(1, &[])).unwrap();
    let set = TestSet {
        seed: 0,
        contexts: vec![Context::scalar(2.3), Context::scalar(2.9)],
    };
    let config = FinetuneConfig {
        budget: 20_000,
        buffer_size: 2000,
        eval_rollouts: 1,
        ppo: small_ppo(),
    };
    for curve in finetune_eval(&agent, &set, &env, &config, 0, 1).unwrap() {
        assert!(curve.returns().iter().all(|r| *r < env.success_threshold()), "{:?}", curve.returns());
    }
}

#[test]
fn one_cell_sweep_is_plain_single_context_training() {
    let env = reacher();
    let config = SweepConfig {
        cells: 1,
        epochs: 3,
        buffer_size: 300,
        eval_every: 1,
        eval_rollouts: 1,
        ppo: small_ppo(),
        network: small_net(),
    };
    let sweep = grid_sweep(&env, &config, 5, 1).unwrap();
    assert_eq!(sweep.cells.len(), 1);
    let cell = &sweep.cells[0];
    assert_eq!(cell.context, Context::scalar(2.0));

    let agent = ActorCritic::new(2, 1, 1, &config.network, &mut stream(5, &[label::SWEEP, 0, label::INIT])).unwrap();
    let mut learner = PpoLearner::new(agent, &config.ppo);
    let mut best = f64::NEG_INFINITY;
    for epoch in 0..3u64 {
        let path = [label::SWEEP, 0, label::EPOCH, epoch];
        ppo_epoch(&mut learner, &env, |_| Context::scalar(2.0), 300, &config.ppo, 5, &path, 1).unwrap();
        let eval = [label::SWEEP, 0, label::EVAL, epoch];
        best = best.max(lsdr::eval::evaluate_policy(&learner.agent, &env, &cell.context, 1, 5, &eval).unwrap());
    }
    assert_eq!(cell.best_return, best);
    assert_eq!(cell.env_steps, 900);
}

#[test]
fn sweep_budget_sums_over_cells() {
    let env = reacher();
    let config = SweepConfig {
        cells: 4,
        epochs: 2,
        buffer_size: 100,
        eval_every: 2,
        eval_rollouts: 1,
        ppo: small_ppo(),
        network: small_net(),
    };
    let sweep = grid_sweep(&env, &config, 0, 2).unwrap();
    assert_eq!(sweep.cells.len(), 4);
    assert_eq!(sweep.total_env_steps, sweep.cells.iter().map(|c| c.env_steps).sum::<u64>());
    assert_eq!(sweep.total_env_steps, 4 * 2 * 100);
    let widths: f64 = sweep.cells.iter().map(|c| c.upper[0] - c.lower[0]).sum();
    assert!((widths - 2.0).abs() < 1e-12);
}
