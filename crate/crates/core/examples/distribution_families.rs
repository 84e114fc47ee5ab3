//! The two trainable context distributions side by side: a discrete
//! distribution over 100 bins and a full-covariance Gaussian, both
//! initialized from the same uniform prior.
//!
//! ```text
//! cargo run --release --example distribution_families
//! ```

use lsdr::distributions::{DrDistribution, SupportBox, UniformPrior, DEFAULT_BINS};
use lsdr::rng::stream;
use lsdr::Family;

fn describe(name: &str, dist: &DrDistribution, prior: &UniformPrior) -> anyhow::Result<()> {
    let mut rng = stream(0, &[1]);
    let samples: Vec<_> = (0..5).map(|_| dist.sample(&mut rng)).collect();
    let (kl, _) = dist.kl_from_prior(prior)?;
    let range = dist.fit_uniform_summary(0.95);
    println!("{name}");
    println!("  parameters       {}", dist.params().len());
    println!("  entropy          {:.4}", dist.entropy());
    println!("  KL(prior || p)   {kl:.4}");
    println!("  95% range        {:?} .. {:?}", range.lower, range.upper);
    for z in &samples {
        println!("  sample {:?}  log p = {:.4}", z.0, dist.log_prob(&z.0)?);
    }
    Ok(())
}

fn main() -> anyhow::Result<()> {
    let line = SupportBox::interval(1.0, 3.0, "mass")?;
    let prior = UniformPrior::new(line);
    let mut discrete = DrDistribution::initial(Family::Discrete, &prior, DEFAULT_BINS, false)?;
    describe("discrete, uniform logits", &discrete, &prior)?;

    // Tilt the logits toward light masses and watch the KL grow.
    let tilted: Vec<f64> = (0..DEFAULT_BINS).map(|b| -3.0 * b as f64 / DEFAULT_BINS as f64).collect();
    discrete.set_params(&tilted)?;
    describe("discrete, tilted toward light masses", &discrete, &prior)?;

    let plane = SupportBox::new(vec![0.5, 0.0], vec![2.0, 1.0], vec!["mass".into(), "damping".into()])?;
    let prior2 = UniformPrior::new(plane);
    let gaussian = DrDistribution::initial(Family::Gaussian, &prior2, DEFAULT_BINS, false)?;
    describe("gaussian, centered with a tenth of the prior variance", &gaussian, &prior2)?;
    if let DrDistribution::Gaussian(g) = &gaussian {
        for k in [1.0, 2.0, 3.0] {
            let e = &g.confidence_region(k)?[0];
            println!("  {k}-sigma ellipse semi-axes {:.3} x {:.3}", e.semi_axes[0], e.semi_axes[1]);
        }
    }
    Ok(())
}
