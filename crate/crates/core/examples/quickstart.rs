use obcs::experiment::generate_truth;
use obcs::metrics::recovery_report;
use obcs::rng::Seed;
use obcs::{MeasurementSet, NoiseChannel, RecoveryConfig, SamplingDistribution};

fn main() -> obcs::Result<()> {
    let (n, k, m) = (100, 4, 800);
    let x = generate_truth(n, k, Seed(1))?;

    // Gaussian rows, 5% of the labels flipped.
    let dist = SamplingDistribution::gaussian();
    let ms = MeasurementSet::generate(&x, &dist, m, Seed(2), NoiseChannel::new(0.05)?)?;

    let cfg = RecoveryConfig::default().with_truncation(k);
    let sol = obcs::solvers::recover_l1svm(&ms, &cfg)?;
    let report = recovery_report(&sol.estimate.normalize()?, &x, k)?;

    println!("support hits: {}/{k}", report.support_hits);
    println!("angular error: {:.4}", report.gen_error.unwrap());
    Ok(())
}
