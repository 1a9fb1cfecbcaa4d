//! Times the affine ℓ1-SVM under both pivot rules at desk scale.

use std::time::Instant;

use obcs::experiment::generate_truth;
use obcs::lp::PivotRule;
use obcs::rng::Seed;
use obcs::solvers::recover_l1svm_affine;
use obcs::{MeasurementSet, NoiseChannel, RecoveryConfig, SamplingDistribution};

fn main() -> obcs::Result<()> {
    let (n, k) = (200, 5);
    let x = generate_truth(n, k, Seed(0))?;
    let dist = SamplingDistribution::gaussian().with_offsets(1.0);
    for m in [500, 1000, 2000] {
        let ms = MeasurementSet::generate(&x, &dist, m, Seed(1), NoiseChannel::noiseless())?;
        for rule in [PivotRule::Dantzig, PivotRule::Bland] {
            let cfg = RecoveryConfig { pivot_rule: rule, ..RecoveryConfig::default().with_truncation(k) };
            let start = Instant::now();
            let sol = recover_l1svm_affine(&ms, &cfg)?;
            println!(
                "m={m:5} {rule:?}: {:.2}s, {} iterations, {:?}",
                start.elapsed().as_secs_f64(),
                sol.iterations_used,
                sol.status
            );
        }
    }
    Ok(())
}
