//! Error measures between an estimate `x̂` and the truth `x`.
//!
//! The generalization error `J(x̂, x)` is the probability that a fresh
//! measurement row gets different signs under `x̂` and `x`. For radially
//! invariant rows it has the closed form `arccos(⟨x̂, x⟩) / π` on unit
//! vectors; for any other law it is estimated by Monte Carlo.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::measurement::{NoiseChannel, SamplingDistribution};
use crate::rng::Seed;
use crate::sparse::{check_same_dim, sign_unchecked, truncate_top_k, BipolarLabel, SparseVector};

pub const DEFAULT_TRIALS: usize = 100_000;

fn unit_pair(xhat: &SparseVector, x: &SparseVector) -> Result<(SparseVector, SparseVector)> {
    check_same_dim(xhat, x)?;
    Ok((xhat.normalize()?, x.normalize()?))
}

/// `arccos(⟨x̂/‖x̂‖, x/‖x‖⟩) / π`.
pub fn gen_error_closed_form(xhat: &SparseVector, x: &SparseVector) -> Result<f64> {
    let (u, v) = unit_pair(xhat, x)?;
    let c = u.dot(v.values()).clamp(-1.0, 1.0);
    Ok(c.acos() / std::f64::consts::PI)
}

/// Counts of sign disagreements on one shared stream of rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Disagreements {
    pub trials: usize,
    /// `sign⟨a, x̂⟩ ≠ sign⟨a, x⟩`
    pub clean: usize,
    /// `sign⟨a, x̂⟩ ≠ noisy label of a`
    pub noisy: usize,
}

/// Draws `trials` rows from `dist` and counts disagreements. Rows come
/// from one substream and channel flips from another, so the clean count
/// does not depend on the channel.
pub fn count_disagreements(
    xhat: &SparseVector,
    x: &SparseVector,
    dist: &SamplingDistribution,
    channel: NoiseChannel,
    trials: usize,
    seed: Seed,
) -> Result<Disagreements> {
    check_same_dim(xhat, x)?;
    if trials == 0 {
        return Err(invalid("at least one Monte Carlo trial is required"));
    }
    let n = x.ambient_dim();
    let sampler = dist.sampler(n)?;
    let mut rows = seed.child(0).rng();
    let mut flips = seed.child(1).rng();
    let mut a = vec![0.0; n];
    let (mut clean, mut noisy) = (0usize, 0usize);
    for _ in 0..trials {
        sampler.fill(&mut rows, &mut a);
        let predicted = sign_unchecked(xhat.dot(&a));
        let truth = sign_unchecked(x.dot(&a));
        let observed = if channel.flips(&mut flips) { -truth } else { truth };
        clean += usize::from(predicted != truth);
        noisy += usize::from(predicted != observed);
    }
    Ok(Disagreements { trials, clean, noisy })
}

/// Monte Carlo estimate of `J(x̂, x)` under `dist`.
pub fn gen_error_monte_carlo(
    xhat: &SparseVector,
    x: &SparseVector,
    dist: &SamplingDistribution,
    trials: usize,
    seed: Seed,
) -> Result<f64> {
    let d = count_disagreements(xhat, x, dist, NoiseChannel::noiseless(), trials, seed)?;
    Ok(d.clean as f64 / trials as f64)
}

/// Monte Carlo estimate of `ρ(x̂, x) = E|sign⟨a, x̂⟩ - sign⟨a, x⟩|`.
pub fn rho_monte_carlo(
    xhat: &SparseVector,
    x: &SparseVector,
    dist: &SamplingDistribution,
    trials: usize,
    seed: Seed,
) -> Result<f64> {
    check_same_dim(xhat, x)?;
    if trials == 0 {
        return Err(invalid("at least one Monte Carlo trial is required"));
    }
    let n = x.ambient_dim();
    let sampler = dist.sampler(n)?;
    let mut rows = seed.child(0).rng();
    let mut a = vec![0.0; n];
    let mut total = 0.0;
    for _ in 0..trials {
        sampler.fill(&mut rows, &mut a);
        let d = sign_unchecked(xhat.dot(&a)).as_f64() - sign_unchecked(x.dot(&a)).as_f64();
        total += d.abs();
    }
    Ok(total / trials as f64)
}

/// Monte Carlo estimate of the risk against labels passed through `channel`;
/// tends to `α + (1 - 2α) J(x̂, x)`.
pub fn noisy_risk(
    xhat: &SparseVector,
    x: &SparseVector,
    dist: &SamplingDistribution,
    channel: NoiseChannel,
    trials: usize,
    seed: Seed,
) -> Result<f64> {
    let d = count_disagreements(xhat, x, dist, channel, trials, seed)?;
    Ok(d.noisy as f64 / trials as f64)
}

/// Fraction of positions where `labels` and `predictions` differ.
pub fn empirical_risk(labels: &[BipolarLabel], predictions: &[BipolarLabel]) -> Result<f64> {
    if labels.len() != predictions.len() {
        return Err(invalid(format!(
            "{} labels but {} predictions",
            labels.len(),
            predictions.len()
        )));
    }
    if labels.is_empty() {
        return Err(invalid("empirical risk needs at least one sample"));
    }
    let miss: u32 = labels
        .iter()
        .zip(predictions)
        .map(|(y, p)| u32::from(y.indicator().abs_diff(p.indicator())))
        .sum();
    Ok(f64::from(miss) / labels.len() as f64)
}

/// The Goemans–Williamson constant `min_θ (2/π) θ / (1 - cos θ)` and its minimizer.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GwConstant {
    pub alpha: f64,
    pub theta: f64,
}

pub fn gw_ratio(theta: f64) -> f64 {
    2.0 / std::f64::consts::PI * theta / (1.0 - theta.cos())
}

fn compute_gw() -> GwConstant {
    use std::f64::consts::TAU;
    const GRID: usize = 200_000;
    let h = TAU / GRID as f64;
    let best = (1..=GRID)
        .map(|i| i as f64 * h)
        .min_by(|a, b| gw_ratio(*a).total_cmp(&gw_ratio(*b)))
        .expect("nonempty grid");
    // golden-section refinement on the bracketing cell
    let (mut lo, mut hi) = (best - h, (best + h).min(TAU));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - g * (hi - lo);
    let mut d = lo + g * (hi - lo);
    while hi - lo > 1e-12 {
        if gw_ratio(c) < gw_ratio(d) {
            hi = d;
        } else {
            lo = c;
        }
        c = hi - g * (hi - lo);
        d = lo + g * (hi - lo);
    }
    let theta = 0.5 * (lo + hi);
    GwConstant { alpha: gw_ratio(theta), theta }
}

pub fn gw_constant() -> GwConstant {
    static GW: OnceLock<GwConstant> = OnceLock::new();
    *GW.get_or_init(compute_gw)
}

pub fn gw_alpha() -> f64 {
    gw_constant().alpha
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EuclideanBound {
    /// `‖x̂ - x‖²`
    pub lhs: f64,
    /// `(4 / α_GW) J(x̂, x)`
    pub rhs: f64,
    pub holds: bool,
}

/// Checks `‖x̂ - x‖² ≤ (4/α_GW) J(x̂, x)` for unit vectors.
pub fn euclidean_bound_check(xhat: &SparseVector, x: &SparseVector) -> Result<EuclideanBound> {
    check_same_dim(xhat, x)?;
    for (name, v) in [("estimate", xhat), ("truth", x)] {
        let norm = v.norm2();
        if norm == 0.0 {
            return Err(Error::DegenerateInput(format!("{name} is the zero vector")));
        }
        if (norm - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("{name} must have unit norm, has {norm}")));
        }
    }
    let lhs = xhat.distance_sq(x)?;
    let rhs = 4.0 / gw_alpha() * gen_error_closed_form(xhat, x)?;
    Ok(EuclideanBound { lhs, rhs, holds: lhs <= rhs + 1e-9 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    /// `None` when the estimate is zero and defines no halfspace.
    pub gen_error: Option<f64>,
    pub rho: Option<f64>,
    /// `‖x̂ - x‖² / n`
    pub mse: f64,
    pub support_hits: usize,
    pub noisy_risk: Option<f64>,
    pub direction_defined: bool,
}

/// Closed-form angular errors, mean squared error and support overlap.
pub fn recovery_report(xhat: &SparseVector, x: &SparseVector, k: usize) -> Result<ErrorReport> {
    check_same_dim(xhat, x)?;
    let n = x.ambient_dim();
    let mse = xhat.distance_sq(x)? / n as f64;
    let kept = truncate_top_k(xhat, k)?.support();
    let truth = x.support();
    let support_hits = kept.iter().filter(|i| truth.binary_search(i).is_ok()).count();
    let direction_defined = !xhat.is_zero() && !x.is_zero();
    let gen_error = if direction_defined { Some(gen_error_closed_form(xhat, x)?) } else { None };
    Ok(ErrorReport {
        gen_error,
        rho: gen_error.map(|j| 2.0 * j),
        mse,
        support_hits,
        noisy_risk: None,
        direction_defined,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn sv(v: &[f64]) -> SparseVector {
        SparseVector::new(v.to_vec())
    }

    #[test]
    fn closed_form_examples() {
        let x = sv(&[0.6, 0.8]);
        assert_eq!(gen_error_closed_form(&x, &x).unwrap(), 0.0);
        assert!((gen_error_closed_form(&sv(&[0.8, -0.6]), &x).unwrap() - 0.5).abs() < 1e-15);
        assert!((gen_error_closed_form(&x.scaled(-1.0), &x).unwrap() - 1.0).abs() < 1e-15);
        assert!(gen_error_closed_form(&sv(&[0.0, 0.0]), &x).is_err());
        // scale invariance
        let y = sv(&[0.3, -1.7]);
        let j = gen_error_closed_form(&y, &x).unwrap();
        assert!((gen_error_closed_form(&y.scaled(9.0), &x.scaled(0.01)).unwrap() - j).abs() < 1e-15);
    }

    #[test]
    fn monte_carlo_examples() {
        let g = SamplingDistribution::gaussian();
        let x = sv(&[1.0, 0.0]);
        assert_eq!(gen_error_monte_carlo(&x, &x, &g, 1000, Seed(1)).unwrap(), 0.0);
        let at60 = sv(&[(PI / 3.0).cos(), (PI / 3.0).sin()]);
        let j = gen_error_monte_carlo(&at60, &x, &g, 100_000, Seed(2)).unwrap();
        assert!((j - 1.0 / 3.0).abs() < 0.005, "{j}");
        let r = SamplingDistribution::rademacher();
        assert_eq!(gen_error_monte_carlo(&sv(&[1.0, 0.5]), &x, &r, 10_000, Seed(3)).unwrap(), 0.0);
        assert!(gen_error_monte_carlo(&sv(&[1.0]), &x, &g, 10, Seed(3)).is_err());
        assert!(gen_error_monte_carlo(&x, &x, &g, 0, Seed(3)).is_err());
    }

    #[test]
    fn rho_is_twice_j_on_the_same_stream() {
        let g = SamplingDistribution::gaussian();
        let a = sv(&[0.2, -0.9, 0.4]);
        let b = sv(&[0.5, 0.5, -0.1]);
        for seed in 0..5 {
            let j = gen_error_monte_carlo(&a, &b, &g, 20_000, Seed(seed)).unwrap();
            let rho = rho_monte_carlo(&a, &b, &g, 20_000, Seed(seed)).unwrap();
            assert_eq!(rho, 2.0 * j);
        }
    }

    #[test]
    fn noisy_risk_examples() {
        let g = SamplingDistribution::gaussian();
        let x = sv(&[1.0, 0.0]);
        let r = noisy_risk(&x, &x, &g, NoiseChannel::new(0.2).unwrap(), 100_000, Seed(4)).unwrap();
        assert!((r - 0.2).abs() < 0.01, "{r}");
        let perp = sv(&[0.0, 1.0]);
        let r = noisy_risk(&perp, &x, &g, NoiseChannel::new(0.1).unwrap(), 100_000, Seed(5)).unwrap();
        assert!((r - 0.5).abs() < 0.01, "{r}");
        let y = sv(&[0.7, 0.3]);
        assert_eq!(
            noisy_risk(&y, &x, &g, NoiseChannel::noiseless(), 5000, Seed(6)).unwrap(),
            gen_error_monte_carlo(&y, &x, &g, 5000, Seed(6)).unwrap()
        );
    }

    #[test]
    fn empirical_risk_examples() {
        let l = |v: &[i64]| v.iter().map(|&y| BipolarLabel::from_value(y).unwrap()).collect::<Vec<_>>();
        assert_eq!(empirical_risk(&l(&[1, -1]), &l(&[1, -1])).unwrap(), 0.0);
        assert_eq!(empirical_risk(&l(&[1, -1]), &l(&[-1, 1])).unwrap(), 1.0);
        assert_eq!(empirical_risk(&l(&[1, 1, -1, -1]), &l(&[1, -1, -1, 1])).unwrap(), 0.5);
        assert!(empirical_risk(&l(&[1]), &l(&[1, 1])).is_err());
        assert!(empirical_risk(&[], &[]).is_err());
    }

    #[test]
    fn gw_constant_value() {
        assert!((gw_ratio(PI) - 1.0).abs() < 1e-15);
        let gw = gw_constant();
        assert!(gw.alpha > 0.87856 && gw.alpha < 0.8786, "{}", gw.alpha);
        assert!(gw.theta > 2.3 && gw.theta < 2.4, "{}", gw.theta);
        // independent check: derivative of θ/(1-cos θ) vanishes where
        // 1 - cos θ = θ sin θ; bisect that on [2.3, 2.4]
        let f = |t: f64| 1.0 - t.cos() - t * t.sin();
        let (mut lo, mut hi) = (2.3, 2.4);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((gw.theta - lo).abs() < 1e-6);
        assert!((gw.alpha - gw_ratio(lo)).abs() < 1e-12);
    }

    #[test]
    fn euclidean_bound_examples() {
        let x = sv(&[1.0, 0.0]);
        let same = euclidean_bound_check(&x, &x).unwrap();
        assert_eq!((same.lhs, same.rhs, same.holds), (0.0, 0.0, true));
        let perp = euclidean_bound_check(&sv(&[0.0, 1.0]), &x).unwrap();
        assert!((perp.lhs - 2.0).abs() < 1e-12 && (perp.rhs - 2.2765).abs() < 1e-3 && perp.holds);
        let opp = euclidean_bound_check(&sv(&[-1.0, 0.0]), &x).unwrap();
        assert!((opp.lhs - 4.0).abs() < 1e-12 && (opp.rhs - 4.5529).abs() < 1e-3 && opp.holds);
        assert!(euclidean_bound_check(&sv(&[0.0, 0.0]), &x).is_err());
        assert!(euclidean_bound_check(&sv(&[2.0, 0.0]), &x).is_err());
    }

    #[test]
    fn report_examples() {
        let x = sv(&[0.6, 0.0, 0.8, 0.0]);
        let r = recovery_report(&x, &x, 2).unwrap();
        assert_eq!((r.mse, r.support_hits, r.gen_error), (0.0, 2, Some(0.0)));
        let r = recovery_report(&SparseVector::zeros(4), &x, 2).unwrap();
        assert_eq!(r.support_hits, 0);
        assert!(!r.direction_defined && r.gen_error.is_none() && r.rho.is_none());
        let x = sv(&[1.0, 1.0, 0.0]);
        let r = recovery_report(&sv(&[1.0, 0.0, -0.1]), &x, 2).unwrap();
        assert_eq!(r.support_hits, 1);
        assert_eq!(r.rho, r.gen_error.map(|j| 2.0 * j));
        assert!(recovery_report(&sv(&[1.0]), &x, 1).is_err());
    }
}
