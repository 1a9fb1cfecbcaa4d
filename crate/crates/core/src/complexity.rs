//! Sample-complexity and rate calculators for sparse halfspace learning.
//!
//! Probability bounds are evaluated as natural logarithms so that
//! `(2em/d)^d` never overflows; [`LogBound`] carries the raw log value
//! next to the value clamped to `[0, 1]`.

use std::f64::consts::{E, LN_2};

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::metrics::gw_alpha;
use crate::vc::{vc_bounds_affine, vc_lower_bound, vc_upper_bound};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogBound {
    /// Natural log of the unclamped bound.
    pub ln_value: f64,
    /// `min(1, exp(ln_value))`
    pub value: f64,
}

impl LogBound {
    pub fn from_ln(ln_value: f64) -> Self {
        LogBound { ln_value, value: ln_value.min(0.0).exp() }
    }

    pub fn log2(&self) -> f64 {
        self.ln_value / LN_2
    }
}

/// Accuracy `ε`, confidence residual `δ` and VC-dimension bound `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PacQuery {
    pub eps: f64,
    pub delta: f64,
    pub d: u64,
}

impl PacQuery {
    pub fn new(eps: f64, delta: f64, d: u64) -> Result<Self> {
        let q = PacQuery { eps, delta, d };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(invalid(format!("ε must lie in (0, 1), got {}", self.eps)));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(invalid(format!("δ must lie in (0, 1), got {}", self.delta)));
        }
        if self.d == 0 {
            return Err(invalid("the VC-dimension bound must be at least 1"));
        }
        Ok(())
    }
}

fn ceil_count(v: f64) -> u64 {
    v.ceil() as u64
}

fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `2(2em/d)^d 2^(-mε/2)`, the failure probability of any consistent
/// algorithm after `m` samples.
pub fn rate_upper(m: u64, eps: f64, d: u64) -> Result<LogBound> {
    if d == 0 || m < d {
        return Err(invalid(format!("need m ≥ d ≥ 1, got m = {m}, d = {d}")));
    }
    if !(eps > 0.0) {
        return Err(invalid(format!("ε must be positive, got {eps}")));
    }
    let (m, d) = (m as f64, d as f64);
    Ok(LogBound::from_ln(LN_2 + d * (2.0 * E * m / d).ln() - m * eps / 2.0 * LN_2))
}

/// `⌈max{(8d/ε) lg(8e/ε), (4/ε) lg(2/δ)}⌉` samples suffice for any
/// consistent algorithm.
pub fn samples_sufficient(eps: f64, delta: f64, d: u64) -> Result<u64> {
    PacQuery::new(eps, delta, d)?;
    let dim = 8.0 * d as f64 / eps * (8.0 * E / eps).log2();
    let conf = 4.0 / eps * (2.0 / delta).log2();
    Ok(ceil_count(dim.max(conf)))
}

/// `⌈max{(d-1)/(32ε), ((1-ε)/ε) ln(1/δ)}⌉` samples are necessary for any
/// algorithm when `d ≥ 2`.
pub fn samples_necessary(eps: f64, delta: f64, d: u64) -> Result<u64> {
    PacQuery::new(eps, delta, d)?;
    if d < 2 {
        return Err(invalid("the lower bound needs d ≥ 2"));
    }
    let dim = (d - 1) as f64 / (32.0 * eps);
    let conf = (1.0 - eps) / eps * (1.0 / delta).ln();
    Ok(ceil_count(dim.max(conf)))
}

fn check_md(m: u64, d: u64, eps: f64) -> Result<()> {
    if m == 0 || d == 0 {
        return Err(invalid(format!("need m, d ≥ 1, got m = {m}, d = {d}")));
    }
    if !(eps > 0.0) {
        return Err(invalid(format!("ε must be positive, got {eps}")));
    }
    Ok(())
}

/// `ln 4 + 10d ln(0.2em/d)`
fn growth_ln(m: u64, d: u64) -> f64 {
    let (m, d) = (m as f64, d as f64);
    4f64.ln() + 10.0 * d * (0.2 * E * m / d).ln()
}

/// `[4(0.2em/d)^(10d) + 1] exp(-0.08mε²)`, the failure probability of
/// empirical risk minimization under label noise. The flip rate does not
/// enter.
pub fn noisy_rate_bound(m: u64, eps: f64, d: u64) -> Result<LogBound> {
    check_md(m, d, eps)?;
    Ok(LogBound::from_ln(softplus(growth_ln(m, d)) - 0.08 * m as f64 * eps * eps))
}

/// `4(0.2em/d)^(10d) exp(-mε²/8)`, the probability that some hypothesis has
/// empirical risk more than `ε` away from its true risk.
pub fn uniform_convergence_bound(m: u64, eps: f64, d: u64) -> Result<LogBound> {
    check_md(m, d, eps)?;
    Ok(LogBound::from_ln(growth_ln(m, d) - m as f64 * eps * eps / 8.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObcsPlan {
    pub d_used: u64,
    pub m_required: u64,
    /// `(4/α_GW) ε`, the squared-error guarantee for radially invariant rows.
    pub mse_guarantee: f64,
}

/// Measurements sufficient to recover a unit `k`-sparse vector to squared
/// error `(4/α_GW) ε` with probability `1 - δ`.
pub fn obcs_plan(n: usize, k: usize, eps: f64, delta: f64, affine: bool) -> Result<ObcsPlan> {
    let d_used = if affine { vc_bounds_affine(n, k)?.upper } else { vc_upper_bound(n, k)? } as u64;
    Ok(ObcsPlan {
        d_used,
        m_required: samples_sufficient(eps, delta, d_used)?,
        mse_guarantee: 4.0 / gw_alpha() * eps,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub affine: bool,
    pub vc_lower: usize,
    pub vc_upper: u64,
    pub samples_sufficient: u64,
    pub samples_necessary: u64,
    pub mse_guarantee: f64,
    pub rate_at_sufficient: LogBound,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noisy_rate_at_sufficient: Option<LogBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub uniform_convergence_at_sufficient: Option<LogBound>,
}

/// Every applicable quantity for an `(n, k, ε, δ)` query.
pub fn bounds_report(n: usize, k: usize, eps: f64, delta: f64, affine: bool, noisy: bool) -> Result<BoundsReport> {
    let plan = obcs_plan(n, k, eps, delta, affine)?;
    let m = plan.m_required;
    let (noisy_rate, uniform) = if noisy {
        (Some(noisy_rate_bound(m, eps, plan.d_used)?), Some(uniform_convergence_bound(m, eps, plan.d_used)?))
    } else {
        (None, None)
    };
    Ok(BoundsReport {
        n,
        k,
        eps,
        delta,
        affine,
        vc_lower: vc_lower_bound(n, k)?,
        vc_upper: plan.d_used,
        samples_sufficient: m,
        samples_necessary: samples_necessary(eps, delta, plan.d_used.max(2))?,
        mse_guarantee: plan.mse_guarantee,
        rate_at_sufficient: rate_upper(m, eps, plan.d_used)?,
        noisy_rate_at_sufficient: noisy_rate,
        uniform_convergence_at_sufficient: uniform,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rate_examples() {
        // 1 + 5 lg(800e) - 200
        let expect = 1.0 + 5.0 * (800.0 * E).log2() - 200.0;
        let r = rate_upper(2000, 0.2, 5).unwrap();
        assert!((r.log2() - expect).abs() < 1e-9);
        assert!((r.log2() - (-143.567)).abs() < 1e-3);
        assert_eq!(rate_upper(60, 0.01, 50).unwrap().value, 1.0);
        assert!(rate_upper(4, 0.1, 5).is_err());
        let mut prev = f64::INFINITY;
        for m in (600..5000).step_by(50) {
            let l = rate_upper(m, 0.2, 5).unwrap().ln_value;
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn sufficient_examples() {
        // 800 lg(80e) = 6211.70
        assert_eq!(samples_sufficient(0.1, 0.1, 10).unwrap(), 6212);
        // 40 lg(2e9) = 1235.89
        assert_eq!(samples_sufficient(0.1, 1e-9, 1).unwrap(), 1236);
        assert!(samples_sufficient(0.0, 0.1, 1).is_err());
        assert!(samples_sufficient(0.1, 1.0, 1).is_err());
        assert!(samples_sufficient(0.1, 0.1, 0).is_err());
    }

    #[test]
    fn necessary_examples() {
        assert_eq!(samples_necessary(0.1, 0.1, 10).unwrap(), 21);
        assert_eq!(samples_necessary(0.01, 0.5, 66).unwrap(), 204);
        assert!(samples_necessary(0.1, 0.1, 1).is_err());
    }

    #[test]
    fn noisy_examples() {
        let ln = 4f64.ln() + 10.0 * (0.2 * E * 1e6).ln() - 800.0;
        let b = noisy_rate_bound(1_000_000, 0.1, 1).unwrap();
        assert!((b.ln_value - ln).abs() < 1e-9);
        assert!((b.ln_value - (-666.553)).abs() < 1e-3);
        assert_eq!(noisy_rate_bound(10, 0.1, 1).unwrap().value, 1.0);
        let mut prev = f64::INFINITY;
        for m in (200_000..400_000).step_by(10_000) {
            let l = noisy_rate_bound(m, 0.1, 1).unwrap().ln_value;
            assert!(l < prev);
            prev = l;
        }
    }

    #[test]
    fn uniform_examples() {
        let u = uniform_convergence_bound(1_000_000, 0.1, 1).unwrap();
        assert!((u.ln_value - (growth_ln(1_000_000, 1) - 1250.0)).abs() < 1e-9);
        // at m = d the growth term is (0.2e)^(10d) < 1, so nothing is clamped
        let at_d = uniform_convergence_bound(7, 0.3, 7).unwrap();
        let direct = 4.0 * (0.2 * E).powi(70) * (-7.0 * 0.09 / 8.0f64).exp();
        assert!((at_d.value - direct).abs() < 1e-12 * direct);
        assert_eq!(uniform_convergence_bound(10, 0.1, 1).unwrap().value, 1.0);
    }

    #[test]
    fn noisy_splits_into_uniform_plus_hoeffding() {
        // ε₂ = 0.8ε in the uniform bound and a Hoeffding term exp(-2m(0.2ε)²)
        for &(m, eps, d) in &[(1000u64, 0.3, 2u64), (50_000, 0.1, 5), (10_000_000, 0.05, 40)] {
            let noisy = noisy_rate_bound(m, eps, d).unwrap().ln_value;
            let uniform = uniform_convergence_bound(m, 0.8 * eps, d).unwrap().ln_value;
            let hoeffding = -2.0 * m as f64 * (0.2 * eps) * (0.2 * eps);
            let combined = uniform.max(hoeffding) + (-(uniform - hoeffding).abs()).exp().ln_1p();
            assert!((noisy - combined).abs() < 1e-9 * noisy.abs().max(1.0));
        }
    }

    #[test]
    fn plus_one_is_negligible_for_large_brackets() {
        let m = 1_000_000;
        let noisy = noisy_rate_bound(m, 0.1, 3).unwrap().ln_value + 0.08 * m as f64 * 0.01;
        let bracket = growth_ln(m, 3);
        assert!(bracket > 100.0);
        assert!(((noisy - bracket) / bracket).abs() < 1e-6);
    }

    #[test]
    fn plan_examples() {
        let p = obcs_plan(1000, 20, 0.1, 0.1, false).unwrap();
        assert_eq!(p.d_used, 456);
        // 3648 lg(80e) = 283253.45
        assert_eq!(p.m_required, 283_254);
        assert!((p.mse_guarantee - 0.4553).abs() < 1e-4);
        assert_eq!(obcs_plan(1000, 20, 0.1, 0.1, true).unwrap().d_used, 479);
        assert!(obcs_plan(1000, 20, 0.1, 1.5, false).is_err());
    }

    #[test]
    fn report_fields() {
        let r = bounds_report(1000, 20, 0.1, 0.1, false, true).unwrap();
        assert_eq!((r.vc_lower, r.vc_upper, r.samples_sufficient), (120, 456, 283_254));
        assert!(r.samples_necessary <= r.samples_sufficient);
        assert!(r.noisy_rate_at_sufficient.is_some());
        let json = serde_json::to_value(bounds_report(8, 2, 0.2, 0.05, true, false).unwrap()).unwrap();
        assert!(json.get("noisy_rate_at_sufficient").is_none());
    }

    #[test]
    fn grid_consistency() {
        for &eps in &[0.01, 0.05, 0.1, 0.2, 0.5] {
            for &delta in &[1e-9, 1e-3, 0.05, 0.1] {
                for &d in &[2u64, 3, 10, 100, 1000] {
                    let up = samples_sufficient(eps, delta, d).unwrap();
                    assert!(samples_necessary(eps, delta, d).unwrap() <= up);
                    assert!(rate_upper(up, eps, d).unwrap().value <= delta, "ε {eps} δ {delta} d {d}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn no_overflow(m in 1u64..1_000_000_000_000, d in 1u64..1_000_000, eps in 1e-6f64..0.999) {
            for b in [noisy_rate_bound(m, eps, d).unwrap(), uniform_convergence_bound(m, eps, d).unwrap()] {
                prop_assert!(b.ln_value.is_finite());
                prop_assert!((0.0..=1.0).contains(&b.value));
            }
            if m >= d {
                let r = rate_upper(m, eps, d).unwrap();
                prop_assert!(r.ln_value.is_finite() && (0.0..=1.0).contains(&r.value));
            }
        }

        #[test]
        fn sufficient_is_monotone(eps in 0.001f64..0.99, delta in 1e-12f64..0.5, d in 1u64..10_000) {
            let base = samples_sufficient(eps, delta, d).unwrap();
            prop_assert!(samples_sufficient(eps, delta * 1.5, d).unwrap() <= base);
            prop_assert!(samples_sufficient(eps, delta, d + 1).unwrap() >= base);
        }
    }
}
