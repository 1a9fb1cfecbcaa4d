//! Sparse recovery from sign measurements.
//!
//! Four linear programs are provided:
//!
//! | method         | objective                                   | constraints                                   |
//! |----------------|---------------------------------------------|-----------------------------------------------|
//! | `l1svm`        | `(1-λ) Σ ξ_i + λ ‖z‖₁`                      | `y_i ⟨a_i, z⟩ + ξ_i ≥ 1`, `ξ ≥ 0`             |
//! | `l1svm-affine` | `(1-λ) Σ ξ_i + λ ‖z‖₁ + τ |v|`              | `y_i (⟨a_i, z⟩ + b_i v) + ξ_i ≥ 1`, `ξ ≥ 0`   |
//! | `pv`           | `‖z‖₁`                                      | `y_i ⟨a_i, z⟩ ≥ 0`, `Σ y_i ⟨a_i, z⟩ = m`      |
//! | `ksw`          | `‖z‖₁ + τ |v|`                              | `y_i (⟨a_i, z⟩ + b_i v) ≥ 0`, `Σ … = m`       |
//!
//! The slack variables make the ℓ1-SVM programs feasible for every label
//! pattern, whereas the two hard-constraint baselines become infeasible as
//! soon as the labels are not sign-consistent with some vector.
//!
//! Each program is solved through its LP dual, which has one variable per
//! measurement and only `2n` (or `2n + 2`) rows, so the tableau stays small
//! when `m ≫ n`. The primal minimizer is read off the dual's shadow prices.
//! [`primal_program`] builds the primal LP directly for cross-checking.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lp::{LinearProgram, LpStatus, PivotRule, SolverOptions};
use crate::measurement::MeasurementSet;
use crate::sparse::{dot, truncate_top_k, SparseVector};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "l1svm")]
    L1Svm,
    #[serde(rename = "l1svm-affine")]
    L1SvmAffine,
    #[serde(rename = "pv")]
    PlanVershynin,
    #[serde(rename = "ksw")]
    Ksw,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::L1Svm, Method::L1SvmAffine, Method::PlanVershynin, Method::Ksw];

    pub fn name(self) -> &'static str {
        match self {
            Method::L1Svm => "l1svm",
            Method::L1SvmAffine => "l1svm-affine",
            Method::PlanVershynin => "pv",
            Method::Ksw => "ksw",
        }
    }

    /// Whether the method consumes offsets `b_i`.
    pub fn is_affine(self) -> bool {
        matches!(self, Method::L1SvmAffine | Method::Ksw)
    }

    pub fn recover(self, ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<RecoverySolution> {
        match self {
            Method::L1Svm => recover_l1svm(ms, cfg),
            Method::L1SvmAffine => recover_l1svm_affine(ms, cfg),
            Method::PlanVershynin => recover_pv_with(ms, cfg),
            Method::Ksw => recover_ksw_with(ms, cfg),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| invalid(format!("unknown method `{s}` (expected l1svm, l1svm-affine, pv or ksw)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryConfig {
    /// Weight of `‖z‖₁` against the slack total, in `(0, 1)`.
    pub lambda: f64,
    /// Weight of `|v|` in the affine programs.
    pub tau: f64,
    /// `None` uses the LP default of `10 · (columns + rows)`.
    pub max_iterations: Option<usize>,
    pub tolerance: f64,
    pub truncation_k: Option<usize>,
    #[serde(default)]
    pub pivot_rule: PivotRule,
}

impl Default for RecoveryConfig {
    fn default() -> Self {
        RecoveryConfig {
            lambda: 0.05,
            tau: 1.0,
            max_iterations: None,
            tolerance: 1e-8,
            truncation_k: None,
            pivot_rule: PivotRule::default(),
        }
    }
}

impl RecoveryConfig {
    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    pub fn with_truncation(mut self, k: usize) -> Self {
        self.truncation_k = Some(k);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda < 1.0) {
            return Err(invalid(format!("lambda must lie in (0, 1), got {}", self.lambda)));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(invalid(format!("tau must be positive, got {}", self.tau)));
        }
        if !(self.tolerance > 0.0) {
            return Err(invalid(format!("tolerance must be positive, got {}", self.tolerance)));
        }
        if self.max_iterations == Some(0) {
            return Err(invalid("max_iterations must be positive"));
        }
        if self.truncation_k == Some(0) {
            return Err(invalid("truncation k must be positive"));
        }
        Ok(())
    }

    fn lp_options(&self) -> SolverOptions {
        SolverOptions {
            pivot_rule: self.pivot_rule,
            max_iterations: self.max_iterations,
            feasibility_tol: self.tolerance,
            ..SolverOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoverySolution {
    pub status: SolveStatus,
    /// Point estimate: the minimizer (divided by `v̂` for affine programs),
    /// truncated when a truncation level is configured.
    pub estimate: SparseVector,
    /// The untruncated, unscaled `z` returned by the program.
    pub raw_minimizer: SparseVector,
    pub offset_coefficient: Option<f64>,
    /// Affine programs with `|v̂| ≤ tolerance` only determine a direction.
    pub direction_only: bool,
    /// Objective at the returned point; `NaN` unless converged.
    pub objective_value: f64,
    pub iterations_used: usize,
    pub converged: bool,
    /// `Σ ξ_i` for the ℓ1-SVM programs, zero for the baselines.
    pub slack_total: f64,
}

impl RecoverySolution {
    fn unsolved(status: SolveStatus, n: usize, iterations: usize) -> Self {
        RecoverySolution {
            status,
            estimate: SparseVector::zeros(n),
            raw_minimizer: SparseVector::zeros(n),
            offset_coefficient: None,
            direction_only: false,
            objective_value: f64::NAN,
            iterations_used: iterations,
            converged: false,
            slack_total: 0.0,
        }
    }

    pub fn is_feasible(&self) -> bool {
        self.status == SolveStatus::Optimal
    }
}

fn check_input(ms: &MeasurementSet, cfg: &RecoveryConfig, affine: bool) -> Result<()> {
    cfg.validate()?;
    if ms.is_empty() {
        return Err(invalid("measurement set is empty"));
    }
    if ms.dim() == 0 {
        return Err(invalid("measurement rows are empty"));
    }
    match (affine, ms.offsets().is_some()) {
        (true, false) => Err(invalid("affine recovery needs offsets b_i")),
        (false, true) => Err(invalid("linear recovery does not take offsets; drop them first")),
        _ => {
            if let Some(k) = cfg.truncation_k {
                if k > ms.dim() {
                    return Err(invalid(format!("truncation k = {k} exceeds dimension {}", ms.dim())));
                }
            }
            Ok(())
        }
    }
}

/// Signed rows `y_i a_i` and signed offsets `y_i b_i`.
fn signed_data(ms: &MeasurementSet) -> (Vec<Vec<f64>>, Option<Vec<f64>>) {
    let rows = ms
        .rows()
        .iter()
        .zip(ms.labels())
        .map(|(a, y)| a.iter().map(|v| v * y.as_f64()).collect())
        .collect();
    let offsets = ms
        .offsets()
        .map(|b| b.iter().zip(ms.labels()).map(|(v, y)| v * y.as_f64()).collect());
    (rows, offsets)
}

/// Transposed signed data: one vector of length `m` per coordinate, then
/// the signed offsets when present.
fn dual_columns(ms: &MeasurementSet) -> Vec<Vec<f64>> {
    let (rows, offsets) = signed_data(ms);
    let n = ms.dim();
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| rows.iter().map(|r| r[j]).collect()).collect();
    if let Some(b) = offsets {
        cols.push(b);
    }
    cols
}

fn clean(v: f64) -> f64 {
    if v.abs() <= 1e-13 {
        0.0
    } else {
        v
    }
}

/// Reads `(z, v)` off the shadow prices of the `±` row pairs.
fn primal_from_duals(duals: &[f64], n: usize, affine: bool) -> (Vec<f64>, Option<f64>) {
    let pair = |j: usize| clean(-duals[2 * j]) - clean(-duals[2 * j + 1]);
    let z = (0..n).map(pair).collect();
    let v = affine.then(|| pair(n));
    (z, v)
}

fn margins(ms: &MeasurementSet, z: &[f64], v: Option<f64>) -> Vec<f64> {
    ms.rows()
        .iter()
        .zip(ms.labels())
        .enumerate()
        .map(|(i, (a, y))| {
            let t = dot(a, z) + v.map_or(0.0, |v| v * ms.offsets().expect("affine")[i]);
            y.as_f64() * t
        })
        .collect()
}

fn finalize(
    ms: &MeasurementSet,
    cfg: &RecoveryConfig,
    z: Vec<f64>,
    v: Option<f64>,
    objective: f64,
    slack_total: f64,
    iterations: usize,
) -> Result<RecoverySolution> {
    let raw = SparseVector::new(z);
    let direction_only = v.is_some_and(|v| v.abs() <= cfg.tolerance);
    let point = match v {
        Some(v) if !direction_only => raw.scaled(1.0 / v),
        _ => raw.clone(),
    };
    let estimate = match cfg.truncation_k {
        Some(k) => truncate_top_k(&point, k)?,
        None => point,
    };
    debug_assert_eq!(estimate.ambient_dim(), ms.dim());
    Ok(RecoverySolution {
        status: SolveStatus::Optimal,
        estimate,
        raw_minimizer: raw,
        offset_coefficient: v,
        direction_only,
        objective_value: objective,
        iterations_used: iterations,
        converged: true,
        slack_total,
    })
}

fn solve_l1svm(ms: &MeasurementSet, cfg: &RecoveryConfig, affine: bool) -> Result<RecoverySolution> {
    check_input(ms, cfg, affine)?;
    let m = ms.count();
    let n = ms.dim();
    let (lambda, tau) = (cfg.lambda, cfg.tau);

    // max Σu  s.t. |Σ_i u_i y_i a_ij| ≤ λ, |Σ_i u_i y_i b_i| ≤ τ, 0 ≤ u ≤ 1-λ
    let mut lp = LinearProgram::new(vec![-1.0; m]);
    for i in 0..m {
        lp.set_bounds(i, 0.0, 1.0 - lambda);
    }
    for (j, col) in dual_columns(ms).into_iter().enumerate() {
        let bound = if j < n { lambda } else { tau };
        let neg = col.iter().map(|v| -v).collect();
        lp.add_le(col, bound);
        lp.add_le(neg, bound);
    }
    let sol = lp.solve_with(&cfg.lp_options())?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::IterationLimit => {
            return Ok(RecoverySolution::unsolved(SolveStatus::IterationLimit, n, sol.iterations))
        }
        // The dual is feasible (u = 0) and bounded (box), so neither can occur.
        other => unreachable!("ℓ1-SVM dual reported {other:?}"),
    }
    let (z, v) = primal_from_duals(&sol.duals, n, affine);
    let slack_total: f64 = margins(ms, &z, v).iter().map(|t| (1.0 - t).max(0.0)).sum();
    let l1: f64 = z.iter().map(|v| v.abs()).sum();
    let objective = (1.0 - lambda) * slack_total + lambda * l1 + v.map_or(0.0, |v| tau * v.abs());
    finalize(ms, cfg, z, v, objective, slack_total, sol.iterations)
}

/// ℓ1-norm SVM on linear sign measurements, followed by optional truncation.
pub fn recover_l1svm(ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<RecoverySolution> {
    solve_l1svm(ms, cfg, false)
}

/// ℓ1-norm SVM on affine sign measurements `sign(⟨a_i, x⟩ + b_i)`; the point
/// estimate is `ẑ / v̂`.
pub fn recover_l1svm_affine(ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<RecoverySolution> {
    solve_l1svm(ms, cfg, true)
}

fn solve_hard(ms: &MeasurementSet, cfg: &RecoveryConfig, affine: bool) -> Result<RecoverySolution> {
    check_input(ms, cfg, affine)?;
    let m = ms.count();
    let n = ms.dim();

    // max m·w  s.t. |Σ_i (u_i + w) y_i a_ij| ≤ 1, |Σ_i (u_i + w) y_i b_i| ≤ τ, u ≥ 0, w free
    let mut objective = vec![0.0; m + 1];
    objective[m] = -(m as f64);
    let mut lp = LinearProgram::new(objective);
    lp.set_free(m);
    for (j, mut col) in dual_columns(ms).into_iter().enumerate() {
        let bound = if j < n { 1.0 } else { cfg.tau };
        let total: f64 = col.iter().sum();
        col.push(total);
        let neg = col.iter().map(|v| -v).collect();
        lp.add_le(col, bound);
        lp.add_le(neg, bound);
    }
    let sol = lp.solve_with(&cfg.lp_options())?;
    match sol.status {
        LpStatus::Optimal => {}
        // An unbounded dual certifies that no vector reproduces the signs.
        LpStatus::Unbounded => return Ok(RecoverySolution::unsolved(SolveStatus::Infeasible, n, sol.iterations)),
        LpStatus::IterationLimit => {
            return Ok(RecoverySolution::unsolved(SolveStatus::IterationLimit, n, sol.iterations))
        }
        LpStatus::Infeasible => unreachable!("hard-constraint dual is feasible at the origin"),
    }
    let (z, v) = primal_from_duals(&sol.duals, n, affine);
    let objective = z.iter().map(|v| v.abs()).sum::<f64>() + v.map_or(0.0, |v| cfg.tau * v.abs());
    finalize(ms, cfg, z, v, objective, 0.0, sol.iterations)
}

/// `min ‖z‖₁` subject to sign consistency and `Σ y_i ⟨a_i, z⟩ = m`.
pub fn recover_pv(ms: &MeasurementSet) -> Result<RecoverySolution> {
    recover_pv_with(ms, &RecoveryConfig::default())
}

pub fn recover_pv_with(ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<RecoverySolution> {
    solve_hard(ms, cfg, false)
}

/// `min ‖z‖₁ + τ|v|` subject to affine sign consistency and `Σ y_i (⟨a_i, z⟩ + b_i v) = m`.
pub fn recover_ksw(ms: &MeasurementSet, tau: f64) -> Result<RecoverySolution> {
    recover_ksw_with(ms, &RecoveryConfig::default().with_tau(tau))
}

pub fn recover_ksw_with(ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<RecoverySolution> {
    solve_hard(ms, cfg, true)
}

/// Variable layout of a [`primal_program`]: `z⁺ (n) | z⁻ (n) | [v⁺ v⁻] | [ξ (m)]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrimalLayout {
    pub n: usize,
    pub m: usize,
    pub affine: bool,
    pub slacks: bool,
}

impl PrimalLayout {
    pub fn z(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n).map(|j| x[j] - x[self.n + j]).collect()
    }

    pub fn v(&self, x: &[f64]) -> Option<f64> {
        self.affine.then(|| x[2 * self.n] - x[2 * self.n + 1])
    }
}

/// The program of `method` in its primal form, with `|z|` and `|v|` split
/// into positive and negative parts.
pub fn primal_program(method: Method, ms: &MeasurementSet, cfg: &RecoveryConfig) -> Result<(LinearProgram, PrimalLayout)> {
    let affine = method.is_affine();
    check_input(ms, cfg, affine)?;
    let (n, m) = (ms.dim(), ms.count());
    let slacks = matches!(method, Method::L1Svm | Method::L1SvmAffine);
    let nv = 2 * n + if affine { 2 } else { 0 };
    let width = nv + if slacks { m } else { 0 };
    let (rows, offsets) = signed_data(ms);
    let zw = if slacks { cfg.lambda } else { 1.0 };

    let mut c = vec![zw; 2 * n];
    if affine {
        c.extend([cfg.tau, cfg.tau]);
    }
    if slacks {
        c.extend(std::iter::repeat_n(1.0 - cfg.lambda, m));
    }
    let mut lp = LinearProgram::new(c);
    let mut sum = vec![0.0; width];
    for i in 0..m {
        let mut row = vec![0.0; width];
        for j in 0..n {
            row[j] = rows[i][j];
            row[n + j] = -rows[i][j];
        }
        if let Some(b) = &offsets {
            row[2 * n] = b[i];
            row[2 * n + 1] = -b[i];
        }
        if slacks {
            row[nv + i] = 1.0;
            lp.add_ge(row, 1.0);
        } else {
            sum.iter_mut().zip(&row).for_each(|(s, r)| *s += r);
            lp.add_ge(row, 0.0);
        }
    }
    if !slacks {
        lp.add_eq(sum, m as f64);
    }
    Ok((lp, PrimalLayout { n, m, affine, slacks }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measurement::{measure, sample_rows, NoiseChannel, SamplingDistribution};
    use crate::rng::Seed;
    use crate::sparse::BipolarLabel;

    fn set(rows: &[&[f64]], labels: &[i64]) -> MeasurementSet {
        MeasurementSet::new(
            rows.iter().map(|r| r.to_vec()).collect(),
            None,
            labels.iter().map(|&y| BipolarLabel::from_value(y).unwrap()).collect(),
        )
        .unwrap()
    }

    /// Objective of the linear ℓ1-SVM at `z`, minimizing over the slacks.
    fn l1svm_objective(ms: &MeasurementSet, z: &[f64], lambda: f64) -> f64 {
        let slack: f64 = margins(ms, z, None).iter().map(|t| (1.0 - t).max(0.0)).sum();
        (1.0 - lambda) * slack + lambda * z.iter().map(|v| v.abs()).sum::<f64>()
    }

    #[test]
    fn separable_pair() {
        let ms = set(&[&[2.0, 0.0], &[-2.0, 0.0]], &[1, -1]);
        let sol = recover_l1svm(&ms, &RecoveryConfig::default().with_lambda(0.1)).unwrap();
        let z = sol.raw_minimizer.values();
        assert!(z[0] > 0.0 && z[1] == 0.0, "{z:?}");
        assert!(sol.slack_total <= 1e-8);
        // grid oracle over the objective
        let mut best = f64::INFINITY;
        let mut arg = (0.0, 0.0);
        for a in -200..=200 {
            for b in -200..=200 {
                let p = [a as f64 / 100.0, b as f64 / 100.0];
                let f = l1svm_objective(&ms, &p, 0.1);
                if f < best {
                    best = f;
                    arg = (p[0], p[1]);
                }
            }
        }
        assert!(arg.0 > 0.0 && arg.1 == 0.0);
        assert!((sol.objective_value - best).abs() < 1e-9, "{} vs {best}", sol.objective_value);
    }

    #[test]
    fn single_sample_lands_on_a_vertex() {
        let ms = set(&[&[1.0, 1.0]], &[1]);
        let sol = recover_l1svm(&ms, &RecoveryConfig::default().with_lambda(0.5)).unwrap();
        assert!((sol.objective_value - 0.5).abs() < 1e-12);
        assert!(sol.raw_minimizer.nnz() <= 1, "{:?}", sol.raw_minimizer);
    }

    #[test]
    fn contradictory_labels_use_slack() {
        let ms = set(&[&[1.0, 0.0], &[1.0, 0.0]], &[1, -1]);
        let sol = recover_l1svm(&ms, &RecoveryConfig::default().with_lambda(0.1)).unwrap();
        assert!(sol.converged);
        assert!(sol.slack_total >= 2.0 - 1e-9);
        assert_eq!(recover_pv(&ms).unwrap().status, SolveStatus::Infeasible);
    }

    #[test]
    fn pv_hand_instance() {
        let ms = set(&[&[1.0, 0.0], &[-1.0, 0.0]], &[1, -1]);
        let sol = recover_pv(&ms).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.estimate.values(), &[1.0, 0.0]);
        assert!((sol.objective_value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pv_replays_noiseless_signs() {
        let x = SparseVector::new(vec![0.0, 0.6, 0.0, -0.8, 0.0, 0.0, 0.0, 0.0]);
        let ms = MeasurementSet::generate(&x, &SamplingDistribution::gaussian(), 60, Seed(4), NoiseChannel::noiseless())
            .unwrap();
        let sol = recover_pv(&ms).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        let m = margins(&ms, sol.raw_minimizer.values(), None);
        assert!(m.iter().all(|t| *t >= -1e-9));
        let total: f64 = m.iter().sum();
        assert!((total - 60.0).abs() < 1e-8, "{total}");
    }

    #[test]
    fn ksw_feasible_and_penalty_monotone() {
        let x = SparseVector::new(vec![0.5, 0.0, -0.5, 0.0, 0.7]);
        let d = SamplingDistribution::gaussian().with_offsets(1.0);
        let ms = MeasurementSet::generate(&x, &d, 80, Seed(6), NoiseChannel::noiseless()).unwrap();
        let s1 = recover_ksw(&ms, 1.0).unwrap();
        assert_eq!(s1.status, SolveStatus::Optimal);
        let z = s1.raw_minimizer.values();
        let v = s1.offset_coefficient.unwrap();
        for t in margins(&ms, z, Some(v)) {
            assert!(t >= -1e-9);
        }
        let s100 = recover_ksw(&ms, 100.0).unwrap();
        assert!(s100.offset_coefficient.unwrap().abs() <= v.abs() + 1e-12);

        // a flipped label either breaks feasibility or costs more
        let mut labels = ms.labels().to_vec();
        labels[0] = -labels[0];
        let flipped = recover_ksw(&ms.with_labels(labels).unwrap(), 1.0).unwrap();
        assert!(!flipped.is_feasible() || flipped.objective_value > s1.objective_value);
    }

    #[test]
    fn affine_from_zero_truth_leans_on_v() {
        let x = SparseVector::zeros(6);
        let d = SamplingDistribution::gaussian().with_offsets(1.0);
        let ms = MeasurementSet::generate(&x, &d, 40, Seed(2), NoiseChannel::noiseless()).unwrap();
        let cfg = RecoveryConfig::default();
        let sol = recover_l1svm_affine(&ms, &cfg).unwrap();
        let v = sol.offset_coefficient.unwrap();
        assert!(v > 0.0);
        let m = margins(&ms, sol.raw_minimizer.values(), Some(v));
        let slack: f64 = m.iter().map(|t| (1.0 - t).max(0.0)).sum();
        assert!((slack - sol.slack_total).abs() < 1e-12);
        let direct = (1.0 - cfg.lambda) * slack + cfg.lambda * sol.raw_minimizer.norm1() + cfg.tau * v.abs();
        assert!((direct - sol.objective_value).abs() < 1e-12);
        // agrees with the primal program
        let (lp, _) = primal_program(Method::L1SvmAffine, &ms, &cfg).unwrap();
        let p = lp.solve().unwrap();
        assert!((p.objective - sol.objective_value).abs() < 1e-7);
    }

    #[test]
    fn affine_solve_is_deterministic() {
        let x = SparseVector::new(vec![0.0, 1.0, 0.0, 0.0]);
        let d = SamplingDistribution::gaussian().with_offsets(1.0);
        let ms = MeasurementSet::generate(&x, &d, 50, Seed(12), NoiseChannel::noiseless()).unwrap();
        let cfg = RecoveryConfig::default().with_truncation(1);
        let a = recover_l1svm_affine(&ms, &cfg).unwrap();
        let b = recover_l1svm_affine(&ms, &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.estimate.nnz(), 1);
    }

    #[test]
    fn dual_route_matches_primal_route() {
        let d = SamplingDistribution::gaussian().with_offsets(1.0);
        for seed in 0..8u64 {
            let s = sample_rows(&d, 30, 5, Seed(seed)).unwrap();
            let x = SparseVector::new(vec![1.0, 0.0, -0.5, 0.0, 0.0]);
            let labels = measure(&x, &s.rows, s.offsets.as_deref()).unwrap();
            let noisy = crate::measurement::apply_channel(&labels, NoiseChannel::new(0.1).unwrap(), Seed(seed + 100));
            let affine = MeasurementSet::new(s.rows.clone(), s.offsets.clone(), noisy).unwrap();
            let linear = affine.without_offsets();
            let cfg = RecoveryConfig::default();
            for method in Method::ALL {
                let ms = if method.is_affine() { &affine } else { &linear };
                let sol = method.recover(ms, &cfg).unwrap();
                let (lp, layout) = primal_program(method, ms, &cfg).unwrap();
                let p = lp.solve().unwrap();
                if p.status == LpStatus::Infeasible {
                    assert_eq!(sol.status, SolveStatus::Infeasible, "{method} seed {seed}");
                    continue;
                }
                assert!(sol.converged, "{method} seed {seed}");
                assert!((p.objective - sol.objective_value).abs() < 1e-7, "{method} seed {seed}: {} vs {}", p.objective, sol.objective_value);
                let _ = layout.z(&p.x);
            }
        }
    }

    #[test]
    fn input_checks() {
        let ms = set(&[&[1.0, 0.0]], &[1]);
        assert!(recover_l1svm_affine(&ms, &RecoveryConfig::default()).is_err());
        assert!(recover_l1svm(&ms, &RecoveryConfig::default().with_lambda(1.0)).is_err());
        assert!(recover_l1svm(&ms, &RecoveryConfig::default().with_truncation(3)).is_err());
        let empty = MeasurementSet::new(vec![], None, vec![]).unwrap();
        assert!(matches!(recover_l1svm(&empty, &RecoveryConfig::default()), Err(Error::InvalidArgument(_))));
        assert_eq!("ksw".parse::<Method>().unwrap(), Method::Ksw);
        assert!("lasso".parse::<Method>().is_err());
    }
}
