//! Dense linear programming.
//!
//! A [`LinearProgram`] is stated as
//!
//! ```text
//! minimize    cᵀx
//! subject to  A_eq x  = b_eq
//!             A_le x ≤ b_le
//!             l ≤ x ≤ u        (l may be -∞, u may be +∞)
//! ```
//!
//! and solved by a two-phase bounded-variable simplex method on a dense
//! tableau. Free variables are split, finite bounds are shifted to zero, and
//! upper bounds are handled implicitly by the ratio test instead of as
//! extra rows. The solver also reports shadow prices `∂(optimum)/∂b` for
//! every row, which the recovery programs use to read a primal solution off
//! a dual solve.

mod simplex;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// How the entering variable is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum PivotRule {
    /// Smallest eligible index for both entering and leaving variables.
    Bland,
    /// Most negative reduced cost, dropping to Bland's rule while the
    /// iterates stall on a degenerate vertex.
    #[default]
    Dantzig,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub pivot_rule: PivotRule,
    /// Cap on pivots plus bound flips over both phases. `None` means
    /// `10 · (columns + rows)` of the standard-form tableau.
    pub max_iterations: Option<usize>,
    /// Primal feasibility tolerance.
    pub feasibility_tol: f64,
    /// Reduced-cost optimality tolerance.
    pub optimality_tol: f64,
    /// Smallest admissible pivot magnitude.
    pub pivot_tol: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            pivot_rule: PivotRule::default(),
            max_iterations: None,
            feasibility_tol: 1e-8,
            optimality_tol: 1e-9,
            pivot_tol: 1e-9,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Primal point in the original variables (the last iterate when not optimal).
    pub x: Vec<f64>,
    pub objective: f64,
    /// Shadow prices, equality rows first then `≤` rows.
    pub duals: Vec<f64>,
    pub iterations: usize,
    /// Largest violation of a row or bound at `x`.
    pub primal_residual: f64,
}

impl LpSolution {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    objective: Vec<f64>,
    eq_rows: Vec<Vec<f64>>,
    eq_rhs: Vec<f64>,
    le_rows: Vec<Vec<f64>>,
    le_rhs: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl LinearProgram {
    /// A program over `objective.len()` variables, all bounded below by zero.
    pub fn new(objective: Vec<f64>) -> Self {
        let d = objective.len();
        LinearProgram {
            objective,
            eq_rows: Vec::new(),
            eq_rhs: Vec::new(),
            le_rows: Vec::new(),
            le_rhs: Vec::new(),
            lower: vec![0.0; d],
            upper: vec![f64::INFINITY; d],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.eq_rows.len() + self.le_rows.len()
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn lower_bounds(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper_bounds(&self) -> &[f64] {
        &self.upper
    }

    pub fn eq_constraints(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.eq_rows, &self.eq_rhs)
    }

    pub fn le_constraints(&self) -> (&[Vec<f64>], &[f64]) {
        (&self.le_rows, &self.le_rhs)
    }

    /// `row · x ≤ rhs`
    pub fn add_le(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.le_rows.push(row);
        self.le_rhs.push(rhs);
        self
    }

    /// `row · x ≥ rhs`, stored as `-row · x ≤ -rhs`.
    pub fn add_ge(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.add_le(row.into_iter().map(|v| -v).collect(), -rhs)
    }

    /// `row · x = rhs`
    pub fn add_eq(&mut self, row: Vec<f64>, rhs: f64) -> &mut Self {
        self.eq_rows.push(row);
        self.eq_rhs.push(rhs);
        self
    }

    pub fn set_bounds(&mut self, var: usize, lower: f64, upper: f64) -> &mut Self {
        self.lower[var] = lower;
        self.upper[var] = upper;
        self
    }

    pub fn set_free(&mut self, var: usize) -> &mut Self {
        self.set_bounds(var, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.num_vars();
        if self.lower.len() != d || self.upper.len() != d {
            return Err(invalid("bound vectors do not match the variable count"));
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(invalid("objective coefficients must be finite"));
        }
        for (kind, rows, rhs) in [("equality", &self.eq_rows, &self.eq_rhs), ("inequality", &self.le_rows, &self.le_rhs)] {
            if rows.len() != rhs.len() {
                return Err(invalid(format!("{kind} rows and right-hand sides differ in length")));
            }
            for (i, row) in rows.iter().enumerate() {
                if row.len() != d {
                    return Err(invalid(format!("{kind} row {i} has {} entries, expected {d}", row.len())));
                }
                if row.iter().any(|v| !v.is_finite()) || !rhs[i].is_finite() {
                    return Err(invalid(format!("{kind} row {i} is not finite")));
                }
            }
        }
        for j in 0..d {
            let (l, u) = (self.lower[j], self.upper[j]);
            if l.is_nan() || u.is_nan() || l == f64::INFINITY || u == f64::NEG_INFINITY || l > u {
                return Err(invalid(format!("variable {j} has bounds [{l}, {u}]")));
            }
        }
        Ok(())
    }

    /// Objective value at `x`.
    pub fn evaluate(&self, x: &[f64]) -> f64 {
        self.objective.iter().zip(x).map(|(c, v)| c * v).sum()
    }

    /// Largest row or bound violation at `x`.
    pub fn residual(&self, x: &[f64]) -> f64 {
        let dot = |row: &[f64]| row.iter().zip(x).map(|(a, v)| a * v).sum::<f64>();
        let eq = self
            .eq_rows
            .iter()
            .zip(&self.eq_rhs)
            .map(|(r, b)| (dot(r) - b).abs());
        let le = self
            .le_rows
            .iter()
            .zip(&self.le_rhs)
            .map(|(r, b)| (dot(r) - b).max(0.0));
        let bounds = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(v, (l, u))| (l - v).max(v - u).max(0.0));
        eq.chain(le).chain(bounds).fold(0.0, f64::max)
    }

    pub fn solve(&self) -> Result<LpSolution> {
        self.solve_with(&SolverOptions::default())
    }

    pub fn solve_with(&self, opts: &SolverOptions) -> Result<LpSolution> {
        self.validate()?;
        Ok(simplex::solve(self, opts))
    }
}

/// Solves `lp` with default options.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.solve()
}
