//! Test oracles that share no code with the library's LP engine.
#![allow(dead_code)]

use obcs::measurement::MeasurementSet;
use obcs::solvers::Method;

/// `min cᵀx` over `{x : G x ≤ h, E x = f}`, by enumerating every basic
/// solution. Assumes the feasible set has a vertex (true when all
/// variables carry `x ≥ 0` rows) and that the minimum is finite.
pub struct VertexLp {
    pub c: Vec<f64>,
    pub le: Vec<(Vec<f64>, f64)>,
    pub eq: Vec<(Vec<f64>, f64)>,
}

impl VertexLp {
    pub fn new(dim: usize) -> Self {
        VertexLp { c: vec![0.0; dim], le: Vec::new(), eq: Vec::new() }
    }

    pub fn nonnegative(&mut self) {
        for j in 0..self.c.len() {
            let mut row = vec![0.0; self.c.len()];
            row[j] = -1.0;
            self.le.push((row, 0.0));
        }
    }

    /// Minimum objective, or `None` when no vertex is feasible.
    pub fn minimum(&self) -> Option<f64> {
        let d = self.c.len();
        let free = d.checked_sub(self.eq.len())?;
        let mut best: Option<f64> = None;
        for pick in combinations(self.le.len(), free) {
            let mut a: Vec<Vec<f64>> = self.eq.iter().map(|(r, _)| r.clone()).collect();
            let mut b: Vec<f64> = self.eq.iter().map(|(_, v)| *v).collect();
            for &i in &pick {
                a.push(self.le[i].0.clone());
                b.push(self.le[i].1);
            }
            let Some(x) = solve_square(a, b) else { continue };
            let ok_le = self.le.iter().all(|(r, h)| dot(r, &x) <= h + 1e-9);
            let ok_eq = self.eq.iter().all(|(r, f)| (dot(r, &x) - f).abs() <= 1e-9);
            if ok_le && ok_eq {
                let v = dot(&self.c, &x);
                best = Some(best.map_or(v, |b: f64| b.min(v)));
            }
        }
        best
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn combinations(len: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, len: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..len {
            cur.push(i);
            rec(i + 1, len, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if r <= len {
        rec(0, len, r, &mut Vec::new(), &mut out);
    }
    out
}

/// Gaussian elimination with partial pivoting; `None` if singular.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            if f != 0.0 {
                for c in col..n {
                    a[r][c] -= f * a[col][c];
                }
                b[r] -= f * b[col];
            }
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// The recovery program for `method`, written out from its definition with
/// variables `z⁺, z⁻ ≥ 0`, then `v⁺, v⁻ ≥ 0` for affine methods, then
/// slacks `ξ ≥ 0` for the ℓ1-SVM methods.
pub fn recovery_oracle(method: Method, ms: &MeasurementSet, lambda: f64, tau: f64) -> Option<f64> {
    let n = ms.dim();
    let m = ms.count();
    let affine = matches!(method, Method::L1SvmAffine | Method::Ksw);
    let svm = matches!(method, Method::L1Svm | Method::L1SvmAffine);
    let nv = 2 * n + if affine { 2 } else { 0 };
    let dim = nv + if svm { m } else { 0 };
    let mut lp = VertexLp::new(dim);
    let l1_weight = if svm { lambda } else { 1.0 };
    for j in 0..2 * n {
        lp.c[j] = l1_weight;
    }
    if affine {
        lp.c[2 * n] = tau;
        lp.c[2 * n + 1] = tau;
    }
    if svm {
        for i in 0..m {
            lp.c[nv + i] = 1.0 - lambda;
        }
    }
    // signed margin y_i (⟨a_i, z⟩ + b_i v) as a row over the variables
    let margin_row = |i: usize| {
        let y = ms.labels()[i].as_f64();
        let mut row = vec![0.0; dim];
        for j in 0..n {
            row[j] = y * ms.rows()[i][j];
            row[n + j] = -y * ms.rows()[i][j];
        }
        if affine {
            let b = ms.offsets().unwrap()[i];
            row[2 * n] = y * b;
            row[2 * n + 1] = -y * b;
        }
        row
    };
    let mut total = vec![0.0; dim];
    for i in 0..m {
        let row = margin_row(i);
        if svm {
            // margin + ξ_i ≥ 1
            let mut neg: Vec<f64> = row.iter().map(|v| -v).collect();
            neg[nv + i] = -1.0;
            lp.le.push((neg, -1.0));
        } else {
            lp.le.push((row.iter().map(|v| -v).collect(), 0.0));
            for (t, r) in total.iter_mut().zip(&row) {
                *t += r;
            }
        }
    }
    if !svm {
        lp.eq.push((total, m as f64));
    }
    lp.nonnegative();
    lp.minimum()
}
