//! VC dimension of k-sparse halfspaces.
//!
//! `H_k^n` is the class of sets `{u : ⟨u, x⟩ ≥ 0}` with `x` at most
//! `k`-sparse. Its VC dimension lies between
//! `k(⌊lg(n/k)⌋ + 1)` and `⌊2k lg(ne)⌋`. The lower bound is attained by an
//! explicit point set, [`build_witness`], and an LP oracle,
//! [`is_shattered`], decides shattering for small point sets.

use std::f64::consts::E;
use std::io::Write;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::lp::{LinearProgram, LpStatus, SolverOptions};
use crate::rng::Seed;
use crate::sparse::SparseVector;

fn check_nk(n: usize, k: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(invalid(format!("need 1 ≤ k ≤ n, got n = {n}, k = {k}")));
    }
    Ok(())
}

/// Largest `s` with `k·2^s ≤ n`, i.e. `⌊lg(n/k)⌋`.
fn block_log(n: usize, k: usize) -> u32 {
    let mut s = 0;
    while (k as u128) << (s + 1) <= n as u128 {
        s += 1;
    }
    s
}

/// `k(⌊lg(n/k)⌋ + 1)`.
pub fn vc_lower_bound(n: usize, k: usize) -> Result<usize> {
    check_nk(n, k)?;
    Ok(k * (block_log(n, k) as usize + 1))
}

/// `⌊2k lg(ne)⌋`, valid for `n ≥ 2`.
pub fn vc_upper_bound(n: usize, k: usize) -> Result<usize> {
    check_nk(n, k)?;
    if n < 2 {
        return Err(invalid("the upper bound needs n ≥ 2"));
    }
    Ok((2.0 * k as f64 * (n as f64 * E).log2()).floor() as usize)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct VcBounds {
    pub lower: usize,
    pub upper: usize,
}

/// Bounds for k-sparse halfspaces with an offset, which embed into
/// `H_k^{n+1}`: lower `k(⌊lg(n/k)⌋ + 1)`, upper `⌊2(k+1) lg(e(n+1))⌋`.
pub fn vc_bounds_affine(n: usize, k: usize) -> Result<VcBounds> {
    let lower = vc_lower_bound(n, k)?;
    let upper = (2.0 * (k + 1) as f64 * (E * (n + 1) as f64).log2()).floor() as usize;
    Ok(VcBounds { lower, upper })
}

pub fn vc_bounds(n: usize, k: usize) -> Result<VcBounds> {
    Ok(VcBounds { lower: vc_lower_bound(n, k)?, upper: vc_upper_bound(n, k)? })
}

pub fn binomial(n: u64, r: u64) -> Option<u128> {
    if r > n {
        return Some(0);
    }
    let r = r.min(n - r);
    let mut acc: u128 = 1;
    for i in 0..r {
        acc = acc.checked_mul(u128::from(n - i))? / u128::from(i + 1);
    }
    Some(acc)
}

/// `Σ_{i=0}^{d} C(l, i)`, the Sauer bound on the number of dichotomies a
/// class of VC dimension `d` cuts out of `l` points.
pub fn sauer_bound(d: u64, l: u64) -> Result<u128> {
    if d == 0 || l <= d {
        return Err(invalid(format!("need l > d ≥ 1, got d = {d}, l = {l}")));
    }
    (0..=d)
        .try_fold(0u128, |acc, i| acc.checked_add(binomial(l, i)?))
        .ok_or_else(|| Error::ResourceLimit(format!("Sauer sum overflows for d = {d}, l = {l}")))
}

/// The block-diagonal point set certifying the lower bound. Each of the `k`
/// blocks has `2^s` rows, `s = ⌊lg(n/k)⌋`; its columns are a ones column
/// followed by the coordinates of `{-1, 1}^s` listed in lexicographic order
/// (`-1 < 1`). Rows past `k·2^s` are zero. The points are the columns.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WitnessMatrix {
    n: usize,
    k: usize,
    s: u32,
    entries: Vec<Vec<i8>>,
}

pub fn build_witness(n: usize, k: usize) -> Result<WitnessMatrix> {
    check_nk(n, k)?;
    let s = block_log(n, k);
    let block_rows = 1usize << s;
    let block_cols = s as usize + 1;
    let mut entries = vec![vec![0i8; k * block_cols]; n];
    for t in 0..k {
        for r in 0..block_rows {
            let row = &mut entries[t * block_rows + r];
            row[t * block_cols] = 1;
            for j in 0..s as usize {
                let bit = (r >> (s as usize - 1 - j)) & 1;
                row[t * block_cols + 1 + j] = if bit == 1 { 1 } else { -1 };
            }
        }
    }
    Ok(WitnessMatrix { n, k, s, entries })
}

impl WitnessMatrix {
    pub fn ambient_dim(&self) -> usize {
        self.n
    }

    pub fn sparsity(&self) -> usize {
        self.k
    }

    /// `⌊lg(n/k)⌋`
    pub fn block_log(&self) -> u32 {
        self.s
    }

    pub fn block_rows(&self) -> usize {
        1 << self.s
    }

    pub fn block_cols(&self) -> usize {
        self.s as usize + 1
    }

    pub fn num_points(&self) -> usize {
        self.k * self.block_cols()
    }

    pub fn rows(&self) -> &[Vec<i8>] {
        &self.entries
    }

    pub fn column(&self, j: usize) -> Vec<i8> {
        self.entries.iter().map(|row| row[j]).collect()
    }

    /// Columns as points of `ℝⁿ`.
    pub fn points(&self) -> Vec<Vec<f64>> {
        (0..self.num_points())
            .map(|j| self.column(j).into_iter().map(f64::from).collect())
            .collect()
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
        for row in &self.entries {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    fn check_subset(&self, subset: &[usize]) -> Result<Vec<bool>> {
        let mut member = vec![false; self.num_points()];
        for &j in subset {
            *member
                .get_mut(j)
                .ok_or_else(|| invalid(format!("column {j} out of range 0..{}", self.num_points())))? = true;
        }
        Ok(member)
    }

    fn dichotomy_signs(&self, member: &[bool]) -> Vec<i8> {
        let (rows, cols, s) = (self.block_rows(), self.block_cols(), self.s as usize);
        let mut x = vec![0i8; self.n];
        for t in 0..self.k {
            let m = &member[t * cols..(t + 1) * cols];
            let sign = if m[0] { 1 } else { -1 };
            // row whose pattern equals the membership bits, flipped when the ones column is excluded
            let r = (0..s).fold(0usize, |acc, j| (acc << 1) | usize::from(m[1 + j] == m[0]));
            x[t * rows + r] = sign;
        }
        x
    }
}

/// The `k`-sparse vector whose halfspace contains exactly the witness
/// columns listed in `subset`.
pub fn witness_dichotomy_vector(w: &WitnessMatrix, subset: &[usize]) -> Result<SparseVector> {
    let member = w.check_subset(subset)?;
    let x = w.dichotomy_signs(&member).into_iter().map(f64::from).collect();
    SparseVector::with_budget(x, w.k)
}

/// Exact integer check that [`witness_dichotomy_vector`] cuts out `subset`.
pub fn witness_realizes(w: &WitnessMatrix, subset: &[usize]) -> Result<bool> {
    let member = w.check_subset(subset)?;
    let x = w.dichotomy_signs(&member);
    Ok((0..w.num_points()).all(|j| {
        let dot: i64 = w.entries.iter().zip(&x).map(|(row, &xi)| i64::from(row[j]) * i64::from(xi)).sum();
        dot != 0 && (dot > 0) == member[j]
    }))
}

/// Exhaustive check of all `2^l` dichotomies of the witness columns.
pub fn witness_shattered(w: &WitnessMatrix) -> Result<bool> {
    let l = w.num_points();
    if l > 25 {
        return Err(invalid("witness has more than 25 points"));
    }
    for mask in 0u32..(1 << l) {
        let subset: Vec<usize> = (0..l).filter(|j| mask >> j & 1 == 1).collect();
        if !witness_realizes(w, &subset)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub const MAX_SHATTER_POINTS: usize = 25;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatterInstance {
    points: Vec<Vec<f64>>,
    sparsity_budget: usize,
    ambient_dim: usize,
}

impl ShatterInstance {
    pub fn new(points: Vec<Vec<f64>>, k: usize) -> Result<Self> {
        let n = points.first().map(Vec::len).ok_or_else(|| invalid("a shatter instance needs a point"))?;
        check_nk(n, k)?;
        if points.len() > MAX_SHATTER_POINTS {
            return Err(invalid(format!("at most {MAX_SHATTER_POINTS} points, got {}", points.len())));
        }
        for p in &points {
            if p.len() != n {
                return Err(invalid(format!("point of length {} in dimension {n}", p.len())));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(invalid("points must be finite"));
            }
        }
        Ok(ShatterInstance { points, sparsity_budget: k, ambient_dim: n })
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn sparsity_budget(&self) -> usize {
        self.sparsity_budget
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    /// Points with a zero coordinate appended, as elements of `ℝⁿ⁺¹`.
    pub fn embedded(&self) -> ShatterInstance {
        let points = self.points.iter().map(|p| p.iter().copied().chain([0.0]).collect()).collect();
        ShatterInstance { points, sparsity_budget: self.sparsity_budget, ambient_dim: self.ambient_dim + 1 }
    }

    /// Upper bound on LP calls made by [`is_shattered`]: `C(n,k)·2^(l-1)`.
    pub fn lp_call_bound(&self) -> u128 {
        let supports = binomial(self.ambient_dim as u64, self.sparsity_budget as u64).unwrap_or(u128::MAX);
        supports.saturating_mul(1u128 << (self.len() - 1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShatterOptions {
    pub margin: f64,
    pub lp_budget: u128,
}

impl Default for ShatterOptions {
    fn default() -> Self {
        ShatterOptions { margin: 1e-7, lp_budget: 1_000_000 }
    }
}

/// Supports of size `k` in lexicographic order.
fn supports(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(i) = (0..k).rev().find(|&i| idx[i] < n - k + i) else {
            return out;
        };
        idx[i] += 1;
        for j in i + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

struct Oracle<'a> {
    inst: &'a ShatterInstance,
    supports: Vec<Vec<usize>>,
    margin: f64,
    calls: u128,
}

impl<'a> Oracle<'a> {
    fn new(inst: &'a ShatterInstance, margin: f64) -> Self {
        let supports = supports(inst.ambient_dim, inst.sparsity_budget);
        Oracle { inst, supports, margin, calls: 0 }
    }

    fn feasible_on(&mut self, support: &[usize], member: &[bool]) -> Result<bool> {
        self.calls += 1;
        let k = support.len();
        let mut lp = LinearProgram::new(vec![0.0; k]);
        for j in 0..k {
            lp.set_bounds(j, -1.0, 1.0);
        }
        for (p, &inside) in self.inst.points.iter().zip(member) {
            let row: Vec<f64> = support.iter().map(|&i| p[i]).collect();
            if inside {
                lp.add_ge(row, self.margin);
            } else {
                lp.add_le(row, -self.margin);
            }
        }
        match lp.solve_with(&SolverOptions::default())?.status {
            LpStatus::Optimal => Ok(true),
            LpStatus::Infeasible => Ok(false),
            LpStatus::Unbounded => unreachable!("bounded feasibility problem"),
            LpStatus::IterationLimit => Err(Error::ResourceLimit("feasibility LP hit its iteration limit".into())),
        }
    }

    fn realizable(&mut self, member: &[bool]) -> Result<bool> {
        for t in 0..self.supports.len() {
            let support = std::mem::take(&mut self.supports[t]);
            let ok = self.feasible_on(&support, member);
            self.supports[t] = support;
            if ok? {
                return Ok(true);
            }
        }
        Ok(false)
    }

    fn shattered(&mut self) -> Result<bool> {
        let l = self.inst.len();
        // x and -x realize complementary dichotomies, so fix the first point inside
        for mask in 0u32..(1 << (l - 1)) {
            let member: Vec<bool> = (0..l).map(|j| j == 0 || mask >> (j - 1) & 1 == 1).collect();
            if !self.realizable(&member)? {
                return Ok(false);
            }
        }
        Ok(true)
    }
}

/// Whether some `x` with at most `k` nonzeros and `‖x‖∞ ≤ 1` satisfies
/// `⟨u, x⟩ ≥ margin` on the points marked in `member` and `≤ -margin` on the rest.
pub fn dichotomy_realizable(inst: &ShatterInstance, member: &[bool], margin: f64) -> Result<bool> {
    if member.len() != inst.len() {
        return Err(invalid(format!("{} membership flags for {} points", member.len(), inst.len())));
    }
    Oracle::new(inst, margin).realizable(member)
}

/// Decides whether `H_k^n` shatters the instance's points, one feasibility
/// LP per (dichotomy, support) pair. Fails with a resource-limit error,
/// before solving anything, if the worst-case LP count exceeds the budget.
pub fn is_shattered(inst: &ShatterInstance) -> Result<bool> {
    is_shattered_with(inst, &ShatterOptions::default())
}

pub fn is_shattered_with(inst: &ShatterInstance, opts: &ShatterOptions) -> Result<bool> {
    let need = inst.lp_call_bound();
    if need > opts.lp_budget {
        return Err(Error::ResourceLimit(format!(
            "shattering check needs up to {need} LP calls, budget is {}",
            opts.lp_budget
        )));
    }
    Oracle::new(inst, opts.margin).shattered()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOptions {
    pub seed: Seed,
    /// Random point sets tried per candidate size.
    pub random_sets_per_size: usize,
    /// Total LP calls across the whole search.
    pub lp_budget: u128,
    pub margin: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { seed: Seed(0), random_sets_per_size: 20, lp_budget: 2_000_000, margin: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShatterSearch {
    pub size: usize,
    pub certificate: Vec<Vec<f64>>,
    /// `size` is only a lower estimate when the budget ran out.
    pub budget_exhausted: bool,
    pub lp_calls: u128,
}

pub const MAX_SEARCH_DIM: usize = 8;
pub const MAX_SEARCH_SPARSITY: usize = 2;

/// Grid directions `{-1, 0, 1}ⁿ \ {0}` with first nonzero coordinate
/// positive. Shattering is unchanged by negating single points.
fn grid_directions(n: usize) -> Vec<Vec<f64>> {
    let total = 3usize.pow(n as u32);
    (1..total)
        .map(|code| {
            let mut c = code;
            (0..n)
                .map(|_| {
                    let v = (c % 3) as f64 - 1.0;
                    c /= 3;
                    v
                })
                .collect::<Vec<f64>>()
        })
        .filter(|p| p.iter().find(|v| **v != 0.0).is_some_and(|v| *v > 0.0))
        .collect()
}

fn combinations(len: usize, r: usize) -> impl Iterator<Item = Vec<usize>> {
    let mut next = (r <= len).then(|| (0..r).collect::<Vec<usize>>());
    std::iter::from_fn(move || {
        let cur = next.take()?;
        if let Some(i) = (0..r).rev().find(|&i| cur[i] < len - r + i) {
            let mut n = cur.clone();
            n[i] += 1;
            for j in i + 1..r {
                n[j] = n[j - 1] + 1;
            }
            next = Some(n);
        }
        Some(cur)
    })
}

/// Largest size of a shattered set found among the candidates: the
/// witness first, then for each larger size up to the upper bound, seeded
/// Gaussian point sets, plus every subset of grid directions when `n ≤ 3`.
/// The search stops at the first size with no shattered candidate.
pub fn max_shattered_size(n: usize, k: usize, opts: &SearchOptions) -> Result<ShatterSearch> {
    if n > MAX_SEARCH_DIM || k > MAX_SEARCH_SPARSITY {
        return Err(invalid(format!(
            "search is limited to n ≤ {MAX_SEARCH_DIM}, k ≤ {MAX_SEARCH_SPARSITY}"
        )));
    }
    let upper = vc_upper_bound(n, k)?;
    let witness = build_witness(n, k)?;
    let mut best = ShatterSearch {
        size: 0,
        certificate: Vec::new(),
        budget_exhausted: false,
        lp_calls: 0,
    };
    let mut remaining = opts.lp_budget;

    let mut try_set = |points: Vec<Vec<f64>>, best: &mut ShatterSearch| -> Result<Option<bool>> {
        let inst = ShatterInstance::new(points, k)?;
        if inst.lp_call_bound() > remaining {
            best.budget_exhausted = true;
            return Ok(None);
        }
        let mut oracle = Oracle::new(&inst, opts.margin);
        let ok = oracle.shattered()?;
        remaining -= oracle.calls;
        best.lp_calls += oracle.calls;
        if ok {
            best.size = inst.len();
            best.certificate = inst.points;
        }
        Ok(Some(ok))
    };

    match try_set(witness.points(), &mut best)? {
        Some(true) => {}
        Some(false) => return Err(Error::DegenerateInput("witness set failed the LP oracle".into())),
        None => return Ok(best),
    }

    let grid = if n <= 3 { grid_directions(n) } else { Vec::new() };
    let mut rng = opts.seed.rng();
    for l in best.size + 1..=upper.min(MAX_SHATTER_POINTS) {
        let mut found = false;
        for idx in combinations(grid.len(), l) {
            let points = idx.iter().map(|&i| grid[i].clone()).collect();
            match try_set(points, &mut best)? {
                Some(true) => {
                    found = true;
                    break;
                }
                Some(false) => {}
                None => return Ok(best),
            }
        }
        for _ in 0..opts.random_sets_per_size {
            if found {
                break;
            }
            let points = (0..l)
                .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            match try_set(points, &mut best)? {
                Some(ok) => found = ok,
                None => return Ok(best),
            }
        }
        if !found {
            break;
        }
    }
    Ok(best)
}

/// Checks one instance of the rearrangement `l ≤ α lg(βl) ⟹ l < 2α lg(αβ)`,
/// valid when `αβ > 4`. Returns `true` when the premise fails.
pub fn log_rearrangement_holds(alpha: f64, beta: f64, l: f64) -> Result<bool> {
    if !(alpha > 0.0 && beta > 0.0 && l >= 1.0) || !(alpha * beta > 4.0) {
        return Err(invalid(format!(
            "need α, β > 0, αβ > 4 and l ≥ 1, got α = {alpha}, β = {beta}, l = {l}"
        )));
    }
    if l <= alpha * (beta * l).log2() {
        Ok(l < 2.0 * alpha * (alpha * beta).log2())
    } else {
        Ok(true)
    }
}
