//! Bounded-variable two-phase simplex on a dense row-major tableau.

use super::{LinearProgram, LpSolution, LpStatus, PivotRule, SolverOptions};

/// How an original variable maps onto nonnegative tableau columns.
#[derive(Debug, Clone, Copy)]
enum ColMap {
    /// `x = offset + col`
    Shift { col: usize, offset: f64 },
    /// `x = offset - col`
    Mirror { col: usize, offset: f64 },
    /// `x = pos - neg`
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum State {
    Basic,
    Lower,
    Upper,
}

enum PhaseEnd {
    Optimal,
    Unbounded,
    IterationLimit,
}

// Consecutive degenerate steps tolerated before Dantzig pricing hands over
// to Bland's rule.
const STALL_LIMIT: usize = 50;
const DEGENERATE_STEP: f64 = 1e-12;

struct Tableau {
    rows: usize,
    cols: usize,
    t: Vec<f64>,
    beta: Vec<f64>,
    upper: Vec<f64>,
    cost: Vec<f64>,
    d: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<State>,
    obj: f64,
    first_artificial: usize,
    iterations: usize,
    max_iterations: usize,
    opts: SolverOptions,
}

impl Tableau {
    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.cols + j]
    }

    fn value(&self, j: usize) -> f64 {
        match self.state[j] {
            State::Lower => 0.0,
            State::Upper => self.upper[j],
            State::Basic => unreachable!("basic values live in beta"),
        }
    }

    fn column_values(&self) -> Vec<f64> {
        let mut x: Vec<f64> = (0..self.cols)
            .map(|j| if self.state[j] == State::Basic { 0.0 } else { self.value(j) })
            .collect();
        for (i, &j) in self.basis.iter().enumerate() {
            x[j] = self.beta[i];
        }
        x
    }

    fn reset_costs(&mut self, cost: Vec<f64>) {
        self.cost = cost;
        let mut d = self.cost.clone();
        for i in 0..self.rows {
            let cb = self.cost[self.basis[i]];
            if cb != 0.0 {
                let row = &self.t[i * self.cols..(i + 1) * self.cols];
                for (dj, a) in d.iter_mut().zip(row) {
                    *dj -= cb * a;
                }
            }
        }
        for &j in &self.basis {
            d[j] = 0.0;
        }
        self.d = d;
        self.obj = self
            .column_values()
            .iter()
            .zip(&self.cost)
            .map(|(x, c)| x * c)
            .sum();
    }

    fn choose_entering(&self, bland: bool) -> Option<(usize, f64)> {
        let tol = self.opts.optimality_tol;
        let mut best: Option<(usize, f64, f64)> = None;
        for j in 0..self.cols {
            let dir = match self.state[j] {
                State::Basic => continue,
                _ if self.upper[j] == 0.0 => continue,
                State::Lower if self.d[j] < -tol => 1.0,
                State::Upper if self.d[j] > tol => -1.0,
                _ => continue,
            };
            if bland {
                return Some((j, dir));
            }
            let score = self.d[j].abs();
            if best.is_none_or(|(_, _, s)| score > s) {
                best = Some((j, dir, score));
            }
        }
        best.map(|(j, dir, _)| (j, dir))
    }

    /// Returns the step length and the blocking row (`None` for a bound flip),
    /// or `None` if the ray is unbounded.
    fn ratio_test(&self, q: usize, dir: f64, bland: bool) -> Option<(f64, Option<(usize, State)>)> {
        let ptol = self.opts.pivot_tol;
        let mut best: Option<(f64, usize, State, f64)> = None;
        for i in 0..self.rows {
            let g = dir * self.at(i, q);
            let (limit, to) = if g > ptol {
                (self.beta[i].max(0.0) / g, State::Lower)
            } else if g < -ptol && self.upper[self.basis[i]].is_finite() {
                ((self.upper[self.basis[i]] - self.beta[i]).max(0.0) / -g, State::Upper)
            } else {
                continue;
            };
            let replace = match best {
                None => true,
                Some((b, bi, _, bg)) => {
                    if limit < b - 1e-12 {
                        true
                    } else if limit <= b + 1e-12 {
                        if bland {
                            self.basis[i] < self.basis[bi]
                        } else {
                            g.abs() > bg
                        }
                    } else {
                        false
                    }
                }
            };
            if replace {
                best = Some((limit, i, to, g.abs()));
            }
        }
        let flip = self.upper[q];
        match best {
            Some((limit, _, _, _)) if flip.is_finite() && flip <= limit => Some((flip, None)),
            Some((limit, i, to, _)) => Some((limit, Some((i, to)))),
            None if flip.is_finite() => Some((flip, None)),
            None => None,
        }
    }

    fn step(&mut self, q: usize, dir: f64, t: f64, leave: Option<(usize, State)>) {
        if t != 0.0 {
            for i in 0..self.rows {
                let a = self.t[i * self.cols + q];
                if a != 0.0 {
                    self.beta[i] -= dir * t * a;
                }
            }
            self.obj += self.d[q] * dir * t;
        }
        match leave {
            None => {
                self.state[q] = if self.state[q] == State::Lower { State::Upper } else { State::Lower };
            }
            Some((r, to)) => {
                let entering = self.value(q) + dir * t;
                let p = self.basis[r];
                self.state[p] = to;
                self.beta[r] = entering;
                self.basis[r] = q;
                self.state[q] = State::Basic;
                self.pivot(r, q);
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize) {
        let cols = self.cols;
        let inv = 1.0 / self.t[r * cols + q];
        let prow: Vec<f64> = self.t[r * cols..(r + 1) * cols].iter().map(|v| v * inv).collect();
        let nz: Vec<usize> = (0..cols).filter(|&j| prow[j] != 0.0).collect();
        let dense = nz.len() * 3 > cols;
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * cols + q];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * cols..(i + 1) * cols];
            if dense {
                for (a, p) in row.iter_mut().zip(&prow) {
                    *a -= f * p;
                }
            } else {
                for &j in &nz {
                    row[j] -= f * prow[j];
                }
            }
            row[q] = 0.0;
        }
        let f = self.d[q];
        if f != 0.0 {
            for &j in &nz {
                self.d[j] -= f * prow[j];
            }
        }
        self.d[q] = 0.0;
        self.t[r * cols..(r + 1) * cols].copy_from_slice(&prow);
        self.t[r * cols + q] = 1.0;
    }

    fn run(&mut self) -> PhaseEnd {
        let mut stalled = 0usize;
        loop {
            let bland = self.opts.pivot_rule == PivotRule::Bland || stalled > STALL_LIMIT;
            let Some((q, dir)) = self.choose_entering(bland) else {
                return PhaseEnd::Optimal;
            };
            if self.iterations >= self.max_iterations {
                return PhaseEnd::IterationLimit;
            }
            let Some((t, leave)) = self.ratio_test(q, dir, bland) else {
                return PhaseEnd::Unbounded;
            };
            self.iterations += 1;
            if t <= DEGENERATE_STEP {
                stalled += 1;
            } else {
                stalled = 0;
            }
            self.step(q, dir, t, leave);
        }
    }

    /// Pivots zero-level artificials out of the basis and fixes every
    /// artificial at zero.
    fn retire_artificials(&mut self) {
        for j in self.first_artificial..self.cols {
            self.upper[j] = 0.0;
        }
        for r in 0..self.rows {
            if self.basis[r] < self.first_artificial {
                continue;
            }
            let mut best: Option<(usize, f64)> = None;
            for j in 0..self.first_artificial {
                let a = self.at(r, j).abs();
                if self.state[j] != State::Basic && a > 1e-7 && best.is_none_or(|(_, b)| a > b) {
                    best = Some((j, a));
                }
            }
            if let Some((j, _)) = best {
                self.step(j, 1.0, 0.0, Some((r, State::Lower)));
            }
        }
    }
}

pub(super) fn solve(lp: &LinearProgram, opts: &SolverOptions) -> LpSolution {
    let nvars = lp.num_vars();
    let (eq_rows, eq_rhs) = lp.eq_constraints();
    let (le_rows, le_rhs) = lp.le_constraints();
    let n_eq = eq_rows.len();
    let rows = n_eq + le_rows.len();

    let mut maps = Vec::with_capacity(nvars);
    let mut ns = 0usize;
    let mut struct_upper = Vec::new();
    for j in 0..nvars {
        let (l, u) = (lp.lower_bounds()[j], lp.upper_bounds()[j]);
        if l.is_finite() {
            maps.push(ColMap::Shift { col: ns, offset: l });
            struct_upper.push(u - l);
            ns += 1;
        } else if u.is_finite() {
            maps.push(ColMap::Mirror { col: ns, offset: u });
            struct_upper.push(f64::INFINITY);
            ns += 1;
        } else {
            maps.push(ColMap::Split { pos: ns, neg: ns + 1 });
            struct_upper.extend([f64::INFINITY, f64::INFINITY]);
            ns += 2;
        }
    }

    // Standard-form rows before slacks and artificials.
    let mut std_rows = vec![vec![0.0; ns]; rows];
    let mut rhs = vec![0.0; rows];
    for (r, (row, b)) in eq_rows.iter().zip(eq_rhs).chain(le_rows.iter().zip(le_rhs)).enumerate() {
        let mut bb = *b;
        for (j, &a) in row.iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            match maps[j] {
                ColMap::Shift { col, offset } => {
                    std_rows[r][col] += a;
                    bb -= a * offset;
                }
                ColMap::Mirror { col, offset } => {
                    std_rows[r][col] -= a;
                    bb -= a * offset;
                }
                ColMap::Split { pos, neg } => {
                    std_rows[r][pos] += a;
                    std_rows[r][neg] -= a;
                }
            }
        }
        rhs[r] = bb;
    }
    let row_sign: Vec<f64> = rhs.iter().map(|b| if *b < 0.0 { -1.0 } else { 1.0 }).collect();

    let n_le = le_rows.len();
    let needs_artificial: Vec<bool> = (0..rows).map(|r| r < n_eq || row_sign[r] < 0.0).collect();
    let n_art = needs_artificial.iter().filter(|v| **v).count();
    let first_artificial = ns + n_le;
    let cols = first_artificial + n_art;

    let mut t = vec![0.0; rows * cols];
    let mut basis = vec![0usize; rows];
    let mut identity = vec![(0usize, 1.0f64); rows];
    let mut next_art = first_artificial;
    for r in 0..rows {
        let s = row_sign[r];
        let row = &mut t[r * cols..(r + 1) * cols];
        for (dst, v) in row.iter_mut().zip(&std_rows[r]) {
            *dst = s * v;
        }
        if r >= n_eq {
            let slack = ns + (r - n_eq);
            row[slack] = s;
            identity[r] = (slack, s);
            basis[r] = slack;
        }
        if needs_artificial[r] {
            row[next_art] = 1.0;
            basis[r] = next_art;
            if r < n_eq {
                identity[r] = (next_art, 1.0);
            }
            next_art += 1;
        }
    }
    drop(std_rows);

    let mut upper = struct_upper;
    upper.resize(cols, f64::INFINITY);
    let mut state = vec![State::Lower; cols];
    for &j in &basis {
        state[j] = State::Basic;
    }
    let beta: Vec<f64> = rhs.iter().zip(&row_sign).map(|(b, s)| b * s).collect();
    let max_iterations = opts.max_iterations.unwrap_or(10 * (cols + rows));

    let mut tab = Tableau {
        rows,
        cols,
        t,
        beta,
        upper,
        cost: vec![0.0; cols],
        d: vec![0.0; cols],
        basis,
        state,
        obj: 0.0,
        first_artificial,
        iterations: 0,
        max_iterations,
        opts: *opts,
    };

    let finish = |tab: &Tableau, status: LpStatus| -> LpSolution {
        let colv = tab.column_values();
        let x: Vec<f64> = maps
            .iter()
            .map(|m| match *m {
                ColMap::Shift { col, offset } => offset + colv[col],
                ColMap::Mirror { col, offset } => offset - colv[col],
                ColMap::Split { pos, neg } => colv[pos] - colv[neg],
            })
            .collect();
        let duals = if status == LpStatus::Optimal {
            (0..rows)
                .map(|r| {
                    let (col, sign) = identity[r];
                    let pi: f64 = (0..rows).map(|i| tab.cost[tab.basis[i]] * sign * tab.at(i, col)).sum();
                    row_sign[r] * pi
                })
                .collect()
        } else {
            vec![0.0; rows]
        };
        LpSolution {
            status,
            objective: lp.evaluate(&x),
            primal_residual: lp.residual(&x),
            x,
            duals,
            iterations: tab.iterations,
        }
    };

    if n_art > 0 {
        let mut phase1 = vec![0.0; cols];
        phase1[first_artificial..].iter_mut().for_each(|c| *c = 1.0);
        tab.reset_costs(phase1);
        match tab.run() {
            PhaseEnd::Optimal | PhaseEnd::Unbounded => {}
            PhaseEnd::IterationLimit => return finish(&tab, LpStatus::IterationLimit),
        }
        let scale = 1.0 + rhs.iter().fold(0.0f64, |a, b| a.max(b.abs()));
        if tab.obj > opts.feasibility_tol * scale {
            return finish(&tab, LpStatus::Infeasible);
        }
        tab.retire_artificials();
    }

    let mut cost = vec![0.0; cols];
    for (j, m) in maps.iter().enumerate() {
        let c = lp.objective()[j];
        match *m {
            ColMap::Shift { col, .. } => cost[col] = c,
            ColMap::Mirror { col, .. } => cost[col] = -c,
            ColMap::Split { pos, neg } => {
                cost[pos] = c;
                cost[neg] = -c;
            }
        }
    }
    tab.reset_costs(cost);
    let status = match tab.run() {
        PhaseEnd::Optimal => LpStatus::Optimal,
        PhaseEnd::Unbounded => LpStatus::Unbounded,
        PhaseEnd::IterationLimit => LpStatus::IterationLimit,
    };
    finish(&tab, status)
}
