//! Dense bounded-variable primal simplex.
//!
//! Two phases over a full tableau. Nonbasic variables sit at one of their
//! bounds; a variable resting at its upper bound is stored complemented
//! (`x = u - x'`) so every nonbasic column is at zero in tableau coordinates.
//! Pricing is Dantzig's rule, switching to Bland's rule after a streak of
//! degenerate pivots. The tableau is periodically rebuilt from the original
//! data to bound round-off.

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    Minimize,
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpRow<S> {
    pub coeffs: Vec<(usize, S)>,
    pub relation: Relation,
    pub rhs: S,
}

impl<S: Scalar> LpRow<S> {
    pub fn activity(&self, x: &[S]) -> S {
        self.coeffs.iter().map(|&(j, a)| a * x[j]).sum()
    }
}

/// `opt c^T x  s.t.  rows, lower <= x <= upper`. Bounds default to `[0, +inf)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram<S> {
    pub sense: Sense,
    pub objective: Vec<S>,
    pub rows: Vec<LpRow<S>>,
    pub lower: Vec<S>,
    pub upper: Vec<S>,
}

impl<S: Scalar> LinearProgram<S> {
    pub fn new(sense: Sense, objective: Vec<S>) -> Self {
        let n = objective.len();
        LinearProgram {
            sense,
            objective,
            rows: Vec::new(),
            lower: vec![S::zero(); n],
            upper: vec![S::infinity(); n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    /// Appends a variable and returns its index.
    pub fn add_var(&mut self, cost: S, lower: S, upper: S) -> usize {
        self.objective.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.objective.len() - 1
    }

    pub fn set_bounds(&mut self, j: usize, lower: S, upper: S) {
        self.lower[j] = lower;
        self.upper[j] = upper;
    }

    pub fn add_row<I: IntoIterator<Item = (usize, S)>>(&mut self, coeffs: I, relation: Relation, rhs: S) {
        self.rows.push(LpRow {
            coeffs: coeffs.into_iter().collect(),
            relation,
            rhs,
        });
    }

    pub fn objective_value(&self, x: &[S]) -> S {
        self.objective.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Largest violation of rows and bounds at `x`.
    pub fn max_violation(&self, x: &[S]) -> S {
        let mut worst = S::zero();
        for row in &self.rows {
            let a = row.activity(x);
            let v = match row.relation {
                Relation::Le => a - row.rhs,
                Relation::Ge => row.rhs - a,
                Relation::Eq => (a - row.rhs).abs(),
            };
            worst = worst.max(v);
        }
        for (j, &v) in x.iter().enumerate() {
            worst = worst.max(self.lower[j] - v).max(v - self.upper[j]);
        }
        worst
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
    /// Pivot budget exhausted without reaching one of the three outcomes.
    Stalled,
}

/// Result of [`solve_lp`]. On `Optimal`, `duals[i]` is the multiplier of row
/// `i` and `reduced_costs = c - A^T duals`, both in the sense of the original
/// objective, so `objective = b^T duals + sum_j reduced_costs[j] * x[j]`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution<S> {
    pub status: LpStatus,
    pub objective: S,
    pub x: Vec<S>,
    pub duals: Vec<S>,
    pub reduced_costs: Vec<S>,
    pub pivots: usize,
}

impl<S: Scalar> LpSolution<S> {
    fn without_point(status: LpStatus, n: usize, m: usize, pivots: usize) -> Self {
        let objective = match status {
            LpStatus::Unbounded => S::neg_infinity(),
            _ => S::nan(),
        };
        LpSolution {
            status,
            objective,
            x: vec![S::nan(); n],
            duals: vec![S::zero(); m],
            reduced_costs: vec![S::zero(); n],
            pivots,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

/// How a user variable maps onto nonnegative internal columns:
/// `x = offset + sign * col` (plus `- col2` for free variables).
#[derive(Debug, Clone, Copy)]
struct ColumnMap<S> {
    col: usize,
    sign: S,
    offset: S,
    neg_col: Option<usize>,
}

const DEGENERATE_STREAK: usize = 50;
const REINVERT_EVERY: usize = 100;

struct Tableau<S> {
    rows: usize,
    cols: usize,
    // original equality system (after row sign normalisation), row-major
    a0: Vec<S>,
    b0: Vec<S>,
    // current tableau B^{-1} A (oriented), row-major
    t: Vec<S>,
    rhs: Vec<S>,
    d: Vec<S>,
    cost: Vec<S>,
    upper: Vec<S>,
    flipped: Vec<bool>,
    barred: Vec<bool>,
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    pivots: usize,
    since_reinvert: usize,
}

enum Step {
    Optimal,
    Unbounded,
    Continue,
}

enum Outcome {
    Optimal,
    Unbounded,
    Stalled,
}

impl<S: Scalar> Tableau<S> {
    #[inline]
    fn at(&self, i: usize, j: usize) -> S {
        self.t[i * self.cols + j]
    }

    fn oriented_cost(&self, j: usize) -> S {
        if self.flipped[j] {
            -self.cost[j]
        } else {
            self.cost[j]
        }
    }

    fn recompute_reduced_costs(&mut self) {
        for j in 0..self.cols {
            let mut v = self.oriented_cost(j);
            for i in 0..self.rows {
                let cb = self.oriented_cost(self.basis[i]);
                if cb != S::zero() {
                    v -= cb * self.at(i, j);
                }
            }
            self.d[j] = if self.is_basic[j] { S::zero() } else { v };
        }
    }

    /// Rebuilds `B^{-1} A` and `B^{-1} b` from the original data for the
    /// current basis and orientation. Keeps the old tableau if the basis
    /// looks singular.
    fn reinvert(&mut self) {
        let (m, n) = (self.rows, self.cols);
        let mut t = self.a0.clone();
        let mut rhs = self.b0.clone();
        for j in 0..n {
            if self.flipped[j] {
                let u = self.upper[j];
                for i in 0..m {
                    let a = t[i * n + j];
                    rhs[i] -= a * u;
                    t[i * n + j] = -a;
                }
            }
        }
        let mut row_of = vec![usize::MAX; m];
        let mut used = vec![false; m];
        for k in 0..m {
            let col = self.basis[k];
            let mut best = None;
            let mut best_abs = S::pivot_tol();
            for i in 0..m {
                if !used[i] {
                    let v = t[i * n + col].abs();
                    if v > best_abs {
                        best_abs = v;
                        best = Some(i);
                    }
                }
            }
            let Some(r) = best else {
                return;
            };
            used[r] = true;
            row_of[k] = r;
            let p = t[r * n + col];
            for j in 0..n {
                t[r * n + j] /= p;
            }
            rhs[r] /= p;
            for i in 0..m {
                if i != r {
                    let f = t[i * n + col];
                    if f != S::zero() {
                        for j in 0..n {
                            let v = t[r * n + j];
                            if v != S::zero() {
                                t[i * n + j] -= f * v;
                            }
                        }
                        let rr = rhs[r];
                        rhs[i] -= f * rr;
                    }
                }
            }
        }
        // reorder rows so row k holds basis[k]
        let mut nt = vec![S::zero(); m * n];
        let mut nrhs = vec![S::zero(); m];
        for k in 0..m {
            let r = row_of[k];
            nt[k * n..(k + 1) * n].copy_from_slice(&t[r * n..(r + 1) * n]);
            nrhs[k] = rhs[r];
        }
        self.t = nt;
        self.rhs = nrhs;
        self.since_reinvert = 0;
        self.recompute_reduced_costs();
    }

    /// Complements nonbasic column `j` (moves it to its other bound).
    fn flip_nonbasic(&mut self, j: usize) {
        let u = self.upper[j];
        let n = self.cols;
        for i in 0..self.rows {
            let a = self.t[i * n + j];
            if a != S::zero() {
                self.rhs[i] -= a * u;
                self.t[i * n + j] = -a;
            }
        }
        self.d[j] = -self.d[j];
        self.flipped[j] = !self.flipped[j];
    }

    /// Complements the basic variable of row `r`.
    fn flip_basic(&mut self, r: usize) {
        let b = self.basis[r];
        let u = self.upper[b];
        let n = self.cols;
        for j in 0..n {
            if j != b {
                self.t[r * n + j] = -self.t[r * n + j];
            }
        }
        self.rhs[r] = u - self.rhs[r];
        self.flipped[b] = !self.flipped[b];
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let n = self.cols;
        let p = self.t[r * n + j];
        for k in 0..n {
            self.t[r * n + k] /= p;
        }
        self.rhs[r] /= p;
        let (before, rest) = self.t.split_at_mut(r * n);
        let (prow, after) = rest.split_at_mut(n);
        let rr = self.rhs[r];
        for (i, row) in before.chunks_mut(n).chain(after.chunks_mut(n)).enumerate() {
            let i = if i < r { i } else { i + 1 };
            let f = row[j];
            if f != S::zero() {
                for (dst, &src) in row.iter_mut().zip(prow.iter()) {
                    if src != S::zero() {
                        *dst -= f * src;
                    }
                }
                row[j] = S::zero();
                self.rhs[i] -= f * rr;
            }
        }
        let f = self.d[j];
        if f != S::zero() {
            for (dst, &src) in self.d.iter_mut().zip(prow.iter()) {
                if src != S::zero() {
                    *dst -= f * src;
                }
            }
        }
        self.d[j] = S::zero();
        let old = self.basis[r];
        self.is_basic[old] = false;
        self.is_basic[j] = true;
        self.basis[r] = j;
        self.pivots += 1;
        self.since_reinvert += 1;
    }

    fn step(&mut self, bland: bool) -> (Step, bool) {
        let tol = S::dual_tol();
        let mut enter = None;
        let mut best = -tol;
        for j in 0..self.cols {
            if self.is_basic[j] || self.barred[j] || self.upper[j] <= S::zero() {
                continue;
            }
            let dj = self.d[j];
            if dj < best {
                enter = Some(j);
                if bland {
                    break;
                }
                best = dj;
            }
        }
        let Some(j) = enter else {
            return (Step::Optimal, false);
        };

        let ptol = S::pivot_tol();
        let mut t_min = S::infinity();
        let mut leave: Option<(usize, bool)> = None;
        let mut leave_mag = S::zero();
        let n = self.cols;
        for i in 0..self.rows {
            let a = self.t[i * n + j];
            let b = self.basis[i];
            let ratio = if a > ptol {
                (self.rhs[i] / a).max(S::zero())
            } else if a < -ptol && self.upper[b].is_finite() {
                ((self.upper[b] - self.rhs[i]) / -a).max(S::zero())
            } else {
                continue;
            };
            let take = match leave {
                None => true,
                Some((li, _)) => {
                    let tie = S::lit(1e-12) * (S::one() + t_min.abs());
                    if ratio < t_min - tie {
                        true
                    } else if ratio <= t_min + tie {
                        if bland {
                            b < self.basis[li]
                        } else {
                            a.abs() > leave_mag
                        }
                    } else {
                        false
                    }
                }
            };
            if take {
                t_min = if leave.is_none() { ratio } else { t_min.min(ratio) };
                leave = Some((i, a < S::zero()));
                leave_mag = a.abs();
            }
        }

        match leave {
            None if !self.upper[j].is_finite() => (Step::Unbounded, false),
            None => {
                self.flip_nonbasic(j);
                (Step::Continue, false)
            }
            Some(_) if self.upper[j] <= t_min => {
                self.flip_nonbasic(j);
                (Step::Continue, false)
            }
            Some((r, to_upper)) => {
                if to_upper {
                    self.flip_basic(r);
                }
                let degenerate = t_min <= S::lit(1e-12);
                self.pivot(r, j);
                (Step::Continue, degenerate)
            }
        }
    }

    fn run(&mut self, max_pivots: usize) -> Outcome {
        let mut streak = 0usize;
        loop {
            if self.pivots >= max_pivots {
                return Outcome::Stalled;
            }
            if self.since_reinvert >= REINVERT_EVERY {
                self.reinvert();
            }
            let (step, degenerate) = self.step(streak >= DEGENERATE_STREAK);
            streak = if degenerate { streak + 1 } else { 0 };
            match step {
                Step::Continue => {}
                Step::Unbounded => return Outcome::Unbounded,
                Step::Optimal => {
                    if self.since_reinvert == 0 {
                        return Outcome::Optimal;
                    }
                    // confirm on a fresh tableau
                    self.reinvert();
                    if matches!(self.step(streak >= DEGENERATE_STREAK).0, Step::Optimal) {
                        return Outcome::Optimal;
                    }
                }
            }
        }
    }

    fn value(&self, j: usize) -> S {
        let raw = if self.is_basic[j] {
            let r = self.basis.iter().position(|&b| b == j).unwrap();
            self.rhs[r]
        } else {
            S::zero()
        };
        if self.flipped[j] {
            self.upper[j] - raw
        } else {
            raw
        }
    }
}

/// Solves `lp` to optimality, infeasibility or unboundedness. Deterministic for
/// identical input.
pub fn solve_lp<S: Scalar>(lp: &LinearProgram<S>) -> LpSolution<S> {
    let n = lp.num_vars();
    let m = lp.rows.len();
    for j in 0..n {
        if lp.lower[j] > lp.upper[j] {
            return LpSolution::without_point(LpStatus::Infeasible, n, m, 0);
        }
    }
    let sense_sign = match lp.sense {
        Sense::Minimize => S::one(),
        Sense::Maximize => -S::one(),
    };

    // user variables -> internal nonnegative columns
    let mut maps = Vec::with_capacity(n);
    let mut col_upper = Vec::new();
    let mut col_cost = Vec::new();
    for j in 0..n {
        let (l, u) = (lp.lower[j], lp.upper[j]);
        let c = sense_sign * lp.objective[j];
        let col = col_upper.len();
        if l.is_finite() {
            maps.push(ColumnMap {
                col,
                sign: S::one(),
                offset: l,
                neg_col: None,
            });
            col_upper.push(u - l);
            col_cost.push(c);
        } else if u.is_finite() {
            maps.push(ColumnMap {
                col,
                sign: -S::one(),
                offset: u,
                neg_col: None,
            });
            col_upper.push(S::infinity());
            col_cost.push(-c);
        } else {
            maps.push(ColumnMap {
                col,
                sign: S::one(),
                offset: S::zero(),
                neg_col: Some(col + 1),
            });
            col_upper.push(S::infinity());
            col_upper.push(S::infinity());
            col_cost.push(c);
            col_cost.push(-c);
        }
    }
    let n_struct = col_upper.len();
    let n_slack = lp.rows.iter().filter(|r| r.relation != Relation::Eq).count();
    let cols = n_struct + n_slack + m;
    let art0 = n_struct + n_slack;

    let mut a0 = vec![S::zero(); m * cols];
    let mut b0 = vec![S::zero(); m];
    let mut row_sign = vec![S::one(); m];
    let mut slack = n_struct;
    for (i, row) in lp.rows.iter().enumerate() {
        let mut rhs = row.rhs;
        for &(j, a) in &row.coeffs {
            let map = maps[j];
            rhs -= a * map.offset;
            a0[i * cols + map.col] += a * map.sign;
            if let Some(nc) = map.neg_col {
                a0[i * cols + nc] -= a;
            }
        }
        match row.relation {
            Relation::Le => {
                a0[i * cols + slack] = S::one();
                slack += 1;
            }
            Relation::Ge => {
                a0[i * cols + slack] = -S::one();
                slack += 1;
            }
            Relation::Eq => {}
        }
        if rhs < S::zero() {
            row_sign[i] = -S::one();
            for v in &mut a0[i * cols..(i + 1) * cols] {
                *v = -*v;
            }
            rhs = -rhs;
        }
        a0[i * cols + art0 + i] = S::one();
        b0[i] = rhs;
    }

    let mut upper = col_upper;
    upper.resize(cols, S::infinity());
    let mut phase1_cost = vec![S::zero(); cols];
    for c in phase1_cost.iter_mut().skip(art0) {
        *c = S::one();
    }
    let mut is_basic = vec![false; cols];
    for i in 0..m {
        is_basic[art0 + i] = true;
    }
    let mut tab = Tableau {
        rows: m,
        cols,
        t: a0.clone(),
        rhs: b0.clone(),
        a0,
        b0,
        d: vec![S::zero(); cols],
        cost: phase1_cost,
        upper,
        flipped: vec![false; cols],
        barred: vec![false; cols],
        basis: (art0..art0 + m).collect(),
        is_basic,
        pivots: 0,
        since_reinvert: 0,
    };
    let max_pivots = 50 * (m + cols) + 1000;

    // phase 1
    tab.recompute_reduced_costs();
    match tab.run(max_pivots) {
        Outcome::Stalled => return LpSolution::without_point(LpStatus::Stalled, n, m, tab.pivots),
        Outcome::Unbounded => unreachable!("phase one objective is bounded below"),
        Outcome::Optimal => {}
    }
    let infeas: S = (art0..cols).map(|j| tab.value(j)).sum();
    let scale = S::one() + tab.b0.iter().fold(S::zero(), |acc, &b| acc.max(b));
    if infeas > S::feas_tol() * scale {
        return LpSolution::without_point(LpStatus::Infeasible, n, m, tab.pivots);
    }

    // phase 2: artificials pinned to zero
    for j in art0..cols {
        tab.upper[j] = S::zero();
        tab.barred[j] = true;
        tab.cost[j] = S::zero();
    }
    for (j, &c) in col_cost.iter().enumerate() {
        tab.cost[j] = c;
    }
    tab.reinvert();
    tab.recompute_reduced_costs();
    match tab.run(max_pivots) {
        Outcome::Stalled => return LpSolution::without_point(LpStatus::Stalled, n, m, tab.pivots),
        Outcome::Unbounded => return LpSolution::without_point(LpStatus::Unbounded, n, m, tab.pivots),
        Outcome::Optimal => {}
    }

    let x: Vec<S> = maps
        .iter()
        .map(|map| {
            let mut v = map.offset + map.sign * tab.value(map.col);
            if let Some(nc) = map.neg_col {
                v -= tab.value(nc);
            }
            v
        })
        .collect();
    // d_art = 0 - y_internal
    let duals: Vec<S> = (0..m).map(|i| -tab.d[art0 + i] * row_sign[i] * sense_sign).collect();
    let mut reduced_costs = lp.objective.clone();
    for (i, row) in lp.rows.iter().enumerate() {
        for &(j, a) in &row.coeffs {
            reduced_costs[j] -= a * duals[i];
        }
    }
    LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&x),
        x,
        duals,
        reduced_costs,
        pivots: tab.pivots,
    }
}
