//! Spatial branch and bound for the aggregated sub-problems.
//!
//! A sub-problem keeps the linear part of a [`Model`] (rows, refined rows,
//! objective cutoff, integrality, boxes) and replaces the nonlinear
//! constraints by a list of aggregated polynomials `h_k(x) <= 0`. In
//! Lagrangian mode an epigraph variable `t >= h(x)` is added to the objective.
//!
//! Nodes are processed best-first. Each node solves the LP over the envelope
//! cuts of its box; integer branching comes before spatial branching.

use std::borrow::Cow;
use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use crate::lp::{solve_lp, LinearProgram, LpRow, LpStatus, Relation, Sense};
use crate::model::{aggregate, AggregationMatrix, Model, ModelError, Polynomial};
use crate::relax::{Interval, Reformulation};
use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct SolveLimits<S> {
    pub time_limit: Option<Duration>,
    pub node_limit: usize,
    /// Relative gap `|p - d| / max(|p|, |d|, 1)` at which a solve is optimal.
    pub gap: S,
    /// Stop as soon as a feasible point with objective `<=` this value is found.
    pub early_stop_at: Option<S>,
}

impl<S: Scalar> Default for SolveLimits<S> {
    fn default() -> Self {
        SolveLimits {
            time_limit: None,
            node_limit: 200_000,
            gap: S::lit(1e-4),
            early_stop_at: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubStatus {
    Optimal,
    EarlyStopped,
    Infeasible,
    Limit,
}

impl SubStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SubStatus::Optimal => "optimal",
            SubStatus::EarlyStopped => "early_stopped",
            SubStatus::Infeasible => "infeasible",
            SubStatus::Limit => "limit",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubSolveOutcome<S> {
    pub status: SubStatus,
    /// Valid lower bound; `+inf` when infeasible.
    pub dual_bound: S,
    pub incumbent: Option<Vec<S>>,
    /// Objective of the incumbent, `+inf` without one.
    pub primal_bound: S,
    pub gap: S,
    pub nodes: usize,
    /// Global dual bound after each processed node.
    pub bound_trace: Vec<S>,
}

/// `|p - d| / max(|p|, |d|, 1)`; infinite when either side is.
pub fn relative_gap<S: Scalar>(p: S, d: S) -> S {
    if !p.is_finite() || !d.is_finite() {
        return S::infinity();
    }
    (p - d).abs() / S::one().max(p.abs()).max(d.abs())
}

#[derive(Debug, Clone)]
pub struct SubProblem<'a, S: Scalar> {
    model: &'a Model<S>,
    reform: Cow<'a, Reformulation<S>>,
    constraints: Vec<Polynomial<S>>,
    epigraph: Option<Polynomial<S>>,
}

impl<'a, S: Scalar> SubProblem<'a, S> {
    /// Sub-problem with its own reformulation of the model's constraints.
    pub fn new(model: &'a Model<S>, constraints: Vec<Polynomial<S>>) -> Self {
        let reform = Reformulation::build(model.nonlinear(), model.boxes());
        Self::assemble(model, Cow::Owned(reform), constraints)
    }

    /// Sub-problem sharing a reformulation built over a box containing the
    /// model's box.
    pub fn with_reformulation(
        model: &'a Model<S>,
        reform: &'a Reformulation<S>,
        constraints: Vec<Polynomial<S>>,
    ) -> Self {
        Self::assemble(model, Cow::Borrowed(reform), constraints)
    }

    /// The K rows `sum_i lambda^k_i g_i(x) <= 0`.
    pub fn from_aggregation(model: &'a Model<S>, lambda: &AggregationMatrix<S>) -> Result<Self, ModelError> {
        Ok(Self::new(model, lambda.aggregate_all(model)?))
    }

    fn assemble(model: &'a Model<S>, mut reform: Cow<'a, Reformulation<S>>, constraints: Vec<Polynomial<S>>) -> Self {
        for poly in &constraints {
            for (mono, _) in poly.terms() {
                if !mono.is_constant() && reform.monomial_var(mono).is_none() {
                    reform.to_mut().register(mono);
                }
            }
        }
        SubProblem {
            model,
            reform,
            constraints,
            epigraph: None,
        }
    }

    /// Adds `h(x)` to the objective through an epigraph variable.
    pub fn with_epigraph(mut self, h: Polynomial<S>) -> Self {
        for (mono, _) in h.terms() {
            if !mono.is_constant() && self.reform.monomial_var(mono).is_none() {
                self.reform.to_mut().register(mono);
            }
        }
        self.epigraph = Some(h);
        self
    }

    pub fn model(&self) -> &Model<S> {
        self.model
    }

    pub fn k(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[Polynomial<S>] {
        &self.constraints
    }

    /// True objective of a point: `c^T x` plus the epigraph term.
    pub fn objective_value(&self, x: &[S]) -> S {
        let mut v = self.model.objective_value(x);
        if let Some(h) = &self.epigraph {
            v += h.evaluate(x);
        }
        v
    }

    /// Point satisfies the linear part, integrality and every aggregated row.
    pub fn is_feasible(&self, x: &[S], tol: S) -> bool {
        let m = self.model;
        for (j, &(lo, hi)) in m.boxes().iter().enumerate() {
            if x[j] < lo - tol || x[j] > hi + tol {
                return false;
            }
            if m.is_integer(j) && (x[j] - x[j].round()).abs() > S::int_tol() {
                return false;
            }
        }
        let rows_ok = m
            .linear_rows()
            .iter()
            .chain(m.refined_rows())
            .all(|r| r.activity(x) <= r.rhs + tol);
        let cutoff_ok = m.primal_cutoff().is_none_or(|c| m.objective_value(x) <= c + tol);
        rows_ok && cutoff_ok && self.constraints.iter().all(|h| h.evaluate(x) <= tol)
    }
}

struct Node<S> {
    lower: Vec<S>,
    upper: Vec<S>,
    bound: S,
    id: usize,
}

impl<S: Scalar> PartialEq for Node<S> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<S: Scalar> Eq for Node<S> {}

impl<S: Scalar> PartialOrd for Node<S> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<S: Scalar> Ord for Node<S> {
    // max-heap: smallest bound first, then oldest node
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .partial_cmp(&self.bound)
            .unwrap_or(Ordering::Equal)
            .then_with(|| other.id.cmp(&self.id))
    }
}

struct Layout<S> {
    n: usize,
    active: Vec<bool>,
    // column of each auxiliary variable, if active
    aux_col: Vec<Option<usize>>,
    t_col: Option<usize>,
    template: LinearProgram<S>,
    // constraint rows over reformulation variables, for bound tightening
    prop_rows: Vec<LpRow<S>>,
}

impl<S: Scalar> Layout<S> {
    fn col(&self, v: usize) -> usize {
        if v < self.n {
            v
        } else {
            self.aux_col[v - self.n].expect("inactive auxiliary variable")
        }
    }

    fn remap(&self, cut: LpRow<S>) -> LpRow<S> {
        LpRow {
            coeffs: cut.coeffs.into_iter().map(|(v, a)| (self.col(v), a)).collect(),
            relation: cut.relation,
            rhs: cut.rhs,
        }
    }
}

fn layout<S: Scalar>(sp: &SubProblem<'_, S>) -> Layout<S> {
    let model = sp.model;
    let n = model.n();
    let reform = &*sp.reform;
    let active = reform.required_atoms(sp.constraints.iter().chain(sp.epigraph.iter()));
    let mut template = LinearProgram::new(Sense::Minimize, model.objective().to_vec());
    for (j, &(lo, hi)) in model.boxes().iter().enumerate() {
        template.set_bounds(j, lo, hi);
    }
    let mut aux_col = vec![None; reform.num_aux()];
    for (i, atom) in reform.atoms().iter().enumerate() {
        if active[i] {
            let g = reform.global_boxes()[atom.var];
            aux_col[i] = Some(template.add_var(S::zero(), g.lo, g.hi));
        }
    }
    let t_col = sp
        .epigraph
        .as_ref()
        .map(|_| template.add_var(S::one(), S::zero(), S::zero()));
    let mut lay = Layout {
        n,
        active,
        aux_col,
        t_col,
        template,
        prop_rows: Vec::new(),
    };
    for row in model.linear_rows().iter().chain(model.refined_rows()) {
        lay.template.add_row(row.coeffs.iter().copied(), Relation::Le, row.rhs);
        lay.prop_rows.push(LpRow {
            coeffs: row.coeffs.clone(),
            relation: Relation::Le,
            rhs: row.rhs,
        });
    }
    if let Some(cut) = model.primal_cutoff() {
        let c: Vec<_> = model.objective().iter().copied().enumerate().collect();
        lay.template.add_row(c.clone(), Relation::Le, cut);
        lay.prop_rows.push(LpRow {
            coeffs: c,
            relation: Relation::Le,
            rhs: cut,
        });
    }
    let linearized: Vec<_> = sp
        .constraints
        .iter()
        .filter(|h| !h.is_empty())
        .map(|h| reform.linearize(h).expect("monomials registered on construction"))
        .collect();
    for (coeffs, constant) in linearized {
        let cols: Vec<_> = coeffs.iter().map(|&(v, a)| (lay.col(v), a)).collect();
        lay.template.add_row(cols, Relation::Le, -constant);
        lay.prop_rows.push(LpRow {
            coeffs,
            relation: Relation::Le,
            rhs: -constant,
        });
    }
    if let (Some(h), Some(t)) = (&sp.epigraph, lay.t_col) {
        let (coeffs, constant) = reform.linearize(h).expect("monomials registered on construction");
        let mut coeffs: Vec<_> = coeffs.into_iter().map(|(v, a)| (lay.col(v), a)).collect();
        coeffs.push((t, -S::one()));
        lay.template.add_row(coeffs, Relation::Le, -constant);
    }
    lay
}

enum Eval<S> {
    Infeasible,
    // LP gave up; keep the parent bound
    Unresolved,
    Solved {
        bound: S,
        x: Vec<S>,
        all: Vec<S>,
        // node box after bound tightening
        lower: Vec<S>,
        upper: Vec<S>,
    },
}

fn evaluate_node<S: Scalar>(sp: &SubProblem<'_, S>, lay: &Layout<S>, lower: &[S], upper: &[S]) -> Eval<S> {
    let reform = &*sp.reform;
    let local: Vec<(S, S)> = lower.iter().copied().zip(upper.iter().copied()).collect();
    let mut boxes = reform.propagate(&local);
    if !reform.tighten(&lay.prop_rows, &mut boxes, &lay.active, sp.model.integrality(), 8) {
        return Eval::Infeasible;
    }
    let lower: Vec<S> = boxes[..lay.n].iter().map(|b| b.lo).collect();
    let upper: Vec<S> = boxes[..lay.n].iter().map(|b| b.hi).collect();
    let mut lp = lay.template.clone();
    for j in 0..lay.n {
        lp.set_bounds(j, lower[j], upper[j]);
    }
    for (i, atom) in reform.atoms().iter().enumerate() {
        if let Some(c) = lay.aux_col[i] {
            lp.set_bounds(c, boxes[atom.var].lo, boxes[atom.var].hi);
        }
    }
    if let (Some(h), Some(t)) = (&sp.epigraph, lay.t_col) {
        let r = Interval::of_polynomial(h, &boxes[..lay.n]);
        lp.set_bounds(t, r.lo, r.hi);
    }
    let mut cuts = Vec::new();
    reform.emit_cuts_for(&boxes, &lay.active, &mut cuts);
    for cut in cuts {
        let cut = lay.remap(cut);
        lp.add_row(cut.coeffs, cut.relation, cut.rhs);
    }
    let sol = solve_lp(&lp);
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Eval::Infeasible,
        LpStatus::Unbounded | LpStatus::Stalled => return Eval::Unresolved,
    }
    // values of all reformulation variables
    let mut all: Vec<S> = sol.x[..lay.n].to_vec();
    for (i, _) in reform.atoms().iter().enumerate() {
        all.push(lay.aux_col[i].map_or(S::zero(), |c| sol.x[c]));
    }
    let x = sol.x[..lay.n].to_vec();
    Eval::Solved {
        bound: sol.objective,
        x,
        all,
        lower,
        upper,
    }
}

/// Where to split a node, or `None` if nothing can be split.
fn choose_branch<S: Scalar>(
    sp: &SubProblem<'_, S>,
    lay: &Layout<S>,
    lower: &[S],
    upper: &[S],
    x: &[S],
    all: &[S],
) -> Option<(usize, S)> {
    let model = sp.model;
    let mut best: Option<(usize, S)> = None;
    let mut best_frac = S::int_tol();
    for j in 0..lay.n {
        if model.is_integer(j) {
            let frac = (x[j] - x[j].floor()).min(x[j].ceil() - x[j]);
            if frac > best_frac {
                best_frac = frac;
                best = Some((j, x[j]));
            }
        }
    }
    if best.is_some() {
        return best;
    }
    let reform = &*sp.reform;
    let mut worst = S::zero();
    let mut pick: Option<usize> = None;
    for (i, atom) in reform.atoms().iter().enumerate() {
        if !lay.active[i] {
            continue;
        }
        let viol = (all[atom.var] - atom.term_value(all)).abs();
        let splittable = atom.support.iter().any(|&j| upper[j] - lower[j] > S::lit(1e-10));
        if viol > worst && splittable {
            worst = viol;
            pick = Some(i);
        }
    }
    let vars: Vec<usize> = match pick {
        Some(i) => reform.atoms()[i].support.clone(),
        None => (0..lay.n)
            .filter(|&j| {
                reform
                    .atoms()
                    .iter()
                    .zip(&lay.active)
                    .any(|(a, &on)| on && a.support.contains(&j))
            })
            .collect(),
    };
    let mut var: Option<usize> = None;
    for j in vars {
        let w = upper[j] - lower[j];
        if w > S::lit(1e-10) && var.is_none_or(|v| w > upper[v] - lower[v]) {
            var = Some(j);
        }
    }
    let j = var?;
    let (l, u) = (lower[j], upper[j]);
    let w = u - l;
    let at = x[j].max(l + S::lit(0.1) * w).min(u - S::lit(0.1) * w);
    Some((j, at))
}

pub fn solve_subproblem<S: Scalar>(sp: &SubProblem<'_, S>, limits: &SolveLimits<S>) -> SubSolveOutcome<S> {
    let start = Instant::now();
    let model = sp.model;
    let lay = layout(sp);
    let (lower, upper): (Vec<S>, Vec<S>) = model.boxes().iter().copied().unzip();
    let mut heap = BinaryHeap::new();
    heap.push(Node {
        lower,
        upper,
        bound: S::neg_infinity(),
        id: 0,
    });
    let mut next_id = 1usize;
    let mut inc: Option<Vec<S>> = None;
    let mut inc_val = S::infinity();
    let mut unresolved = S::infinity();
    // smallest bound among nodes closed within the gap rather than by dominance
    let mut floor = S::infinity();
    let mut nodes = 0usize;
    let mut trace = Vec::new();
    let mut status = None;
    let tol = S::feas_tol();

    let global = |heap: &BinaryHeap<Node<S>>, unresolved: S, floor: S, inc_val: S| {
        let open = heap.peek().map_or(S::infinity(), |nd| nd.bound);
        open.min(unresolved).min(floor).min(inc_val)
    };

    while let Some(node) = heap.peek() {
        let gb = node.bound.min(unresolved).min(floor);
        if inc.is_some() && relative_gap(inc_val, gb) <= limits.gap {
            status = Some(SubStatus::Optimal);
            break;
        }
        if nodes >= limits.node_limit || limits.time_limit.is_some_and(|t| start.elapsed() >= t) {
            status = Some(SubStatus::Limit);
            break;
        }
        let node = heap.pop().expect("peeked");
        nodes += 1;
        let prunable =
            |z: S, inc_val: S| z >= inc_val || (inc_val - z) <= limits.gap * S::one().max(inc_val.abs()).max(z.abs());
        if inc.is_some() && prunable(node.bound, inc_val) {
            if node.bound < inc_val {
                floor = floor.min(node.bound);
            }
            trace.push(global(&heap, unresolved, floor, inc_val));
            continue;
        }
        let (z, x, all, lower, upper) = match evaluate_node(sp, &lay, &node.lower, &node.upper) {
            Eval::Infeasible => {
                trace.push(global(&heap, unresolved, floor, inc_val));
                continue;
            }
            Eval::Unresolved => {
                unresolved = unresolved.min(node.bound);
                trace.push(global(&heap, unresolved, floor, inc_val));
                continue;
            }
            Eval::Solved {
                bound,
                x,
                all,
                lower,
                upper,
            } => (bound.max(node.bound), x, all, lower, upper),
        };
        if inc.is_some() && prunable(z, inc_val) {
            if z < inc_val {
                floor = floor.min(z);
            }
            trace.push(global(&heap, unresolved, floor, inc_val));
            continue;
        }
        // candidate: LP point with integers snapped
        let mut cand = x.clone();
        for j in 0..model.n() {
            if model.is_integer(j) {
                cand[j] = cand[j].round().max(lower[j]).min(upper[j]);
            } else {
                cand[j] = cand[j].max(lower[j]).min(upper[j]);
            }
        }
        let int_ok = (0..model.n()).all(|j| !model.is_integer(j) || (x[j] - x[j].round()).abs() <= S::int_tol());
        let mut resolved = false;
        if int_ok && sp.is_feasible(&cand, tol) {
            let v = sp.objective_value(&cand);
            if v < inc_val {
                inc_val = v;
                inc = Some(cand);
            }
            resolved = v <= z + tol * S::one().max(z.abs());
            if resolved {
                floor = floor.min(z);
            }
            if limits.early_stop_at.is_some_and(|d| inc_val <= d) {
                trace.push(global(&heap, unresolved, floor, inc_val).min(z));
                heap.push(Node {
                    bound: z,
                    id: node.id,
                    lower,
                    upper,
                });
                status = Some(SubStatus::EarlyStopped);
                break;
            }
        }
        if !resolved {
            match choose_branch(sp, &lay, &lower, &upper, &x, &all) {
                None => unresolved = unresolved.min(z),
                Some((j, at)) => {
                    let mut down_hi = at;
                    let mut up_lo = at;
                    if model.is_integer(j) {
                        down_hi = at.floor();
                        up_lo = down_hi + S::one();
                    }
                    let mut left = Node {
                        lower: lower.clone(),
                        upper: upper.clone(),
                        bound: z,
                        id: next_id,
                    };
                    left.upper[j] = down_hi;
                    let mut right = Node {
                        lower,
                        upper,
                        bound: z,
                        id: next_id + 1,
                    };
                    right.lower[j] = up_lo;
                    next_id += 2;
                    heap.push(left);
                    heap.push(right);
                }
            }
        }
        trace.push(global(&heap, unresolved, floor, inc_val));
    }

    let dual = global(&heap, unresolved, floor, inc_val);
    let status = match status {
        Some(s) => s,
        None if unresolved.is_finite() => SubStatus::Limit,
        None if inc.is_some() => SubStatus::Optimal,
        None => SubStatus::Infeasible,
    };
    SubSolveOutcome {
        status,
        dual_bound: dual,
        gap: relative_gap(inc_val, dual),
        incumbent: inc,
        primal_bound: inc_val,
        nodes,
        bound_trace: trace,
    }
}

/// Lagrangian relaxation `min c^T x + sum_i lambda_i g_i(x)` over the linear
/// part of the model.
pub fn solve_lagrangian<S: Scalar>(
    model: &Model<S>,
    lambda: &[S],
    limits: &SolveLimits<S>,
) -> Result<SubSolveOutcome<S>, ModelError> {
    let h = aggregate(model, lambda)?;
    let sp = SubProblem::new(model, Vec::new()).with_epigraph(h);
    Ok(solve_subproblem(&sp, limits))
}

/// Dual bound of [`solve_lagrangian`].
pub fn lagrangian_value<S: Scalar>(model: &Model<S>, lambda: &[S], limits: &SolveLimits<S>) -> Result<S, ModelError> {
    Ok(solve_lagrangian(model, lambda, limits)?.dual_bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Monomial;

    fn example1() -> Model<f64> {
        let g1 = Polynomial::from_terms([
            (Monomial::new([(0, 1), (1, 1)]), 2.0),
            (Monomial::new([(0, 2)]), 1.0),
            (Monomial::new([(1, 2)]), -1.0),
            (Monomial::var(0), -1.0),
        ]);
        let g2 = Polynomial::from_terms([
            (Monomial::new([(0, 1), (1, 1)]), -1.0),
            (Monomial::new([(0, 2)]), -0.3),
            (Monomial::new([(1, 2)]), -0.2),
            (Monomial::var(0), -0.5),
            (Monomial::var(1), 1.5),
        ]);
        Model::builder(2)
            .objective(vec![0.0, -1.0])
            .uniform_box(0.0, 1.0)
            .nonlinear(g1)
            .nonlinear(g2)
            .build()
            .unwrap()
    }

    #[test]
    fn milp_relaxation_of_example1() {
        let m = example1();
        let sp = SubProblem::new(&m, Vec::new());
        let out = solve_subproblem(&sp, &SolveLimits::default());
        assert_eq!(out.status, SubStatus::Optimal);
        assert!((out.dual_bound + 1.0).abs() < 1e-9);
    }

    #[test]
    fn surrogate_of_example1() {
        let m = example1();
        let lam = AggregationMatrix::single(vec![0.56, 0.44]).unwrap();
        let sp = SubProblem::from_aggregation(&m, &lam).unwrap();
        let out = solve_subproblem(&sp, &SolveLimits::default());
        assert_eq!(out.status, SubStatus::Optimal);
        assert!((out.dual_bound + 0.382915).abs() < 2e-4, "{out:?}");
        let x = out.incumbent.unwrap();
        assert!(sp.is_feasible(&x, 1e-7));
        for w in out.bound_trace.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
    }

    #[test]
    fn lagrangian_of_example1() {
        let m = example1();
        let v = lagrangian_value(&m, &[0.67, 0.82], &SolveLimits::default()).unwrap();
        assert!((v + 0.788906).abs() < 2e-4, "{v}");
    }

    #[test]
    fn early_stop_returns_a_point_below_the_threshold() {
        let m = example1();
        let lam = AggregationMatrix::single(vec![0.56, 0.44]).unwrap();
        let sp = SubProblem::from_aggregation(&m, &lam).unwrap();
        let limits = SolveLimits {
            early_stop_at: Some(-0.2),
            ..SolveLimits::default()
        };
        let out = solve_subproblem(&sp, &limits);
        assert_eq!(out.status, SubStatus::EarlyStopped);
        assert!(out.primal_bound <= -0.2);
        assert!(out.dual_bound <= -0.3829);
    }

    #[test]
    fn infeasible_subproblem() {
        let m = Model::builder(1)
            .objective(vec![1.0])
            .uniform_box(0.0, 1.0)
            .nonlinear(Polynomial::from_terms([
                (Monomial::new([(0, 2)]), -1.0),
                (Monomial::one(), 2.0),
            ]))
            .build()
            .unwrap();
        let sp = SubProblem::new(&m, m.nonlinear().to_vec());
        let out = solve_subproblem(&sp, &SolveLimits::default());
        assert_eq!(out.status, SubStatus::Infeasible);
        assert_eq!(out.dual_bound, f64::INFINITY);
    }
}
