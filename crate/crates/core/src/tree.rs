//! Reusing root aggregations for local dual bounds inside a branch-and-bound
//! tree.
//!
//! Each node starts from its local MILP bound and tries the pooled
//! aggregations in order; the first one that beats the MILP bound is used and
//! the candidates tried before it are dropped for the whole subtree.

use std::collections::VecDeque;

use crate::minlp::{solve_subproblem, SolveLimits, SubProblem, SubStatus};
use crate::model::{AggregationMatrix, Model, ModelError};
use crate::scalar::Scalar;
use crate::surrogate::BendersReport;

#[derive(Debug, Clone, PartialEq)]
pub struct PoolEntry<S> {
    pub lambda: AggregationMatrix<S>,
    pub root_bound: S,
}

/// Aggregations that beat the root MILP bound, strongest first.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationPool<S> {
    root_milp_bound: S,
    entries: Vec<PoolEntry<S>>,
}

impl<S: Scalar> AggregationPool<S> {
    pub fn new(root_milp_bound: S) -> Self {
        AggregationPool {
            root_milp_bound,
            entries: Vec::new(),
        }
    }

    /// Inserts `lambda` if its root bound beats the MILP bound and it is not
    /// already present. Entries stay sorted by descending root bound, ties in
    /// insertion order.
    pub fn admit(&mut self, lambda: AggregationMatrix<S>, root_bound: S) -> bool {
        if !(root_bound > self.root_milp_bound) || self.entries.iter().any(|e| e.lambda == lambda) {
            return false;
        }
        let pos = self
            .entries
            .iter()
            .position(|e| e.root_bound < root_bound)
            .unwrap_or(self.entries.len());
        self.entries.insert(pos, PoolEntry { lambda, root_bound });
        true
    }

    /// Pool from the iterations of a root run, keeping the `size` strongest.
    pub fn from_report(report: &BendersReport<S>, root_milp_bound: S, size: usize) -> Self {
        let mut pool = Self::new(root_milp_bound);
        for rec in &report.records {
            if rec.sub_status != SubStatus::Infeasible {
                pool.admit(rec.lambda.clone(), rec.sub_bound);
            }
        }
        pool.entries.truncate(size);
        pool
    }

    pub fn root_milp_bound(&self) -> S {
        self.root_milp_bound
    }

    pub fn entries(&self) -> &[PoolEntry<S>] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NodeContext<S> {
    pub id: usize,
    pub boxes: Vec<(S, S)>,
    /// Pool indices still worth trying in this subtree.
    pub candidates: Vec<usize>,
}

impl<S: Scalar> NodeContext<S> {
    pub fn root(model: &Model<S>, pool: &AggregationPool<S>) -> Self {
        NodeContext {
            id: 0,
            boxes: model.boxes().to_vec(),
            candidates: (0..pool.len()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LocalBound<S> {
    pub bound: S,
    /// Candidates handed down to the children.
    pub candidates: Vec<usize>,
    pub milp_bound: S,
    /// Pool index that produced `bound`, if any.
    pub used: Option<usize>,
}

/// Local dual bound of `node` from its MILP relaxation and the pool.
///
/// A candidate counts as improving when its bound exceeds the MILP bound by
/// more than the gap limit. Non-improving candidates are discarded only when
/// their solve finished; limit-hit ones are kept.
pub fn local_bound<S: Scalar>(
    node: &NodeContext<S>,
    model: &Model<S>,
    pool: &AggregationPool<S>,
    limits: &SolveLimits<S>,
) -> Result<LocalBound<S>, ModelError> {
    let local = model.with_boxes(node.boxes.clone())?;
    let milp = solve_subproblem(&SubProblem::new(&local, Vec::new()), limits);
    let d = milp.dual_bound;
    if milp.status == SubStatus::Infeasible {
        return Ok(LocalBound {
            bound: d,
            candidates: node.candidates.clone(),
            milp_bound: d,
            used: None,
        });
    }
    let mut kept = Vec::new();
    for (pos, &c) in node.candidates.iter().enumerate() {
        let lambda = pool.entries[c].lambda.unit_rows();
        let sp = SubProblem::from_aggregation(&local, &lambda)?;
        let out = solve_subproblem(&sp, limits);
        if out.dual_bound > d + limits.gap * S::one().max(d.abs()) {
            kept.extend_from_slice(&node.candidates[pos..]);
            return Ok(LocalBound {
                bound: out.dual_bound,
                candidates: kept,
                milp_bound: d,
                used: Some(c),
            });
        }
        if matches!(out.status, SubStatus::Limit) {
            kept.push(c);
        }
    }
    Ok(LocalBound {
        bound: d,
        candidates: kept,
        milp_bound: d,
        used: None,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoNode<S> {
    pub id: usize,
    pub parent: Option<usize>,
    pub depth: usize,
    pub boxes: Vec<(S, S)>,
    pub candidates: usize,
    pub bound: S,
    pub milp_bound: S,
    pub pruned: bool,
}

/// Breadth-first tree to `max_depth` that bisects the widest variable
/// (lowest index on ties) at its midpoint and evaluates [`local_bound`] at
/// every node. A node is pruned when its bound exceeds the model's primal
/// cutoff or it is infeasible; pruned nodes are not expanded.
pub fn branching_demo<S: Scalar>(
    model: &Model<S>,
    pool: &AggregationPool<S>,
    max_depth: usize,
    limits: &SolveLimits<S>,
) -> Result<Vec<DemoNode<S>>, ModelError> {
    let mut out = Vec::new();
    let mut queue = VecDeque::new();
    queue.push_back((NodeContext::root(model, pool), None, 0usize));
    let mut next_id = 1;
    while let Some((ctx, parent, depth)) = queue.pop_front() {
        let lb = local_bound(&ctx, model, pool, limits)?;
        let pruned = !lb.bound.is_finite() || model.primal_cutoff().is_some_and(|c| lb.bound > c);
        out.push(DemoNode {
            id: ctx.id,
            parent,
            depth,
            boxes: ctx.boxes.clone(),
            candidates: lb.candidates.len(),
            bound: lb.bound,
            milp_bound: lb.milp_bound,
            pruned,
        });
        if pruned || depth >= max_depth {
            continue;
        }
        let Some(j) = widest(&ctx.boxes) else { continue };
        let (lo, hi) = ctx.boxes[j];
        let mid = (lo + hi) * S::lit(0.5);
        let halves = if model.is_integer(j) {
            [(lo, mid.floor()), (mid.floor() + S::one(), hi)]
        } else {
            [(lo, mid), (mid, hi)]
        };
        for (a, b) in halves {
            let mut boxes = ctx.boxes.clone();
            boxes[j] = (a, b);
            let child = NodeContext {
                id: next_id,
                boxes,
                candidates: lb.candidates.clone(),
            };
            next_id += 1;
            queue.push_back((child, Some(ctx.id), depth + 1));
        }
    }
    Ok(out)
}

fn widest<S: Scalar>(boxes: &[(S, S)]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (j, &(lo, hi)) in boxes.iter().enumerate() {
        if hi - lo > S::zero() && best.is_none_or(|b| hi - lo > boxes[b].1 - boxes[b].0) {
            best = Some(j);
        }
    }
    best
}
