//! LP-based branch and bound for mixed-integer linear programs.
//!
//! Depth-first search on the most fractional variable, diving first into the
//! child on the side the LP value rounds to. The global dual bound is the best
//! bound over open nodes and the incumbent.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpStatus, Sense};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq)]
pub struct MipProblem<S> {
    pub lp: LinearProgram<S>,
    pub integer: Vec<bool>,
}

impl<S: Scalar> MipProblem<S> {
    pub fn new(lp: LinearProgram<S>, integer: Vec<bool>) -> Self {
        assert_eq!(lp.num_vars(), integer.len(), "one integrality flag per variable");
        MipProblem { lp, integer }
    }
}

#[derive(Debug, Clone)]
pub struct MipLimits<S> {
    pub node_limit: usize,
    pub time_limit: Option<Duration>,
    /// Stop once the incumbent is at least this good (`>=` for maximization,
    /// `<=` for minimization).
    pub target_primal: Option<S>,
    /// Stop once the dual bound proves nothing better than this value exists.
    pub target_dual: Option<S>,
    pub abs_gap: S,
    pub rel_gap: S,
}

impl<S: Scalar> Default for MipLimits<S> {
    fn default() -> Self {
        MipLimits {
            node_limit: 1_000_000,
            time_limit: None,
            target_primal: None,
            target_dual: None,
            abs_gap: S::lit(1e-9),
            rel_gap: S::lit(1e-9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MipStatus {
    Optimal,
    Infeasible,
    /// A node/time limit or target stopped the search; the incumbent and dual
    /// bound are still valid.
    Limit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MipSolution<S> {
    pub status: MipStatus,
    pub incumbent: Option<Vec<S>>,
    /// Incumbent objective, `-inf`/`+inf` (max/min) without one.
    pub objective: S,
    /// Valid bound on the optimum in the problem's own sense.
    pub dual_bound: S,
    pub gap: S,
    pub nodes: usize,
    /// Global dual bound after every processed node.
    pub bound_trace: Vec<S>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MipError {
    #[error("LP relaxation is unbounded")]
    Unbounded,
    #[error("LP solver stalled")]
    Stalled,
    #[error("integer variable {0} has an infinite bound")]
    UnboundedInteger(usize),
}

struct Node<S> {
    lower: Vec<S>,
    upper: Vec<S>,
    // internal (minimisation) bound inherited from the parent
    bound: S,
}

/// `|primal - dual| / max(1, |primal|)`.
pub fn relative_gap<S: Scalar>(primal: S, dual: S) -> S {
    if !primal.is_finite() || !dual.is_finite() {
        return S::infinity();
    }
    (primal - dual).abs() / S::one().max(primal.abs())
}

pub fn solve_mip<S: Scalar>(prob: &MipProblem<S>, limits: &MipLimits<S>) -> Result<MipSolution<S>, MipError> {
    let n = prob.lp.num_vars();
    for j in 0..n {
        if prob.integer[j] && !(prob.lp.lower[j].is_finite() && prob.lp.upper[j].is_finite()) {
            return Err(MipError::UnboundedInteger(j));
        }
    }
    // internal value = sign * objective, always minimised
    let sign = match prob.lp.sense {
        Sense::Minimize => S::one(),
        Sense::Maximize => -S::one(),
    };
    let start = Instant::now();
    let mut lp = prob.lp.clone();
    let mut stack = vec![Node {
        lower: prob.lp.lower.clone(),
        upper: prob.lp.upper.clone(),
        bound: S::neg_infinity(),
    }];
    let mut incumbent: Option<Vec<S>> = None;
    let mut inc_val = S::infinity();
    let mut nodes = 0usize;
    let mut trace = Vec::new();
    let mut stopped = false;
    let target_primal = limits.target_primal.map(|t| sign * t);
    let target_dual = limits.target_dual.map(|t| sign * t);

    let prune_tol = |inc: S| limits.abs_gap.max(limits.rel_gap * inc.abs());

    while let Some(node) = stack.pop() {
        if nodes >= limits.node_limit || limits.time_limit.is_some_and(|t| start.elapsed() >= t) {
            stack.push(node);
            stopped = true;
            break;
        }
        nodes += 1;
        if node.bound >= inc_val - prune_tol(inc_val) {
            trace.push(sign * global_bound(&stack, inc_val));
            continue;
        }
        lp.lower.clone_from(&node.lower);
        lp.upper.clone_from(&node.upper);
        let sol = solve_lp(&lp);
        match sol.status {
            LpStatus::Optimal => {}
            LpStatus::Infeasible => {
                trace.push(sign * global_bound(&stack, inc_val));
                continue;
            }
            LpStatus::Unbounded => return Err(MipError::Unbounded),
            LpStatus::Stalled => return Err(MipError::Stalled),
        }
        let z = (sign * sol.objective).max(node.bound);
        if z >= inc_val - prune_tol(inc_val) {
            trace.push(sign * global_bound(&stack, inc_val));
            continue;
        }
        let mut branch: Option<(usize, S)> = None;
        let mut best_frac = S::int_tol();
        for j in 0..n {
            if prob.integer[j] {
                let v = sol.x[j];
                let frac = (v - v.floor()).min(v.ceil() - v);
                if frac > best_frac {
                    best_frac = frac;
                    branch = Some((j, v));
                }
            }
        }
        match branch {
            None => {
                let mut x = sol.x;
                for j in 0..n {
                    if prob.integer[j] {
                        x[j] = x[j].round();
                    }
                }
                inc_val = z;
                incumbent = Some(x);
                if target_primal.is_some_and(|t| inc_val <= t) {
                    trace.push(sign * global_bound(&stack, inc_val));
                    stopped = true;
                    break;
                }
            }
            Some((j, v)) => {
                let mut down = Node {
                    lower: node.lower.clone(),
                    upper: node.upper.clone(),
                    bound: z,
                };
                down.upper[j] = v.floor();
                let mut up = Node {
                    lower: node.lower,
                    upper: node.upper,
                    bound: z,
                };
                up.lower[j] = v.ceil();
                // explore the nearer side first
                if v - v.floor() > S::lit(0.5) {
                    stack.push(down);
                    stack.push(up);
                } else {
                    stack.push(up);
                    stack.push(down);
                }
            }
        }
        let gb = global_bound(&stack, inc_val);
        trace.push(sign * gb);
        if target_dual.is_some_and(|t| gb >= t) && !stack.is_empty() {
            stopped = true;
            break;
        }
    }

    let open_bound = global_bound(&stack, inc_val);
    let dual_internal = if stopped { open_bound } else { inc_val };
    let status = if stopped {
        MipStatus::Limit
    } else if incumbent.is_some() {
        MipStatus::Optimal
    } else {
        MipStatus::Infeasible
    };
    let objective = sign * inc_val;
    let dual_bound = sign * dual_internal;
    Ok(MipSolution {
        status,
        gap: relative_gap(objective, dual_bound),
        incumbent,
        objective,
        dual_bound,
        nodes,
        bound_trace: trace,
    })
}

fn global_bound<S: Scalar>(stack: &[Node<S>], inc_val: S) -> S {
    stack.iter().fold(inc_val, |acc, nd| acc.min(nd.bound))
}
