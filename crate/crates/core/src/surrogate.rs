//! Surrogate and K-surrogate duals by Benders-type cutting planes.
//!
//! The loop alternates between a sub-problem (minimise the objective over the
//! K aggregated constraints at the current multipliers) and a master problem
//! that picks multipliers maximising the smallest violation `psi` of every
//! point collected so far. For `K = 1` the master is an LP; for `K >= 2` the
//! disjunction "some row is violated" is linearised with big-M binaries.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::lp::{solve_lp, LinearProgram, LpStatus, Relation, Sense};
use crate::minlp::{solve_subproblem, SolveLimits, SubProblem, SubSolveOutcome, SubStatus};
use crate::mip::{solve_mip, MipError, MipLimits, MipProblem, MipStatus};
use crate::model::{AggregationMatrix, Model, ModelError};
use crate::relax::Reformulation;
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryMode {
    None,
    /// `lambda^1_1 >= lambda^2_1 >= ... >= lambda^K_1`.
    FirstComponent,
    /// `lambda^k_k >= lambda^l_k` for `l > k`.
    Diagonal,
}

#[derive(Debug, Clone)]
pub struct BendersConfig<S> {
    pub k: usize,
    pub epsilon: S,
    /// Master MILP stops once its incumbent reaches `alpha` times the
    /// previous master's dual bound.
    pub alpha: S,
    pub stall_limit: usize,
    pub trust_radius: S,
    pub max_iterations: usize,
    pub time_limit: Option<Duration>,
    pub target: Option<S>,
    pub symmetry: SymmetryMode,
    /// Support fixing and trust box after each improvement.
    pub stabilize: bool,
    pub sub_limits: SolveLimits<S>,
    pub master_node_limit: usize,
}

impl<S: Scalar> Default for BendersConfig<S> {
    fn default() -> Self {
        BendersConfig {
            k: 1,
            epsilon: S::lit(1e-6),
            alpha: S::lit(0.2),
            stall_limit: 20,
            trust_radius: S::lit(0.1),
            max_iterations: 200,
            time_limit: None,
            target: None,
            symmetry: SymmetryMode::FirstComponent,
            stabilize: true,
            sub_limits: SolveLimits::default(),
            master_node_limit: 100_000,
        }
    }
}

impl<S: Scalar> BendersConfig<S> {
    pub fn with_k(k: usize) -> Self {
        BendersConfig { k, ..Self::default() }
    }

    fn validate(&self) -> Result<(), BendersError> {
        if self.k == 0 {
            return Err(BendersError::Config("k must be at least 1".into()));
        }
        if !(self.alpha > S::zero() && self.alpha <= S::one()) {
            return Err(BendersError::Config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.trust_radius > S::zero() && self.trust_radius < S::one()) {
            return Err(BendersError::Config(format!(
                "trust radius must lie in (0, 1), got {}",
                self.trust_radius
            )));
        }
        if !(self.epsilon > S::zero()) {
            return Err(BendersError::Config("epsilon must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum BendersError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("master problem failed: {0}")]
    Master(String),
}

impl From<MipError> for BendersError {
    fn from(e: MipError) -> Self {
        BendersError::Master(e.to_string())
    }
}

/// Points generated by the sub-problems and the stabilization state.
#[derive(Debug, Clone)]
pub struct MasterState<S> {
    pub k: usize,
    pub m: usize,
    points: Vec<Vec<S>>,
    values: Vec<Vec<S>>,
    pub psi_history: Vec<S>,
    pub best_bound: S,
    pub best_lambda: AggregationMatrix<S>,
    pub stall_counter: usize,
    /// `support[k][i]` false means the entry is fixed to zero.
    pub support: Option<Vec<Vec<bool>>>,
    pub trust_box: Option<Vec<Vec<(S, S)>>>,
    /// Upper bound on the unrestricted master optimum from earlier solves.
    pub psi_prev: Option<S>,
}

impl<S: Scalar> MasterState<S> {
    pub fn new(k: usize, m: usize) -> Self {
        MasterState {
            k,
            m,
            points: Vec::new(),
            values: Vec::new(),
            psi_history: Vec::new(),
            best_bound: S::neg_infinity(),
            best_lambda: AggregationMatrix::zeros(k, m),
            stall_counter: 0,
            support: None,
            trust_box: None,
            psi_prev: None,
        }
    }

    /// Adds a point with its constraint values unless a point within
    /// infinity-norm distance 1e-9 is already present.
    pub fn add_point(&mut self, x: Vec<S>, g: Vec<S>) -> bool {
        assert_eq!(g.len(), self.m);
        let tol = S::lit(1e-9);
        let dup = self
            .points
            .iter()
            .any(|p| p.iter().zip(&x).all(|(a, b)| (*a - *b).abs() <= tol));
        if dup {
            return false;
        }
        self.points.push(x);
        self.values.push(g);
        true
    }

    /// Adds bare constraint values (no point), e.g. for synthetic masters.
    pub fn add_values(&mut self, g: Vec<S>) {
        assert_eq!(g.len(), self.m);
        self.points.push(Vec::new());
        self.values.push(g);
    }

    pub fn points(&self) -> &[Vec<S>] {
        &self.points
    }

    pub fn values(&self) -> &[Vec<S>] {
        &self.values
    }

    pub fn is_stabilized(&self) -> bool {
        self.support.is_some() || self.trust_box.is_some()
    }

    /// Fixes the zero pattern of `lambda` and boxes the remaining entries.
    /// All-zero rows (unused aggregations) stay free.
    pub fn stabilize_at(&mut self, lambda: &AggregationMatrix<S>, radius: S) {
        let unused = |r: &[S]| r.iter().all(|&v| v == S::zero());
        let support: Vec<Vec<bool>> = lambda
            .rows()
            .iter()
            .map(|r| r.iter().map(|&v| unused(r) || v > S::zero()).collect())
            .collect();
        let trust = lambda
            .rows()
            .iter()
            .map(|r| {
                r.iter()
                    .map(|&v| {
                        if unused(r) {
                            (S::zero(), S::one())
                        } else {
                            trust_interval(v, radius)
                        }
                    })
                    .collect()
            })
            .collect();
        self.support = Some(support);
        self.trust_box = Some(trust);
    }

    pub fn clear_stabilization(&mut self) {
        self.support = None;
        self.trust_box = None;
    }

    // bounds for lambda^k_i under the active stabilization
    fn entry_bounds(&self, k: usize, i: usize) -> (S, S) {
        if let Some(s) = &self.support {
            if !s[k][i] {
                return (S::zero(), S::zero());
            }
        }
        if let Some(t) = &self.trust_box {
            return t[k][i];
        }
        (S::zero(), S::one())
    }

    /// Smallest `max_i max(0, g_i)` over the points: no `psi` above it is
    /// achievable with unit-norm rows.
    fn psi_cap(&self) -> S {
        let cap = self
            .values
            .iter()
            .map(|g| g.iter().copied().fold(S::zero(), S::max))
            .fold(S::infinity(), S::min);
        match self.psi_prev {
            Some(p) => cap.min(p),
            None => cap,
        }
    }
}

/// `[max(0, v - r), min(1, v + r)]` for positive entries, `[0, 0]` otherwise.
pub fn trust_interval<S: Scalar>(v: S, r: S) -> (S, S) {
    if v > S::zero() {
        ((v - r).max(S::zero()), (v + r).min(S::one()))
    } else {
        (S::zero(), S::zero())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MasterSolution<S> {
    pub lambda: AggregationMatrix<S>,
    /// Value of the returned multipliers.
    pub psi: S,
    /// Upper bound on the master optimum.
    pub psi_bound: S,
    pub exact: bool,
}

/// LP master for `K = 1`: maximise `psi` subject to
/// `sum_i lambda_i g_i(x) >= psi` for every stored point.
pub fn solve_master_lp<S: Scalar>(state: &MasterState<S>) -> Result<Option<MasterSolution<S>>, BendersError> {
    assert_eq!(state.k, 1, "the LP master handles a single aggregation");
    let m = state.m;
    let mut obj = vec![S::zero(); m];
    obj.push(S::one());
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for i in 0..m {
        let (lo, hi) = state.entry_bounds(0, i);
        lp.set_bounds(i, lo, hi);
    }
    for g in &state.values {
        let mut coeffs: Vec<(usize, S)> = g.iter().copied().enumerate().map(|(i, v)| (i, -v)).collect();
        coeffs.push((m, S::one()));
        lp.add_row(coeffs, Relation::Le, S::zero());
    }
    lp.add_row((0..m).map(|i| (i, S::one())), Relation::Le, S::one());
    let sol = solve_lp(&lp);
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => return Ok(None),
        other => return Err(BendersError::Master(format!("LP status {other:?}"))),
    }
    let row: Vec<S> = sol.x[..m].iter().map(|&v| v.max(S::zero())).collect();
    Ok(Some(MasterSolution {
        lambda: AggregationMatrix::new(m, vec![row])?,
        psi: sol.x[m],
        psi_bound: sol.objective,
        exact: true,
    }))
}

/// Column of `lambda^k_i` in the master MILP.
pub fn lambda_col(m: usize, k: usize, i: usize) -> usize {
    k * m + i
}

/// Big-M master MILP. Columns: `lambda` row-major, `psi`, then `z[p][k]`
/// point-major.
///
/// For point `p` the row `sum_i lambda^k_i g_i >= psi - M_p (1 - z[p][k])`
/// uses `M_p = psi_cap + max_i max(0, -g_i)`, which bounds `psi - sum_i
/// lambda^k_i g_i` for every unit-norm row.
pub fn build_master_milp<S: Scalar>(state: &MasterState<S>, symmetry: SymmetryMode) -> MipProblem<S> {
    let (kk, m) = (state.k, state.m);
    let psi = kk * m;
    let mut obj = vec![S::zero(); kk * m];
    obj.push(S::one());
    let mut lp = LinearProgram::new(Sense::Maximize, obj);
    for k in 0..kk {
        for i in 0..m {
            let (lo, hi) = state.entry_bounds(k, i);
            lp.set_bounds(lambda_col(m, k, i), lo, hi);
        }
    }
    let cap = state.psi_cap();
    lp.set_bounds(psi, S::zero(), if cap.is_finite() { cap } else { S::infinity() });
    let mut integer = vec![false; kk * m + 1];
    for g in &state.values {
        let big_m = cap + g.iter().map(|&v| (-v).max(S::zero())).fold(S::zero(), S::max);
        let first_z = lp.num_vars();
        for _ in 0..kk {
            lp.add_var(S::zero(), S::zero(), S::one());
        }
        integer.resize(integer.len() + kk, true);
        for k in 0..kk {
            // psi - sum_i lambda^k_i g_i + M z <= M
            let mut coeffs: Vec<(usize, S)> = (0..m).map(|i| (lambda_col(m, k, i), -g[i])).collect();
            coeffs.push((psi, S::one()));
            coeffs.push((first_z + k, big_m));
            lp.add_row(coeffs, Relation::Le, big_m);
        }
        lp.add_row((0..kk).map(|k| (first_z + k, S::one())), Relation::Eq, S::one());
    }
    for k in 0..kk {
        lp.add_row((0..m).map(|i| (lambda_col(m, k, i), S::one())), Relation::Le, S::one());
    }
    match symmetry {
        SymmetryMode::None => {}
        SymmetryMode::FirstComponent => {
            for k in 0..kk.saturating_sub(1) {
                lp.add_row(
                    [(lambda_col(m, k + 1, 0), S::one()), (lambda_col(m, k, 0), -S::one())],
                    Relation::Le,
                    S::zero(),
                );
            }
        }
        SymmetryMode::Diagonal => {
            for k in 0..kk.saturating_sub(1).min(m) {
                for l in k + 1..kk {
                    lp.add_row(
                        [(lambda_col(m, l, k), S::one()), (lambda_col(m, k, k), -S::one())],
                        Relation::Le,
                        S::zero(),
                    );
                }
            }
        }
    }
    MipProblem::new(lp, integer)
}

/// Solves the big-M master; `target` enables the early stop on the primal
/// value. `None` when the restricted master is infeasible.
pub fn solve_master_milp<S: Scalar>(
    state: &MasterState<S>,
    symmetry: SymmetryMode,
    target: Option<S>,
    node_limit: usize,
) -> Result<Option<MasterSolution<S>>, BendersError> {
    let prob = build_master_milp(state, symmetry);
    let limits = MipLimits {
        node_limit,
        target_primal: target,
        ..MipLimits::default()
    };
    let sol = solve_mip(&prob, &limits)?;
    let Some(x) = sol.incumbent else {
        return match sol.status {
            MipStatus::Infeasible => Ok(None),
            _ => Err(BendersError::Master("no master solution within the node limit".into())),
        };
    };
    let (kk, m) = (state.k, state.m);
    let rows = (0..kk)
        .map(|k| (0..m).map(|i| x[lambda_col(m, k, i)].max(S::zero())).collect())
        .collect();
    Ok(Some(MasterSolution {
        lambda: AggregationMatrix::new(m, rows)?,
        psi: sol.objective,
        psi_bound: sol.dual_bound.max(sol.objective),
        exact: sol.status == MipStatus::Optimal,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    PsiBelowEpsilon,
    IterationLimit,
    TimeLimit,
    TargetReached,
    /// A sub-problem proved the aggregated relaxation infeasible.
    Infeasible,
    SolverFailure,
}

impl Termination {
    pub fn as_str(self) -> &'static str {
        match self {
            Termination::PsiBelowEpsilon => "psi_below_epsilon",
            Termination::IterationLimit => "iteration_limit",
            Termination::TimeLimit => "time_limit",
            Termination::TargetReached => "target_reached",
            Termination::Infeasible => "infeasible",
            Termination::SolverFailure => "solver_failure",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord<S> {
    pub iteration: usize,
    /// Multipliers of this iteration's sub-problem.
    pub lambda: AggregationMatrix<S>,
    pub sub_status: SubStatus,
    pub sub_bound: S,
    pub sub_nodes: usize,
    /// Best dual bound after this iteration.
    pub best_bound: S,
    /// Master value and bound computed at the end of the iteration; NaN when
    /// the loop stopped before the master.
    pub psi: S,
    pub psi_bound: S,
    /// Whether the master that produced `psi` was exact and unrestricted.
    pub psi_exact: bool,
}

#[derive(Debug, Clone)]
pub struct BendersReport<S> {
    pub records: Vec<IterationRecord<S>>,
    pub best_bound: S,
    pub best_lambda: AggregationMatrix<S>,
    pub termination: Termination,
    pub failure: Option<String>,
    pub elapsed: Duration,
    pub points: usize,
}

/// Runs the cutting-plane loop. Warm-start rows are padded with zero rows
/// up to `cfg.k`.
pub fn run_benders<S: Scalar>(
    model: &Model<S>,
    cfg: &BendersConfig<S>,
    warm_start: Option<&AggregationMatrix<S>>,
) -> Result<BendersReport<S>, BendersError> {
    cfg.validate()?;
    let start = Instant::now();
    let (kk, m) = (cfg.k, model.m());
    let mut lambda = match warm_start {
        Some(w) => {
            if w.m() != m || w.k() > kk {
                return Err(ModelError::DimensionMismatch {
                    path: "warm_start".into(),
                    detail: format!(
                        "expected at most {kk} rows of {m} entries, found {} rows of {}",
                        w.k(),
                        w.m()
                    ),
                }
                .into());
            }
            w.normalized().padded(kk)
        }
        None => AggregationMatrix::zeros(kk, m),
    };
    let reform = Reformulation::build(model.nonlinear(), model.boxes());
    let mut state = MasterState::new(kk, m);
    state.best_lambda = lambda.clone();
    let mut records: Vec<IterationRecord<S>> = Vec::new();
    let mut failure = None;
    let tiny = S::lit(1e-12);

    let termination = loop {
        if records.len() >= cfg.max_iterations {
            break Termination::IterationLimit;
        }
        if cfg.time_limit.is_some_and(|t| start.elapsed() >= t) {
            break Termination::TimeLimit;
        }
        let iteration = records.len() + 1;
        let rows = lambda.aggregate_all(model)?;
        let sp = SubProblem::with_reformulation(model, &reform, rows);
        let mut limits = cfg.sub_limits.clone();
        let stop_at = match (state.best_bound.is_finite(), cfg.target) {
            (true, Some(t)) => Some(state.best_bound.max(t)),
            (true, None) => Some(state.best_bound),
            (false, t) => t,
        };
        limits.early_stop_at = stop_at;
        if let Some(t) = cfg.time_limit {
            let left = t.saturating_sub(start.elapsed());
            limits.time_limit = Some(limits.time_limit.map_or(left, |l| l.min(left)));
        }
        let out: SubSolveOutcome<S> = solve_subproblem(&sp, &limits);
        let mut rec = IterationRecord {
            iteration,
            lambda: lambda.clone(),
            sub_status: out.status,
            sub_bound: out.dual_bound,
            sub_nodes: out.nodes,
            best_bound: state.best_bound,
            psi: S::nan(),
            psi_bound: S::nan(),
            psi_exact: false,
        };
        if out.dual_bound > state.best_bound + tiny {
            state.best_bound = out.dual_bound;
            state.best_lambda = lambda.clone();
            state.stall_counter = 0;
            if cfg.stabilize && !lambda.is_zero() {
                state.stabilize_at(&lambda, cfg.trust_radius);
            }
        } else {
            state.stall_counter += 1;
            if state.stall_counter >= cfg.stall_limit && state.is_stabilized() {
                state.clear_stabilization();
                state.stall_counter = 0;
            }
        }
        rec.best_bound = state.best_bound;
        if out.status == SubStatus::Infeasible {
            records.push(rec);
            break Termination::Infeasible;
        }
        if cfg.target.is_some_and(|t| state.best_bound >= t) {
            records.push(rec);
            break Termination::TargetReached;
        }
        let Some(x) = out.incumbent else {
            records.push(rec);
            failure = Some(format!(
                "sub-problem returned no point (status {})",
                out.status.as_str()
            ));
            break Termination::SolverFailure;
        };
        let g = model.constraint_values(&x);
        state.add_point(x, g);

        let solved = match solve_master(&mut state, cfg) {
            Ok(s) => s,
            Err(e) => {
                records.push(rec);
                failure = Some(e.to_string());
                break Termination::SolverFailure;
            }
        };
        rec.psi = solved.psi;
        rec.psi_bound = solved.psi_bound;
        rec.psi_exact = solved.exact && !state.is_stabilized();
        state.psi_history.push(solved.psi);
        records.push(rec);
        if solved.psi_bound < cfg.epsilon {
            break Termination::PsiBelowEpsilon;
        }
        lambda = solved.lambda;
    };

    Ok(BendersReport {
        records,
        best_bound: state.best_bound,
        best_lambda: state.best_lambda.clone(),
        termination,
        failure,
        elapsed: start.elapsed(),
        points: state.points.len(),
    })
}

// Restricted master first; falls back to the unrestricted master when the
// restriction is infeasible or certifies psi below epsilon.
fn solve_master<S: Scalar>(
    state: &mut MasterState<S>,
    cfg: &BendersConfig<S>,
) -> Result<MasterSolution<S>, BendersError> {
    loop {
        let restricted = state.is_stabilized();
        let sol = if state.k == 1 {
            solve_master_lp(state)?
        } else {
            let target = state
                .psi_history
                .last()
                .and(state.psi_prev)
                .map(|p| cfg.alpha * p)
                .filter(|&t| t > S::zero());
            solve_master_milp(state, cfg.symmetry, target, cfg.master_node_limit)?
        };
        match sol {
            Some(s) if !restricted => {
                state.psi_prev = Some(state.psi_prev.map_or(s.psi_bound, |p| p.min(s.psi_bound)));
                return Ok(s);
            }
            Some(s) if s.psi_bound >= cfg.epsilon => return Ok(s),
            None if !restricted => return Err(BendersError::Master("unrestricted master infeasible".into())),
            _ => state.clear_stabilization(),
        }
    }
}

/// K-surrogate sub-problem at `lambda` with rows rescaled to unit 1-norm.
pub fn solve_k_surrogate<S: Scalar>(
    model: &Model<S>,
    lambda: &AggregationMatrix<S>,
    limits: &SolveLimits<S>,
) -> Result<SubSolveOutcome<S>, ModelError> {
    let sp = SubProblem::from_aggregation(model, &lambda.unit_rows())?;
    Ok(solve_subproblem(&sp, limits))
}

/// Dual bound of [`solve_k_surrogate`].
pub fn evaluate_k_surrogate<S: Scalar>(
    model: &Model<S>,
    lambda: &AggregationMatrix<S>,
    limits: &SolveLimits<S>,
) -> Result<S, ModelError> {
    Ok(solve_k_surrogate(model, lambda, limits)?.dual_bound)
}
