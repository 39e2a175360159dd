//! Dual bounds for polynomial mixed-integer nonlinear programs via classic and
//! generalized (K-aggregation) surrogate duality.
//!
//! The crate bundles everything the Benders-type multiplier search needs:
//! a dense bounded simplex ([`lp`]), a branch-and-bound MILP solver ([`mip`]),
//! term-wise polynomial envelopes ([`relax`]), a spatial branch-and-bound
//! global solver for the surrogate sub-problems ([`minlp`]), the master
//! problems and Benders loops ([`surrogate`]), the tree-search reuse of root
//! aggregations ([`tree`]) and evaluation arithmetic ([`metrics`]).
//!
//! All numerical code is generic over [`Scalar`]; the aliases below fix the
//! scalar to `f64`, which is what the CLI and the JSON format use.

// `!(a >= b)` comparisons reject NaN on purpose; dense kernels index by row
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod gen;
pub mod lp;
pub mod metrics;
pub mod minlp;
pub mod mip;
pub mod model;
pub mod relax;
pub mod scalar;
pub mod surrogate;
pub mod tree;

pub use scalar::Scalar;

pub type Polynomial = model::Polynomial<f64>;
pub type Model = model::Model<f64>;
pub type AggregationMatrix = model::AggregationMatrix<f64>;
pub type LinearProgram = lp::LinearProgram<f64>;
pub type LpSolution = lp::LpSolution<f64>;
pub type MipProblem = mip::MipProblem<f64>;
pub type MipSolution = mip::MipSolution<f64>;
pub type Reformulation = relax::Reformulation<f64>;
pub type SubProblem<'a> = minlp::SubProblem<'a, f64>;
pub type SubSolveOutcome = minlp::SubSolveOutcome<f64>;
pub type SolveLimits = minlp::SolveLimits<f64>;
pub type BendersConfig = surrogate::BendersConfig<f64>;
pub type BendersReport = surrogate::BendersReport<f64>;
pub type MasterState = surrogate::MasterState<f64>;
pub type AggregationPool = tree::AggregationPool<f64>;
pub type NodeContext = tree::NodeContext<f64>;

pub use minlp::{lagrangian_value, solve_subproblem, SubStatus};
pub use model::{parse_model, serialize_model, Monomial};
pub use surrogate::{evaluate_k_surrogate, run_benders, SymmetryMode, Termination};
