//! `surdual` command-line experiment runner.

mod report;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use surdual::minlp::solve_lagrangian;
use surdual::surrogate::solve_k_surrogate;
use surdual::tree::branching_demo;
use surdual::{
    parse_model, run_benders, solve_subproblem, AggregationMatrix, AggregationPool, BendersConfig, BendersReport,
    Model, SolveLimits, SubProblem, SymmetryMode,
};

use report::{fmt12, lambda_rows, write_json, write_nodes, write_trace, Num};

#[derive(Parser)]
#[command(
    name = "surdual",
    version,
    about = "Surrogate and K-surrogate dual bounds for polynomial MINLPs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the cutting-plane loop for one K and write trace.csv and summary.json.
    SolveDual {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        dual: DualArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Warm-start multipliers (JSON array or array of arrays).
        #[arg(long)]
        lambda: Option<String>,
    },
    /// Evaluate the K-surrogate (or Lagrangian) value at given multipliers.
    Evaluate {
        #[command(flatten)]
        common: CommonArgs,
        /// Multipliers: a JSON array for one row or an array of arrays.
        #[arg(long)]
        lambda: String,
        /// Evaluate the Lagrangian function instead (single row only).
        #[arg(long)]
        lagrangian: bool,
    },
    /// Run K = 1, 2, 3 with warm starts chained from the previous K.
    Rootgap {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        dual: DualArgs,
        #[arg(long, default_value_t = 3)]
        max_k: usize,
    },
    /// Build an aggregation pool at the root and walk a breadth-first tree.
    TreeDemo {
        #[command(flatten)]
        common: CommonArgs,
        #[command(flatten)]
        dual: DualArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 3)]
        pool: usize,
        #[arg(long, default_value_t = 3)]
        depth: usize,
        /// Primal cutoff used to mark nodes pruned.
        #[arg(long, allow_hyphen_values = true)]
        primal: Option<f64>,
    },
}

#[derive(Args)]
struct CommonArgs {
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Sub-problem node limit.
    #[arg(long)]
    node_limit: Option<usize>,
    /// Recorded in the summary; the solvers are deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DualArgs {
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    stall_limit: Option<usize>,
    #[arg(long)]
    trust_radius: Option<f64>,
    #[arg(long, value_enum)]
    symmetry: Option<Symmetry>,
    #[arg(long, allow_hyphen_values = true)]
    target_bound: Option<f64>,
    /// Seconds, per cutting-plane run.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Turn off support fixing and the trust box.
    #[arg(long)]
    no_stabilize: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Symmetry {
    None,
    First,
    Diag,
}

impl From<Symmetry> for SymmetryMode {
    fn from(s: Symmetry) -> Self {
        match s {
            Symmetry::None => SymmetryMode::None,
            Symmetry::First => SymmetryMode::FirstComponent,
            Symmetry::Diag => SymmetryMode::Diagonal,
        }
    }
}

/// Bad input: unreadable or malformed files and arguments. Exit code 2.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
struct InputError(String);

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

fn load_model(path: &Path) -> Result<Model> {
    let text = fs::read_to_string(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    parse_model(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn parse_lambda(text: &str, m: usize) -> Result<AggregationMatrix> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| input_err(format!("--lambda: {e}")))?;
    let rows: Vec<Vec<f64>> = match &value {
        serde_json::Value::Array(items) if items.iter().all(|v| v.is_number()) => {
            vec![serde_json::from_value(value.clone()).map_err(|e| input_err(format!("--lambda: {e}")))?]
        }
        _ => serde_json::from_value(value).map_err(|e| input_err(format!("--lambda: {e}")))?,
    };
    AggregationMatrix::new(m, rows).map_err(|e| input_err(format!("--lambda: {e}")))
}

fn sub_limits(common: &CommonArgs) -> SolveLimits {
    let mut limits = SolveLimits::default();
    if let Some(n) = common.node_limit {
        limits.node_limit = n;
    }
    limits
}

fn benders_config(k: usize, common: &CommonArgs, dual: &DualArgs) -> Result<BendersConfig> {
    let mut cfg = BendersConfig::with_k(k);
    if let Some(v) = dual.epsilon {
        cfg.epsilon = v;
    }
    if let Some(v) = dual.alpha {
        cfg.alpha = v;
    }
    if let Some(v) = dual.stall_limit {
        cfg.stall_limit = v;
    }
    if let Some(v) = dual.trust_radius {
        cfg.trust_radius = v;
    }
    if let Some(v) = dual.symmetry {
        cfg.symmetry = v.into();
    }
    if let Some(v) = dual.max_iterations {
        cfg.max_iterations = v;
    }
    if let Some(t) = dual.time_limit {
        if !(t.is_finite() && t >= 0.0) {
            return Err(input_err("--time-limit must be a nonnegative number of seconds"));
        }
        cfg.time_limit = Some(Duration::from_secs_f64(t));
    }
    cfg.target = dual.target_bound;
    cfg.stabilize = !dual.no_stabilize;
    cfg.sub_limits = sub_limits(common);
    Ok(cfg)
}

#[derive(Serialize)]
struct ConfigSummary {
    k: usize,
    epsilon: f64,
    alpha: f64,
    stall_limit: usize,
    trust_radius: f64,
    symmetry: &'static str,
    target_bound: Option<f64>,
    time_limit: Option<f64>,
    max_iterations: usize,
    stabilize: bool,
    node_limit: usize,
}

impl From<&BendersConfig> for ConfigSummary {
    fn from(c: &BendersConfig) -> Self {
        ConfigSummary {
            k: c.k,
            epsilon: c.epsilon,
            alpha: c.alpha,
            stall_limit: c.stall_limit,
            trust_radius: c.trust_radius,
            symmetry: match c.symmetry {
                SymmetryMode::None => "none",
                SymmetryMode::FirstComponent => "first",
                SymmetryMode::Diagonal => "diag",
            },
            target_bound: c.target,
            time_limit: c.time_limit.map(|d| d.as_secs_f64()),
            max_iterations: c.max_iterations,
            stabilize: c.stabilize,
            node_limit: c.sub_limits.node_limit,
        }
    }
}

#[derive(Serialize)]
struct RunSummary {
    k: usize,
    dual_bound: Num,
    lambda: Vec<Vec<f64>>,
    termination: &'static str,
    failure: Option<String>,
    iterations: usize,
    points: usize,
    elapsed_seconds: f64,
    config: ConfigSummary,
}

impl RunSummary {
    fn new(report: &BendersReport, cfg: &BendersConfig) -> Self {
        RunSummary {
            k: cfg.k,
            dual_bound: report.best_bound.into(),
            lambda: lambda_rows(&report.best_lambda.unit_rows()),
            termination: report.termination.as_str(),
            failure: report.failure.clone(),
            iterations: report.records.len(),
            points: report.points,
            elapsed_seconds: report.elapsed.as_secs_f64(),
            config: cfg.into(),
        }
    }
}

#[derive(Serialize)]
struct SolveDualSummary<'a> {
    command: &'static str,
    instance: String,
    seed: u64,
    #[serde(flatten)]
    run: RunSummary,
    trace: &'a str,
}

fn prepare_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))
}

fn solve_dual(common: &CommonArgs, dual: &DualArgs, k: usize, lambda: Option<&str>) -> Result<()> {
    let model = load_model(&common.instance)?;
    let cfg = benders_config(k, common, dual)?;
    let warm = lambda.map(|t| parse_lambda(t, model.m())).transpose()?;
    let report = run_benders(&model, &cfg, warm.as_ref())?;
    prepare_out(&common.out)?;
    write_trace(&common.out.join("trace.csv"), &report)?;
    let summary = SolveDualSummary {
        command: "solve-dual",
        instance: common.instance.display().to_string(),
        seed: common.seed,
        run: RunSummary::new(&report, &cfg),
        trace: "trace.csv",
    };
    write_json(&common.out.join("summary.json"), &summary)?;
    println!(
        "D = {} ({}, {} iterations)",
        fmt12(report.best_bound),
        report.termination.as_str(),
        report.records.len()
    );
    Ok(())
}

#[derive(Serialize)]
struct EvaluateSummary {
    command: &'static str,
    instance: String,
    seed: u64,
    function: &'static str,
    lambda: Vec<Vec<f64>>,
    value: Num,
    primal_bound: Option<Num>,
    status: &'static str,
    nodes: usize,
}

fn evaluate(common: &CommonArgs, lambda: &str, lagrangian: bool) -> Result<()> {
    let model = load_model(&common.instance)?;
    let l = parse_lambda(lambda, model.m())?;
    let limits = sub_limits(common);
    let (function, out) = if lagrangian {
        if l.k() != 1 {
            return Err(input_err("--lagrangian takes a single multiplier row"));
        }
        ("lagrangian", solve_lagrangian(&model, &l.rows()[0], &limits)?)
    } else {
        ("k_surrogate", solve_k_surrogate(&model, &l, &limits)?)
    };
    prepare_out(&common.out)?;
    let summary = EvaluateSummary {
        command: "evaluate",
        instance: common.instance.display().to_string(),
        seed: common.seed,
        function,
        lambda: lambda_rows(&l),
        value: out.dual_bound.into(),
        primal_bound: out.incumbent.is_some().then(|| out.primal_bound.into()),
        status: out.status.as_str(),
        nodes: out.nodes,
    };
    write_json(&common.out.join("summary.json"), &summary)?;
    println!("{}", fmt12(out.dual_bound));
    Ok(())
}

#[derive(Serialize)]
struct RootgapSummary {
    command: &'static str,
    instance: String,
    seed: u64,
    milp_bound: Num,
    runs: Vec<RunSummary>,
}

fn milp_bound(model: &Model, limits: &SolveLimits) -> f64 {
    solve_subproblem(&SubProblem::new(model, Vec::new()), limits).dual_bound
}

fn rootgap(common: &CommonArgs, dual: &DualArgs, max_k: usize) -> Result<()> {
    if max_k == 0 {
        return Err(input_err("--max-k must be at least 1"));
    }
    let model = load_model(&common.instance)?;
    prepare_out(&common.out)?;
    let mut warm: Option<AggregationMatrix> = None;
    let mut runs = Vec::new();
    for k in 1..=max_k {
        let cfg = benders_config(k, common, dual)?;
        let report = run_benders(&model, &cfg, warm.as_ref())?;
        write_trace(&common.out.join(format!("trace_k{k}.csv")), &report)?;
        println!(
            "K={k}: D = {} ({})",
            fmt12(report.best_bound),
            report.termination.as_str()
        );
        warm = Some(report.best_lambda.clone());
        runs.push(RunSummary::new(&report, &cfg));
    }
    let summary = RootgapSummary {
        command: "rootgap",
        instance: common.instance.display().to_string(),
        seed: common.seed,
        milp_bound: milp_bound(&model, &sub_limits(common)).into(),
        runs,
    };
    write_json(&common.out.join("summary.json"), &summary)
}

#[derive(Serialize)]
struct TreeSummary {
    command: &'static str,
    instance: String,
    seed: u64,
    pool_size: usize,
    root_milp_bound: Num,
    pool_bounds: Vec<Num>,
    nodes: usize,
    pruned: usize,
    run: Option<RunSummary>,
}

fn tree_demo(
    common: &CommonArgs,
    dual: &DualArgs,
    k: usize,
    pool_size: usize,
    depth: usize,
    primal: Option<f64>,
) -> Result<()> {
    let model = load_model(&common.instance)?;
    let model = if primal.is_some() {
        model.with_primal_cutoff(primal)
    } else {
        model
    };
    let limits = sub_limits(common);
    let root_milp = milp_bound(&model, &limits);
    let (pool, run) = if pool_size == 0 {
        (AggregationPool::new(root_milp), None)
    } else {
        let cfg = benders_config(k, common, dual)?;
        let report = run_benders(&model, &cfg, None)?;
        let pool = AggregationPool::from_report(&report, root_milp, pool_size);
        (pool, Some(RunSummary::new(&report, &cfg)))
    };
    let nodes = branching_demo(&model, &pool, depth, &limits)?;
    prepare_out(&common.out)?;
    write_nodes(&common.out.join("nodes.csv"), &nodes)?;
    let summary = TreeSummary {
        command: "tree-demo",
        instance: common.instance.display().to_string(),
        seed: common.seed,
        pool_size: pool.len(),
        root_milp_bound: root_milp.into(),
        pool_bounds: pool.entries().iter().map(|e| e.root_bound.into()).collect(),
        nodes: nodes.len(),
        pruned: nodes.iter().filter(|n| n.pruned).count(),
        run,
    };
    write_json(&common.out.join("summary.json"), &summary)?;
    println!(
        "{} nodes, {} pruned, pool of {}",
        nodes.len(),
        summary.pruned,
        pool.len()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::SolveDual {
            common,
            dual,
            k,
            lambda,
        } => solve_dual(common, dual, *k, lambda.as_deref()),
        Command::Evaluate {
            common,
            lambda,
            lagrangian,
        } => evaluate(common, lambda, *lagrangian),
        Command::Rootgap { common, dual, max_k } => rootgap(common, dual, *max_k),
        Command::TreeDemo {
            common,
            dual,
            k,
            pool,
            depth,
            primal,
        } => tree_demo(common, dual, *k, *pool, *depth, *primal),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<InputError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}
