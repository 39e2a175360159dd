mod common;

use surdual::gen::polynomial_instance;
use surdual::tree::{branching_demo, local_bound};
use surdual::{
    run_benders, solve_subproblem, AggregationMatrix, AggregationPool, BendersConfig, Model, NodeContext, SolveLimits,
    SubProblem,
};

fn milp_bound(model: &Model) -> f64 {
    solve_subproblem(&SubProblem::new(model, Vec::new()), &SolveLimits::default()).dual_bound
}

fn pool_for(model: &Model, k: usize, size: usize) -> AggregationPool {
    let r = run_benders(model, &BendersConfig::with_k(k), None).unwrap();
    AggregationPool::from_report(&r, milp_bound(model), size)
}

#[test]
fn pool_entries_beat_the_milp_bound() {
    let m = common::example1();
    let pool = pool_for(&m, 1, 5);
    assert!(!pool.is_empty() && pool.len() <= 5);
    for w in pool.entries().windows(2) {
        assert!(w[0].root_bound >= w[1].root_bound);
    }
    assert!(pool.entries().iter().all(|e| e.root_bound > pool.root_milp_bound()));
}

#[test]
fn root_node_reproduces_the_root_bound() {
    let m = common::example1();
    let pool = pool_for(&m, 1, 3);
    let root = NodeContext::root(&m, &pool);
    let lb = local_bound(&root, &m, &pool, &SolveLimits::default()).unwrap();
    assert_eq!(lb.used, Some(0));
    assert_eq!(lb.candidates, (0..pool.len()).collect::<Vec<_>>());
    assert!((lb.bound - pool.entries()[0].root_bound).abs() <= 1e-9);
}

#[test]
fn inactive_aggregation_is_discarded() {
    // y <= 0.5 + 0.25 x^2; once y <= 0.5 the constraint cannot bind
    let m = common::load("tree_demo.json");
    let mut pool = AggregationPool::new(milp_bound(&m));
    assert!(pool.admit(AggregationMatrix::single(vec![1.0]).unwrap(), -0.75));
    let limits = SolveLimits::default();
    let ctx = |boxes: Vec<(f64, f64)>| NodeContext {
        id: 1,
        boxes,
        candidates: vec![0],
    };
    let low = local_bound(&ctx(vec![(0.0, 1.0), (0.0, 0.5)]), &m, &pool, &limits).unwrap();
    assert!(low.candidates.is_empty());
    assert_eq!(low.used, None);
    assert!((low.bound + 0.5).abs() < 1e-9 && low.bound == low.milp_bound);
    let left = local_bound(&ctx(vec![(0.0, 0.5), (0.0, 1.0)]), &m, &pool, &limits).unwrap();
    assert_eq!(left.candidates, vec![0]);
    assert!((left.bound + 0.5625).abs() < 1e-4, "{}", left.bound);
}

#[test]
fn empty_pool_gives_the_milp_bound() {
    let m = common::example1();
    let pool = AggregationPool::new(-1.0);
    let lb = local_bound(&NodeContext::root(&m, &pool), &m, &pool, &SolveLimits::default()).unwrap();
    assert!(lb.candidates.is_empty());
    assert_eq!(lb.bound, lb.milp_bound);
    assert!((lb.bound + 1.0).abs() < 1e-9);
}

// Depth-first walk that bisects the widest variable and checks the node
// invariants against grid optima of the local boxes.
fn walk(model: &Model, pool: &AggregationPool, ctx: NodeContext, parent: &[usize], depth: usize, label: &str) {
    let lb = local_bound(&ctx, model, pool, &SolveLimits::default()).unwrap();
    assert!(lb.bound >= lb.milp_bound - 1e-9, "{label}");
    assert!(
        lb.candidates.iter().all(|c| parent.contains(c)),
        "{label}: {:?} not within {parent:?}",
        lb.candidates
    );
    let local = model.with_boxes(ctx.boxes.clone()).unwrap();
    if let Some((opt, _)) = common::grid_minimum_in(&local, &ctx.boxes) {
        assert!(lb.bound <= opt + 1e-4, "{label} node {}: {} > {opt}", ctx.id, lb.bound);
    }
    if depth == 0 || !lb.bound.is_finite() {
        return;
    }
    let j = if ctx.boxes[0].1 - ctx.boxes[0].0 >= ctx.boxes[1].1 - ctx.boxes[1].0 {
        0
    } else {
        1
    };
    let (lo, hi) = ctx.boxes[j];
    let mid = 0.5 * (lo + hi);
    for (id, half) in [(2 * ctx.id + 1, (lo, mid)), (2 * ctx.id + 2, (mid, hi))] {
        let mut boxes = ctx.boxes.clone();
        boxes[j] = half;
        let child = NodeContext {
            id,
            boxes,
            candidates: lb.candidates.clone(),
        };
        walk(model, pool, child, &lb.candidates, depth - 1, label);
    }
}

#[test]
fn local_bounds_are_sound_and_filtering_is_monotone() {
    let mut models: Vec<(String, Model)> = vec![
        ("example 1".into(), common::example1()),
        ("tree demo".into(), common::load("tree_demo.json")),
    ];
    for seed in [1u64, 2, 5, 8] {
        models.push((
            format!("generated {seed}"),
            polynomial_instance(seed, 2, 2 + (seed % 3) as usize, 2 + (seed % 2) as u32),
        ));
    }
    for (label, model) in &models {
        let pool = pool_for(model, 1, 3);
        let root = NodeContext::root(model, &pool);
        let all: Vec<usize> = root.candidates.clone();
        walk(model, &pool, root, &all, 3, label);
    }
}

#[test]
fn demo_discards_and_prunes() {
    let m = common::load("tree_demo.json");
    let pool = pool_for(&m, 1, 1);
    assert_eq!(pool.len(), 1);
    let nodes = branching_demo(&m, &pool, 2, &SolveLimits::default()).unwrap();
    assert_eq!(nodes.len(), 7);
    assert_eq!(nodes[0].candidates, 1);
    assert!(nodes.iter().any(|n| n.candidates == 0 && n.parent.is_some()));
    assert!(nodes.iter().all(|n| !n.pruned));

    let cut = m.with_primal_cutoff(Some(-0.7));
    let nodes = branching_demo(&cut, &pool, 1, &SolveLimits::default()).unwrap();
    let left = nodes.iter().find(|n| n.id == 1).unwrap();
    assert_eq!(left.boxes[0], (0.0, 0.5));
    assert!(left.pruned);

    let empty = AggregationPool::new(pool.root_milp_bound());
    for n in branching_demo(&m, &empty, 2, &SolveLimits::default()).unwrap() {
        assert_eq!(n.bound, n.milp_bound);
    }
}
