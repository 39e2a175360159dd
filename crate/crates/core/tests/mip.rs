mod common;

use surdual::gen::binary_milp;
use surdual::lp::{Relation, Sense};
use surdual::mip::{solve_mip, MipLimits, MipStatus};
use surdual::surrogate::{build_master_milp, solve_master_milp};
use surdual::{LinearProgram, MasterState, MipProblem, SymmetryMode};

#[test]
fn knapsack_two_items() {
    let mut lp = LinearProgram::new(Sense::Maximize, vec![3.0, 2.0]);
    lp.set_bounds(0, 0.0, 1.0);
    lp.set_bounds(1, 0.0, 1.0);
    lp.add_row([(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
    let sol = solve_mip(&MipProblem::new(lp, vec![true, true]), &MipLimits::default()).unwrap();
    assert_eq!(sol.status, MipStatus::Optimal);
    assert!((sol.objective - 3.0).abs() < 1e-9);
}

#[test]
fn integral_root_needs_one_node() {
    let mut lp = LinearProgram::new(Sense::Maximize, vec![1.0, 1.0]);
    lp.set_bounds(0, 0.0, 1.0);
    lp.set_bounds(1, 0.0, 1.0);
    let sol = solve_mip(&MipProblem::new(lp, vec![true, true]), &MipLimits::default()).unwrap();
    assert_eq!(sol.nodes, 1);
    assert_eq!(sol.incumbent, Some(vec![1.0, 1.0]));
}

#[test]
fn two_point_master_matches_disjunction() {
    let values = vec![vec![0.7, -0.4], vec![-0.2, 0.9]];
    let mut state = MasterState::new(2, 2);
    for g in &values {
        state.add_values(g.clone());
    }
    let prob = build_master_milp(&state, SymmetryMode::None);
    let sol = solve_mip(&prob, &MipLimits::default()).unwrap();
    let want = common::disjunctive_master(&values, 2, 2);
    assert!((sol.objective - want).abs() < 1e-6, "{} vs {want}", sol.objective);
    let via_master = solve_master_milp(&state, SymmetryMode::FirstComponent, None, 10_000)
        .unwrap()
        .unwrap();
    assert!((via_master.psi - want).abs() < 1e-6);
}

#[test]
fn random_binary_programs_match_enumeration() {
    for seed in 0..50u64 {
        let n = 4 + (seed % 9) as usize;
        let prob = binary_milp(seed, n, 1 + (seed % 3) as usize);
        let sol = solve_mip(&prob, &MipLimits::default()).unwrap();
        match common::enumerate_binary(&prob) {
            Some(best) => {
                assert_eq!(sol.status, MipStatus::Optimal, "seed {seed}");
                assert!(
                    (sol.objective - best).abs() <= 1e-6,
                    "seed {seed}: {} vs {best}",
                    sol.objective
                );
                let x = sol.incumbent.unwrap();
                assert!(x.iter().all(|v| (v - v.round()).abs() <= 1e-6));
            }
            None => assert_eq!(sol.status, MipStatus::Infeasible, "seed {seed}"),
        }
    }
}

#[test]
fn dual_bound_never_increases() {
    for seed in 100..120u64 {
        let prob = binary_milp(seed, 10, 2);
        let sol = solve_mip(&prob, &MipLimits::default()).unwrap();
        for w in sol.bound_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-9, "seed {seed}: {} then {}", w[0], w[1]);
        }
        if let Some(x) = &sol.incumbent {
            assert!(sol.dual_bound >= prob.lp.objective_value(x) - 1e-9);
        }
    }
}

#[test]
fn target_primal_stops_early() {
    let prob = binary_milp(3, 12, 2);
    let full = solve_mip(&prob, &MipLimits::default()).unwrap();
    let limits = MipLimits {
        target_primal: Some(full.objective * 0.5),
        ..MipLimits::default()
    };
    let early = solve_mip(&prob, &limits).unwrap();
    assert!(early.objective >= full.objective * 0.5);
    assert!(early.dual_bound >= full.objective - 1e-9);
}
