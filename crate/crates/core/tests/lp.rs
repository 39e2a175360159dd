use proptest::prelude::*;
use surdual::lp::{solve_lp, LpStatus, Relation, Sense};
use surdual::LinearProgram;

#[test]
fn small_master_lp_vertex() {
    // max psi  s.t.  2 l1 - l2 >= psi,  l1 + l2 <= 1
    let mut lp = LinearProgram::new(Sense::Maximize, vec![0.0, 0.0, 1.0]);
    lp.add_row([(0, 2.0), (1, -1.0), (2, -1.0)], Relation::Ge, 0.0);
    lp.add_row([(0, 1.0), (1, 1.0)], Relation::Le, 1.0);
    let sol = solve_lp(&lp);
    assert_eq!(sol.status, LpStatus::Optimal);
    assert!((sol.objective - 2.0).abs() < 1e-9);
    assert!((sol.x[0] - 1.0).abs() < 1e-9 && sol.x[1].abs() < 1e-9);
}

#[test]
fn contradictory_bounds_are_infeasible() {
    let mut lp = LinearProgram::new(Sense::Minimize, vec![1.0]);
    lp.set_bounds(0, f64::NEG_INFINITY, f64::INFINITY);
    lp.add_row([(0, 1.0)], Relation::Le, 0.0);
    lp.add_row([(0, 1.0)], Relation::Ge, 1.0);
    assert_eq!(solve_lp(&lp).status, LpStatus::Infeasible);
}

#[test]
fn ray_is_unbounded() {
    let lp = LinearProgram::new(Sense::Maximize, vec![1.0]);
    assert_eq!(solve_lp(&lp).status, LpStatus::Unbounded);
}

#[derive(Debug, Clone)]
struct RandomLp {
    lp: LinearProgram,
}

// Random bounded LP with a known interior-ish feasible point.
fn random_lp() -> impl Strategy<Value = RandomLp> {
    (2usize..6, 1usize..6).prop_flat_map(|(n, m)| {
        (
            prop::collection::vec(-5.0f64..5.0, n),
            prop::collection::vec(prop::collection::vec(-3.0f64..3.0, n), m),
            prop::collection::vec(0usize..3, m),
            prop::collection::vec((-2.0f64..0.0, 0.0f64..2.0), n),
            prop::collection::vec(0.0f64..1.0, n),
            prop::collection::vec(0.0f64..1.5, m),
            any::<bool>(),
        )
            .prop_map(move |(c, a, rel, boxes, t, slack, maximize)| {
                let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
                let mut lp = LinearProgram::new(sense, c);
                let x0: Vec<f64> = boxes.iter().zip(&t).map(|(&(l, u), &s)| l + (u - l) * s).collect();
                for (j, &(l, u)) in boxes.iter().enumerate() {
                    lp.set_bounds(j, l, u);
                }
                for ((row, r), s) in a.iter().zip(&rel).zip(&slack) {
                    let act: f64 = row.iter().zip(&x0).map(|(a, x)| a * x).sum();
                    let (relation, rhs) = match r {
                        0 => (Relation::Le, act + s),
                        1 => (Relation::Ge, act - s),
                        _ => (Relation::Eq, act),
                    };
                    lp.add_row(row.iter().copied().enumerate(), relation, rhs);
                }
                RandomLp { lp }
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn optimal_solutions_meet_residual_and_duality(r in random_lp()) {
        let lp = &r.lp;
        let sol = solve_lp(lp);
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        prop_assert!(lp.max_violation(&sol.x) <= 1e-7);
        prop_assert!((lp.objective_value(&sol.x) - sol.objective).abs() <= 1e-6);
        // dual objective: b^T y plus reduced costs at the active bounds
        let dual: f64 = lp.rows.iter().zip(&sol.duals).map(|(row, y)| row.rhs * y).sum::<f64>()
            + sol.reduced_costs.iter().zip(&sol.x).map(|(d, x)| d * x).sum::<f64>();
        prop_assert!((dual - sol.objective).abs() <= 1e-6, "dual {} primal {}", dual, sol.objective);
        // reduced costs point away from the bound each variable rests on
        let sign = if lp.sense == Sense::Minimize { 1.0 } else { -1.0 };
        for (j, (&d, &x)) in sol.reduced_costs.iter().zip(&sol.x).enumerate() {
            let at_lo = (x - lp.lower[j]).abs() <= 1e-9;
            let at_hi = (x - lp.upper[j]).abs() <= 1e-9;
            if !at_lo && !at_hi {
                prop_assert!(d.abs() <= 1e-8, "interior variable {} has reduced cost {}", j, d);
            } else if at_lo && !at_hi {
                prop_assert!(sign * d >= -1e-8);
            } else if at_hi && !at_lo {
                prop_assert!(sign * d <= 1e-8);
            }
        }
    }

    #[test]
    fn satisfied_cut_leaves_optimum(r in random_lp(), w in prop::collection::vec(-2.0f64..2.0, 6), slack in 0.0f64..1.0) {
        let mut lp = r.lp.clone();
        let sol = solve_lp(&lp);
        prop_assert_eq!(sol.status, LpStatus::Optimal);
        let n = lp.num_vars();
        let act: f64 = (0..n).map(|j| w[j] * sol.x[j]).sum();
        lp.add_row((0..n).map(|j| (j, w[j])), Relation::Le, act + slack);
        let again = solve_lp(&lp);
        prop_assert_eq!(again.status, LpStatus::Optimal);
        prop_assert!((again.objective - sol.objective).abs() <= 1e-8);
    }

    #[test]
    fn solves_are_deterministic(r in random_lp()) {
        prop_assert_eq!(solve_lp(&r.lp), solve_lp(&r.lp));
    }
}
