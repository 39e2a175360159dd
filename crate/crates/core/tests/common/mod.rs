//! Independent oracles shared by the integration suites.
#![allow(dead_code, clippy::needless_range_loop)]

use std::path::PathBuf;

use surdual::lp::Relation;
use surdual::{parse_model, MipProblem, Model};

pub fn instance_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../instances")
        .join(name)
}

pub fn load(name: &str) -> Model {
    let text = std::fs::read_to_string(instance_path(name)).expect("instance file");
    parse_model(&text).expect("valid instance")
}

pub fn example1() -> Model {
    load("example1.json")
}

pub fn example2() -> Model {
    load("example2.json")
}

pub fn example3() -> Model {
    load("example3_boxed.json")
}

/// Exhaustive enumeration of a pure binary program. `None` when infeasible.
pub fn enumerate_binary(prob: &MipProblem) -> Option<f64> {
    let lp = &prob.lp;
    let n = lp.num_vars();
    assert!(n <= 20 && prob.integer.iter().all(|&b| b));
    let maximize = lp.sense == surdual::lp::Sense::Maximize;
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << n) {
        let x: Vec<f64> = (0..n).map(|j| ((mask >> j) & 1) as f64).collect();
        if x.iter().enumerate().any(|(j, &v)| v < lp.lower[j] || v > lp.upper[j]) {
            continue;
        }
        let ok = lp.rows.iter().all(|r| {
            let a: f64 = r.coeffs.iter().map(|&(j, c)| c * x[j]).sum();
            match r.relation {
                Relation::Le => a <= r.rhs + 1e-9,
                Relation::Ge => a >= r.rhs - 1e-9,
                Relation::Eq => (a - r.rhs).abs() <= 1e-9,
            }
        });
        if !ok {
            continue;
        }
        let v: f64 = lp.objective.iter().zip(&x).map(|(c, v)| c * v).sum();
        best = Some(match best {
            None => v,
            Some(b) if maximize => b.max(v),
            Some(b) => b.min(v),
        });
    }
    best
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting; `None` when (nearly) singular.
fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[piv][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, piv);
        b.swap(col, piv);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

/// `max t` over `lambda >= 0, sum lambda <= 1, t <= lambda . g` for all `g`
/// in `group`, by enumerating the vertices of the polyhedron in
/// `(lambda, t)` space.
pub fn best_single_row(group: &[&[f64]], m: usize) -> f64 {
    if group.is_empty() {
        return f64::INFINITY;
    }
    // constraints as a . (lambda, t) <= b
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    for g in group {
        let mut a: Vec<f64> = g.iter().map(|v| -v).collect();
        a.push(1.0);
        rows.push((a, 0.0));
    }
    for i in 0..m {
        let mut a = vec![0.0; m + 1];
        a[i] = -1.0;
        rows.push((a, 0.0));
    }
    let mut a = vec![1.0; m + 1];
    a[m] = 0.0;
    rows.push((a, 1.0));
    let mut best = f64::NEG_INFINITY;
    for idx in combinations(rows.len(), m + 1) {
        let a = idx.iter().map(|&r| rows[r].0.clone()).collect();
        let b = idx.iter().map(|&r| rows[r].1).collect();
        let Some(x) = solve_square(a, b) else { continue };
        let feasible = rows
            .iter()
            .all(|(a, b)| a.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() <= b + 1e-9);
        if feasible {
            best = best.max(x[m]);
        }
    }
    best
}

/// Optimum of the disjunctive master: every point is assigned to one of the
/// `k` rows, each row maximises its own minimum violation, and `psi` is the
/// worst row, clipped at zero.
pub fn disjunctive_master(values: &[Vec<f64>], k: usize, m: usize) -> f64 {
    let p = values.len();
    let mut best = 0.0f64;
    let total = k.pow(p as u32);
    for code in 0..total {
        let mut c = code;
        let mut groups: Vec<Vec<&[f64]>> = vec![Vec::new(); k];
        for g in values {
            groups[c % k].push(g);
            c /= k;
        }
        let psi = groups
            .iter()
            .map(|gr| best_single_row(gr, m))
            .fold(f64::INFINITY, f64::min);
        best = best.max(psi);
    }
    best
}

fn feasible(model: &Model, x: &[f64]) -> bool {
    model.is_feasible(x, 0.0)
}

/// Smallest objective over feasible points of a continuous 2-variable model,
/// from a uniform grid followed by local zooming around the best feasible
/// points. Returns an upper estimate of the optimum; `None` if no grid point
/// is feasible.
pub fn grid_minimum(model: &Model) -> Option<(f64, [f64; 2])> {
    grid_minimum_in(model, model.boxes())
}

pub fn grid_minimum_in(model: &Model, boxes: &[(f64, f64)]) -> Option<(f64, [f64; 2])> {
    assert_eq!(model.n(), 2);
    assert!(model.integrality().iter().all(|&b| !b));
    let (lx, ux) = boxes[0];
    let (ly, uy) = boxes[1];
    let steps = 200;
    let mut found: Vec<(f64, [f64; 2])> = Vec::new();
    for a in 0..=steps {
        for b in 0..=steps {
            let x = [
                lx + (ux - lx) * a as f64 / steps as f64,
                ly + (uy - ly) * b as f64 / steps as f64,
            ];
            if feasible(model, &x) {
                found.push((model.objective_value(&x), x));
            }
        }
    }
    if found.is_empty() {
        return None;
    }
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found.truncate(12);
    let mut best = found[0];
    for &(_, start) in &found {
        let mut centre = start;
        let mut rx = (ux - lx) / steps as f64;
        let mut ry = (uy - ly) / steps as f64;
        let mut val = model.objective_value(&centre);
        for _ in 0..40 {
            let mut moved = centre;
            for a in -10..=10 {
                for b in -10..=10 {
                    let x = [
                        (centre[0] + rx * a as f64 / 10.0).clamp(lx, ux),
                        (centre[1] + ry * b as f64 / 10.0).clamp(ly, uy),
                    ];
                    if feasible(model, &x) {
                        let v = model.objective_value(&x);
                        if v < val {
                            val = v;
                            moved = x;
                        }
                    }
                }
            }
            if moved == centre {
                rx *= 0.5;
                ry *= 0.5;
            }
            centre = moved;
        }
        if val < best.0 {
            best = (val, centre);
        }
    }
    Some(best)
}

/// Smallest objective over a grid of the model's box subject to the single
/// aggregated constraint `sum_i lambda_i g_i(x) <= 0`, for models of any
/// dimension with few variables. Upper estimate of the surrogate value.
pub fn grid_surrogate(model: &Model, lambda: &[f64], steps: usize) -> f64 {
    let n = model.n();
    let mut idx = vec![0usize; n];
    let mut best = f64::INFINITY;
    loop {
        let x: Vec<f64> = idx
            .iter()
            .enumerate()
            .map(|(j, &i)| {
                let (lo, hi) = model.boxes()[j];
                lo + (hi - lo) * i as f64 / steps as f64
            })
            .collect();
        let g = model.constraint_values(&x);
        let agg: f64 = g.iter().zip(lambda).map(|(a, b)| a * b).sum();
        if agg <= 1e-12 {
            best = best.min(model.objective_value(&x));
        }
        let mut j = 0;
        while j < n {
            idx[j] += 1;
            if idx[j] <= steps {
                break;
            }
            idx[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
    }
    best
}

/// `min c^T x + lambda . g(x)` over a grid of the box; upper estimate of the
/// Lagrangian value.
pub fn grid_lagrangian(model: &Model, lambda: &[f64], steps: usize) -> f64 {
    assert_eq!(model.n(), 2);
    let (lx, ux) = model.boxes()[0];
    let (ly, uy) = model.boxes()[1];
    let mut best = f64::INFINITY;
    for a in 0..=steps {
        for b in 0..=steps {
            let x = [
                lx + (ux - lx) * a as f64 / steps as f64,
                ly + (uy - ly) * b as f64 / steps as f64,
            ];
            let g = model.constraint_values(&x);
            let v = model.objective_value(&x) + g.iter().zip(lambda).map(|(a, b)| a * b).sum::<f64>();
            best = best.min(v);
        }
    }
    best
}
