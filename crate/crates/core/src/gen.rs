//! Seeded random instances for tests and experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::lp::{LinearProgram, Relation, Sense};
use crate::mip::MipProblem;
use crate::model::{Model, Monomial, Polynomial};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// All monomials in `n` variables of degree `1..=degree`, in a fixed order.
fn monomials(n: usize, degree: u32) -> Vec<Monomial> {
    let mut out = Vec::new();
    let mut exps = vec![0u32; n];
    loop {
        // odometer over exponent vectors
        let mut j = 0;
        while j < n {
            exps[j] += 1;
            if exps.iter().sum::<u32>() <= degree {
                break;
            }
            exps[j] = 0;
            j += 1;
        }
        if j == n {
            break;
        }
        out.push(Monomial::new(exps.iter().enumerate().map(|(i, &e)| (i, e))));
    }
    out
}

/// Continuous polynomial model on `[-1, 1]^n` with `m` constraints of
/// degree at most `degree`. Every constraint is strictly satisfied at a
/// random interior point, so the model is feasible.
pub fn polynomial_instance(seed: u64, n: usize, m: usize, degree: u32) -> Model<f64> {
    let mut r = rng(seed);
    let anchor: Vec<f64> = (0..n).map(|_| r.gen_range(-0.8..0.8)).collect();
    let monos = monomials(n, degree);
    let mut b = Model::builder(n).uniform_box(-1.0, 1.0);
    let mut c: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
    let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-3);
    c.iter_mut().for_each(|v| *v /= norm);
    b = b.objective(c);
    for _ in 0..m {
        let mut g = Polynomial::zero();
        for mono in &monos {
            if r.gen_bool(0.6) || mono.degree() >= 2 && g.degree() < 2 {
                g.add_term(mono.clone(), r.gen_range(-1.0..1.0));
            }
        }
        let slack = r.gen_range(0.05..0.3);
        let shift = -g.evaluate(&anchor) - slack;
        g.add_term(Monomial::one(), shift);
        b = b.nonlinear(g);
    }
    b.build().expect("generated model is valid")
}

/// `points` rows of `m` constraint values drawn from `[-2, 2]`.
pub fn master_values(seed: u64, points: usize, m: usize) -> Vec<Vec<f64>> {
    let mut r = rng(seed);
    (0..points)
        .map(|_| (0..m).map(|_| r.gen_range(-2.0..2.0)).collect())
        .collect()
}

/// Maximisation over `n` binaries with `rows` knapsack-style rows. Some
/// rows carry negative weights, so the problem may be infeasible.
pub fn binary_milp(seed: u64, n: usize, rows: usize) -> MipProblem<f64> {
    let mut r = rng(seed);
    let c: Vec<f64> = (0..n).map(|_| r.gen_range(-2.0..10.0)).collect();
    let mut lp = LinearProgram::new(Sense::Maximize, c);
    for j in 0..n {
        lp.set_bounds(j, 0.0, 1.0);
    }
    for _ in 0..rows {
        let a: Vec<(usize, f64)> = (0..n).map(|j| (j, r.gen_range(-1.0..6.0))).collect();
        let total: f64 = a.iter().map(|&(_, v)| v.max(0.0)).sum();
        let rhs = total * r.gen_range(0.2..0.7);
        lp.add_row(a, Relation::Le, rhs);
    }
    MipProblem::new(lp, vec![true; n])
}
