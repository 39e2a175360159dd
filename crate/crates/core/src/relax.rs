//! Linear relaxations of polynomial terms over boxes.
//!
//! Every monomial of degree two or more is rewritten as a chain of atoms:
//! first `x_j^e` for each factor with `e >= 2`, then a left-to-right chain of
//! bilinear products. Each atom owns one auxiliary variable; atoms are shared
//! between all polynomials handed to [`Reformulation::build`]. Auxiliary
//! variables are numbered after the original ones.

use std::collections::{BTreeMap, HashMap};
use std::ops::{Add, Mul};

use crate::lp::{LpRow, Relation};
use crate::model::{Monomial, Polynomial};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval<S> {
    pub lo: S,
    pub hi: S,
}

impl<S: Scalar> Interval<S> {
    pub fn new(lo: S, hi: S) -> Self {
        debug_assert!(lo <= hi, "empty interval [{lo}, {hi}]");
        Interval { lo, hi }
    }

    pub fn point(v: S) -> Self {
        Interval { lo: v, hi: v }
    }

    pub fn width(&self) -> S {
        self.hi - self.lo
    }

    pub fn mid(&self) -> S {
        (self.lo + self.hi) * S::lit(0.5)
    }

    pub fn is_point(&self) -> bool {
        self.lo == self.hi
    }

    pub fn contains(&self, v: S) -> bool {
        self.lo <= v && v <= self.hi
    }

    /// Widen both ends by the relative rounding epsilon.
    pub fn outward(self) -> Self {
        let eps = S::round_eps();
        Interval {
            lo: self.lo - eps * self.lo.abs(),
            hi: self.hi + eps * self.hi.abs(),
        }
    }

    pub fn scale(self, c: S) -> Self {
        if c >= S::zero() {
            Interval::new(c * self.lo, c * self.hi).outward()
        } else {
            Interval::new(c * self.hi, c * self.lo).outward()
        }
    }

    pub fn powi(self, k: u32) -> Self {
        let a = self.lo.powi(k as i32);
        let b = self.hi.powi(k as i32);
        let r = if k % 2 == 1 || self.lo >= S::zero() {
            Interval::new(a, b)
        } else if self.hi <= S::zero() {
            Interval::new(b, a)
        } else {
            Interval::new(S::zero(), a.max(b))
        };
        r.outward()
    }

    /// Natural interval extension of a polynomial over `boxes`.
    pub fn of_polynomial(poly: &Polynomial<S>, boxes: &[Interval<S>]) -> Self {
        let mut acc = Interval::point(S::zero());
        for (mono, coef) in poly.terms() {
            let mut t = Interval::point(S::one());
            for &(j, e) in mono.factors() {
                t = t * boxes[j].powi(e);
            }
            acc = acc + t.scale(coef);
        }
        acc
    }
}

impl<S: Scalar> Add for Interval<S> {
    type Output = Self;

    fn add(self, other: Self) -> Self {
        Interval::new(self.lo + other.lo, self.hi + other.hi).outward()
    }
}

impl<S: Scalar> Mul for Interval<S> {
    type Output = Self;

    fn mul(self, other: Self) -> Self {
        let p = [
            self.lo * other.lo,
            self.lo * other.hi,
            self.hi * other.lo,
            self.hi * other.hi,
        ];
        let lo = p.iter().copied().fold(S::infinity(), S::min);
        let hi = p.iter().copied().fold(S::neg_infinity(), S::max);
        Interval::new(lo, hi).outward()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AtomKind {
    /// `w = a * b` for two distinct variables.
    Bilinear(usize, usize),
    /// `w = a^k`, `k >= 2`.
    Power(usize, u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Atom {
    pub kind: AtomKind,
    /// Index of the auxiliary variable.
    pub var: usize,
    /// Original variables the atom depends on.
    pub support: Vec<usize>,
}

impl Atom {
    /// Exact value of the term given values of its factor variables.
    pub fn term_value<S: Scalar>(&self, vals: &[S]) -> S {
        match self.kind {
            AtomKind::Bilinear(a, b) => vals[a] * vals[b],
            AtomKind::Power(a, k) => vals[a].powi(k as i32),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Reformulation<S> {
    n: usize,
    atoms: Vec<Atom>,
    index: HashMap<AtomKind, usize>,
    monomial_var: BTreeMap<Monomial, usize>,
    global: Vec<Interval<S>>,
}

impl<S: Scalar> Reformulation<S> {
    pub fn build(polys: &[Polynomial<S>], boxes: &[(S, S)]) -> Self {
        let n = boxes.len();
        let mut r = Reformulation {
            n,
            atoms: Vec::new(),
            index: HashMap::new(),
            monomial_var: BTreeMap::new(),
            global: boxes.iter().map(|&(l, u)| Interval::new(l, u)).collect(),
        };
        for poly in polys {
            for (mono, _) in poly.terms() {
                r.register(mono);
            }
        }
        r
    }

    /// Variable standing for `mono`, registering atoms as needed. Returns
    /// `None` for the constant monomial.
    pub fn register(&mut self, mono: &Monomial) -> Option<usize> {
        if mono.is_constant() {
            return None;
        }
        if let Some(&v) = self.monomial_var.get(mono) {
            return Some(v);
        }
        let mut chain: Vec<(usize, Vec<usize>)> = Vec::new();
        for &(j, e) in mono.factors() {
            assert!(j < self.n, "monomial uses variable {j} outside the model");
            let v = if e == 1 {
                j
            } else {
                self.atom(AtomKind::Power(j, e), vec![j])
            };
            chain.push((v, vec![j]));
        }
        let (mut cur, mut support) = chain[0].clone();
        for (v, s) in chain.into_iter().skip(1) {
            support.extend(s);
            let (a, b) = if cur < v { (cur, v) } else { (v, cur) };
            cur = self.atom(AtomKind::Bilinear(a, b), support.clone());
        }
        self.monomial_var.insert(mono.clone(), cur);
        Some(cur)
    }

    fn atom(&mut self, kind: AtomKind, support: Vec<usize>) -> usize {
        if let Some(&i) = self.index.get(&kind) {
            return self.atoms[i].var;
        }
        let var = self.n + self.atoms.len();
        let bx = match kind {
            AtomKind::Bilinear(a, b) => self.global[a] * self.global[b],
            AtomKind::Power(a, k) => self.global[a].powi(k),
        };
        self.global.push(bx);
        self.index.insert(kind, self.atoms.len());
        self.atoms.push(Atom { kind, var, support });
        var
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_aux(&self) -> usize {
        self.atoms.len()
    }

    pub fn num_vars(&self) -> usize {
        self.n + self.atoms.len()
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    /// Boxes of all variables (original then auxiliary) over the global box.
    pub fn global_boxes(&self) -> &[Interval<S>] {
        &self.global
    }

    pub fn monomial_var(&self, mono: &Monomial) -> Option<usize> {
        self.monomial_var.get(mono).copied()
    }

    /// `poly` as `(coeffs, constant)` over original and auxiliary variables,
    /// or `None` when it contains an unregistered monomial.
    pub fn linearize(&self, poly: &Polynomial<S>) -> Option<(Vec<(usize, S)>, S)> {
        let mut coeffs = Vec::with_capacity(poly.len());
        let mut constant = S::zero();
        for (mono, c) in poly.terms() {
            if mono.is_constant() {
                constant += c;
            } else {
                coeffs.push((self.monomial_var(mono)?, c));
            }
        }
        Some((coeffs, constant))
    }

    /// Atoms needed to express the given polynomials.
    pub fn required_atoms<'a, I>(&self, polys: I) -> Vec<bool>
    where
        I: IntoIterator<Item = &'a Polynomial<S>>,
    {
        let mut need = vec![false; self.atoms.len()];
        let mut stack = Vec::new();
        for poly in polys {
            for (mono, _) in poly.terms() {
                if let Some(v) = self.monomial_var(mono) {
                    stack.push(v);
                }
            }
        }
        while let Some(v) = stack.pop() {
            if v < self.n || need[v - self.n] {
                continue;
            }
            need[v - self.n] = true;
            match self.atoms[v - self.n].kind {
                AtomKind::Bilinear(a, b) => {
                    stack.push(a);
                    stack.push(b);
                }
                AtomKind::Power(a, _) => stack.push(a),
            }
        }
        need
    }

    /// Boxes of all variables given boxes of the original ones.
    pub fn propagate(&self, local: &[(S, S)]) -> Vec<Interval<S>> {
        let mut out: Vec<Interval<S>> = local.iter().map(|&(l, u)| Interval::new(l, u)).collect();
        for atom in &self.atoms {
            let bx = match atom.kind {
                AtomKind::Bilinear(a, b) => out[a] * out[b],
                AtomKind::Power(a, k) => out[a].powi(k),
            };
            // never wider than the global box
            let g = self.global[atom.var];
            let lo = bx.lo.max(g.lo);
            let hi = bx.hi.min(g.hi);
            out.push(if lo <= hi { Interval::new(lo, hi) } else { bx });
        }
        out
    }

    /// Interval bound tightening over all variables (original then
    /// auxiliary). Alternates a backward pass over `rows` and the inverted
    /// atoms with a forward pass through the flagged atoms. Integer variables
    /// get integral bounds. Returns false when some box becomes empty.
    pub fn tighten(
        &self,
        rows: &[LpRow<S>],
        boxes: &mut [Interval<S>],
        active: &[bool],
        integer: &[bool],
        rounds: usize,
    ) -> bool {
        for _ in 0..rounds {
            let before: Vec<Interval<S>> = boxes.to_vec();
            for r in rows {
                if !tighten_row(r, boxes) {
                    return false;
                }
            }
            for (atom, &on) in self.atoms.iter().zip(active).rev() {
                if on && !invert_atom(atom, boxes) {
                    return false;
                }
            }
            for j in 0..self.n {
                if integer.get(j).copied().unwrap_or(false) {
                    let lo = (boxes[j].lo - S::int_tol()).ceil();
                    let hi = (boxes[j].hi + S::int_tol()).floor();
                    if lo > hi {
                        return false;
                    }
                    boxes[j] = Interval::new(lo, hi);
                }
            }
            for (atom, &on) in self.atoms.iter().zip(active) {
                if on {
                    let img = match atom.kind {
                        AtomKind::Bilinear(a, b) => boxes[a] * boxes[b],
                        AtomKind::Power(a, k) => boxes[a].powi(k),
                    };
                    if !meet(&mut boxes[atom.var], img.lo, img.hi) {
                        return false;
                    }
                }
            }
            let moved = before.iter().zip(boxes.iter()).any(|(b, a)| {
                let w = S::one().max(b.width());
                a.lo - b.lo > S::lit(1e-6) * w || b.hi - a.hi > S::lit(1e-6) * w
            });
            if !moved {
                break;
            }
        }
        true
    }

    /// Envelope cuts for every atom over the local box of the original
    /// variables.
    pub fn emit_cuts(&self, local: &[(S, S)]) -> Vec<LpRow<S>> {
        let boxes = self.propagate(local);
        let mut cuts = Vec::new();
        for atom in &self.atoms {
            atom_cuts(atom, &boxes, &mut cuts);
        }
        cuts
    }

    /// Envelope cuts for the flagged atoms over already propagated boxes.
    pub fn emit_cuts_for(&self, boxes: &[Interval<S>], active: &[bool], cuts: &mut Vec<LpRow<S>>) {
        for (atom, &on) in self.atoms.iter().zip(active) {
            if on {
                atom_cuts(atom, boxes, cuts);
            }
        }
    }
}

/// Intersects `iv` with `[lo, hi]`; a crossing within the feasibility
/// tolerance collapses to a point.
fn meet<S: Scalar>(iv: &mut Interval<S>, lo: S, hi: S) -> bool {
    let nlo = iv.lo.max(lo);
    let nhi = iv.hi.min(hi);
    if nlo <= nhi {
        *iv = Interval::new(nlo, nhi);
        return true;
    }
    if nlo - nhi <= S::feas_tol() * S::one().max(nlo.abs()) {
        let v = (nlo + nhi) * S::lit(0.5);
        *iv = Interval::point(v.max(iv.lo).min(iv.hi));
        return true;
    }
    false
}

// outward padding for a computed bound
fn slack<S: Scalar>(v: S) -> S {
    S::lit(4.0) * S::round_eps() * v.abs()
}

// sum a_j v_j (rel) rhs, tightened one variable at a time
fn tighten_row<S: Scalar>(r: &LpRow<S>, boxes: &mut [Interval<S>]) -> bool {
    let dirs: &[S] = match r.relation {
        Relation::Le => &[S::one()],
        Relation::Ge => &[-S::one()],
        Relation::Eq => &[S::one(), -S::one()],
    };
    for &sg in dirs {
        // sg * (sum a_j v_j) <= sg * rhs
        let b = sg * r.rhs;
        let mins: Vec<S> = r
            .coeffs
            .iter()
            .map(|&(j, a)| {
                let a = sg * a;
                if a >= S::zero() {
                    a * boxes[j].lo
                } else {
                    a * boxes[j].hi
                }
            })
            .collect();
        let total: S = mins.iter().copied().sum();
        let scale: S = mins.iter().map(|v| v.abs()).sum::<S>() + b.abs();
        let eps = S::lit(4.0) * S::round_eps();
        for (t, &(j, a)) in r.coeffs.iter().enumerate() {
            let a = sg * a;
            if a.abs() <= S::zero_tol() {
                continue;
            }
            let rest = b - (total - mins[t]);
            let bound = rest / a;
            // rounding error of the other terms only
            let pad = eps * (scale - mins[t].abs()) / a.abs() + slack(bound);
            let ok = if a > S::zero() {
                meet(&mut boxes[j], S::neg_infinity(), bound + pad)
            } else {
                meet(&mut boxes[j], bound - pad, S::infinity())
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

fn root<S: Scalar>(v: S, k: u32) -> S {
    let r = v.abs().powf(S::one() / S::lit(k as f64));
    if v < S::zero() {
        -r
    } else {
        r
    }
}

// narrows the factor boxes of `atom` from the box of its variable
fn invert_atom<S: Scalar>(atom: &Atom, boxes: &mut [Interval<S>]) -> bool {
    let w = boxes[atom.var];
    match atom.kind {
        AtomKind::Power(a, k) if k % 2 == 1 => {
            let lo = root(w.lo, k);
            let hi = root(w.hi, k);
            meet(&mut boxes[a], lo - slack(lo), hi + slack(hi))
        }
        AtomKind::Power(a, k) => {
            if w.hi < -S::feas_tol() {
                return false;
            }
            let r = root(w.hi.max(S::zero()), k);
            if !meet(&mut boxes[a], -r - slack(r), r + slack(r)) {
                return false;
            }
            // a hole (-q, q) when w is bounded away from zero
            if w.lo > S::zero() {
                let q = root(w.lo, k) - slack(root(w.lo, k));
                let x = boxes[a];
                if x.lo > -q {
                    return meet(&mut boxes[a], q, S::infinity());
                }
                if x.hi < q {
                    return meet(&mut boxes[a], S::neg_infinity(), -q);
                }
            }
            true
        }
        AtomKind::Bilinear(a, b) => {
            for (p, q) in [(a, b), (b, a)] {
                let d = boxes[q];
                if d.lo > S::zero() || d.hi < S::zero() {
                    let c = [w.lo / d.lo, w.lo / d.hi, w.hi / d.lo, w.hi / d.hi];
                    let lo = c.iter().copied().fold(S::infinity(), S::min);
                    let hi = c.iter().copied().fold(S::neg_infinity(), S::max);
                    if !meet(&mut boxes[p], lo - slack(lo), hi + slack(hi)) {
                        return false;
                    }
                }
            }
            true
        }
    }
}

fn row<S: Scalar>(coeffs: Vec<(usize, S)>, relation: Relation, rhs: S) -> LpRow<S> {
    LpRow { coeffs, relation, rhs }
}

/// Cuts valid for `w = term` over `boxes`, appended to `cuts`.
pub fn atom_cuts<S: Scalar>(atom: &Atom, boxes: &[Interval<S>], cuts: &mut Vec<LpRow<S>>) {
    let w = atom.var;
    match atom.kind {
        AtomKind::Bilinear(a, b) => bilinear_cuts(w, a, b, boxes[a], boxes[b], cuts),
        AtomKind::Power(a, k) => power_cuts(w, a, k, boxes[a], cuts),
    }
}

fn bilinear_cuts<S: Scalar>(w: usize, a: usize, b: usize, x: Interval<S>, y: Interval<S>, cuts: &mut Vec<LpRow<S>>) {
    let one = S::one();
    if x.is_point() && y.is_point() {
        cuts.push(row(vec![(w, one)], Relation::Eq, x.lo * y.lo));
        return;
    }
    if x.is_point() {
        cuts.push(row(vec![(w, one), (b, -x.lo)], Relation::Eq, S::zero()));
        return;
    }
    if y.is_point() {
        cuts.push(row(vec![(w, one), (a, -y.lo)], Relation::Eq, S::zero()));
        return;
    }
    // w >= yl x + xl y - xl yl,  w >= yu x + xu y - xu yu
    cuts.push(row(vec![(w, one), (a, -y.lo), (b, -x.lo)], Relation::Ge, -x.lo * y.lo));
    cuts.push(row(vec![(w, one), (a, -y.hi), (b, -x.hi)], Relation::Ge, -x.hi * y.hi));
    // w <= yu x + xl y - xl yu,  w <= yl x + xu y - xu yl
    cuts.push(row(vec![(w, one), (a, -y.hi), (b, -x.lo)], Relation::Le, -x.lo * y.hi));
    cuts.push(row(vec![(w, one), (a, -y.lo), (b, -x.hi)], Relation::Le, -x.hi * y.lo));
}

fn pow<S: Scalar>(x: S, k: u32) -> S {
    x.powi(k as i32)
}

fn dpow<S: Scalar>(x: S, k: u32) -> S {
    S::lit(k as f64) * x.powi(k as i32 - 1)
}

// w >= or <= tangent of x^k at t:  w - k t^{k-1} x  (rel)  t^k - k t^{k-1} t
fn tangent<S: Scalar>(w: usize, a: usize, k: u32, t: S, relation: Relation) -> LpRow<S> {
    let s = dpow(t, k);
    row(vec![(w, S::one()), (a, -s)], relation, pow(t, k) - s * t)
}

fn secant<S: Scalar>(w: usize, a: usize, k: u32, l: S, u: S, relation: Relation) -> LpRow<S> {
    let fl = pow(l, k);
    let s = (pow(u, k) - fl) / (u - l);
    row(vec![(w, S::one()), (a, -s)], relation, fl - s * l)
}

fn power_cuts<S: Scalar>(w: usize, a: usize, k: u32, x: Interval<S>, cuts: &mut Vec<LpRow<S>>) {
    let (l, u) = (x.lo, x.hi);
    if x.is_point() {
        cuts.push(row(vec![(w, S::one())], Relation::Eq, pow(l, k)));
        return;
    }
    let convex = k.is_multiple_of(2) || l >= S::zero();
    let concave = k % 2 == 1 && u <= S::zero();
    if convex || concave {
        let (under, over) = if convex {
            (Relation::Ge, Relation::Le)
        } else {
            (Relation::Le, Relation::Ge)
        };
        for t in [l, x.mid(), u] {
            cuts.push(tangent(w, a, k, t, under));
        }
        cuts.push(secant(w, a, k, l, u, over));
        return;
    }
    // odd power straddling zero: convex on [0, u], concave on [l, 0]
    let t = odd_tangent_ratio::<S>(k);
    let nudge = S::one() + S::lit(1e-9);
    // lower envelope: line from (l, l^k) touching the convex side at c
    let c = -l * t * nudge;
    if c < u {
        cuts.push(tangent(w, a, k, c, Relation::Ge));
        cuts.push(tangent(w, a, k, (c + u) * S::lit(0.5), Relation::Ge));
        cuts.push(tangent(w, a, k, u, Relation::Ge));
    } else {
        cuts.push(secant(w, a, k, l, u, Relation::Ge));
    }
    // upper envelope, mirrored
    let d = -u * t * nudge;
    if d > l {
        cuts.push(tangent(w, a, k, d, Relation::Le));
        cuts.push(tangent(w, a, k, (l + d) * S::lit(0.5), Relation::Le));
        cuts.push(tangent(w, a, k, l, Relation::Le));
    } else {
        cuts.push(secant(w, a, k, l, u, Relation::Le));
    }
}

/// Root in (0, 1) of `(k-1) t^k + k t^(k-1) - 1`; the tangent point of the
/// line through `(l, l^k)` is `-l * t`.
pub fn odd_tangent_ratio<S: Scalar>(k: u32) -> S {
    let f = |t: f64| (k as f64 - 1.0) * t.powi(k as i32) + k as f64 * t.powi(k as i32 - 1) - 1.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    S::lit(hi)
}
