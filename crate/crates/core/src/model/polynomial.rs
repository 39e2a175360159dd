use std::collections::btree_map::Entry;
use std::collections::BTreeMap;
use std::fmt;

use crate::scalar::Scalar;

/// Product of variable powers, stored as `(variable, exponent)` pairs sorted by
/// variable index. Zero exponents are never stored; the empty monomial is the
/// constant `1`.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Monomial(Vec<(usize, u32)>);

impl Monomial {
    /// The constant monomial.
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(j: usize) -> Self {
        Monomial(vec![(j, 1)])
    }

    /// Builds a monomial from arbitrary factors. Repeated variables are merged
    /// and zero exponents dropped.
    pub fn new<I: IntoIterator<Item = (usize, u32)>>(factors: I) -> Self {
        let mut merged: BTreeMap<usize, u32> = BTreeMap::new();
        for (j, e) in factors {
            if e > 0 {
                *merged.entry(j).or_insert(0) += e;
            }
        }
        Monomial(merged.into_iter().collect())
    }

    pub fn factors(&self) -> &[(usize, u32)] {
        &self.0
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().map(|&(_, e)| e).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.is_empty()
    }

    /// Highest variable index used, if any.
    pub fn max_var(&self) -> Option<usize> {
        self.0.last().map(|&(j, _)| j)
    }

    pub fn evaluate<S: Scalar>(&self, point: &[S]) -> S {
        self.0
            .iter()
            .fold(S::one(), |acc, &(j, e)| acc * point[j].powi(e as i32))
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "1");
        }
        for (k, &(j, e)) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, "*")?;
            }
            if e == 1 {
                write!(f, "x{j}")?;
            } else {
                write!(f, "x{j}^{e}")?;
            }
        }
        Ok(())
    }
}

/// Sparse multivariate polynomial. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq)]
pub struct Polynomial<S> {
    terms: BTreeMap<Monomial, S>,
}

impl<S: Scalar> Default for Polynomial<S> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<S: Scalar> Polynomial<S> {
    pub fn zero() -> Self {
        Polynomial { terms: BTreeMap::new() }
    }

    pub fn constant(c: S) -> Self {
        let mut p = Self::zero();
        p.add_term(Monomial::one(), c);
        p
    }

    /// Sums the given terms; repeated monomials are combined.
    pub fn from_terms<I: IntoIterator<Item = (Monomial, S)>>(terms: I) -> Self {
        let mut p = Self::zero();
        for (m, c) in terms {
            p.add_term(m, c);
        }
        p
    }

    /// Adds `coef * mono`, dropping the entry when it cancels to zero.
    pub fn add_term(&mut self, mono: Monomial, coef: S) {
        if coef == S::zero() {
            return;
        }
        match self.terms.entry(mono) {
            Entry::Vacant(v) => {
                v.insert(coef);
            }
            Entry::Occupied(mut o) => {
                *o.get_mut() += coef;
                if *o.get() == S::zero() {
                    o.remove();
                }
            }
        }
    }

    /// `self += factor * other`, coefficient-wise.
    pub fn add_scaled(&mut self, other: &Polynomial<S>, factor: S) {
        if factor == S::zero() {
            return;
        }
        for (m, &c) in &other.terms {
            self.add_term(m.clone(), c * factor);
        }
    }

    pub fn scaled(&self, factor: S) -> Self {
        let mut p = Self::zero();
        p.add_scaled(self, factor);
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, S)> + '_ {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coefficient(&self, mono: &Monomial) -> S {
        self.terms.get(mono).copied().unwrap_or_else(S::zero)
    }

    pub fn constant_term(&self) -> S {
        self.coefficient(&Monomial::one())
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(Monomial::degree).max().unwrap_or(0)
    }

    pub fn max_var(&self) -> Option<usize> {
        self.terms.keys().filter_map(Monomial::max_var).max()
    }

    /// Plain sum of `coef * monomial(point)` over all terms.
    pub fn evaluate(&self, point: &[S]) -> S {
        self.terms.iter().map(|(m, &c)| c * m.evaluate(point)).sum()
    }

    pub fn cast<T: Scalar>(&self) -> Polynomial<T> {
        Polynomial::from_terms(
            self.terms
                .iter()
                .map(|(m, c)| (m.clone(), T::from(*c).expect("castable coefficient"))),
        )
    }
}

impl<S: Scalar> fmt::Display for Polynomial<S> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (k, (m, c)) in self.terms.iter().enumerate() {
            if k > 0 {
                write!(f, " + ")?;
            }
            if m.is_constant() {
                write!(f, "{c}")?;
            } else {
                write!(f, "{c}*{m}")?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn monomial_merges_and_drops_zero_exponents() {
        let m = Monomial::new([(2, 1), (0, 0), (2, 2), (1, 1)]);
        assert_eq!(m.factors(), &[(1, 1), (2, 3)]);
        assert_eq!(m.degree(), 4);
    }

    #[test]
    fn cancellation_removes_term() {
        let mut p = Polynomial::from_terms([(Monomial::var(0), 1.0), (Monomial::var(1), 2.0)]);
        p.add_term(Monomial::var(0), -1.0);
        assert_eq!(p.len(), 1);
        assert_eq!(p.coefficient(&Monomial::var(0)), 0.0);
    }

    #[test]
    fn zero_polynomial_evaluates_to_zero() {
        let p = Polynomial::<f64>::zero();
        assert_eq!(p.evaluate(&[3.0, -1.0]), 0.0);
    }

    #[test]
    fn generic_over_f32() {
        let p = Polynomial::<f32>::from_terms([(Monomial::new([(0, 2)]), 2.0), (Monomial::one(), -1.0)]);
        assert_eq!(p.evaluate(&[3.0]), 17.0);
    }
}
