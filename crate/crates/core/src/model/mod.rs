//! Polynomial MINLP data model, aggregation arithmetic and the JSON instance
//! format.

mod aggregation;
mod json;
mod polynomial;

pub use aggregation::{aggregate, AggregationMatrix};
pub use json::{parse_model, serialize_model};
pub use polynomial::{Monomial, Polynomial};

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("schema violation at {path}: {detail}")]
    Schema { path: String, detail: String },
    #[error("unbounded variable at {path}")]
    UnboundedVariable { path: String },
    #[error("no nonlinear constraints")]
    NoNonlinearConstraints,
    #[error("dimension mismatch at {path}: {detail}")]
    DimensionMismatch { path: String, detail: String },
    #[error("empty box at {path}: lower bound exceeds upper bound")]
    EmptyBox { path: String },
    #[error("negative multiplier at {path}")]
    NegativeMultiplier { path: String },
}

/// Linear inequality `sum_j a_j x_j <= rhs` with sparse coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearRow<S> {
    pub coeffs: Vec<(usize, S)>,
    pub rhs: S,
}

impl<S: Scalar> LinearRow<S> {
    pub fn new<I: IntoIterator<Item = (usize, S)>>(coeffs: I, rhs: S) -> Self {
        LinearRow {
            coeffs: coeffs.into_iter().collect(),
            rhs,
        }
    }

    pub fn activity(&self, point: &[S]) -> S {
        self.coeffs.iter().map(|&(j, a)| a * point[j]).sum()
    }

    fn cast<T: Scalar>(&self) -> LinearRow<T> {
        LinearRow {
            coeffs: self.coeffs.iter().map(|&(j, a)| (j, T::from(a).unwrap())).collect(),
            rhs: T::from(self.rhs).unwrap(),
        }
    }
}

/// `min c^T x  s.t.  Ax <= b, A'x <= b', g_i(x) <= 0, x in box, x_j integer for flagged j`.
///
/// Immutable once built; derived models (local boxes, extra cuts) are new values.
#[derive(Debug, Clone, PartialEq)]
pub struct Model<S> {
    objective: Vec<S>,
    linear: Vec<LinearRow<S>>,
    refined: Vec<LinearRow<S>>,
    boxes: Vec<(S, S)>,
    integer: Vec<bool>,
    nonlinear: Vec<Polynomial<S>>,
    primal_cutoff: Option<S>,
}

impl<S: Scalar> Model<S> {
    pub fn builder(n: usize) -> ModelBuilder<S> {
        ModelBuilder::new(n)
    }

    pub fn n(&self) -> usize {
        self.objective.len()
    }

    /// Number of nonlinear constraints.
    pub fn m(&self) -> usize {
        self.nonlinear.len()
    }

    /// Number of integer variables.
    pub fn p(&self) -> usize {
        self.integer.iter().filter(|&&b| b).count()
    }

    pub fn objective(&self) -> &[S] {
        &self.objective
    }

    pub fn linear_rows(&self) -> &[LinearRow<S>] {
        &self.linear
    }

    pub fn refined_rows(&self) -> &[LinearRow<S>] {
        &self.refined
    }

    pub fn boxes(&self) -> &[(S, S)] {
        &self.boxes
    }

    pub fn is_integer(&self, j: usize) -> bool {
        self.integer[j]
    }

    pub fn integrality(&self) -> &[bool] {
        &self.integer
    }

    pub fn nonlinear(&self) -> &[Polynomial<S>] {
        &self.nonlinear
    }

    pub fn primal_cutoff(&self) -> Option<S> {
        self.primal_cutoff
    }

    pub fn objective_value(&self, point: &[S]) -> S {
        self.objective.iter().zip(point).map(|(&c, &x)| c * x).sum()
    }

    /// Values `g_i(point)` of all nonlinear constraints.
    pub fn constraint_values(&self, point: &[S]) -> Vec<S> {
        self.nonlinear.iter().map(|g| g.evaluate(point)).collect()
    }

    /// Same model over a different box (e.g. a branch-and-bound node).
    pub fn with_boxes(&self, boxes: Vec<(S, S)>) -> Result<Self, ModelError> {
        let mut b = self.to_builder();
        b.boxes = boxes;
        b.build()
    }

    pub fn with_primal_cutoff(&self, cutoff: Option<S>) -> Self {
        let mut m = self.clone();
        m.primal_cutoff = cutoff;
        m
    }

    pub fn with_refined_rows(&self, rows: Vec<LinearRow<S>>) -> Result<Self, ModelError> {
        let mut b = self.to_builder();
        b.refined = rows;
        b.build()
    }

    /// Checks integrality, linear rows (including refined rows and the cutoff),
    /// boxes and all nonlinear constraints at `tol`.
    pub fn is_feasible(&self, point: &[S], tol: S) -> bool {
        let boxes_ok = self
            .boxes
            .iter()
            .zip(point)
            .all(|(&(lo, hi), &x)| x >= lo - tol && x <= hi + tol);
        let int_ok = self
            .integer
            .iter()
            .zip(point)
            .all(|(&int, &x)| !int || (x - x.round()).abs() <= S::int_tol());
        let rows_ok = self
            .linear
            .iter()
            .chain(&self.refined)
            .all(|r| r.activity(point) <= r.rhs + tol);
        let cutoff_ok = self
            .primal_cutoff
            .is_none_or(|c| self.objective_value(point) <= c + tol);
        let nl_ok = self.nonlinear.iter().all(|g| g.evaluate(point) <= tol);
        boxes_ok && int_ok && rows_ok && cutoff_ok && nl_ok
    }

    pub fn cast<T: Scalar>(&self) -> Model<T> {
        let c = |v: S| T::from(v).unwrap();
        Model {
            objective: self.objective.iter().map(|&v| c(v)).collect(),
            linear: self.linear.iter().map(LinearRow::cast).collect(),
            refined: self.refined.iter().map(LinearRow::cast).collect(),
            boxes: self.boxes.iter().map(|&(l, h)| (c(l), c(h))).collect(),
            integer: self.integer.clone(),
            nonlinear: self.nonlinear.iter().map(Polynomial::cast).collect(),
            primal_cutoff: self.primal_cutoff.map(c),
        }
    }

    fn to_builder(&self) -> ModelBuilder<S> {
        ModelBuilder {
            n: self.n(),
            objective: self.objective.clone(),
            linear: self.linear.clone(),
            refined: self.refined.clone(),
            boxes: self.boxes.clone(),
            integer: self.integer.clone(),
            nonlinear: self.nonlinear.clone(),
            primal_cutoff: self.primal_cutoff,
        }
    }
}

/// Incremental construction of a [`Model`]; validation happens in [`build`](Self::build).
#[derive(Debug, Clone)]
pub struct ModelBuilder<S> {
    n: usize,
    objective: Vec<S>,
    linear: Vec<LinearRow<S>>,
    refined: Vec<LinearRow<S>>,
    boxes: Vec<(S, S)>,
    integer: Vec<bool>,
    nonlinear: Vec<Polynomial<S>>,
    primal_cutoff: Option<S>,
}

impl<S: Scalar> ModelBuilder<S> {
    pub fn new(n: usize) -> Self {
        ModelBuilder {
            n,
            objective: vec![S::zero(); n],
            linear: Vec::new(),
            refined: Vec::new(),
            boxes: Vec::new(),
            integer: vec![false; n],
            nonlinear: Vec::new(),
            primal_cutoff: None,
        }
    }

    pub fn objective(mut self, c: Vec<S>) -> Self {
        self.objective = c;
        self
    }

    pub fn boxes(mut self, boxes: Vec<(S, S)>) -> Self {
        self.boxes = boxes;
        self
    }

    /// Same box for every variable.
    pub fn uniform_box(mut self, lo: S, hi: S) -> Self {
        self.boxes = vec![(lo, hi); self.n];
        self
    }

    pub fn integer(mut self, j: usize) -> Self {
        if j < self.integer.len() {
            self.integer[j] = true;
        } else {
            // reported by build()
            self.integer.resize(j + 1, false);
            self.integer[j] = true;
        }
        self
    }

    pub fn linear(mut self, row: LinearRow<S>) -> Self {
        self.linear.push(row);
        self
    }

    pub fn refined(mut self, row: LinearRow<S>) -> Self {
        self.refined.push(row);
        self
    }

    pub fn nonlinear(mut self, g: Polynomial<S>) -> Self {
        self.nonlinear.push(g);
        self
    }

    pub fn primal_cutoff(mut self, cutoff: S) -> Self {
        self.primal_cutoff = Some(cutoff);
        self
    }

    pub fn build(self) -> Result<Model<S>, ModelError> {
        let n = self.n;
        if self.objective.len() != n {
            return Err(ModelError::DimensionMismatch {
                path: "objective".into(),
                detail: format!("expected {n} entries, found {}", self.objective.len()),
            });
        }
        if self.boxes.len() != n {
            return Err(ModelError::DimensionMismatch {
                path: "boxes".into(),
                detail: format!("expected {n} entries, found {}", self.boxes.len()),
            });
        }
        if self.integer.len() != n {
            return Err(ModelError::DimensionMismatch {
                path: "integer".into(),
                detail: format!("variable index {} out of range", self.integer.len() - 1),
            });
        }
        for (j, &(lo, hi)) in self.boxes.iter().enumerate() {
            if !lo.is_finite() || !hi.is_finite() {
                return Err(ModelError::UnboundedVariable {
                    path: format!("boxes[{j}]"),
                });
            }
            if lo > hi {
                return Err(ModelError::EmptyBox {
                    path: format!("boxes[{j}]"),
                });
            }
        }
        for (name, rows) in [("linear", &self.linear), ("refined", &self.refined)] {
            for (r, row) in rows.iter().enumerate() {
                if let Some(&(j, _)) = row.coeffs.iter().find(|&&(j, _)| j >= n) {
                    return Err(ModelError::DimensionMismatch {
                        path: format!("{name}[{r}].coeffs.{j}"),
                        detail: format!("variable index {j} >= n = {n}"),
                    });
                }
            }
        }
        if self.nonlinear.is_empty() {
            return Err(ModelError::NoNonlinearConstraints);
        }
        for (i, g) in self.nonlinear.iter().enumerate() {
            if let Some(j) = g.max_var().filter(|&j| j >= n) {
                return Err(ModelError::DimensionMismatch {
                    path: format!("nonlinear[{i}]"),
                    detail: format!("variable index {j} >= n = {n}"),
                });
            }
        }
        Ok(Model {
            objective: self.objective,
            linear: self.linear,
            refined: self.refined,
            boxes: self.boxes,
            integer: self.integer,
            nonlinear: self.nonlinear,
            primal_cutoff: self.primal_cutoff,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> ModelBuilder<f64> {
        Model::builder(2)
            .objective(vec![0.0, -1.0])
            .uniform_box(0.0, 1.0)
            .nonlinear(Polynomial::from_terms([(Monomial::new([(0, 1), (1, 1)]), 1.0)]))
    }

    #[test]
    fn builds_valid_model() {
        let m = tiny().integer(1).build().unwrap();
        assert_eq!((m.n(), m.m(), m.p()), (2, 1, 1));
    }

    #[test]
    fn rejects_infinite_box() {
        let err = tiny()
            .boxes(vec![(0.0, f64::INFINITY), (0.0, 1.0)])
            .build()
            .unwrap_err();
        assert_eq!(
            err,
            ModelError::UnboundedVariable {
                path: "boxes[0]".into()
            }
        );
    }

    #[test]
    fn rejects_out_of_range_variable() {
        let err = tiny()
            .nonlinear(Polynomial::from_terms([(Monomial::var(5), 1.0)]))
            .build()
            .unwrap_err();
        assert!(matches!(err, ModelError::DimensionMismatch { .. }));
    }

    #[test]
    fn rejects_empty_nonlinear_set() {
        let err = Model::<f64>::builder(1)
            .objective(vec![1.0])
            .uniform_box(0.0, 1.0)
            .build()
            .unwrap_err();
        assert_eq!(err, ModelError::NoNonlinearConstraints);
    }

    #[test]
    fn feasibility_checks_every_part() {
        let m = tiny().primal_cutoff(-0.5).build().unwrap();
        assert!(m.is_feasible(&[0.0, 0.6], 1e-9));
        // cutoff violated
        assert!(!m.is_feasible(&[0.0, 0.4], 1e-9));
        // nonlinear violated
        assert!(!m.is_feasible(&[0.5, 0.6], 1e-9));
    }
}
