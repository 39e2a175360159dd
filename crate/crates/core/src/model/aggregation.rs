use super::{Model, ModelError, Polynomial};
use crate::scalar::Scalar;

/// `K` nonnegative multiplier rows over the `m` nonlinear constraints; row `k`
/// encodes the aggregated constraint `sum_i lambda[k][i] * g_i(x) <= 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregationMatrix<S> {
    m: usize,
    rows: Vec<Vec<S>>,
}

impl<S: Scalar> AggregationMatrix<S> {
    /// Validates dimensions and nonnegativity.
    pub fn new(m: usize, rows: Vec<Vec<S>>) -> Result<Self, ModelError> {
        for (k, row) in rows.iter().enumerate() {
            if row.len() != m {
                return Err(ModelError::DimensionMismatch {
                    path: format!("lambda[{k}]"),
                    detail: format!("expected {m} entries, found {}", row.len()),
                });
            }
            if let Some(i) = row.iter().position(|&v| !(v >= S::zero())) {
                return Err(ModelError::NegativeMultiplier {
                    path: format!("lambda[{k}][{i}]"),
                });
            }
        }
        Ok(AggregationMatrix { m, rows })
    }

    pub fn zeros(k: usize, m: usize) -> Self {
        AggregationMatrix {
            m,
            rows: vec![vec![S::zero(); m]; k],
        }
    }

    /// Unit-vector aggregation `(e_1, ..., e_m)`, which reproduces the original constraints.
    pub fn identity(m: usize) -> Self {
        let rows = (0..m)
            .map(|k| (0..m).map(|i| if i == k { S::one() } else { S::zero() }).collect())
            .collect();
        AggregationMatrix { m, rows }
    }

    pub fn single(row: Vec<S>) -> Result<Self, ModelError> {
        let m = row.len();
        Self::new(m, vec![row])
    }

    pub fn k(&self) -> usize {
        self.rows.len()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn rows(&self) -> &[Vec<S>] {
        &self.rows
    }

    pub fn row(&self, k: usize) -> &[S] {
        &self.rows[k]
    }

    pub fn get(&self, k: usize, i: usize) -> S {
        self.rows[k][i]
    }

    /// Row-major flattening, `lambda[k][i]` at `k * m + i`.
    pub fn flat(&self) -> Vec<S> {
        self.rows.iter().flatten().copied().collect()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.iter().flatten().all(|&v| v == S::zero())
    }

    pub fn row_norm(&self, k: usize) -> S {
        self.rows[k].iter().copied().sum()
    }

    /// Rows whose 1-norm exceeds `1 + 1e-9` are scaled back onto the unit sphere.
    pub fn normalized(&self) -> Self {
        let limit = S::one() + S::lit(1e-9);
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let norm: S = row.iter().copied().sum();
                if norm > limit {
                    row.iter().map(|&v| v / norm).collect()
                } else {
                    row.clone()
                }
            })
            .collect();
        AggregationMatrix { m: self.m, rows }
    }

    /// Every nonzero row scaled to 1-norm exactly one. The surrogate value is
    /// invariant under this map.
    pub fn unit_rows(&self) -> Self {
        let rows = self
            .rows
            .iter()
            .map(|row| {
                let norm: S = row.iter().copied().sum();
                if norm > S::zero() {
                    row.iter().map(|&v| v / norm).collect()
                } else {
                    row.clone()
                }
            })
            .collect();
        AggregationMatrix { m: self.m, rows }
    }

    /// Appends zero rows up to `k` rows in total. Never drops rows.
    pub fn padded(&self, k: usize) -> Self {
        let mut rows = self.rows.clone();
        while rows.len() < k {
            rows.push(vec![S::zero(); self.m]);
        }
        AggregationMatrix { m: self.m, rows }
    }

    /// One aggregated polynomial per row.
    pub fn aggregate_all(&self, model: &Model<S>) -> Result<Vec<Polynomial<S>>, ModelError> {
        self.rows.iter().map(|r| aggregate(model, r)).collect()
    }
}

/// `sum_i lambda_i * g_i` as a single polynomial.
pub fn aggregate<S: Scalar>(model: &Model<S>, lambda: &[S]) -> Result<Polynomial<S>, ModelError> {
    if lambda.len() != model.m() {
        return Err(ModelError::DimensionMismatch {
            path: "lambda".into(),
            detail: format!("expected {} entries, found {}", model.m(), lambda.len()),
        });
    }
    if let Some(i) = lambda.iter().position(|&v| !(v >= S::zero())) {
        return Err(ModelError::NegativeMultiplier {
            path: format!("lambda[{i}]"),
        });
    }
    let mut p = Polynomial::zero();
    for (g, &l) in model.nonlinear().iter().zip(lambda) {
        p.add_scaled(g, l);
    }
    Ok(p)
}
