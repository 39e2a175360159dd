use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{LinearRow, Model, ModelError, Monomial, Polynomial};

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceDoc {
    n: usize,
    #[serde(default)]
    integer: Vec<usize>,
    objective: Vec<f64>,
    boxes: Vec<(BoundDoc, BoundDoc)>,
    #[serde(default)]
    linear: Vec<RowDoc>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    refined: Vec<RowDoc>,
    nonlinear: Vec<PolyDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    primal_cutoff: Option<f64>,
}

/// A box end: a number, or one of the strings `inf`, `+inf`, `-inf`,
/// `infinity`; `null` counts as infinite too. Anything infinite is rejected
/// during validation with an "unbounded variable" error.
#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum BoundDoc {
    Num(f64),
    Text(String),
    Null(()),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RowDoc {
    coeffs: BTreeMap<usize, f64>,
    rhs: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolyDoc {
    terms: Vec<TermDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TermDoc {
    #[serde(default)]
    exps: BTreeMap<usize, u32>,
    coef: f64,
}

fn bound_value(b: &BoundDoc, path: &str) -> Result<f64, ModelError> {
    match b {
        BoundDoc::Num(v) => Ok(*v),
        BoundDoc::Null(()) => Ok(f64::INFINITY),
        BoundDoc::Text(s) => match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
            "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
            other => Err(ModelError::Schema {
                path: path.to_string(),
                detail: format!("expected a number, found string {other:?}"),
            }),
        },
    }
}

/// Parses and validates a JSON instance document.
pub fn parse_model(text: &str) -> Result<Model<f64>, ModelError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: InstanceDoc = serde_path_to_error::deserialize(de).map_err(|e| {
        let path = e.path().to_string();
        ModelError::Schema {
            path: if path.is_empty() { ".".into() } else { path },
            detail: e.into_inner().to_string(),
        }
    })?;

    let n = doc.n;
    let mut builder = Model::builder(n).objective(doc.objective);
    let mut boxes = Vec::with_capacity(doc.boxes.len());
    for (j, (lo, hi)) in doc.boxes.iter().enumerate() {
        let lo = bound_value(lo, &format!("boxes[{j}][0]"))?;
        let hi = bound_value(hi, &format!("boxes[{j}][1]"))?;
        boxes.push((lo, hi));
    }
    builder = builder.boxes(boxes);
    for (k, &j) in doc.integer.iter().enumerate() {
        if j >= n {
            return Err(ModelError::DimensionMismatch {
                path: format!("integer[{k}]"),
                detail: format!("variable index {j} >= n = {n}"),
            });
        }
        builder = builder.integer(j);
    }
    for row in doc.linear {
        builder = builder.linear(LinearRow::new(row.coeffs, row.rhs));
    }
    for row in doc.refined {
        builder = builder.refined(LinearRow::new(row.coeffs, row.rhs));
    }
    for (i, poly) in doc.nonlinear.into_iter().enumerate() {
        let mut p = Polynomial::zero();
        for (t, term) in poly.terms.into_iter().enumerate() {
            if let Some(&j) = term.exps.keys().find(|&&j| j >= n) {
                return Err(ModelError::DimensionMismatch {
                    path: format!("nonlinear[{i}].terms[{t}].exps.{j}"),
                    detail: format!("variable index {j} >= n = {n}"),
                });
            }
            p.add_term(Monomial::new(term.exps), term.coef);
        }
        builder = builder.nonlinear(p);
    }
    if let Some(c) = doc.primal_cutoff {
        builder = builder.primal_cutoff(c);
    }
    builder.build()
}

fn row_doc(row: &LinearRow<f64>) -> RowDoc {
    let mut coeffs = BTreeMap::new();
    for &(j, a) in &row.coeffs {
        *coeffs.entry(j).or_insert(0.0) += a;
    }
    RowDoc { coeffs, rhs: row.rhs }
}

/// Serializes a model in the instance format accepted by [`parse_model`].
pub fn serialize_model(model: &Model<f64>) -> String {
    let doc = InstanceDoc {
        n: model.n(),
        integer: (0..model.n()).filter(|&j| model.is_integer(j)).collect(),
        objective: model.objective().to_vec(),
        boxes: model
            .boxes()
            .iter()
            .map(|&(l, h)| (BoundDoc::Num(l), BoundDoc::Num(h)))
            .collect(),
        linear: model.linear_rows().iter().map(row_doc).collect(),
        refined: model.refined_rows().iter().map(row_doc).collect(),
        nonlinear: model
            .nonlinear()
            .iter()
            .map(|g| PolyDoc {
                terms: g
                    .terms()
                    .map(|(m, c)| TermDoc {
                        exps: m.factors().iter().copied().collect(),
                        coef: c,
                    })
                    .collect(),
            })
            .collect(),
        primal_cutoff: model.primal_cutoff(),
    };
    serde_json::to_string_pretty(&doc).expect("instance serializes")
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE1: &str = r#"{
        "n": 2,
        "objective": [0, -1],
        "boxes": [[0, 1], [0, 1]],
        "nonlinear": [
            {"terms": [{"exps": {"0": 1, "1": 1}, "coef": 2}, {"exps": {"0": 2}, "coef": 1},
                       {"exps": {"1": 2}, "coef": -1}, {"exps": {"0": 1}, "coef": -1}]},
            {"terms": [{"exps": {"0": 1, "1": 1}, "coef": -1}, {"exps": {"0": 2}, "coef": -0.3},
                       {"exps": {"1": 2}, "coef": -0.2}, {"exps": {"0": 1}, "coef": -0.5},
                       {"exps": {"1": 1}, "coef": 1.5}]}
        ]
    }"#;

    #[test]
    fn parses_example_one() {
        let m = parse_model(EXAMPLE1).unwrap();
        assert_eq!(m.n(), 2);
        assert_eq!(m.m(), 2);
        assert_eq!(m.p(), 0);
        assert_eq!(m.nonlinear()[1].coefficient(&Monomial::new([(0, 2)])), -0.3);
    }

    #[test]
    fn decimal_coefficients_are_correctly_rounded() {
        let text = EXAMPLE1.replace("-0.3", "0.1000000000000000055511151231257827");
        let m = parse_model(&text).unwrap();
        assert_eq!(m.nonlinear()[1].coefficient(&Monomial::new([(0, 2)])), 0.1);
    }

    #[test]
    fn infinite_box_is_unbounded_variable() {
        let text = EXAMPLE1.replace(r#""boxes": [[0, 1], [0, 1]]"#, r#""boxes": [[0, "+inf"], [0, 1]]"#);
        let err = parse_model(&text).unwrap_err();
        assert_eq!(
            err,
            ModelError::UnboundedVariable {
                path: "boxes[0]".into()
            }
        );
        assert!(err.to_string().contains("unbounded variable"));
    }

    #[test]
    fn empty_nonlinear_list_is_rejected() {
        let text = r#"{"n": 1, "objective": [1], "boxes": [[0, 1]], "nonlinear": []}"#;
        let err = parse_model(text).unwrap_err();
        assert_eq!(err, ModelError::NoNonlinearConstraints);
        assert_eq!(err.to_string(), "no nonlinear constraints");
    }

    #[test]
    fn schema_errors_carry_a_path() {
        let text = EXAMPLE1.replace(r#""coef": 1.5"#, r#""coef": "x""#);
        match parse_model(&text).unwrap_err() {
            ModelError::Schema { path, .. } => assert_eq!(path, "nonlinear[1].terms[4].coef"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let text = EXAMPLE1.replace(r#""objective": [0, -1]"#, r#""objective": [0, -1, 3]"#);
        assert!(matches!(
            parse_model(&text).unwrap_err(),
            ModelError::DimensionMismatch { path, .. } if path == "objective"
        ));
    }
}
