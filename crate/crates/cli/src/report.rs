//! Trace, node table and summary writers.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use surdual::tree::DemoNode;
use surdual::{AggregationMatrix, BendersReport};

/// `v` with 12 significant digits, `%g` style: fixed notation for moderate
/// exponents, scientific otherwise, trailing zeros removed.
pub fn fmt12(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("scientific format");
    let exp: i32 = exp.parse().expect("exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim(format!("{v:.decimals$}"))
    } else {
        format!("{}e{exp}", trim(mantissa.to_string()))
    }
}

fn trim(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    if t == "-0" {
        "0".into()
    } else {
        t.to_string()
    }
}

/// `iteration, psi, lambda_<k>_<i>..., sub_status, sub_bound, D` with
/// 1-based multiplier indices.
pub fn write_trace(path: &Path, report: &BendersReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    let (kk, m) = report.records.first().map_or((0, 0), |r| (r.lambda.k(), r.lambda.m()));
    let mut header = vec!["iteration".to_string(), "psi".to_string()];
    for k in 1..=kk {
        for i in 1..=m {
            header.push(format!("lambda_{k}_{i}"));
        }
    }
    header.extend(["sub_status", "sub_bound", "D"].map(String::from));
    w.write_record(&header)?;
    for rec in &report.records {
        let mut row = vec![rec.iteration.to_string(), fmt12(rec.psi)];
        row.extend(rec.lambda.flat().into_iter().map(fmt12));
        row.push(rec.sub_status.as_str().to_string());
        row.push(fmt12(rec.sub_bound));
        row.push(fmt12(rec.best_bound));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// `id, parent, depth, candidates, bound, milp_bound, pruned`; the root has
/// an empty parent.
pub fn write_nodes(path: &Path, nodes: &[DemoNode<f64>]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("cannot write {}", path.display()))?;
    w.write_record(["id", "parent", "depth", "candidates", "bound", "milp_bound", "pruned"])?;
    for n in nodes {
        w.write_record([
            n.id.to_string(),
            n.parent.map_or(String::new(), |p| p.to_string()),
            n.depth.to_string(),
            n.candidates.to_string(),
            fmt12(n.bound),
            fmt12(n.milp_bound),
            n.pruned.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("cannot write {}", path.display()))
}

/// JSON-friendly float: non-finite values become strings.
#[derive(Debug, Clone, Copy, Serialize)]
#[serde(untagged)]
pub enum Num {
    Finite(f64),
    Text(&'static str),
}

impl From<f64> for Num {
    fn from(v: f64) -> Self {
        if v.is_finite() {
            Num::Finite(v)
        } else if v.is_nan() {
            Num::Text("nan")
        } else if v > 0.0 {
            Num::Text("inf")
        } else {
            Num::Text("-inf")
        }
    }
}

pub fn lambda_rows(l: &AggregationMatrix) -> Vec<Vec<f64>> {
    l.rows().to_vec()
}
