//! Language-neutral serialization: complex numbers as `[re, im]`, matrices
//! as row-major nested arrays, floats with 17 significant digits.

use std::fmt::Write as _;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};
use crate::herglotz::{MatrixMeasure, XiGrid};
use crate::linalg::{CMat, C64};

/// Fixed 17-significant-digit rendering; non-finite values become `null`
/// in JSON and `nan`/`inf` in CSV.
pub fn fmt_f64(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else if x.is_nan() {
        "nan".into()
    } else if x > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

pub fn complex_to_json(z: C64) -> Value {
    json!([z.re, z.im])
}

pub fn complex_from_json(v: &Value) -> Result<C64> {
    match v.as_array().map(|a| a.as_slice()) {
        Some([re, im]) => match (re.as_f64(), im.as_f64()) {
            (Some(re), Some(im)) => Ok(C64::new(re, im)),
            _ => Err(bad("complex entries must be numbers")),
        },
        _ => match v.as_f64() {
            Some(re) => Ok(C64::new(re, 0.0)),
            None => Err(bad("complex number must be [re, im] or a real number")),
        },
    }
}

fn bad(msg: &str) -> Error {
    Error::InvalidSequence(msg.into())
}

pub fn matrix_to_json(a: &CMat) -> Value {
    Value::Array(
        (0..a.nrows()).map(|i| Value::Array((0..a.ncols()).map(|j| complex_to_json(a[(i, j)])).collect())).collect(),
    )
}

/// Accepts a square row-major array of complex (or real) entries.
pub fn matrix_from_json(v: &Value) -> Result<CMat> {
    let rows = v.as_array().ok_or_else(|| bad("matrix must be an array of rows"))?;
    let n = rows.len();
    if n == 0 {
        return Err(bad("empty matrix"));
    }
    let mut out = CMat::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        let row = row.as_array().ok_or_else(|| bad("matrix row must be an array"))?;
        if row.len() != n {
            return Err(Error::DimensionMismatch { expected: n, found: row.len() });
        }
        for (j, x) in row.iter().enumerate() {
            out[(i, j)] = complex_from_json(x)?;
        }
    }
    Ok(out)
}

pub fn measure_to_json(mu: &MatrixMeasure) -> Value {
    json!({
        "nodes": mu.nodes,
        "weights": mu.weights.iter().map(matrix_to_json).collect::<Vec<_>>(),
        "normalized": mu.normalized,
    })
}

pub fn measure_from_json(v: &Value) -> Result<MatrixMeasure> {
    let nodes = v["nodes"]
        .as_array()
        .ok_or_else(|| bad("measure needs a node list"))?
        .iter()
        .map(|x| x.as_f64().ok_or_else(|| bad("nodes must be numbers")))
        .collect::<Result<Vec<_>>>()?;
    let weights = v["weights"]
        .as_array()
        .ok_or_else(|| bad("measure needs a weight list"))?
        .iter()
        .map(matrix_from_json)
        .collect::<Result<Vec<_>>>()?;
    if nodes.len() != weights.len() {
        return Err(Error::DimensionMismatch { expected: nodes.len(), found: weights.len() });
    }
    let normalized = v["normalized"].as_bool().unwrap_or(false);
    Ok(MatrixMeasure::discrete(nodes, weights, normalized))
}

/// Canonical text of a JSON value: sorted keys, two-space indentation,
/// floats in [`fmt_f64`] form. Identical values give identical bytes.
pub fn to_canonical_json(v: &Value) -> String {
    let mut s = String::new();
    write_value(&mut s, v, 0);
    s.push('\n');
    s
}

fn write_value(s: &mut String, v: &Value, indent: usize) {
    match v {
        Value::Null => s.push_str("null"),
        Value::Bool(b) => s.push_str(if *b { "true" } else { "false" }),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                let _ = write!(s, "{i}");
            } else if let Some(u) = n.as_u64() {
                let _ = write!(s, "{u}");
            } else {
                let x = n.as_f64().unwrap_or(f64::NAN);
                if x.is_finite() {
                    s.push_str(&fmt_f64(x));
                } else {
                    s.push_str("null");
                }
            }
        }
        Value::String(t) => s.push_str(&Value::String(t.clone()).to_string()),
        Value::Array(a) => {
            if a.iter().all(|x| !x.is_array() && !x.is_object()) {
                s.push('[');
                for (i, x) in a.iter().enumerate() {
                    if i > 0 {
                        s.push_str(", ");
                    }
                    write_value(s, x, indent);
                }
                s.push(']');
            } else {
                s.push_str("[\n");
                for (i, x) in a.iter().enumerate() {
                    pad(s, indent + 1);
                    write_value(s, x, indent + 1);
                    if i + 1 < a.len() {
                        s.push(',');
                    }
                    s.push('\n');
                }
                pad(s, indent);
                s.push(']');
            }
        }
        Value::Object(o) => write_object(s, o, indent),
    }
}

fn write_object(s: &mut String, o: &Map<String, Value>, indent: usize) {
    if o.is_empty() {
        s.push_str("{}");
        return;
    }
    let mut keys: Vec<&String> = o.keys().collect();
    keys.sort();
    s.push_str("{\n");
    for (i, k) in keys.iter().enumerate() {
        pad(s, indent + 1);
        s.push_str(&Value::String((*k).clone()).to_string());
        s.push_str(": ");
        write_value(s, &o[*k], indent + 1);
        if i + 1 < keys.len() {
            s.push(',');
        }
        s.push('\n');
    }
    pad(s, indent);
    s.push('}');
}

fn pad(s: &mut String, indent: usize) {
    for _ in 0..indent {
        s.push_str("  ");
    }
}

/// CSV of a ξ-grid: `lambda`, then the `m²` entries row-major as re/im pairs.
pub fn xi_grid_csv(grid: &XiGrid) -> String {
    let m = grid.values.first().map(|x| x.nrows()).unwrap_or(0);
    let mut s = String::from("lambda");
    for i in 0..m {
        for j in 0..m {
            let _ = write!(s, ",re_{i}{j},im_{i}{j}");
        }
    }
    s.push('\n');
    for (l, x) in grid.lambdas.iter().zip(&grid.values) {
        s.push_str(&fmt_f64(*l));
        for i in 0..m {
            for j in 0..m {
                let _ = write!(s, ",{},{}", fmt_f64(x[(i, j)].re), fmt_f64(x[(i, j)].im));
            }
        }
        s.push('\n');
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c, from_real_rows};

    #[test]
    fn matrix_round_trip() {
        let mut a = from_real_rows(2, &[1.0, 2.0, 3.0, 4.0]);
        a[(0, 1)] = c(2.0, -0.25);
        let back = matrix_from_json(&matrix_to_json(&a)).unwrap();
        assert_eq!(a, back);
    }

    #[test]
    fn canonical_text_is_stable() {
        let v = json!({"b": [0.1, 2], "a": {"y": 1e-300, "x": "t"}});
        let s = to_canonical_json(&v);
        assert_eq!(s, to_canonical_json(&serde_json::from_str::<Value>(&s).unwrap()));
        assert!(s.find("\"a\"").unwrap() < s.find("\"b\"").unwrap());
        assert!(s.contains("1.0000000000000001e-1"));
    }
}
