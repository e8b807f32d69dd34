//! JSON encodings for the core objects. Matrices are written row-major as
//! arrays of `[re, im]` pairs, so reports are human-readable and byte-stable
//! across runs (serde_json orders object keys).

use num_complex::Complex64;
use serde_json::{json, Value};

use crate::channels::QuantumMap;
use crate::error::{QptError, Result};
use crate::linalg::{max_abs_diff, zeros, CMatrix};
use crate::states::{CorrelationMatrix, DensityMatrix};

pub fn matrix_to_json(m: &CMatrix) -> Value {
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            Value::Array(
                (0..m.ncols())
                    .map(|j| json!([m[(i, j)].re, m[(i, j)].im]))
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

pub fn matrix_from_json(v: &Value) -> Result<CMatrix> {
    let rows = v
        .as_array()
        .ok_or_else(|| QptError::Malformed("matrix: expected an array of rows".into()))?;
    let nrows = rows.len();
    let ncols = rows
        .first()
        .and_then(|r| r.as_array())
        .map(|r| r.len())
        .ok_or_else(|| QptError::Malformed("matrix: empty or malformed first row".into()))?;
    let mut m = zeros(nrows, ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = row
            .as_array()
            .ok_or_else(|| QptError::Malformed(format!("matrix: row {i} is not an array")))?;
        if row.len() != ncols {
            return Err(QptError::Malformed(format!(
                "matrix: row {i} has {} entries, expected {ncols}",
                row.len()
            )));
        }
        for (j, entry) in row.iter().enumerate() {
            let pair = entry
                .as_array()
                .filter(|p| p.len() == 2)
                .ok_or_else(|| {
                    QptError::Malformed(format!("matrix: entry ({i},{j}) is not a [re, im] pair"))
                })?;
            let re = pair[0]
                .as_f64()
                .ok_or_else(|| QptError::Malformed(format!("matrix: entry ({i},{j}) re")))?;
            let im = pair[1]
                .as_f64()
                .ok_or_else(|| QptError::Malformed(format!("matrix: entry ({i},{j}) im")))?;
            m[(i, j)] = Complex64::new(re, im);
        }
    }
    Ok(m)
}

pub fn density_to_json(rho: &DensityMatrix) -> Value {
    json!({
        "dim": rho.dim(),
        "matrix": matrix_to_json(rho.matrix()),
    })
}

pub fn density_from_json(v: &Value) -> Result<DensityMatrix> {
    let m = matrix_from_json(
        v.get("matrix")
            .ok_or_else(|| QptError::Malformed("density: missing \"matrix\"".into()))?,
    )?;
    if let Some(dim) = v.get("dim").and_then(Value::as_u64) {
        if dim as usize != m.nrows() {
            return Err(QptError::Malformed(format!(
                "density: declared dim {dim} vs matrix size {}",
                m.nrows()
            )));
        }
    }
    DensityMatrix::new(m)
}

pub fn correlation_to_json(gamma: &CorrelationMatrix) -> Value {
    let m = gamma.matrix();
    let rows: Vec<Value> = (0..m.nrows())
        .map(|i| {
            Value::Array(
                (0..m.ncols())
                    .map(|j| json!([m[(i, j)], 0.0]))
                    .collect(),
            )
        })
        .collect();
    Value::Array(rows)
}

pub fn map_to_json(m: &QuantumMap) -> Value {
    json!({
        "dimIn": m.dim_in(),
        "dimOut": m.dim_out(),
        "superop": matrix_to_json(m.superop()),
    })
}

/// Loads a map from its superoperator; the stored Choi form is recomputed
/// and thereby always consistent.
pub fn map_from_json(v: &Value) -> Result<QuantumMap> {
    let dim_in = v
        .get("dimIn")
        .and_then(Value::as_u64)
        .ok_or_else(|| QptError::Malformed("map: missing \"dimIn\"".into()))? as usize;
    let dim_out = v
        .get("dimOut")
        .and_then(Value::as_u64)
        .ok_or_else(|| QptError::Malformed("map: missing \"dimOut\"".into()))? as usize;
    let superop = matrix_from_json(
        v.get("superop")
            .ok_or_else(|| QptError::Malformed("map: missing \"superop\"".into()))?,
    )?;
    let map = QuantumMap::from_superop(superop, dim_in, dim_out)?;
    if let Some(choi) = v.get("choi") {
        let declared = matrix_from_json(choi)?;
        if max_abs_diff(&declared, map.choi()) > 1e-9 {
            return Err(QptError::Malformed(
                "map: stored Choi matrix is inconsistent with the superoperator".into(),
            ));
        }
    }
    Ok(map)
}
