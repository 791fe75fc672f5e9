//! Conversions between payload JSON and library types.

use monodromy::algebra::{CMatrix, MatrixSeries};
use monodromy::bundles::{Representation, WeightedFlag, WeightedFlatBundle};
use monodromy::localforms::LocalLogConnection;
use monodromy::synth::FuchsianSystem;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use crate::error::{CliError, CliResult};

/// Non-finite values have no JSON form and become `null`.
pub fn real(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

pub fn complex(z: Complex64) -> Value {
    Value::Array(vec![real(z.re), real(z.im)])
}

pub fn matrix(m: &CMatrix) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|k| complex(m[(i, k)])).collect()))
            .collect(),
    )
}

pub fn matrices(ms: &[CMatrix]) -> Value {
    Value::Array(ms.iter().map(matrix).collect())
}

pub fn series(s: &MatrixSeries) -> Value {
    json!({ "order": s.order(), "coeffs": matrices(s.coeffs()) })
}

pub fn integers(xs: &[i64]) -> Value {
    Value::Array(xs.iter().map(|&x| Value::from(x)).collect())
}

pub fn object(fields: Vec<(&str, Value)>) -> Value {
    Value::Object(fields.into_iter().map(|(k, v)| (k.to_string(), v)).collect::<Map<_, _>>())
}

fn field<'a>(obj: &'a Value, name: &str) -> CliResult<&'a Value> {
    obj.get(name).ok_or_else(|| CliError::schema(format!("missing field {name:?}")))
}

fn only_fields(obj: &Value, allowed: &[&str], what: &str) -> CliResult<()> {
    let Value::Object(m) = obj else {
        return Err(CliError::schema(format!("{what} must be an object")));
    };
    match m.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(CliError::schema(format!("unexpected field {k:?} in {what}"))),
        None => Ok(()),
    }
}

fn array<'a>(v: &'a Value, what: &str) -> CliResult<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| CliError::schema(format!("{what} must be an array")))
}

pub fn read_real(v: &Value, what: &str) -> CliResult<f64> {
    v.as_f64().ok_or_else(|| CliError::schema(format!("{what} must be a number")))
}

pub fn read_integer(v: &Value, what: &str) -> CliResult<i64> {
    v.as_i64().ok_or_else(|| CliError::schema(format!("{what} must be an integer")))
}

/// `[re, im]`, or a bare number for a real value.
pub fn read_complex(v: &Value, what: &str) -> CliResult<Complex64> {
    if let Some(x) = v.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Complex64::new(read_real(re, what)?, read_real(im, what)?)),
        _ => Err(CliError::schema(format!("{what} must be [re, im] or a number"))),
    }
}

pub fn read_matrix(v: &Value, what: &str) -> CliResult<CMatrix> {
    let rows = array(v, what)?;
    let ncols = rows.first().map_or(0, |r| r.as_array().map_or(0, Vec::len));
    if rows.is_empty() || ncols == 0 {
        return Err(CliError::schema(format!("{what} must be a non-empty array of rows")));
    }
    let mut m = CMatrix::zeros(rows.len(), ncols);
    for (i, row) in rows.iter().enumerate() {
        let row = array(row, what)?;
        if row.len() != ncols {
            return Err(CliError::schema(format!("{what}: row {i} has {} entries, expected {ncols}", row.len())));
        }
        for (k, x) in row.iter().enumerate() {
            m[(i, k)] = read_complex(x, what)?;
        }
    }
    Ok(m)
}

pub fn read_matrices(v: &Value, what: &str) -> CliResult<Vec<CMatrix>> {
    array(v, what)?
        .iter()
        .enumerate()
        .map(|(j, m)| read_matrix(m, &format!("{what}[{j}]")))
        .collect()
}

fn read_points(v: &Value, what: &str) -> CliResult<Vec<Complex64>> {
    array(v, what)?.iter().map(|z| read_complex(z, what)).collect()
}

pub fn read_integers(v: &Value, what: &str) -> CliResult<Vec<i64>> {
    array(v, what)?.iter().map(|x| read_integer(x, what)).collect()
}

pub fn read_series(v: &Value) -> CliResult<MatrixSeries> {
    only_fields(v, &["order", "coeffs"], "series")?;
    let order = read_integer(field(v, "order")?, "order")?;
    let coeffs = read_matrices(field(v, "coeffs")?, "coeffs")?;
    if order < 0 || coeffs.len() as i64 != order + 1 {
        return Err(CliError::schema(format!(
            "series of order {order} needs {} coefficients, got {}",
            order + 1,
            coeffs.len()
        )));
    }
    Ok(MatrixSeries::new(coeffs)?)
}

pub fn representation(rep: &Representation) -> Value {
    let mut fields = vec![
        ("punctures", Value::Array(rep.punctures().iter().map(|&z| complex(z)).collect())),
        ("matrices", matrices(rep.matrices())),
    ];
    if let Some(s) = rep.basepoint() {
        fields.push(("basepoint", complex(s)));
    }
    object(fields)
}

/// Punctures default to the roots of unity when omitted.
pub fn read_representation(v: &Value) -> CliResult<Representation> {
    only_fields(v, &["punctures", "matrices", "basepoint"], "representation")?;
    let ms = read_matrices(field(v, "matrices")?, "matrices")?;
    let rep = match v.get("punctures") {
        Some(p) => Representation::new(read_points(p, "punctures")?, ms)?,
        None => Representation::with_default_punctures(ms)?,
    };
    Ok(match v.get("basepoint") {
        Some(s) => rep.with_basepoint(read_complex(s, "basepoint")?),
        None => rep,
    })
}

pub fn local_connection(conn: &LocalLogConnection) -> Value {
    series(conn.matrix())
}

pub fn read_local_connection(v: &Value) -> CliResult<LocalLogConnection> {
    Ok(LocalLogConnection::new(read_series(v)?)?)
}

pub fn flag(f: &WeightedFlag) -> Value {
    json!({ "spaces": matrices(f.spaces()), "weights": integers(f.weights()) })
}

pub fn weighted_bundle(wfb: &WeightedFlatBundle) -> Value {
    json!({
        "representation": representation(wfb.rep()),
        "flags": Value::Array(wfb.flags().iter().map(flag).collect()),
    })
}

/// Each flag is `{spaces, weights}` with nested spaces, or a bare integer
/// for the trivial flag of that weight.
pub fn read_weighted_bundle(v: &Value) -> CliResult<WeightedFlatBundle> {
    only_fields(v, &["representation", "flags"], "weighted bundle")?;
    let rep = read_representation(field(v, "representation")?)?;
    let r = rep.rank();
    let flags = array(field(v, "flags")?, "flags")?
        .iter()
        .map(|f| {
            if let Some(w) = f.as_i64() {
                return Ok(WeightedFlag::trivial(r, w));
            }
            only_fields(f, &["spaces", "weights"], "flag")?;
            let spaces = read_matrices(field(f, "spaces")?, "spaces")?;
            let weights = read_integers(field(f, "weights")?, "weights")?;
            Ok(WeightedFlag::new(spaces, weights)?)
        })
        .collect::<CliResult<Vec<_>>>()?;
    Ok(WeightedFlatBundle::new(rep, flags)?)
}

pub fn fuchsian_system(sys: &FuchsianSystem) -> Value {
    json!({
        "punctures": Value::Array(sys.punctures().iter().map(|&z| complex(z)).collect()),
        "residues": matrices(sys.residues()),
    })
}

pub fn read_fuchsian_system(v: &Value) -> CliResult<FuchsianSystem> {
    only_fields(v, &["punctures", "residues"], "Fuchsian system")?;
    let punctures = read_points(field(v, "punctures")?, "punctures")?;
    let residues = read_matrices(field(v, "residues")?, "residues")?;
    Ok(FuchsianSystem::new(punctures, residues)?)
}

pub fn rational(q: num_rational::Rational64) -> Value {
    json!([q.numer(), q.denom()])
}
