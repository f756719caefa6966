//! JSON parameter records and headerless CSV point files.
//!
//! Point files hold one point per row at 17 significant digits. The point at
//! infinity is a row of `inf` tokens.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use conformal_cauchy::densities::{FamilyParam, KentTypeCauchy, Transform};
use conformal_cauchy::geometry::{ComplexParam, ExtendedComplexParam, ExtendedPoint, Rotation};
use conformal_cauchy::moebius::{Exponent, MoebiusChain, MoebiusMap, SphereMoebius};
use conformal_cauchy::{Matrix, Vector};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Core(#[from] conformal_cauchy::Error),
}

pub type FormatResult<T> = Result<T, FormatError>;

fn invalid<T>(msg: impl Into<String>) -> FormatResult<T> {
    Err(FormatError::Invalid(msg.into()))
}

// ---------------------------------------------------------------- matrices

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> FormatResult<Matrix> {
    let n = rows.len();
    if n == 0 || rows.iter().any(|r| r.len() != n) {
        return invalid(format!("{what} must be a non-empty square array of rows"));
    }
    Ok(Matrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn matrix_rows(m: &Matrix) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

fn vector(xs: &[f64]) -> Vector {
    Vector::from_column_slice(xs)
}

fn coords(v: &Vector) -> Vec<f64> {
    v.iter().copied().collect()
}

// ---------------------------------------------------------------- maps

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MapRecord {
    #[serde(rename = "A")]
    orth: Vec<Vec<f64>>,
    gamma: f64,
    a: Vec<f64>,
    b: Vec<f64>,
    epsilon: u8,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SphereMapRecord {
    #[serde(rename = "R")]
    rotation: Vec<Vec<f64>>,
    phi: Vec<f64>,
}

impl MapRecord {
    fn build(self) -> FormatResult<MoebiusMap> {
        let orth = matrix_from_rows(&self.orth, "A")?;
        Ok(MoebiusMap::new(orth, self.gamma, vector(&self.a), vector(&self.b), Exponent::from_value(self.epsilon)?)?)
    }

    fn from_map(m: &MoebiusMap) -> Self {
        Self {
            orth: matrix_rows(m.orth()),
            gamma: m.gamma(),
            a: coords(m.a()),
            b: coords(m.b()),
            epsilon: m.epsilon().value(),
        }
    }
}

/// Reads a transform: `"stereographic"`, `"inverse-stereographic"`, an
/// object with keys `A, gamma, a, b, epsilon` (a Euclidean map), an object
/// with keys `R, phi` (a sphere map), or an array of Euclidean maps listed
/// outermost first, so that the last one acts first.
pub fn parse_transform(text: &str) -> FormatResult<Transform> {
    let value: Value = serde_json::from_str(text)?;
    match value {
        Value::String(s) => match s.as_str() {
            "stereographic" => Ok(Transform::Stereographic),
            "inverse-stereographic" => Ok(Transform::InverseStereographic),
            other => invalid(format!("unknown transform '{other}'")),
        },
        Value::Array(items) => {
            let maps = items
                .into_iter()
                .map(|v| serde_json::from_value::<MapRecord>(v)?.build())
                .collect::<FormatResult<Vec<_>>>()?;
            Ok(Transform::Euclidean(MoebiusChain::new(maps)?))
        }
        Value::Object(ref obj) if obj.contains_key("R") => {
            let rec: SphereMapRecord = serde_json::from_value(value)?;
            let rotation = Rotation::new(matrix_from_rows(&rec.rotation, "R")?)?;
            Ok(Transform::Sphere(SphereMoebius::new(rotation, vector(&rec.phi))?))
        }
        Value::Object(_) => {
            let rec: MapRecord = serde_json::from_value(value)?;
            Ok(Transform::Euclidean(MoebiusChain::single(rec.build()?)))
        }
        _ => invalid("a transform is a string, an object or an array"),
    }
}

pub fn map_to_json(m: &MoebiusMap) -> Value {
    serde_json::to_value(MapRecord::from_map(m)).expect("map record serializes")
}

pub fn sphere_map_to_json(s: &SphereMoebius) -> Value {
    json!({ "R": matrix_rows(s.rotation().matrix()), "phi": coords(s.phi()) })
}

pub fn transform_to_json(t: &Transform) -> Value {
    match t {
        Transform::Euclidean(c) => Value::Array(c.maps().iter().map(map_to_json).collect()),
        Transform::Sphere(s) => sphere_map_to_json(s),
        Transform::Stereographic => json!("stereographic"),
        Transform::InverseStereographic => json!("inverse-stereographic"),
    }
}

// ---------------------------------------------------------------- parameters

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamRecord {
    mu: Option<Vec<f64>>,
    sigma: Option<f64>,
    phi: Option<Vec<f64>>,
    infinity: Option<bool>,
    dim: Option<usize>,
    family: Option<String>,
}

/// Reads `{"mu": [...], "sigma": s}` (Euclidean), `{"phi": [...]}` (sphere),
/// or `{"family": "euclid"|"sphere", "infinity": true, "dim": n}`.
pub fn parse_family_param(text: &str) -> FormatResult<FamilyParam> {
    let rec: ParamRecord = serde_json::from_str(text)?;
    if rec.infinity == Some(true) {
        let dim = rec.dim.ok_or_else(|| FormatError::Invalid("the point at infinity needs \"dim\"".into()))?;
        return match rec.family.as_deref() {
            Some("euclid") => Ok(FamilyParam::Euclidean(ExtendedComplexParam::infinity(dim))),
            Some("sphere") => Ok(FamilyParam::Sphere(ExtendedPoint::infinity(dim))),
            _ => invalid("the point at infinity needs \"family\": \"euclid\" or \"sphere\""),
        };
    }
    match (rec.mu, rec.sigma, rec.phi) {
        (Some(mu), Some(sigma), None) => Ok(FamilyParam::Euclidean(ExtendedComplexParam::new(vector(&mu), sigma)?)),
        (None, None, Some(phi)) => Ok(FamilyParam::Sphere(ExtendedPoint::finite(vector(&phi))?)),
        _ => invalid("expected either \"mu\" and \"sigma\", or \"phi\""),
    }
}

pub fn family_param_to_json(p: &FamilyParam) -> Value {
    match p {
        FamilyParam::Euclidean(ExtendedComplexParam::Finite(t)) => json!({ "mu": coords(t.mu()), "sigma": t.sigma() }),
        FamilyParam::Euclidean(t) => json!({ "family": "euclid", "infinity": true, "dim": t.dim() }),
        FamilyParam::Sphere(ExtendedPoint::Finite(v)) => json!({ "phi": coords(v) }),
        FamilyParam::Sphere(p) => json!({ "family": "sphere", "infinity": true, "dim": p.dim() }),
    }
}

/// A distribution named on the command line together with its parameters.
#[derive(Debug, Clone)]
pub enum Family {
    EuclidCauchy(ComplexParam),
    SphereCauchy(Vector),
    Kent(KentTypeCauchy),
    Marginal { varphi: f64, nu: usize },
    UniformSphere { d: usize },
}

pub const FAMILY_NAMES: [&str; 5] = ["euclid-cauchy", "sphere-cauchy", "kent", "marginal", "uniform-sphere"];

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct EuclidRecord {
    mu: Vec<f64>,
    sigma: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SphereRecord {
    phi: Vec<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct KentRecord {
    mu: Vec<f64>,
    #[serde(rename = "L")]
    l: Vec<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct MarginalRecord {
    varphi: f64,
    nu: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct UniformRecord {
    d: usize,
}

/// Parameters per family: `euclid-cauchy` `{"mu", "sigma"}`,
/// `sphere-cauchy` `{"phi"}`, `kent` `{"mu", "L"}` with `L` as rows,
/// `marginal` `{"varphi", "nu"}`, `uniform-sphere` `{"d"}`.
pub fn parse_family(name: &str, params: &str) -> FormatResult<Family> {
    Ok(match name {
        "euclid-cauchy" => {
            let r: EuclidRecord = serde_json::from_str(params)?;
            Family::EuclidCauchy(ComplexParam::new(vector(&r.mu), r.sigma)?)
        }
        "sphere-cauchy" => {
            let r: SphereRecord = serde_json::from_str(params)?;
            if r.phi.len() < 2 {
                return invalid("phi needs at least two coordinates");
            }
            Family::SphereCauchy(vector(&r.phi))
        }
        "kent" => {
            let r: KentRecord = serde_json::from_str(params)?;
            let l = matrix_from_rows(&r.l, "L")?;
            Family::Kent(KentTypeCauchy::new(vector(&r.mu), l)?)
        }
        "marginal" => {
            let r: MarginalRecord = serde_json::from_str(params)?;
            if r.nu == 0 {
                return invalid("nu must be a positive integer");
            }
            Family::Marginal { varphi: r.varphi, nu: r.nu }
        }
        "uniform-sphere" => {
            let r: UniformRecord = serde_json::from_str(params)?;
            if r.d == 0 {
                return invalid("d must be at least 1");
            }
            Family::UniformSphere { d: r.d }
        }
        other => return invalid(format!("unknown family '{other}', expected one of {}", FAMILY_NAMES.join(", "))),
    })
}

// ---------------------------------------------------------------- CSV

/// Full-precision decimal, `inf`/`-inf` for infinities.
pub fn format_number(x: f64) -> String {
    if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:.16e}")
    }
}

/// Reads a headerless CSV of points. Rows must share one length; a row with
/// an infinite coordinate is the point at infinity.
pub fn read_points<R: Read>(input: R) -> FormatResult<Vec<ExtendedPoint>> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(input);
    let mut out = Vec::new();
    let mut width = None;
    for (i, rec) in reader.records().enumerate() {
        let rec = rec?;
        let row: Vec<f64> = rec
            .iter()
            .map(|tok| tok.parse::<f64>().map_err(|_| FormatError::Invalid(format!("row {}: bad number '{tok}'", i + 1))))
            .collect::<FormatResult<_>>()?;
        if row.is_empty() || row.iter().any(|x| x.is_nan()) {
            return invalid(format!("row {}: empty or NaN entry", i + 1));
        }
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => return invalid(format!("row {} has {} columns, expected {w}", i + 1, row.len())),
            _ => {}
        }
        if row.iter().any(|x| x.is_infinite()) {
            out.push(ExtendedPoint::infinity(row.len()));
        } else {
            out.push(ExtendedPoint::Finite(vector(&row)));
        }
    }
    if out.is_empty() {
        return invalid("no points in input");
    }
    Ok(out)
}

/// As [`read_points`], rejecting the point at infinity.
pub fn read_finite_points<R: Read>(input: R) -> FormatResult<Vec<Vector>> {
    read_points(input)?
        .into_iter()
        .enumerate()
        .map(|(i, p)| p.into_finite().ok_or_else(|| FormatError::Invalid(format!("row {} is the point at infinity", i + 1))))
        .collect()
}

fn write_rows<W: Write>(writer: &mut csv::Writer<W>, rows: impl IntoIterator<Item = Vec<f64>>) -> FormatResult<()> {
    for row in rows {
        writer.write_record(row.iter().map(|x| format_number(*x)))?;
    }
    writer.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_points<W: Write>(output: W, points: &[ExtendedPoint]) -> FormatResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(output);
    write_rows(
        &mut w,
        points.iter().map(|p| match p {
            ExtendedPoint::Finite(v) => coords(v),
            ExtendedPoint::Infinity { dim } => vec![f64::INFINITY; *dim],
        }),
    )
}

pub fn write_rows_plain<W: Write>(output: W, rows: &[Vec<f64>]) -> FormatResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(output);
    write_rows(&mut w, rows.iter().cloned())
}

/// CSV with a header row.
pub fn write_table<W: Write>(output: W, header: &[String], rows: &[Vec<f64>]) -> FormatResult<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(output);
    w.write_record(header)?;
    write_rows(&mut w, rows.iter().cloned())
}
