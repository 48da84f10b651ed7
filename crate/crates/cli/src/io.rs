//! File formats. Numbers are written with 17 significant digits so that
//! every `f64` survives a write/read cycle bit for bit.

use crate::CliError;
use isomono::fuchsian::{FuchsianSystem, Residue, SpherePoint};
use isomono::linalg::Mat2;
use isomono::{cplx, Complex64};
use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;
use std::path::Path;

pub const SCHEMA_VERSION: &str = "1";

pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

/// JSON number with 17 significant digits (`null` if not finite).
pub fn num(x: f64) -> Box<RawValue> {
    let s = if x.is_finite() { fmt_f64(x) } else { "null".to_string() };
    RawValue::from_string(s).expect("formatted number is valid JSON")
}

#[derive(Serialize, Deserialize, Clone, Copy, Debug)]
pub struct ComplexIn {
    pub re: f64,
    pub im: f64,
}

impl From<ComplexIn> for Complex64 {
    fn from(c: ComplexIn) -> Self {
        cplx(c.re, c.im)
    }
}

/// `{"re": .., "im": ..}` kept on one line.
pub type ComplexOut = Box<RawValue>;

pub fn cout(z: Complex64) -> ComplexOut {
    let s = format!("{{\"re\":{},\"im\":{}}}", num(z.re).get(), num(z.im).get());
    RawValue::from_string(s).expect("valid JSON")
}

#[derive(Deserialize, Debug)]
#[serde(untagged)]
pub enum PointIn {
    Named(String),
    Finite(ComplexIn),
}

impl PointIn {
    fn to_point(&self, k: usize) -> Result<SpherePoint<f64>, CliError> {
        match self {
            PointIn::Named(s) if s == "inf" => Ok(SpherePoint::Infinity),
            PointIn::Named(s) => Err(CliError::Input(format!("points[{k}]: expected \"inf\" or {{re, im}}, got \"{s}\""))),
            PointIn::Finite(c) => Ok(SpherePoint::Finite((*c).into())),
        }
    }
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct SystemIn {
    #[allow(dead_code)]
    pub schema_version: Option<String>,
    pub points: Vec<PointIn>,
    pub residues: Vec<[[ComplexIn; 2]; 2]>,
    pub lambda: Option<Vec<ComplexIn>>,
    pub tol_alg: Option<f64>,
}

#[derive(Serialize)]
pub struct SystemOut {
    pub schema_version: &'static str,
    pub points: Vec<Box<RawValue>>,
    pub residues: Vec<[[ComplexOut; 2]; 2]>,
    pub lambda: Vec<ComplexOut>,
    pub tol_alg: Box<RawValue>,
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn parse_json<'a, D: Deserialize<'a>>(text: &'a str, path: &Path) -> Result<D, CliError> {
    serde_json::from_str(text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn points_from(raw: &[PointIn]) -> Result<Vec<SpherePoint<f64>>, CliError> {
    raw.iter().enumerate().map(|(k, p)| p.to_point(k)).collect()
}

pub fn system_from(raw: SystemIn, tol_override: Option<f64>) -> Result<FuchsianSystem<f64>, CliError> {
    let points = points_from(&raw.points)?;
    if raw.residues.len() != points.len() {
        return Err(CliError::Input(format!(
            "residues: {} entries for {} points",
            raw.residues.len(),
            points.len()
        )));
    }
    let mats: Vec<Mat2<f64>> = raw
        .residues
        .iter()
        .map(|m| Mat2::new(m[0][0].into(), m[0][1].into(), m[1][0].into(), m[1][1].into()))
        .collect();
    let residues: Vec<Residue<f64>> = match &raw.lambda {
        Some(l) if l.len() != points.len() => {
            return Err(CliError::Input(format!("lambda: {} entries for {} points", l.len(), points.len())))
        }
        Some(l) => mats.iter().zip(l).map(|(m, x)| Residue::new(*m, (*x).into())).collect(),
        None => mats.iter().map(|m| Residue::from_matrix(*m)).collect(),
    };
    let tol = tol_override.or(raw.tol_alg).unwrap_or(isomono::fuchsian::DEFAULT_TOL_ALG);
    Ok(FuchsianSystem::new(points, residues, tol)?)
}

pub fn read_system(path: &Path, tol_override: Option<f64>) -> Result<FuchsianSystem<f64>, CliError> {
    let text = read_text(path)?;
    system_from(parse_json(&text, path)?, tol_override)
}

pub fn point_out(p: &SpherePoint<f64>) -> Box<RawValue> {
    match p {
        SpherePoint::Infinity => RawValue::from_string("\"inf\"".into()).unwrap(),
        SpherePoint::Finite(z) => cout(*z),
    }
}

pub fn mat_out(m: &Mat2<f64>) -> [[ComplexOut; 2]; 2] {
    [[cout(m[(0, 0)]), cout(m[(0, 1)])], [cout(m[(1, 0)]), cout(m[(1, 1)])]]
}

pub fn system_json(sys: &FuchsianSystem<f64>) -> String {
    let out = SystemOut {
        schema_version: SCHEMA_VERSION,
        points: sys.points().iter().map(point_out).collect(),
        residues: sys.residues().iter().map(|r| mat_out(&r.m)).collect(),
        lambda: sys.lambdas().into_iter().map(cout).collect(),
        tol_alg: num(sys.tol_alg()),
    };
    to_json(&out)
}

pub fn to_json<S: Serialize>(v: &S) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

#[derive(Deserialize, Debug)]
pub struct MovingIn {
    pub index: usize,
    pub vertices: Vec<ComplexIn>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct FlowPathIn {
    #[allow(dead_code)]
    pub schema_version: Option<String>,
    pub moving: Vec<MovingIn>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
pub struct PolylineIn {
    #[allow(dead_code)]
    pub schema_version: Option<String>,
    pub vertices: Vec<ComplexIn>,
}

/// `re,im` (or a bare real) from the command line.
pub fn parse_complex(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let f = |t: &str| t.parse::<f64>().map_err(|e| format!("{t:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(cplx(f(re)?, 0.0)),
        [re, im] => Ok(cplx(f(re)?, f(im)?)),
        _ => Err(format!("expected re,im, got {s:?}")),
    }
}

/// CSV with a header row; every number in 17-digit form.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[String]) -> Self {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(header).expect("in-memory write");
        Table { writer }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.writer.write_record(cells).expect("in-memory write");
    }

    pub fn finish(self) -> String {
        String::from_utf8(self.writer.into_inner().expect("in-memory flush")).expect("utf-8")
    }
}

pub fn cells(z: Complex64) -> [String; 2] {
    [fmt_f64(z.re), fmt_f64(z.im)]
}
