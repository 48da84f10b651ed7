use crate::io::{
    self, cells, cout, fmt_f64, mat_out, parse_complex, parse_json, read_system, read_text, ComplexIn, ComplexOut,
    FlowPathIn, PointIn, PolylineIn, Table, SCHEMA_VERSION,
};
use crate::{CliError, Settings};
use isomono::fuchsian::{FuchsianSystem, Sign, SpherePoint};
use isomono::hecke::{monodromy_effect, paired_modify, PairedMove};
use isomono::linalg::Mat2;
use isomono::pvi::{normalize_moebius, pvi_flow, pvi_residual, s4_orbit, BoundaryFlag, PviParams};
use isomono::random::{seeded_system, RandomSpec};
use isomono::schlesinger::{conserved_report, flow, DeformationPath};
use isomono::sov::{reconstruct, separated_variables, spectral_curve, BoundaryOptions, SeparatedData};
use isomono::transport::monodromy_rep;
use isomono::{cplx, Complex64};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Text to write plus the process exit code.
pub struct Output {
    pub text: String,
    pub exit: i32,
}

impl Output {
    fn ok(text: String) -> Self {
        Output { text, exit: 0 }
    }
}

fn need<'a>(p: &'a Option<std::path::PathBuf>, flag: &str) -> Result<&'a Path, CliError> {
    p.as_deref().ok_or_else(|| CliError::Input(format!("missing required flag {flag}")))
}

fn load(s: &Settings) -> Result<FuchsianSystem<f64>, CliError> {
    read_system(need(&s.input, "--input")?, s.tol_alg)
}

/// A base point above every finite pole.
fn default_base(sys: &FuchsianSystem<f64>) -> Complex64 {
    cplx(0.05, sys.position_scale() + 1.3)
}

#[derive(Serialize)]
struct ViolationOut {
    category: &'static str,
    message: String,
}

#[derive(Serialize)]
struct ValidationReport {
    schema_version: &'static str,
    valid: bool,
    n: usize,
    violations: Vec<ViolationOut>,
}

pub fn validate(s: &Settings) -> Result<Output, CliError> {
    let sys = load(s)?;
    let violations: Vec<ViolationOut> = sys
        .validate()
        .iter()
        .map(|v| ViolationOut { category: v.category(), message: v.to_string() })
        .collect();
    let valid = violations.is_empty();
    let report = ValidationReport { schema_version: SCHEMA_VERSION, valid, n: sys.n(), violations };
    Ok(Output { text: io::to_json(&report), exit: if valid { 0 } else { 2 } })
}

pub fn monodromy(s: &Settings) -> Result<Output, CliError> {
    let sys = load(s)?;
    let base = s.base.unwrap_or_else(|| default_base(&sys));
    let rep = monodromy_rep(&sys, base, s.tol_ode)?;
    if rep.est_error > s.tol_mon {
        eprintln!("warning: monodromy self-consistency error {:e} exceeds --tol-mon {:e}", rep.est_error, s.tol_mon);
    }
    let mut head = vec!["index".to_string()];
    for e in ["m00", "m01", "m10", "m11", "trace"] {
        head.push(format!("{e}_re"));
        head.push(format!("{e}_im"));
    }
    head.push("det_minus_one".into());
    head.push("est_error".into());
    let mut t = Table::new(&head);
    for (i, m) in rep.matrices.iter().enumerate() {
        let mut row = vec![i.to_string()];
        for z in m.entries().into_iter().chain([m.trace()]) {
            row.extend(cells(z));
        }
        row.push(fmt_f64((m.det() - cplx(1.0, 0.0)).norm()));
        row.push(fmt_f64(rep.est_error));
        t.row(&row);
    }
    Ok(Output::ok(t.finish()))
}

pub fn flow_cmd(s: &Settings) -> Result<Output, CliError> {
    let sys = load(s)?;
    let path_file = need(&s.path, "--path")?;
    let text = read_text(path_file)?;
    let raw: FlowPathIn = parse_json(&text, path_file)?;
    let moving = raw
        .moving
        .into_iter()
        .map(|m| (m.index, m.vertices.into_iter().map(Complex64::from).collect()))
        .collect();
    let dpath = DeformationPath::new(&sys, moving)?;
    let traj = flow(&sys, &dpath, s.tol_ode)?;
    let report = conserved_report(&traj);

    let fin = sys.finite_points();
    let mut head = vec!["time".to_string()];
    for (i, _) in &fin {
        head.push(format!("a{i}_re"));
        head.push(format!("a{i}_im"));
    }
    for i in 0..sys.n() {
        for e in ["00", "01", "10", "11"] {
            head.push(format!("b{i}_{e}_re"));
            head.push(format!("b{i}_{e}_im"));
        }
    }
    head.push("eigen_drift".into());
    let mut t = Table::new(&head);
    for ((time, snap), row) in traj.samples.iter().zip(&report) {
        let mut r = vec![fmt_f64(*time)];
        for (i, _) in &fin {
            r.extend(cells(snap.points()[*i].finite().expect("finite point stays finite")));
        }
        for res in snap.residues() {
            for z in res.m.entries() {
                r.extend(cells(z));
            }
        }
        r.push(fmt_f64(row.eigen_drift));
        t.row(&r);
    }
    Ok(Output::ok(t.finish()))
}

#[derive(Serialize)]
struct PairOut {
    x: ComplexOut,
    p: ComplexOut,
}

#[derive(Serialize)]
struct SovOut {
    schema_version: &'static str,
    gauge: [[ComplexOut; 2]; 2],
    pairs: Vec<PairOut>,
    scale: ComplexOut,
}

#[derive(Deserialize)]
struct PairIn {
    x: ComplexIn,
    p: ComplexIn,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SovIn {
    #[allow(dead_code)]
    schema_version: Option<String>,
    gauge: [[ComplexIn; 2]; 2],
    pairs: Vec<PairIn>,
    scale: ComplexIn,
}

/// Pole positions and lambdas; any system file also qualifies.
#[derive(Deserialize)]
struct PolesIn {
    points: Vec<PointIn>,
    lambda: Vec<ComplexIn>,
    tol_alg: Option<f64>,
}

pub fn sov(s: &Settings) -> Result<Output, CliError> {
    let sys = load(s)?;
    let sep = separated_variables(&sys)?;
    let out = SovOut {
        schema_version: SCHEMA_VERSION,
        gauge: mat_out(&sep.gauge),
        pairs: sep.pairs.iter().map(|(x, p)| PairOut { x: cout(*x), p: cout(*p) }).collect(),
        scale: cout(sep.scale),
    };
    Ok(Output::ok(io::to_json(&out)))
}

pub fn spectral(s: &Settings) -> Result<Output, CliError> {
    let sys = load(s)?;
    let sc = spectral_curve(&sys);
    let mut t = Table::new(&["kind".into(), "index".into(), "re".into(), "im".into()]);
    let mut put = |kind: &str, k: usize, z: Complex64| {
        let [re, im] = cells(z);
        t.row(&[kind.to_string(), k.to_string(), re, im]);
    };
    for (k, c) in sc.numerator.coeffs.iter().enumerate() {
        put("numerator", k, *c);
    }
    for (k, c) in sc.double_pole.iter().enumerate() {
        put("double_pole", k, *c);
    }
    for (k, c) in sc.accessory.iter().enumerate() {
        put("accessory", k, *c);
    }
    Ok(Output::ok(t.finish()))
}

pub fn reconstruct_cmd(s: &Settings, poles_file: &Path) -> Result<Output, CliError> {
    let sov_file = need(&s.input, "--input")?;
    let text = read_text(sov_file)?;
    let raw: SovIn = parse_json(&text, sov_file)?;
    let g = raw.gauge;
    let sep = SeparatedData {
        gauge: Mat2::new(g[0][0].into(), g[0][1].into(), g[1][0].into(), g[1][1].into()),
        pairs: raw.pairs.iter().map(|pr| (pr.x.into(), pr.p.into())).collect(),
        scale: raw.scale.into(),
    };
    let ptext = read_text(poles_file)?;
    let poles: PolesIn = parse_json(&ptext, poles_file)?;
    let points = io::points_from(&poles.points)?;
    let lambdas: Vec<Complex64> = poles.lambda.iter().map(|c| (*c).into()).collect();
    let tol = s.tol_alg.or(poles.tol_alg).unwrap_or(isomono::fuchsian::DEFAULT_TOL_ALG);
    let rec = reconstruct(&sep, &points, &lambdas, tol)?;
    eprintln!("reconstruct: condition number {:e}", rec.cond);
    Ok(Output::ok(io::system_json(&rec.system)))
}

pub fn hecke(s: &Settings, i: usize, j: Option<usize>, dirs: (Sign, Sign), same_point: bool) -> Result<Output, CliError> {
    let sys = load(s)?;
    let j = match (same_point, j) {
        (true, Some(j)) if j != i => {
            return Err(CliError::Input(format!("--same-point with --i {i} and --j {j}")));
        }
        (true, _) => i,
        (false, Some(j)) => j,
        (false, None) => return Err(CliError::Input("--j is required unless --same-point is given".into())),
    };
    let mv = PairedMove::new(i, j, dirs);
    let modified = paired_modify(&sys, &mv)?;
    let shift = mv.shift(sys.n());
    let base = s.base.unwrap_or_else(|| default_base(&sys));
    let traces = monodromy_effect(&sys, &modified, base, s.tol_ode)?;

    let mut head = vec!["index".to_string()];
    for e in ["lambda_before", "lambda_after"] {
        head.push(format!("{e}_re"));
        head.push(format!("{e}_im"));
    }
    head.push("shift_half_units".into());
    for e in ["trace_before", "trace_after"] {
        head.push(format!("{e}_re"));
        head.push(format!("{e}_im"));
    }
    head.push("abs_trace_gap".into());
    head.push("within_tol_mon".into());
    let mut t = Table::new(&head);
    let before = sys.lambdas();
    let after = modified.lambdas();
    for tc in &traces {
        let k = tc.index;
        let mut r = vec![k.to_string()];
        r.extend(cells(before[k]));
        r.extend(cells(after[k]));
        r.push(shift[k].to_string());
        r.extend(cells(tc.before));
        r.extend(cells(tc.after));
        r.push(fmt_f64(tc.abs_gap));
        let ok = tc.abs_gap.abs() <= s.tol_mon * (1.0 + tc.before.norm());
        r.push(ok.to_string());
        t.row(&r);
    }
    Ok(Output::ok(t.finish()))
}

fn point_cells(p: &SpherePoint<f64>) -> [String; 2] {
    match p {
        SpherePoint::Finite(z) => cells(*z),
        SpherePoint::Infinity => ["inf".into(), "inf".into()],
    }
}

pub fn orbit(x: SpherePoint<f64>) -> Output {
    let mut t = Table::new(&["label".into(), "permutation".into(), "re".into(), "im".into()]);
    for el in s4_orbit(x) {
        let perm: Vec<String> = el.permutation.iter().map(|k| k.to_string()).collect();
        let [re, im] = point_cells(&el.value);
        t.row(&[el.label.to_string(), perm.join(" "), re, im]);
    }
    Output::ok(t.finish())
}

pub fn parse_orbit(s: &str) -> Result<SpherePoint<f64>, CliError> {
    if s.trim() == "inf" {
        return Ok(SpherePoint::Infinity);
    }
    parse_complex(s).map(SpherePoint::Finite).map_err(|e| CliError::Input(format!("--orbit: {e}")))
}

pub fn parse_params(s: &str) -> Result<PviParams<f64>, CliError> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::Input(format!("--pvi-params: {e}")))?;
    match v.as_slice() {
        [a, b, c, d] => Ok(PviParams {
            alpha: cplx(*a, 0.0),
            beta: cplx(*b, 0.0),
            gamma: cplx(*c, 0.0),
            delta: cplx(*d, 0.0),
        }),
        _ => Err(CliError::Input(format!("--pvi-params: expected four numbers, got {}", v.len()))),
    }
}

pub fn pvi(s: &Settings, params: Option<PviParams<f64>>) -> Result<Output, CliError> {
    let sys = load(s)?;
    let norm = normalize_moebius(&sys)?;
    let path_file = need(&s.path, "--path")?;
    let text = read_text(path_file)?;
    let raw: PolylineIn = parse_json(&text, path_file)?;
    let verts: Vec<Complex64> = raw.vertices.into_iter().map(Complex64::from).collect();
    if let Some(v0) = verts.first() {
        if (*v0 - norm.t).norm() > norm.system.tol_alg() * (1.0 + norm.t.norm()) {
            return Err(CliError::Input(format!(
                "{}: vertices[0] must equal the normalized t = {} {}",
                path_file.display(),
                fmt_f64(norm.t.re),
                fmt_f64(norm.t.im)
            )));
        }
    }
    let traj = pvi_flow(&norm.system, &verts, s.tol_ode, &BoundaryOptions::default())?;

    let n = traj.samples.len();
    let mut residual: Vec<Option<Complex64>> = vec![None; n];
    if let Some(pp) = &params {
        let with_pair: Vec<(usize, (Complex64, Complex64))> = traj
            .samples
            .iter()
            .enumerate()
            .filter_map(|(k, smp)| smp.pair.map(|(x, _)| (k, (smp.t, x))))
            .collect();
        let data: Vec<(Complex64, Complex64)> = with_pair.iter().map(|e| e.1).collect();
        for (w, (_, r)) in pvi_residual(&data, pp).into_iter().enumerate() {
            residual[with_pair[w + 1].0] = Some(r);
        }
    }

    let mut head: Vec<String> = ["t_re", "t_im", "x_re", "x_im", "p_re", "p_im", "eigen_drift", "boundary"]
        .iter()
        .map(|h| h.to_string())
        .collect();
    head.extend(["boundary_point", "branch", "s_re", "s_im"].map(String::from));
    if params.is_some() {
        head.extend(["residual_re", "residual_im"].map(String::from));
    }
    let mut t = Table::new(&head);
    let blank = || [String::new(), String::new()];
    for (k, smp) in traj.samples.iter().enumerate() {
        let mut r: Vec<String> = cells(smp.t).to_vec();
        match smp.pair {
            Some((x, p)) => {
                r.extend(cells(x));
                r.extend(cells(p));
            }
            None => {
                r.extend(blank());
                r.extend(blank());
            }
        }
        r.push(fmt_f64(smp.eigen_drift));
        match &smp.boundary {
            None => r.extend(["none".into(), String::new(), String::new(), String::new(), String::new()]),
            Some(BoundaryFlag::Chart(ch)) => {
                r.push(if ch.near_divisor { "chart".into() } else { "chart_far".into() });
                r.push(ch.point_index.to_string());
                r.push(if ch.branch == Sign::Plus { "+".into() } else { "-".into() });
                r.extend(cells(ch.s));
            }
            Some(BoundaryFlag::Mismatch { point_index }) => {
                r.push("mismatch".into());
                r.push(point_index.to_string());
                r.extend([String::new(), String::new(), String::new()]);
            }
        }
        if params.is_some() {
            match residual[k] {
                Some(z) => r.extend(cells(z)),
                None => r.extend(blank()),
            }
        }
        t.row(&r);
    }
    Ok(Output::ok(t.finish()))
}

pub fn random(seed: u64, n: usize, lambda_min: f64, lambda_max: f64, tol_alg: Option<f64>) -> Result<Output, CliError> {
    let mut spec = RandomSpec::new(n);
    spec.lambda_range = (lambda_min, lambda_max);
    if let Some(t) = tol_alg {
        spec.tol_alg = t;
    }
    let sys = seeded_system::<f64>(seed, &spec)?;
    Ok(Output::ok(io::system_json(&sys)))
}
