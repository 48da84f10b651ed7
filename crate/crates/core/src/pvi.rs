//! Four-point reduction: cross-ratio geometry, normalization of the poles to
//! `(t, 1, 0, ∞)` and the flow of the single separated pair in `t`.

use crate::error::{Error, Result};
use crate::fuchsian::{FuchsianSystem, SpherePoint};
use crate::linalg::Mat2;
use crate::scalar::{cone, czero, Real, C};
use crate::schlesinger::{conserved_report, flow, DeformationPath, FlowTrajectory};
use crate::sov::{boundary_chart, fiber_momentum, separated_variables, BoundaryChart, BoundaryOptions};

fn homogeneous<T: Real>(p: &SpherePoint<T>) -> [C<T>; 2] {
    match p {
        SpherePoint::Finite(z) => [*z, cone()],
        SpherePoint::Infinity => [cone(), czero()],
    }
}

fn from_homogeneous<T: Real>(v: [C<T>; 2]) -> SpherePoint<T> {
    if v[1] == czero() {
        SpherePoint::Infinity
    } else {
        SpherePoint::Finite(v[0] / v[1])
    }
}

fn bracket<T: Real>(a: [C<T>; 2], b: [C<T>; 2]) -> C<T> {
    a[0] * b[1] - a[1] * b[0]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadConfig<T: Real> {
    pub points: [SpherePoint<T>; 4],
}

impl<T: Real> QuadConfig<T> {
    pub fn new(points: [SpherePoint<T>; 4]) -> Self {
        QuadConfig { points }
    }

    /// Some pair of points coincides.
    pub fn is_degenerate(&self) -> bool {
        let h = self.points.map(|p| homogeneous(&p));
        (0..4).any(|i| (i + 1..4).any(|j| bracket(h[i], h[j]) == czero()))
    }

    pub fn permuted(&self, perm: [usize; 4]) -> Self {
        QuadConfig { points: perm.map(|i| self.points[i]) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossRatio<T: Real> {
    pub value: SpherePoint<T>,
    /// Two of the points coincide, so the value is 0, 1 or ∞.
    pub degenerate: bool,
}

/// `r = (l1 - l3)(l2 - l4) / ((l1 - l4)(l2 - l3))`, evaluated with
/// homogeneous brackets so that points at infinity need no limits.
pub fn cross_ratio<T: Real>(q: &QuadConfig<T>) -> Result<CrossRatio<T>> {
    let h = q.points.map(|p| homogeneous(&p));
    let num = bracket(h[0], h[2]) * bracket(h[1], h[3]);
    let den = bracket(h[0], h[3]) * bracket(h[1], h[2]);
    if num == czero() && den == czero() {
        return Err(Error::UndefinedCrossRatio);
    }
    Ok(CrossRatio { value: from_homogeneous([num, den]), degenerate: q.is_degenerate() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OrbitElement<T: Real> {
    pub label: &'static str,
    /// Coset representative acting on positions 1..3 of the configuration.
    pub permutation: [usize; 4],
    pub value: SpherePoint<T>,
}

/// The six values of the cross-ratio under reordering of the four points.
/// Values collapse at the special points (e.g. `X = 2, -1, 1/2`).
pub fn s4_orbit<T: Real>(x: SpherePoint<T>) -> [OrbitElement<T>; 6] {
    let [a, b] = homogeneous(&x);
    let el = |label, permutation, v| OrbitElement { label, permutation, value: from_homogeneous(v) };
    [
        el("X", [0, 1, 2, 3], [a, b]),
        el("1-X", [0, 2, 1, 3], [b - a, b]),
        el("1/X", [1, 0, 2, 3], [b, a]),
        el("1-1/X", [1, 2, 0, 3], [a - b, a]),
        el("1/(1-X)", [2, 0, 1, 3], [b, b - a]),
        el("X/(X-1)", [2, 1, 0, 3], [a, a - b]),
    ]
}

/// `z ↦ (a z + b)/(c z + d)` as a matrix on homogeneous coordinates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Moebius<T: Real> {
    pub matrix: Mat2<T>,
}

impl<T: Real> Moebius<T> {
    pub fn apply(&self, p: &SpherePoint<T>) -> SpherePoint<T> {
        from_homogeneous(self.matrix.apply(homogeneous(p)))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Normalized<T: Real> {
    /// Poles in stored order `(t, 1, 0, ∞)`; residues unchanged.
    pub system: FuchsianSystem<T>,
    pub t: C<T>,
    pub map: Moebius<T>,
}

/// Möbius map `z ↦ r(z, a2, a3, a4)`, sending the stored poles to
/// `(t, 1, 0, ∞)` with `t = r(a1, a2, a3, a4)`.
pub fn normalize_moebius<T: Real>(sys: &FuchsianSystem<T>) -> Result<Normalized<T>> {
    if sys.n() != 4 {
        return Err(Error::InvalidInput(format!("four marked points required, got {}", sys.n())));
    }
    let h: Vec<[C<T>; 2]> = sys.points().iter().map(homogeneous).collect();
    for i in 0..4 {
        for j in i + 1..4 {
            if bracket(h[i], h[j]).norm() <= sys.tol_alg() {
                return Err(Error::DegeneratePoles { i, j });
            }
        }
    }
    let k_num = bracket(h[1], h[3]);
    let k_den = bracket(h[1], h[2]);
    let matrix = Mat2::new(h[2][1] * k_num, -h[2][0] * k_num, h[3][1] * k_den, -h[3][0] * k_den);
    let q = QuadConfig::new([sys.points()[0], sys.points()[1], sys.points()[2], sys.points()[3]]);
    let t = cross_ratio(&q)?
        .value
        .finite()
        .ok_or_else(|| Error::DegenerateConfiguration("cross-ratio is infinite".into()))?;
    let points = vec![
        SpherePoint::Finite(t),
        SpherePoint::Finite(cone()),
        SpherePoint::Finite(czero()),
        SpherePoint::Infinity,
    ];
    let system = FuchsianSystem::new(points, sys.residues().to_vec(), sys.tol_alg())?;
    Ok(Normalized { system, t, map: Moebius { matrix } })
}

fn check_normalized<T: Real>(sys: &FuchsianSystem<T>) -> Result<C<T>> {
    let p = sys.points();
    let ok = p.len() == 4
        && p[1] == SpherePoint::Finite(cone())
        && p[2] == SpherePoint::Finite(czero())
        && p[3] == SpherePoint::Infinity;
    match (ok, p.first().and_then(|q| q.finite())) {
        (true, Some(t)) => Ok(t),
        _ => Err(Error::InvalidInput("system is not in (t, 1, 0, ∞) form; normalize first".into())),
    }
}

/// Marked point nearest to `x`, with its distance in units of
/// `position_scale` (at infinity, `scale/|x|`).
fn nearest_point<T: Real>(sys: &FuchsianSystem<T>, x: C<T>) -> (usize, T) {
    let scale = sys.position_scale();
    let mut best = (0, T::infinity());
    for (i, p) in sys.points().iter().enumerate() {
        let d = match p {
            SpherePoint::Finite(a) => (x - *a).norm() / scale,
            SpherePoint::Infinity => scale / x.norm(),
        };
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryFlag<T: Real> {
    /// Near the divisor and the momentum sits on a branch.
    Chart(BoundaryChart<T>),
    /// Near the divisor but off both branches.
    Mismatch { point_index: usize },
}

/// Boundary data for the pair `(x, p)`: emitted when `x` is within
/// `radius_tol` (relative) of a marked point or `|p| > p_max`.
pub fn boundary_flags<T: Real>(
    sys: &FuchsianSystem<T>,
    x: C<T>,
    p: C<T>,
    opts: &BoundaryOptions<T>,
) -> Result<Option<BoundaryFlag<T>>> {
    let (idx, dist) = nearest_point(sys, x);
    if dist >= opts.radius_tol && p.norm() <= opts.p_max {
        return Ok(None);
    }
    let m = fiber_momentum(&sys.points()[idx], x, p);
    match boundary_chart(sys, idx, x, m, None, None, opts) {
        Ok(ch) => Ok(Some(BoundaryFlag::Chart(ch))),
        Err(Error::ChartMismatch { index }) => Ok(Some(BoundaryFlag::Mismatch { point_index: index })),
        Err(e) => Err(e),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PviSample<T: Real> {
    pub t: C<T>,
    /// `None` where separation degenerates.
    pub pair: Option<(C<T>, C<T>)>,
    pub eigen_drift: T,
    pub boundary: Option<BoundaryFlag<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PviTrajectory<T: Real> {
    pub samples: Vec<PviSample<T>>,
    pub flow: FlowTrajectory<T>,
}

/// Moves `t` along the polyline `t_path` (starting at the current `t`) by
/// the Schlesinger flow and records `(x, p)` at every accepted step.
pub fn pvi_flow<T: Real>(
    sys: &FuchsianSystem<T>,
    t_path: &[C<T>],
    tol_flow: T,
    opts: &BoundaryOptions<T>,
) -> Result<PviTrajectory<T>> {
    check_normalized(sys)?;
    let dpath = DeformationPath::new(sys, vec![(0, t_path.to_vec())])?;
    let traj = flow(sys, &dpath, tol_flow)?;
    let report = conserved_report(&traj);
    let mut samples = Vec::with_capacity(traj.samples.len());
    for ((_, s), row) in traj.samples.iter().zip(&report) {
        let t = s.points()[0].finite().expect("t stays finite");
        let pair = match separated_variables(s) {
            Ok(sep) => sep.pairs.first().copied(),
            Err(Error::DegenerateConfiguration(_)) | Err(Error::DegenerateInfinity) => None,
            Err(e) => return Err(e),
        };
        let boundary = match pair {
            Some((x, p)) => boundary_flags(s, x, p, opts)?,
            None => None,
        };
        samples.push(PviSample { t, pair, eigen_drift: row.eigen_drift, boundary });
    }
    Ok(PviTrajectory { samples, flow: traj })
}

/// Parameters `(α, β, γ, δ)` of the sixth Painlevé equation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PviParams<T: Real> {
    pub alpha: C<T>,
    pub beta: C<T>,
    pub gamma: C<T>,
    pub delta: C<T>,
}

/// `x'' - F(t, x, x')` of PVI at the interior samples, with derivatives from
/// the quadratic through three consecutive points (complex `t`, unequal
/// spacing allowed).
pub fn pvi_residual<T: Real>(samples: &[(C<T>, C<T>)], params: &PviParams<T>) -> Vec<(C<T>, C<T>)> {
    let one = cone::<T>();
    let half = C::new(T::lit(0.5), T::zero());
    let mut out = Vec::new();
    for w in samples.windows(3) {
        let [(t0, x0), (t, x), (t2, x2)] = [w[0], w[1], w[2]];
        let d01 = (x - x0) / (t - t0);
        let d12 = (x2 - x) / (t2 - t);
        let d012 = (d12 - d01) / (t2 - t0);
        let dx = d01 + d012 * (t - t0);
        let ddx = d012.scale(T::lit(2.0));
        let rhs = half * (one / x + one / (x - one) + one / (x - t)) * dx * dx
            - (one / t + one / (t - one) + one / (x - t)) * dx
            + x * (x - one) * (x - t) / (t * t * (t - one) * (t - one))
                * (params.alpha + params.beta * t / (x * x) + params.gamma * (t - one) / ((x - one) * (x - one))
                    + params.delta * t * (t - one) / ((x - t) * (x - t)));
        out.push((t, ddx - rhs));
    }
    out
}
