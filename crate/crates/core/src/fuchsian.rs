//! Rank-2 Fuchsian systems `dY/dz = L(z) Y`, `L(z) = Σ B_i/(z - a_i)`, with
//! traceless residues on the Riemann sphere.

use crate::error::{Error, Result};
use crate::linalg::Mat2;
use crate::scalar::{czero, dist_to_integer, Real, C};
use std::fmt;

/// A point of the Riemann sphere. Infinity is a marker, never a large float.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint<T: Real> {
    Finite(C<T>),
    Infinity,
}

impl<T: Real> SpherePoint<T> {
    pub fn finite(&self) -> Option<C<T>> {
        match self {
            SpherePoint::Finite(z) => Some(*z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }
}

impl<T: Real> fmt::Display for SpherePoint<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{z}"),
            SpherePoint::Infinity => write!(f, "inf"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value<T: Real>(self) -> T {
        match self {
            Sign::Plus => T::one(),
            Sign::Minus => -T::one(),
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Plus => Sign::Minus,
            Sign::Minus => Sign::Plus,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Plus => 1,
            Sign::Minus => -1,
        }
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+",
            Sign::Minus => "-",
        })
    }
}

/// Residue matrix together with the chosen "+" eigenvalue. For traceless
/// residues the eigenvalues are `±lambda`; for the gl(2) intermediates of a
/// modification they are `tr/2 ± lambda`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Residue<T: Real> {
    pub m: Mat2<T>,
    pub lambda: C<T>,
}

impl<T: Real> Residue<T> {
    pub fn new(m: Mat2<T>, lambda: C<T>) -> Self {
        Residue { m, lambda }
    }

    /// Takes the principal square root of `-det` of the traceless part as
    /// `lambda`.
    pub fn from_matrix(m: Mat2<T>) -> Self {
        let lambda = (-m.traceless_part().det()).sqrt();
        Residue { m, lambda }
    }

    /// Eigenvalue attached to `sign`: `tr/2 + sign * lambda`.
    pub fn eigenvalue(&self, sign: Sign) -> C<T> {
        self.m.trace().scale(T::lit(0.5)) + self.lambda.scale(sign.value())
    }

    /// Distance of the spectrum of `m` from `{tr/2 ± lambda}`.
    pub fn eigen_deviation(&self) -> T {
        let [e0, e1] = self.m.eigenvalues();
        let (p, q) = (self.eigenvalue(Sign::Plus), self.eigenvalue(Sign::Minus));
        let a = (e0 - p).norm().max((e1 - q).norm());
        let b = (e0 - q).norm().max((e1 - p).norm());
        a.min(b)
    }
}

/// Unit eigenvector with deterministic phase: the first entry with modulus
/// above the tolerance is real-positive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigenLine<T: Real> {
    v: [C<T>; 2],
}

impl<T: Real> EigenLine<T> {
    pub fn from_vector(v: [C<T>; 2], tol: T) -> Result<Self> {
        let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
        if !(n > T::zero()) || !n.is_finite() {
            return Err(Error::InvalidInput("zero direction vector".into()));
        }
        let mut w = [v[0].unscale(n), v[1].unscale(n)];
        let tie = if w[0].norm() > tol { 0 } else { 1 };
        let phase = w[tie].conj().unscale(w[tie].norm());
        w = [w[0] * phase, w[1] * phase];
        w[tie] = C::new(w[tie].re, T::zero());
        Ok(EigenLine { v: w })
    }

    pub fn vector(&self) -> [C<T>; 2] {
        self.v
    }

    /// `v_0 w_1 - v_1 w_0`; zero iff the lines coincide.
    pub fn wedge(&self, other: &EigenLine<T>) -> C<T> {
        self.v[0] * other.v[1] - self.v[1] * other.v[0]
    }
}

/// Null vector of `m - mu I`, normalized. The matrix is assumed to have rank
/// one after the shift.
pub fn eigenvector<T: Real>(m: &Mat2<T>, mu: C<T>, tol: T) -> Result<EigenLine<T>> {
    let s = *m - Mat2::scalar(mu);
    let r0 = [s[(0, 0)], s[(0, 1)]];
    let r1 = [s[(1, 0)], s[(1, 1)]];
    let n0 = r0[0].norm_sqr() + r0[1].norm_sqr();
    let n1 = r1[0].norm_sqr() + r1[1].norm_sqr();
    let r = if n0 >= n1 { r0 } else { r1 };
    if n0.max(n1) == T::zero() {
        // m = mu I: every vector is an eigenvector
        return EigenLine::from_vector([C::new(T::one(), T::zero()), czero()], tol);
    }
    EigenLine::from_vector([-r[1], r[0]], tol)
}

/// Eigenline `ker(m - (tr/2 + sign*lambda))` of a residue.
pub fn eigenline<T: Real>(r: &Residue<T>, sign: Sign, tol: T) -> Result<EigenLine<T>> {
    let two_lambda = r.lambda.scale(T::lit(2.0)).norm();
    if two_lambda < tol {
        return Err(Error::DegenerateResidue { abs_two_lambda: two_lambda.to_f64_lossy() });
    }
    eigenvector(&r.m, r.eigenvalue(sign), tol)
}

/// Result of completing a residue from its first row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Completion<T: Real> {
    pub residue: Residue<T>,
    /// Set on the triangular branch (row12 = 0) and for a vanishing
    /// eigenvalue, where the two eigenlines coincide or the completion is
    /// not unique.
    pub degenerate: bool,
}

/// Builds the traceless residue `[[row11, row12], [row21, -row11]]` with
/// eigenvalues `±lambda`.
pub fn complete_residue<T: Real>(row11: C<T>, row12: C<T>, lambda: C<T>, tol: T) -> Result<Completion<T>> {
    let small_lambda = lambda.scale(T::lit(2.0)).norm() < tol;
    if row12.norm() > tol {
        let row21 = (lambda * lambda - row11 * row11) / row12;
        return Ok(Completion {
            residue: Residue::new(Mat2::new(row11, row12, row21, -row11), lambda),
            degenerate: small_lambda,
        });
    }
    if (row11 - lambda).norm() <= tol || (row11 + lambda).norm() <= tol {
        return Ok(Completion {
            residue: Residue::new(Mat2::new(row11, row12, czero(), -row11), lambda),
            degenerate: true,
        });
    }
    Err(Error::InconsistentRow)
}

/// One finding of [`FuchsianSystem::validate`].
#[derive(Clone, Debug, PartialEq)]
pub enum Violation<T: Real> {
    Trace { index: usize, trace: C<T> },
    Eigenvalue { index: usize, deviation: T },
    ResidueSum { norm: T },
    Resonance { index: usize, two_lambda: C<T> },
    Stability { signs: Vec<i8>, sum: C<T> },
    TooManyPoints { n: usize },
}

impl<T: Real> fmt::Display for Violation<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Trace { index, trace } => write!(f, "trace: residue {index} has trace {trace}"),
            Violation::Eigenvalue { index, deviation } => {
                write!(f, "eigenvalue: residue {index} deviates from ±lambda by {deviation:e}")
            }
            Violation::ResidueSum { norm } => write!(f, "residue-sum: |sum of residues| = {norm:e}"),
            Violation::Resonance { index, two_lambda } => {
                write!(f, "resonance: residue {index} has 2*lambda = {two_lambda} in Z\\{{0}}")
            }
            Violation::Stability { signs, sum } => {
                let s: Vec<String> = signs.iter().map(|e| if *e > 0 { "+".into() } else { "-".into() }).collect();
                write!(f, "stability: signs ({}) give integer sum {sum}", s.join(","))
            }
            Violation::TooManyPoints { n } => write!(f, "stability: n = {n} exceeds the 12-point cap"),
        }
    }
}

impl<T: Real> Violation<T> {
    pub fn category(&self) -> &'static str {
        match self {
            Violation::Trace { .. } => "trace",
            Violation::Eigenvalue { .. } => "eigenvalue",
            Violation::ResidueSum { .. } => "residue-sum",
            Violation::Resonance { .. } => "resonance",
            Violation::Stability { .. } | Violation::TooManyPoints { .. } => "stability",
        }
    }
}

pub const MAX_POINTS: usize = 12;
pub const DEFAULT_TOL_ALG: f64 = 1e-10;

/// Marked points with their residues. Infinity may appear at most once; its
/// residue is stored but must equal minus the sum of the finite ones.
#[derive(Clone, Debug, PartialEq)]
pub struct FuchsianSystem<T: Real> {
    points: Vec<SpherePoint<T>>,
    residues: Vec<Residue<T>>,
    tol_alg: T,
}

impl<T: Real> FuchsianSystem<T> {
    /// Structural checks only (lengths, distinct points, at most one
    /// infinity). Algebraic conditions are reported by [`Self::validate`].
    pub fn new(points: Vec<SpherePoint<T>>, residues: Vec<Residue<T>>, tol_alg: T) -> Result<Self> {
        if points.len() != residues.len() {
            return Err(Error::InvalidInput(format!(
                "{} points but {} residues",
                points.len(),
                residues.len()
            )));
        }
        if !(tol_alg > T::zero()) {
            return Err(Error::InvalidInput("tol_alg must be positive".into()));
        }
        if points.iter().filter(|p| p.is_infinity()).count() > 1 {
            return Err(Error::InvalidInput("infinity listed more than once".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if let SpherePoint::Finite(z) = p {
                if !(z.re.is_finite() && z.im.is_finite()) {
                    return Err(Error::InvalidInput(format!("point {i} is not finite")));
                }
            }
            for (j, q) in points.iter().enumerate().skip(i + 1) {
                if let (SpherePoint::Finite(a), SpherePoint::Finite(b)) = (p, q) {
                    if (*a - *b).norm() <= tol_alg {
                        return Err(Error::DegeneratePoles { i, j });
                    }
                }
            }
        }
        if residues.iter().any(|r| !r.m.is_finite()) {
            return Err(Error::InvalidInput("residue entries must be finite".into()));
        }
        Ok(FuchsianSystem { points, residues, tol_alg })
    }

    /// Builds a system from finite poles and traceless residues, taking each
    /// `lambda` as the principal root. With `mark_infinity`, infinity is
    /// appended carrying `-Σ B_i`.
    pub fn from_finite(points: Vec<C<T>>, residues: Vec<Mat2<T>>, mark_infinity: bool, tol_alg: T) -> Result<Self> {
        let sum: Mat2<T> = residues.iter().copied().sum();
        let mut pts: Vec<SpherePoint<T>> = points.into_iter().map(SpherePoint::Finite).collect();
        let mut res: Vec<Residue<T>> = residues.into_iter().map(Residue::from_matrix).collect();
        if mark_infinity {
            pts.push(SpherePoint::Infinity);
            res.push(Residue::from_matrix(-sum));
        }
        Self::new(pts, res, tol_alg)
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn points(&self) -> &[SpherePoint<T>] {
        &self.points
    }

    pub fn residues(&self) -> &[Residue<T>] {
        &self.residues
    }

    pub fn residue(&self, i: usize) -> &Residue<T> {
        &self.residues[i]
    }

    pub fn tol_alg(&self) -> T {
        self.tol_alg
    }

    pub fn with_tol_alg(mut self, tol: T) -> Self {
        self.tol_alg = tol;
        self
    }

    pub fn lambdas(&self) -> Vec<C<T>> {
        self.residues.iter().map(|r| r.lambda).collect()
    }

    pub fn infinity_index(&self) -> Option<usize> {
        self.points.iter().position(|p| p.is_infinity())
    }

    /// `(index, position)` for every finite point.
    pub fn finite_points(&self) -> Vec<(usize, C<T>)> {
        self.points
            .iter()
            .enumerate()
            .filter_map(|(i, p)| p.finite().map(|z| (i, z)))
            .collect()
    }

    pub fn finite_residue_sum(&self) -> Mat2<T> {
        self.finite_points().iter().map(|&(i, _)| self.residues[i].m).sum()
    }

    /// Residue at infinity implied by the finite ones, `-Σ B_i`.
    pub fn implied_infinity_residue(&self) -> Mat2<T> {
        -self.finite_residue_sum()
    }

    /// Largest residue norm; a natural scale for tolerances.
    pub fn residue_scale(&self) -> T {
        self.residues.iter().map(|r| r.m.norm()).fold(T::zero(), T::max)
    }

    /// Largest modulus among finite points, at least one.
    pub fn position_scale(&self) -> T {
        self.finite_points().iter().map(|(_, z)| z.norm()).fold(T::one(), T::max)
    }

    /// Replaces residue matrices without any checks. Lambdas are kept.
    pub fn with_residue_matrices(&self, ms: &[Mat2<T>]) -> Self {
        assert_eq!(ms.len(), self.residues.len());
        let residues = self
            .residues
            .iter()
            .zip(ms)
            .map(|(r, m)| Residue::new(*m, r.lambda))
            .collect();
        FuchsianSystem { points: self.points.clone(), residues, tol_alg: self.tol_alg }
    }

    /// Replaces the residue matrix of every finite point and, when infinity
    /// is marked, resets its residue to minus their sum. No checks.
    pub fn with_finite_residues(&self, finite: &[Mat2<T>]) -> Self {
        let fin = self.finite_points();
        assert_eq!(fin.len(), finite.len());
        let mut ms: Vec<Mat2<T>> = self.residues.iter().map(|r| r.m).collect();
        for (&(i, _), m) in fin.iter().zip(finite) {
            ms[i] = *m;
        }
        if let Some(k) = self.infinity_index() {
            ms[k] = -finite.iter().copied().sum::<Mat2<T>>();
        }
        self.with_residue_matrices(&ms)
    }

    /// Same residues at new point positions. No checks.
    pub fn with_points(&self, points: Vec<SpherePoint<T>>) -> Self {
        assert_eq!(points.len(), self.points.len());
        FuchsianSystem { points, residues: self.residues.clone(), tol_alg: self.tol_alg }
    }

    pub fn with_lambdas(&self, lambdas: &[C<T>]) -> Self {
        let residues = self
            .residues
            .iter()
            .zip(lambdas)
            .map(|(r, l)| Residue::new(r.m, *l))
            .collect();
        FuchsianSystem { points: self.points.clone(), residues, tol_alg: self.tol_alg }
    }

    /// `L(z) = Σ B_i/(z - a_i)` over finite points.
    pub fn eval_l(&self, z: C<T>) -> Result<Mat2<T>> {
        let mut acc = Mat2::zero();
        for (i, a) in self.finite_points() {
            let d = z - a;
            if d.norm() < self.tol_alg {
                return Err(Error::PoleEvaluation { index: i, distance: d.norm().to_f64_lossy() });
            }
            acc += self.residues[i].m.scale(d.inv());
        }
        Ok(acc)
    }

    /// Reports every violated condition; an empty list means valid.
    pub fn validate(&self) -> Vec<Violation<T>> {
        let tol = self.tol_alg;
        let mut out = Vec::new();
        for (index, r) in self.residues.iter().enumerate() {
            let trace = r.m.trace();
            if trace.norm() > tol {
                out.push(Violation::Trace { index, trace });
            }
            let deviation = r.eigen_deviation();
            if deviation > tol.max(T::lit(1e3) * T::epsilon() * (T::one() + r.m.norm())) {
                out.push(Violation::Eigenvalue { index, deviation });
            }
        }
        let sum: Mat2<T> = self.residues.iter().map(|r| r.m).sum();
        let norm = if self.infinity_index().is_some() {
            sum.norm()
        } else {
            self.finite_residue_sum().norm()
        };
        if norm > tol {
            out.push(Violation::ResidueSum { norm });
        }
        for (index, r) in self.residues.iter().enumerate() {
            let two_lambda = r.lambda.scale(T::lit(2.0));
            if two_lambda.norm() > tol && dist_to_integer(two_lambda) < tol {
                out.push(Violation::Resonance { index, two_lambda });
            }
        }
        out.extend(stability_violations(&self.lambdas(), tol));
        out
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_empty()
    }
}

/// Sign vectors `ε` (with `ε_0 = +1`; the others are negatives) for which
/// `Σ ε_i λ_i` lies within `tol` of an integer.
pub fn stability_violations<T: Real>(lambdas: &[C<T>], tol: T) -> Vec<Violation<T>> {
    let n = lambdas.len();
    if n > MAX_POINTS {
        return vec![Violation::TooManyPoints { n }];
    }
    let mut out = Vec::new();
    for mask in 0u32..(1u32 << n) {
        if n > 0 && mask & 1 == 1 {
            continue;
        }
        let signs: Vec<i8> = (0..n).map(|i| if mask >> i & 1 == 1 { -1 } else { 1 }).collect();
        let sum = lambdas
            .iter()
            .zip(&signs)
            .fold(czero(), |acc, (l, &e)| acc + l.scale(T::lit(e as f64)));
        if n > 0 && dist_to_integer(sum) < tol {
            out.push(Violation::Stability { signs, sum });
        }
    }
    out
}

/// Anything that can be transported along: a matrix-valued function with a
/// finite pole set.
pub trait MatrixField<T: Real>: Sync {
    fn eval(&self, z: C<T>) -> Result<Mat2<T>>;
    fn finite_poles(&self) -> Vec<C<T>>;
}

impl<T: Real> MatrixField<T> for FuchsianSystem<T> {
    fn eval(&self, z: C<T>) -> Result<Mat2<T>> {
        self.eval_l(z)
    }

    fn finite_poles(&self) -> Vec<C<T>> {
        self.finite_points().into_iter().map(|(_, z)| z).collect()
    }
}

/// Logarithmic gl(2) connection with finite poles only (infinity implicit);
/// residues need not be traceless.
#[derive(Clone, Debug, PartialEq)]
pub struct LogConnection<T: Real> {
    pub points: Vec<C<T>>,
    pub residues: Vec<Mat2<T>>,
}

impl<T: Real> LogConnection<T> {
    pub fn eval_l(&self, z: C<T>) -> Mat2<T> {
        self.points
            .iter()
            .zip(&self.residues)
            .fold(Mat2::zero(), |acc, (a, b)| acc + b.scale((z - *a).inv()))
    }
}

impl<T: Real> MatrixField<T> for LogConnection<T> {
    fn eval(&self, z: C<T>) -> Result<Mat2<T>> {
        for (i, a) in self.points.iter().enumerate() {
            if z == *a {
                return Err(Error::PoleEvaluation { index: i, distance: 0.0 });
            }
        }
        Ok(self.eval_l(z))
    }

    fn finite_poles(&self) -> Vec<C<T>> {
        self.points.clone()
    }
}
