//! Hecke modifications as explicit singular gauge transformations
//! `L ↦ G L G⁻¹ + G' G⁻¹`, computed exactly on partial fractions.

use crate::error::{Error, Result};
use crate::fuchsian::{eigenline, eigenvector, EigenLine, FuchsianSystem, Residue, Sign};
use crate::linalg::Mat2;
use crate::rational::RationalMatrixFunction;
use crate::scalar::{cone, czero, Real, C};
use crate::transport::monodromy_rep;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModKind {
    /// `diag(1, z - x)` in the adapted basis.
    Lower,
    /// `diag((z - x)^-1, 1)` in the adapted basis.
    Upper,
}

/// A single modification at a finite point.
#[derive(Clone, Debug, PartialEq)]
pub struct HeckeMove<T: Real> {
    pub point: C<T>,
    pub kind: ModKind,
    pub direction: EigenLine<T>,
    /// Second basis vector of the adapted frame.
    pub complement: [C<T>; 2],
    /// Direction is not an eigenline of the residue at `point`.
    pub non_invariant: bool,
}

fn residue_at<T: Real>(sys: &FuchsianSystem<T>, x: C<T>) -> Mat2<T> {
    sys.finite_points()
        .into_iter()
        .find(|(_, a)| (*a - x).norm() <= sys.tol_alg())
        .map(|(i, _)| sys.residue(i).m)
        .unwrap_or_else(Mat2::zero)
}

impl<T: Real> HeckeMove<T> {
    /// `point` may be a marked point or any other finite point.
    pub fn new(sys: &FuchsianSystem<T>, point: C<T>, kind: ModKind, direction: [C<T>; 2]) -> Result<Self> {
        let tol = sys.tol_alg();
        let dir = EigenLine::from_vector(direction, tol)?;
        let v = dir.vector();
        let b = residue_at(sys, point);
        let bv = b.apply(v);
        let non_invariant = (v[0] * bv[1] - v[1] * bv[0]).norm() > tol * (T::one() + b.norm());
        let orth = [-v[1].conj(), v[0].conj()];
        let [e0, e1] = b.eigenvalues();
        let mut complement = orth;
        if (e0 - e1).norm() > tol {
            let mut best = T::zero();
            for mu in [e0, e1] {
                if let Ok(line) = eigenvector(&b, mu, tol) {
                    let w = line.wedge(&dir).norm();
                    if w > best {
                        best = w;
                        complement = line.vector();
                    }
                }
            }
            if best < tol.sqrt() {
                complement = orth;
            }
        }
        Ok(HeckeMove { point, kind, direction: dir, complement, non_invariant })
    }

    /// Move along the `sign` eigenline of the residue at marked point `index`.
    pub fn at_eigenline(sys: &FuchsianSystem<T>, index: usize, kind: ModKind, sign: Sign) -> Result<Self> {
        let point = sys
            .points()
            .get(index)
            .and_then(|p| p.finite())
            .ok_or_else(|| Error::InvalidInput(format!("point {index} is not a finite marked point")))?;
        let line = eigenline(sys.residue(index), sign, sys.tol_alg())?;
        Self::new(sys, point, kind, line.vector())
    }

    /// Change of the trace residue at the point.
    pub fn trace_shift(&self) -> i32 {
        match self.kind {
            ModKind::Lower => 1,
            ModKind::Upper => -1,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Modification<T: Real> {
    pub function: RationalMatrixFunction<T>,
    pub non_invariant: bool,
    /// Order -2 coefficient at the modified point.
    pub double_pole: Mat2<T>,
    /// Eigenvalues of the simple-pole coefficient at every pole of the result.
    pub eigenvalue_table: Vec<(C<T>, [C<T>; 2])>,
    pub trace_shift: i32,
}

fn gauge<T: Real>(
    l: &RationalMatrixFunction<T>,
    g: &RationalMatrixFunction<T>,
    g_inv: &RationalMatrixFunction<T>,
    g_prime: &RationalMatrixFunction<T>,
) -> RationalMatrixFunction<T> {
    g.mul(l).mul(g_inv).add(&g_prime.mul(g_inv))
}

/// Single lower or upper modification. Non-invariant directions are not an
/// error: the result then carries a double pole and is flagged.
pub fn modify<T: Real>(sys: &FuchsianSystem<T>, mv: &HeckeMove<T>) -> Result<Modification<T>> {
    let s = Mat2::from_cols(mv.complement, mv.direction.vector());
    let s_inv = s
        .inverse()
        .ok_or_else(|| Error::InvalidInput("direction and complement are parallel".into()))?;
    // projector onto the direction along the complement
    let p = s * Mat2::diag(czero(), cone()) * s_inv;
    let q = Mat2::identity() - p;
    let x = mv.point;
    let (g, g_inv, g_prime) = match mv.kind {
        ModKind::Lower => {
            let mut gi = RationalMatrixFunction::constant(q);
            gi.add_pole(x, 1, p);
            (RationalMatrixFunction::linear(q - p.scale(x), p), gi, RationalMatrixFunction::constant(p))
        }
        ModKind::Upper => {
            let mut g = RationalMatrixFunction::constant(p);
            g.add_pole(x, 1, q);
            (g, RationalMatrixFunction::linear(p - q.scale(x), q), RationalMatrixFunction::pole(x, 2, -q))
        }
    };
    let l = RationalMatrixFunction::from_system(sys);
    let function = gauge(&l, &g, &g_inv, &g_prime).canonicalize(T::epsilon());
    let [double_pole, _, _] = function.laurent_coefficients(x, T::zero())?;
    let eigenvalue_table = function
        .poles()
        .iter()
        .map(|t| (t.center, t.coeffs[0].eigenvalues()))
        .collect();
    Ok(Modification {
        function,
        non_invariant: mv.non_invariant,
        double_pole,
        eigenvalue_table,
        trace_shift: mv.trace_shift(),
    })
}

/// Lower at `i` along `dirs.0`, upper at `j` along `dirs.1`, twisted back
/// to trace zero. Shifts are `λ_i + d_i/2` and `λ_j + d_j/2`; with `i == j`
/// equal signs give `λ ± 1` and opposite signs cancel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairedMove {
    pub i: usize,
    pub j: usize,
    pub dirs: (Sign, Sign),
}

impl PairedMove {
    pub fn new(i: usize, j: usize, dirs: (Sign, Sign)) -> Self {
        PairedMove { i, j, dirs }
    }

    /// Eigenvalue shifts in half-units.
    pub fn shift(&self, n: usize) -> Vec<i32> {
        let mut s = vec![0; n];
        s[self.i] += self.dirs.0.as_i8() as i32;
        s[self.j] += self.dirs.1.as_i8() as i32;
        s
    }

    pub fn inverse(&self) -> Self {
        PairedMove { i: self.j, j: self.i, dirs: (self.dirs.1.flip(), self.dirs.0.flip()) }
    }

    fn is_identity(&self) -> bool {
        self.i == self.j && self.dirs.0 != self.dirs.1
    }
}

/// Point where moves touching infinity normalize their gauge, `R(z0) = I`:
/// the centroid of the finite poles, or one unit off the moved finite point
/// when the centroid sits on it. Depends on positions only, so a move and
/// its inverse share it. Far anchors inflate the residues by a constant
/// conjugation and cost eigenvalue accuracy.
fn infinity_anchor<T: Real>(sys: &FuchsianSystem<T>, mv: &PairedMove) -> C<T> {
    let fin = sys.finite_points();
    let c = fin.iter().fold(czero::<T>(), |acc, (_, a)| acc + *a).scale(T::one() / T::lit(fin.len().max(1) as f64));
    match [mv.i, mv.j].into_iter().find(|k| !sys.points()[*k].is_infinity()) {
        Some(k) => {
            let a = finite_point(sys, k);
            if (a - c).norm() < T::lit(1e-2) * sys.position_scale() {
                a + cone()
            } else {
                c
            }
        }
        None => c,
    }
}

fn finite_point<T: Real>(sys: &FuchsianSystem<T>, i: usize) -> C<T> {
    sys.points()[i].finite().expect("moved point is finite")
}

/// New residue matrices aligned to `work.points()`. Between finite points
/// `R(z) = I + O(1/z)`, so infinity is untouched; moves at infinity use
/// `R(z0) = I` instead.
fn elementary_transform<T: Real>(work: &FuchsianSystem<T>, mv: &PairedMove) -> Result<Vec<Mat2<T>>> {
    let tol = work.tol_alg();
    let half = C::new(T::lit(0.5), T::zero());
    let id = Mat2::identity();
    let z0 = infinity_anchor(work, mv);
    let mut r = RationalMatrixFunction::constant(id);
    let mut r_inv = RationalMatrixFunction::constant(id);
    let r_prime;
    let mut twist = RationalMatrixFunction::zero();
    let at_inf = |k: usize| work.points()[k].is_infinity();
    if mv.i != mv.j {
        let u = eigenline(work.residue(mv.i), mv.dirs.0, tol)?.vector();
        let e = eigenline(work.residue(mv.j), mv.dirs.1, tol)?.vector();
        let w = [-e[1], e[0]];
        let wu = w[0] * u[0] + w[1] * u[1];
        if wu.norm() < tol {
            return Err(Error::NonTrivialBundle(format!("eigenlines at {} and {} are parallel", mv.i, mv.j)));
        }
        // projector onto u along e
        let p = Mat2::outer(u, w).scale(cone::<T>() / wu);
        let q = id - p;
        if at_inf(mv.j) {
            // R = Q + s (a_i - z) P
            let ai = finite_point(work, mv.i);
            let s = (ai - z0).inv();
            r = RationalMatrixFunction::linear(q + p.scale(s * ai), -p.scale(s));
            r_inv = RationalMatrixFunction::constant(q);
            r_inv.add_pole(ai, 1, -p.scale(s.inv()));
            r_prime = RationalMatrixFunction::constant(-p.scale(s));
            twist.add_pole(ai, 1, Mat2::scalar(-half));
        } else if at_inf(mv.i) {
            // R = Q - σ P / (z - a_j)
            let aj = finite_point(work, mv.j);
            let sigma = aj - z0;
            r = RationalMatrixFunction::constant(q);
            r.add_pole(aj, 1, -p.scale(sigma));
            r_inv = RationalMatrixFunction::linear(q + p.scale(aj / sigma), -p.scale(sigma.inv()));
            r_prime = RationalMatrixFunction::pole(aj, 2, p.scale(sigma));
            twist.add_pole(aj, 1, Mat2::scalar(half));
        } else {
            let (ai, aj) = (finite_point(work, mv.i), finite_point(work, mv.j));
            let cp = p.scale(aj - ai);
            r.add_pole(aj, 1, cp);
            r_inv.add_pole(ai, 1, -cp);
            r_prime = RationalMatrixFunction::pole(aj, 2, -cp);
            twist.add_pole(aj, 1, Mat2::scalar(half));
            twist.add_pole(ai, 1, Mat2::scalar(-half));
        }
    } else {
        let k = mv.i;
        let x = eigenline(work.residue(k), mv.dirs.0, tol)?.vector();
        let y = [-x[1], x[0]];
        let n = Mat2::outer(x, y);
        // y^T C x with C the regular part of L at the point
        let ycx = if at_inf(k) {
            work.finite_points()
                .iter()
                .map(|(j, a)| {
                    let bx = work.residue(*j).m.apply(x);
                    -(y[0] * bx[0] + y[1] * bx[1]) * *a
                })
                .fold(czero(), |acc, v| acc + v)
        } else {
            let ak = finite_point(work, k);
            let mut regular = Mat2::zero();
            for (j, a) in work.finite_points() {
                if j != k {
                    regular += work.residue(j).m.scale((ak - a).inv());
                }
            }
            let cx = regular.apply(x);
            y[0] * cx[0] + y[1] * cx[1]
        };
        if ycx.norm() < tol {
            return Err(Error::NonTrivialBundle(format!("eigenline at {k} is invariant for the regular part")));
        }
        let mu = work.residue(k).eigenvalue(mv.dirs.0);
        let alpha = (-mu.scale(T::lit(2.0)) - cone()) / ycx;
        let an = n.scale(alpha);
        if at_inf(k) {
            // R = I + α (z - z0) N
            r = RationalMatrixFunction::linear(id - an.scale(z0), an);
            r_inv = RationalMatrixFunction::linear(id + an.scale(z0), -an);
            r_prime = RationalMatrixFunction::constant(an);
        } else {
            let ak = finite_point(work, k);
            r.add_pole(ak, 1, an);
            r_inv.add_pole(ak, 1, -an);
            r_prime = RationalMatrixFunction::pole(ak, 2, -an);
        }
    }
    let l = RationalMatrixFunction::from_system(work);
    let lt = gauge(&l, &r, &r_inv, &r_prime).add(&twist);
    let scale = T::one() + work.residue_scale() * (T::one() + work.position_scale());
    let bound = T::lit(1e-8) * scale * scale;
    let poly = lt.polynomial().iter().map(|m| m.norm()).fold(T::zero(), T::max);
    if poly > bound {
        return Err(Error::ResidueCheckFailed(format!("polynomial part of size {:e}", poly.to_f64_lossy())));
    }
    // higher-order terms cancel analytically; only rounding may remain
    let mut ms = vec![Mat2::zero(); work.n()];
    for (idx, a) in work.finite_points() {
        for term in lt.poles().iter().filter(|t| t.center == a) {
            if let Some((order, c)) = term.coeffs.iter().enumerate().skip(1).find(|(_, c)| c.norm() > bound) {
                return Err(Error::ResidueCheckFailed(format!(
                    "pole of order {} and size {:e} at point {idx}",
                    order + 1,
                    c.norm().to_f64_lossy()
                )));
            }
            ms[idx] += term.coeffs[0];
        }
    }
    if lt.poles().iter().any(|t| !work.finite_points().iter().any(|(_, a)| *a == t.center)) {
        return Err(Error::ResidueCheckFailed("pole away from the marked points".into()));
    }
    if let Some(k) = work.infinity_index() {
        let sum: Mat2<T> = ms.iter().copied().sum();
        ms[k] = -sum;
    }
    Ok(ms)
}

/// Paired modification, returning a valid traceless system on the same
/// marked points.
pub fn paired_modify<T: Real>(sys: &FuchsianSystem<T>, mv: &PairedMove) -> Result<FuchsianSystem<T>> {
    let n = sys.n();
    if mv.i >= n || mv.j >= n {
        return Err(Error::InvalidInput(format!("move ({}, {}) on {n} points", mv.i, mv.j)));
    }
    if mv.is_identity() {
        return Ok(sys.clone());
    }
    let ms = elementary_transform(sys, mv)?;
    let shift = mv.shift(n);
    let tol = sys.tol_alg();
    let mut residues = Vec::with_capacity(n);
    for (i, m) in ms.iter().enumerate() {
        let scale = T::one() + m.norm();
        if m.trace().norm() > T::lit(1e-9) * scale {
            return Err(Error::ResidueCheckFailed(format!("trace {:e} at point {i}", m.trace().norm().to_f64_lossy())));
        }
        let lambda = sys.residue(i).lambda + C::new(T::lit(0.5 * shift[i] as f64), T::zero());
        let r = Residue::new(m.traceless_part(), lambda);
        if r.eigen_deviation() > T::lit(1e-9) * scale {
            return Err(Error::ResidueCheckFailed(format!(
                "eigenvalues at point {i} off the shift table by {:e}",
                r.eigen_deviation().to_f64_lossy()
            )));
        }
        residues.push(r);
    }
    let out = FuchsianSystem::new(sys.points().to_vec(), residues, tol)?;
    if let Some(v) = out.validate().into_iter().find(|v| v.category() == "trace" || v.category() == "residue-sum") {
        return Err(Error::ResidueCheckFailed(v.to_string()));
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct WeylComposition<T: Real> {
    /// Net eigenvalue shift per point in half-units.
    pub shift: Vec<i32>,
    pub system: FuchsianSystem<T>,
}

/// Applies paired moves in order and checks the realized eigenvalues against
/// the summed shift record.
pub fn weyl_compose<T: Real>(sys: &FuchsianSystem<T>, moves: &[PairedMove]) -> Result<WeylComposition<T>> {
    let mut shift = vec![0; sys.n()];
    let mut cur = sys.clone();
    for mv in moves {
        cur = paired_modify(&cur, mv)?;
        for (s, d) in shift.iter_mut().zip(mv.shift(sys.n())) {
            *s += d;
        }
    }
    for (i, (r0, r1)) in sys.residues().iter().zip(cur.residues()).enumerate() {
        let want = r0.lambda + C::new(T::lit(0.5 * shift[i] as f64), T::zero());
        let dev = Residue::new(r1.m, want).eigen_deviation();
        if dev > T::lit(1e-9) * (T::one() + r1.m.norm()) {
            return Err(Error::ResidueCheckFailed(format!("net shift at point {i} off by {:e}", dev.to_f64_lossy())));
        }
    }
    Ok(WeylComposition { shift, system: cur })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceComparison<T: Real> {
    pub index: usize,
    pub before: C<T>,
    pub after: C<T>,
    /// `|tr M'| - |tr M|`.
    pub abs_gap: T,
    /// `|tr M' - tr M|`.
    pub gap: T,
}

/// Local monodromy traces of two systems on the same marked points.
pub fn monodromy_effect<T: Real>(
    sys: &FuchsianSystem<T>,
    modified: &FuchsianSystem<T>,
    base: C<T>,
    tol_ode: T,
) -> Result<Vec<TraceComparison<T>>> {
    if sys.points() != modified.points() {
        return Err(Error::InvalidInput("systems have different marked points".into()));
    }
    let t0 = monodromy_rep(sys, base, tol_ode)?.traces();
    let t1 = monodromy_rep(modified, base, tol_ode)?.traces();
    Ok(t0
        .into_iter()
        .zip(t1)
        .enumerate()
        .map(|(index, (before, after))| TraceComparison {
            index,
            before,
            after,
            abs_gap: after.norm() - before.norm(),
            gap: (after - before).norm(),
        })
        .collect())
}
