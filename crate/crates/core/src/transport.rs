//! Transport of the fundamental solution along polylines and monodromy
//! generators based at a common point.

use crate::error::{Error, Result};
use crate::fuchsian::{FuchsianSystem, MatrixField};
use crate::linalg::Mat2;
use crate::ode::{integrate, OdeOptions, OdeStats};
use crate::scalar::{Real, C};
use rayon::prelude::*;

pub const DEFAULT_CLEARANCE: f64 = 1e-3;
pub const DEFAULT_TOL_ODE: f64 = 1e-9;
pub const DEFAULT_TOL_MON: f64 = 1e-6;
pub const CIRCLE_SEGMENTS: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct PathPlan<T: Real> {
    pub vertices: Vec<C<T>>,
    pub clearance: T,
}

/// Distance from `p` to the segment `[a, b]`.
pub fn segment_distance<T: Real>(a: C<T>, b: C<T>, p: C<T>) -> T {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == T::zero() {
        return (p - a).norm();
    }
    let s = ((p - a) * d.conj()).re / len2;
    let s = s.max(T::zero()).min(T::one());
    (a + d.scale(s) - p).norm()
}

impl<T: Real> PathPlan<T> {
    pub fn new(vertices: Vec<C<T>>, clearance: T) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::InvalidInput("path needs at least one vertex".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidInput("consecutive path vertices coincide".into()));
        }
        if !(clearance > T::zero()) {
            return Err(Error::InvalidInput("clearance must be positive".into()));
        }
        Ok(PathPlan { vertices, clearance })
    }

    pub fn length(&self) -> T {
        self.vertices.windows(2).map(|w| (w[1] - w[0]).norm()).fold(T::zero(), |a, b| a + b)
    }

    pub fn check_clearance(&self, poles: &[C<T>]) -> Result<()> {
        for (segment, w) in self.vertices.windows(2).enumerate() {
            for (pole, p) in poles.iter().enumerate() {
                let distance = segment_distance(w[0], w[1], *p);
                if distance < self.clearance {
                    return Err(Error::ClearanceViolation { segment, pole, distance: distance.to_f64_lossy() });
                }
            }
        }
        Ok(())
    }

    pub fn reversed(&self) -> Self {
        let mut v = self.vertices.clone();
        v.reverse();
        PathPlan { vertices: v, clearance: self.clearance }
    }
}

fn mat_to_state<T: Real>(m: &Mat2<T>) -> [C<T>; 4] {
    m.entries()
}

/// Integrates `Y' = L(z) Y` along `path` starting from `y0`; each segment is
/// parameterized linearly by `s in [0, 1]`.
pub fn transport<T: Real, F: MatrixField<T> + ?Sized>(
    field: &F,
    path: &PathPlan<T>,
    y0: Mat2<T>,
    tol_ode: T,
) -> Result<Mat2<T>> {
    transport_with_stats(field, path, y0, tol_ode).map(|(y, _)| y)
}

pub fn transport_with_stats<T: Real, F: MatrixField<T> + ?Sized>(
    field: &F,
    path: &PathPlan<T>,
    y0: Mat2<T>,
    tol_ode: T,
) -> Result<(Mat2<T>, OdeStats)> {
    if y0.det().norm() == T::zero() {
        return Err(Error::InvalidInput("initial fundamental matrix is singular".into()));
    }
    path.check_clearance(&field.finite_poles())?;
    let opts = OdeOptions::with_tol(tol_ode);
    let mut y = mat_to_state(&y0);
    let mut total = OdeStats::default();
    for w in path.vertices.windows(2) {
        let (a, delta) = (w[0], w[1] - w[0]);
        let stats = integrate(
            |s, y, dy| {
                let l = field.eval(a + delta.scale(s))?.scale(delta);
                let ym = Mat2::from_entries(y);
                dy.copy_from_slice(&(l * ym).entries());
                Ok(())
            },
            T::zero(),
            T::one(),
            &mut y,
            &opts,
            |_, _| {},
        )?;
        total.accepted += stats.accepted;
        total.rejected += stats.rejected;
        total.evaluations += stats.evaluations;
        total.max_error = total.max_error.max(stats.max_error);
    }
    Ok((Mat2::from_entries(&y), total))
}

/// Counterclockwise loop based at `base` around one singular point.
#[derive(Clone, Debug, PartialEq)]
pub struct Loop<T: Real> {
    pub base: C<T>,
    pub target_index: usize,
    pub target: C<T>,
    pub radius: T,
}

impl<T: Real> Loop<T> {
    /// Loop around `poles[target_index]` with the default radius, a quarter
    /// of the distance to the nearest other pole (capped so that the base
    /// stays outside the circle).
    pub fn around(poles: &[C<T>], base: C<T>, target_index: usize) -> Result<Self> {
        let target = *poles
            .get(target_index)
            .ok_or_else(|| Error::InvalidInput(format!("no pole with index {target_index}")))?;
        let to_base = (base - target).norm();
        if to_base == T::zero() {
            return Err(Error::InvalidInput("base point coincides with a pole".into()));
        }
        let nearest = poles
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != target_index)
            .map(|(_, p)| (*p - target).norm())
            .fold(T::infinity(), T::min);
        let mut radius = T::lit(0.25) * nearest;
        if !radius.is_finite() {
            radius = T::lit(0.5) * to_base;
        }
        radius = radius.min(T::lit(0.5) * to_base);
        Ok(Loop { base, target_index, target, radius })
    }

    /// Approach segment, 64-gon starting at the approach point, and return.
    pub fn circuit(&self) -> Result<PathPlan<T>> {
        let dir = (self.base - self.target).unscale((self.base - self.target).norm());
        let start = self.target + dir.scale(self.radius);
        let mut v = vec![self.base, start];
        let step = T::lit(2.0) * T::PI() / T::lit(CIRCLE_SEGMENTS as f64);
        for k in 1..CIRCLE_SEGMENTS {
            let rot = C::from_polar(T::one(), step * T::lit(k as f64));
            v.push(self.target + dir * rot.scale(self.radius));
        }
        v.push(start);
        v.push(self.base);
        let clearance = (T::lit(DEFAULT_CLEARANCE)).min(T::lit(0.5) * self.radius);
        PathPlan::new(v, clearance)
    }
}

/// Monodromy along `lp` with `Y(start) = I`.
pub fn monodromy<T: Real, F: MatrixField<T> + ?Sized>(field: &F, lp: &Loop<T>, tol_ode: T) -> Result<Mat2<T>> {
    transport(field, &lp.circuit()?, Mat2::identity(), tol_ode)
}

/// Monodromy around a point given by position (for example an apparent
/// singularity), with the base point a little outside its default circle.
pub fn local_monodromy<T: Real, F: MatrixField<T> + ?Sized>(field: &F, point: C<T>, tol_ode: T) -> Result<Mat2<T>> {
    let poles = field.finite_poles();
    let idx = poles
        .iter()
        .position(|p| *p == point)
        .ok_or_else(|| Error::InvalidInput("point is not a pole of the field".into()))?;
    let nearest = poles
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != idx)
        .map(|(_, p)| (*p - point).norm())
        .fold(T::infinity(), T::min);
    let reach = if nearest.is_finite() { T::lit(0.5) * nearest } else { T::one() };
    let base = point + C::new(reach * T::lit(0.6), reach * T::lit(0.8));
    monodromy(field, &Loop::around(&poles, base, idx)?, tol_ode)
}

/// Generators based at one point. `matrices[i]` belongs to `points[i]` of the
/// source system; `order` lists finite point indices by increasing
/// `arg(a_i - base)` (ties by modulus), the convention under which
/// `M_inf * M_order[m-1] * ... * M_order[0] = I`.
#[derive(Clone, Debug, PartialEq)]
pub struct MonodromyRep<T: Real> {
    pub base: C<T>,
    pub matrices: Vec<Mat2<T>>,
    pub order: Vec<usize>,
    /// Deviation of the product relation from the identity. With infinity
    /// marked, its generator is computed from an independent big loop, so
    /// this is a genuine self-consistency error.
    pub est_error: T,
}

impl<T: Real> MonodromyRep<T> {
    /// `M_order[m-1] ... M_order[0]`.
    pub fn finite_product(&self) -> Mat2<T> {
        self.order.iter().fold(Mat2::identity(), |acc, &i| self.matrices[i] * acc)
    }

    pub fn traces(&self) -> Vec<C<T>> {
        self.matrices.iter().map(|m| m.trace()).collect()
    }
}

/// Finite point indices sorted by `arg(a_i - base)` increasing, ties by
/// modulus.
pub fn loop_order<T: Real>(points: &[(usize, C<T>)], base: C<T>) -> Vec<usize> {
    let mut v: Vec<(T, T, usize)> = points.iter().map(|&(i, a)| ((a - base).arg(), (a - base).norm(), i)).collect();
    v.sort_by(|x, y| {
        x.0.partial_cmp(&y.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(x.1.partial_cmp(&y.1).unwrap_or(std::cmp::Ordering::Equal))
    });
    v.into_iter().map(|t| t.2).collect()
}

/// Counterclockwise circle around every finite pole, entered from `base`
/// along a ray inside the angular gap that contains the direction `arg = π`
/// (the cut of the ordering convention).
fn enclosing_circuit<T: Real>(poles: &[C<T>], base: C<T>) -> Result<PathPlan<T>> {
    let pi = T::PI();
    let two_pi = T::lit(2.0) * pi;
    let (mut lo, mut hi) = (pi, -pi);
    for p in poles {
        let a = (*p - base).arg();
        lo = lo.min(a);
        hi = hi.max(a);
    }
    // gap (hi, lo + 2π) contains π
    let theta = if poles.is_empty() { pi } else { T::lit(0.5) * (hi + lo + two_pi) };
    let reach = poles.iter().map(|p| (*p - base).norm()).fold(T::zero(), T::max);
    let radius = T::lit(2.0) * reach + T::one();
    let dir = C::from_polar(T::one(), theta);
    let start = base + dir.scale(radius);
    let mut v = vec![base, start];
    let n = 4 * CIRCLE_SEGMENTS;
    for k in 1..n {
        let rot = C::from_polar(T::one(), two_pi * T::lit(k as f64) / T::lit(n as f64));
        v.push(base + dir * rot.scale(radius));
    }
    v.push(start);
    v.push(base);
    let gap_clear = poles
        .iter()
        .map(|p| segment_distance(base, start, *p))
        .fold(T::infinity(), T::min);
    let clearance = T::lit(DEFAULT_CLEARANCE).min(T::lit(0.5) * gap_clear);
    PathPlan::new(v, if clearance.is_finite() { clearance } else { T::lit(DEFAULT_CLEARANCE) })
}

/// One generator per marked point. Loops run in parallel; each result only
/// depends on its own loop, so the output is deterministic.
pub fn monodromy_rep<T: Real>(sys: &FuchsianSystem<T>, base: C<T>, tol_ode: T) -> Result<MonodromyRep<T>> {
    let finite = sys.finite_points();
    let poles: Vec<C<T>> = finite.iter().map(|p| p.1).collect();
    if let Some((i, a)) = finite.iter().find(|(_, a)| (*a - base).norm() < sys.tol_alg()) {
        return Err(Error::PoleEvaluation { index: *i, distance: (*a - base).norm().to_f64_lossy() });
    }
    let order = loop_order(&finite, base);
    let loops: Vec<(usize, Loop<T>)> = finite
        .iter()
        .enumerate()
        .map(|(k, &(i, _))| Loop::around(&poles, base, k).map(|l| (i, l)))
        .collect::<Result<_>>()?;
    let results: Vec<Result<(usize, Mat2<T>)>> =
        loops.par_iter().map(|(i, l)| monodromy(sys, l, tol_ode).map(|m| (*i, m))).collect();
    let mut matrices = vec![Mat2::identity(); sys.n()];
    for r in results {
        let (i, m) = r?;
        matrices[i] = m;
    }
    let mut rep = MonodromyRep { base, matrices, order, est_error: T::zero() };
    let product = rep.finite_product();
    let closing = match sys.infinity_index() {
        Some(k) => {
            let big = transport(sys, &enclosing_circuit(&poles, base)?, Mat2::identity(), tol_ode)?;
            let m_inf = big.inverse().ok_or(Error::DegenerateConfiguration("singular big-loop monodromy".into()))?;
            rep.matrices[k] = m_inf;
            m_inf * product
        }
        None => product,
    };
    rep.est_error = (closing - Mat2::identity()).norm();
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fuchsian::LogConnection;
    use crate::scalar::cplx;

    fn c(re: f64, im: f64) -> C<f64> {
        cplx(re, im)
    }

    #[test]
    fn zero_field_is_identity() {
        let f = LogConnection::<f64> { points: vec![], residues: vec![] };
        let p = PathPlan::new(vec![c(0.0, 0.0), c(1.0, 1.0), c(-2.0, 0.5)], 1e-3).unwrap();
        let y0 = Mat2::new(c(1.0, 0.0), c(2.0, 0.0), c(0.0, 1.0), c(1.0, 0.0));
        assert_eq!(transport(&f, &p, y0, 1e-9).unwrap(), y0);
    }

    #[test]
    fn abelian_straight_path() {
        let lam = [0.3, -0.17];
        let sys = FuchsianSystem::from_finite(
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![Mat2::diag(c(lam[0], 0.0), c(-lam[0], 0.0)), Mat2::diag(c(lam[1], 0.0), c(-lam[1], 0.0))],
            true,
            1e-10,
        )
        .unwrap();
        let (z0, z1) = (c(0.5, 0.5), c(2.0, 1.0));
        let p = PathPlan::new(vec![z0, z1], 1e-3).unwrap();
        let y = transport(&sys, &p, Mat2::identity(), 1e-11).unwrap();
        // principal logs are continuous along this path (no cut crossing)
        let f = |z: C<f64>| ((z).ln() - z0.ln()).scale(lam[0]) + ((z - 1.0).ln() - (z0 - 1.0).ln()).scale(lam[1]);
        let want = Mat2::diag(f(z1).exp(), (-f(z1)).exp());
        assert!((y - want).norm() < 1e-9);
    }

    #[test]
    fn clearance_violation() {
        let sys = FuchsianSystem::from_finite(vec![c(0.0, 0.0)], vec![Mat2::diag(c(0.3, 0.0), c(-0.3, 0.0))], true, 1e-10)
            .unwrap();
        let p = PathPlan::new(vec![c(-1.0, 0.0), c(1.0, 0.0)], 1e-3).unwrap();
        assert!(matches!(
            transport(&sys, &p, Mat2::identity(), 1e-9),
            Err(Error::ClearanceViolation { segment: 0, pole: 0, .. })
        ));
    }

    #[test]
    fn abelian_loop_and_contractible_loop() {
        let sys = FuchsianSystem::from_finite(
            vec![c(0.0, 0.0), c(1.0, 0.0)],
            vec![Mat2::diag(c(0.3, 0.0), c(-0.3, 0.0)), Mat2::diag(c(0.1, 0.0), c(-0.1, 0.0))],
            true,
            1e-10,
        )
        .unwrap();
        let poles = [c(0.0, 0.0), c(1.0, 0.0)];
        let lp = Loop::around(&poles, c(0.3, 0.8), 0).unwrap();
        let m = monodromy(&sys, &lp, 1e-10).unwrap();
        let e = c(0.0, 2.0 * std::f64::consts::PI * 0.3).exp();
        assert!((m - Mat2::diag(e, e.inv())).norm() < 1e-7);

        let away = PathPlan::new(
            vec![c(3.0, 3.0), c(4.0, 3.0), c(4.0, 4.0), c(3.0, 4.0), c(3.0, 3.0)],
            1e-3,
        )
        .unwrap();
        let m = transport(&sys, &away, Mat2::identity(), 1e-10).unwrap();
        assert!((m - Mat2::identity()).norm() < 1e-7);
    }
}

#[cfg(test)]
mod relation_tests {
    use super::*;
    use crate::random::{seeded_system, RandomSpec};
    use crate::scalar::cplx;

    #[test]
    fn product_relation_holds_for_random_systems() {
        for seed in 0..4u64 {
            let sys = seeded_system::<f64>(seed, &RandomSpec::new(4 + (seed as usize % 2))).unwrap();
            let rep = monodromy_rep(&sys, cplx(0.13, -2.71), 1e-10).unwrap();
            assert!(rep.est_error < 1e-6, "seed {seed}: {:e}", rep.est_error);
            for (i, m) in rep.matrices.iter().enumerate() {
                assert!((m.det() - cplx(1.0, 0.0)).norm() < 1e-6);
                let l = sys.residue(i).lambda;
                let want = (l * cplx(0.0, 2.0 * std::f64::consts::PI)).exp();
                let tr = want + want.inv();
                assert!((m.trace() - tr).norm() < 1e-6, "seed {seed} point {i}");
            }
        }
    }
}
