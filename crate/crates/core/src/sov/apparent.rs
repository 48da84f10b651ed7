use crate::error::{Error, Result};
use crate::fuchsian::{eigenvector, LogConnection, Sign};
use crate::linalg::{CMatrix, Lu, Mat2};
use crate::scalar::{Real, C};

const MAX_SWEEPS: usize = 500;
const SWEEPS_BEFORE_NEWTON: usize = 60;
const MAX_NEWTON: usize = 40;

/// Apparent point `x` with the line `direction` the projector maps onto.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ApparentPoint<T: Real> {
    pub x: C<T>,
    pub direction: [C<T>; 2],
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApparentSolution<T: Real> {
    /// `L_Θ` followed by the terms `-P_k/(z - x_k)`.
    pub connection: LogConnection<T>,
    pub projectors: Vec<Mat2<T>>,
    /// Per point: the part of `A_k v_k` off the line `v_k`, relative to `|A_k|`.
    pub obstruction: Vec<T>,
}

/// Regular part at `x_k` of `L_Θ - Σ_{m≠k} P_m/(z - x_m)`.
fn regular_part<T: Real>(theta: &LogConnection<T>, xs: &[C<T>], ps: &[Mat2<T>], k: usize) -> Mat2<T> {
    let mut a = theta.eval_l(xs[k]);
    for (m, (xm, pm)) in xs.iter().zip(ps).enumerate() {
        if m != k {
            a -= pm.scale((xs[k] - *xm).inv());
        }
    }
    a
}

/// `v w^T / (w^T v)` with `w` the left eigenvector of `a` for the eigenvalue
/// whose right eigenvector is closest to `v`.
fn spectral_projector<T: Real>(a: &Mat2<T>, v: [C<T>; 2], tol: T) -> Result<(Mat2<T>, T)> {
    let [e0, e1] = a.eigenvalues();
    let r0 = eigenvector(a, e0, tol)?;
    let r1 = eigenvector(a, e1, tol)?;
    let vl = crate::fuchsian::EigenLine::from_vector(v, tol)?;
    let mu = if vl.wedge(&r0).norm() <= vl.wedge(&r1).norm() { e0 } else { e1 };
    let w = eigenvector(&a.transpose(), mu, tol)?.vector();
    let wv = w[0] * v[0] + w[1] * v[1];
    if wv.norm() < tol {
        return Err(Error::NonTrivialBundle("projector covector annihilates the direction".into()));
    }
    let p = Mat2::outer(v, w).scale(wv.inv());
    let av = a.apply(v);
    let off = (v[0] * av[1] - v[1] * av[0]).norm() / (T::one() + a.norm());
    Ok((p, off))
}

/// `∇̃ = L_Θ - Σ P_k/(z - x_k)` with `P_k` the spectral projector of the
/// regular part `A_k` onto `direction_k`. The projectors depend on each
/// other through the `A_k`, so they are found by fixed-point sweeps. The
/// connection is apparent at `x_k` exactly when `direction_k` is invariant
/// under `A_k`; otherwise `NonInvariantDirection` reports the obstruction.
pub fn apparent_connection<T: Real>(
    theta: &LogConnection<T>,
    points: &[ApparentPoint<T>],
    tol: T,
) -> Result<ApparentSolution<T>> {
    let xs: Vec<C<T>> = points.iter().map(|p| p.x).collect();
    for (k, x) in xs.iter().enumerate() {
        if theta.points.iter().chain(&xs[..k]).any(|a| (*a - *x).norm() < tol) {
            return Err(Error::DegenerateConfiguration(format!("apparent point {k} collides with a pole")));
        }
    }
    let mut ps = vec![Mat2::zero(); points.len()];
    let mut off = vec![T::zero(); points.len()];
    let mut converged = points.is_empty();
    for _ in 0..MAX_SWEEPS {
        if converged {
            break;
        }
        let mut change = T::zero();
        for k in 0..points.len() {
            let a = regular_part(theta, &xs, &ps, k);
            let (p, o) = spectral_projector(&a, points[k].direction, tol)?;
            change = change.max((p - ps[k]).norm());
            ps[k] = p;
            off[k] = o;
        }
        converged = change < T::lit(1e-14) * (T::one() + ps.iter().map(|p| p.norm()).fold(T::zero(), T::max));
    }
    if !converged {
        return Err(Error::DegenerateConfiguration("projector iteration did not settle".into()));
    }
    for (k, o) in off.iter().enumerate() {
        if *o > tol.sqrt() {
            return Err(Error::NonInvariantDirection { index: k, obstruction: o.to_f64_lossy() });
        }
    }
    let mut connection = theta.clone();
    for (x, p) in xs.iter().zip(&ps) {
        connection.points.push(*x);
        connection.residues.push(-*p);
    }
    Ok(ApparentSolution { connection, projectors: ps, obstruction: off })
}

/// Eigenvector of `a` for the eigenvalue picked by `sel`: by position on
/// the first pass, afterwards the one whose line is closest to `prev`.
fn select_eigen<T: Real>(a: &Mat2<T>, sel: Sign, prev: Option<[C<T>; 2]>, tol: T) -> Result<[C<T>; 2]> {
    let ev = a.eigenvalues();
    let mu = match prev {
        None => {
            if sel == Sign::Plus {
                ev[0]
            } else {
                ev[1]
            }
        }
        Some(v) => {
            let vl = crate::fuchsian::EigenLine::from_vector(v, tol)?;
            let r0 = eigenvector(a, ev[0], tol)?;
            let r1 = eigenvector(a, ev[1], tol)?;
            if vl.wedge(&r0).norm() <= vl.wedge(&r1).norm() {
                ev[0]
            } else {
                ev[1]
            }
        }
    };
    Ok(eigenvector(a, mu, tol)?.vector())
}

/// One Jacobi pass: every projector recomputed from the previous set.
fn projector_map<T: Real>(
    theta: &LogConnection<T>,
    xs: &[C<T>],
    ps: &[Mat2<T>],
    dirs: &[[C<T>; 2]],
    tol: T,
) -> Result<(Vec<Mat2<T>>, Vec<[C<T>; 2]>)> {
    let mut out = Vec::with_capacity(xs.len());
    let mut vs = Vec::with_capacity(xs.len());
    for k in 0..xs.len() {
        let a = regular_part(theta, xs, ps, k);
        let v = select_eigen(&a, Sign::Plus, Some(dirs[k]), tol)?;
        out.push(spectral_projector(&a, v, tol)?.0);
        vs.push(v);
    }
    Ok((out, vs))
}

fn flatten<T: Real>(ps: &[Mat2<T>]) -> Vec<C<T>> {
    ps.iter().flat_map(|p| p.entries()).collect()
}

fn unflatten<T: Real>(x: &[C<T>]) -> Vec<Mat2<T>> {
    x.chunks(4).map(Mat2::from_entries).collect()
}

fn max_norm<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|z| z.norm()).fold(T::zero(), T::max)
}

/// Self-consistent invariant lines: `direction_k` is the eigenvector of
/// `A_k` for its first (`Plus`) or second (`Minus`) eigenvalue, where
/// `A_k` itself depends on the other projectors. The branch is fixed on
/// the first sweep and followed by continuity. Sweeps that stall are
/// finished by Newton on the projector map.
pub fn invariant_directions<T: Real>(
    theta: &LogConnection<T>,
    xs: &[C<T>],
    choice: &[Sign],
    tol: T,
) -> Result<Vec<ApparentPoint<T>>> {
    if xs.len() != choice.len() {
        return Err(Error::InvalidInput("one eigenvalue choice per apparent point".into()));
    }
    let done = |dirs: Vec<[C<T>; 2]>| -> Vec<ApparentPoint<T>> {
        xs.iter().zip(dirs).map(|(x, d)| ApparentPoint { x: *x, direction: d }).collect()
    };
    let eps = T::lit(1e-14);
    let mut ps = vec![Mat2::zero(); xs.len()];
    let mut dirs: Vec<[C<T>; 2]> = Vec::with_capacity(xs.len());
    for k in 0..xs.len() {
        let a = regular_part(theta, xs, &ps, k);
        let v = select_eigen(&a, choice[k], None, tol)?;
        ps[k] = spectral_projector(&a, v, tol)?.0;
        dirs.push(v);
    }
    for _ in 0..SWEEPS_BEFORE_NEWTON {
        let mut change = T::zero();
        for k in 0..xs.len() {
            let a = regular_part(theta, xs, &ps, k);
            let v = select_eigen(&a, Sign::Plus, Some(dirs[k]), tol)?;
            let (p, _) = spectral_projector(&a, v, tol)?;
            change = change.max((p - ps[k]).norm());
            ps[k] = p;
            dirs[k] = v;
        }
        if change < eps * (T::one() + ps.iter().map(|p| p.norm()).fold(T::zero(), T::max)) {
            return Ok(done(dirs));
        }
    }

    // Newton on G(x) = Φ(x) - x with a forward-difference Jacobian.
    let mut x = flatten(&ps);
    let n = x.len();
    let residual = |x: &[C<T>], dirs: &[[C<T>; 2]]| -> Result<(Vec<C<T>>, Vec<[C<T>; 2]>)> {
        let (phi, vs) = projector_map(theta, xs, &unflatten(x), dirs, tol)?;
        let g = flatten(&phi).iter().zip(x).map(|(a, b)| *a - *b).collect();
        Ok((g, vs))
    };
    let (mut g, mut vs) = residual(&x, &dirs)?;
    for _ in 0..MAX_NEWTON {
        let scale = T::one() + max_norm(&x);
        if max_norm(&g) < eps * T::lit(10.0) * scale {
            return Ok(done(vs));
        }
        let h = T::lit(1e-7) * scale;
        let mut jac = CMatrix::zeros(n, n);
        for j in 0..n {
            let mut xp = x.clone();
            xp[j] += C::new(h, T::zero());
            let (gp, _) = residual(&xp, &vs)?;
            for i in 0..n {
                jac[(i, j)] = (gp[i] - g[i]) / C::new(h, T::zero());
            }
        }
        let lu = Lu::factor(&jac)
            .ok_or_else(|| Error::DegenerateConfiguration("invariant-direction Jacobian is singular".into()))?;
        let step = lu.solve(&g);
        let g0 = max_norm(&g);
        let mut t = T::one();
        loop {
            let xt: Vec<C<T>> = x.iter().zip(&step).map(|(a, d)| *a - d.scale(t)).collect();
            if let Ok((gt, vt)) = residual(&xt, &vs) {
                if max_norm(&gt) < g0 || t < T::lit(1e-3) {
                    x = xt;
                    g = gt;
                    vs = vt;
                    break;
                }
            }
            t = t * T::lit(0.5);
            if t < T::lit(1e-4) {
                return Err(Error::DegenerateConfiguration("invariant-direction iteration did not settle".into()));
            }
        }
    }
    Err(Error::DegenerateConfiguration("invariant-direction iteration did not settle".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::{random_residue, rng_from_seed};
    use crate::scalar::cplx;
    use crate::transport::local_monodromy;

    fn theta(seed: u64) -> LogConnection<f64> {
        let mut rng = rng_from_seed(seed);
        let lam = [0.21, 0.34, 0.17];
        let pts = vec![cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(0.4, 1.1)];
        // pattern (λ, 1-λ) at the first point, (λ, -λ) at the others
        let mut res = Vec::new();
        for (i, l) in lam.iter().enumerate() {
            let b = random_residue::<f64, _>(&mut rng, cplx(*l, 0.0), 4.0);
            res.push(if i == 0 { b + Mat2::scalar(cplx(0.5, 0.0)) } else { b });
        }
        LogConnection { points: pts, residues: res }
    }

    #[test]
    fn no_points_is_identity() {
        let th = theta(1);
        let sol = apparent_connection(&th, &[], 1e-10).unwrap();
        assert_eq!(sol.connection, th);
    }

    #[test]
    fn apparent_points_have_trivial_monodromy() {
        let th = theta(2);
        let xs = [cplx(-0.6, 0.5), cplx(1.3, 0.9)];
        let pts = invariant_directions(&th, &xs, &[Sign::Plus, Sign::Minus], 1e-12).unwrap();
        let sol = apparent_connection(&th, &pts, 1e-10).unwrap();
        for x in xs {
            let m = local_monodromy(&sol.connection, x, 1e-11).unwrap();
            assert!((m - Mat2::identity()).norm() < 1e-6, "{:e}", (m - Mat2::identity()).norm());
        }
    }

    #[test]
    fn non_invariant_direction_is_rejected() {
        let th = theta(3);
        let x = cplx(-0.6, 0.5);
        let a = th.eval_l(x);
        let v0 = eigenvector(&a, a.eigenvalues()[0], 1e-12).unwrap().vector();
        let v1 = eigenvector(&a, a.eigenvalues()[1], 1e-12).unwrap().vector();
        let mixed = [v0[0] + v1[0], v0[1] + v1[1]];
        let r = apparent_connection(&th, &[ApparentPoint { x, direction: mixed }], 1e-10);
        assert!(matches!(r, Err(Error::NonInvariantDirection { index: 0, .. })));
    }
}
