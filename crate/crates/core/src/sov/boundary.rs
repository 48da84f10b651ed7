use crate::error::{Error, Result};
use crate::fuchsian::{FuchsianSystem, Sign, SpherePoint};
use crate::scalar::{Real, C};

#[derive(Clone, Copy, Debug)]
pub struct BoundaryOptions<T: Real> {
    /// Divisor flag when the local coordinate is below `radius_tol * scale`.
    pub radius_tol: T,
    /// Divisor flag when `|p|` exceeds this.
    pub p_max: T,
    /// Largest admissible `|s|`; beyond it the momentum is near neither
    /// branch.
    pub slope_bound: T,
}

impl<T: Real> Default for BoundaryOptions<T> {
    fn default() -> Self {
        BoundaryOptions { radius_tol: T::lit(1e-4), p_max: T::lit(1e6), slope_bound: T::lit(1e2) }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundaryChart<T: Real> {
    pub point_index: usize,
    pub branch: Sign,
    /// Blow-up coordinate `(m - λ^±)/u`.
    pub s: C<T>,
    /// Local coordinate `u` (`x - a`, or `1/x` at infinity).
    pub local: C<T>,
    pub near_divisor: bool,
}

/// Local coordinate at a marked point: `x - a`, or `1/x` at infinity.
pub fn local_coordinate<T: Real>(point: &SpherePoint<T>, x: C<T>) -> C<T> {
    match point {
        SpherePoint::Finite(a) => x - *a,
        SpherePoint::Infinity => x.inv(),
    }
}

/// Residue-normalized fiber momentum: `(x - a) p`, or `-x p` at infinity.
/// In the normalized gauge `p = L_11(x)` diverges like `±λ_a/(x - a)`; this
/// is the quantity that tends to `±λ_a`.
pub fn fiber_momentum<T: Real>(point: &SpherePoint<T>, x: C<T>, p: C<T>) -> C<T> {
    match point {
        SpherePoint::Finite(a) => (x - *a) * p,
        SpherePoint::Infinity => -x * p,
    }
}

/// Blow-up chart `s = (m - λ_a^±)/u` at marked point `index`, where `m` is
/// the fiber momentum. `branch = None` picks the nearer of `±λ_a`. When
/// `u = 0` exactly, `s` is the one-sided difference quotient from
/// `history = (u_prev, m_prev)`.
pub fn boundary_chart<T: Real>(
    sys: &FuchsianSystem<T>,
    index: usize,
    x: C<T>,
    momentum: C<T>,
    branch: Option<Sign>,
    history: Option<(C<T>, C<T>)>,
    opts: &BoundaryOptions<T>,
) -> Result<BoundaryChart<T>> {
    let point = sys
        .points()
        .get(index)
        .ok_or_else(|| Error::InvalidInput(format!("no marked point {index}")))?;
    let lambda = sys.residue(index).lambda;
    let branch = branch.unwrap_or_else(|| {
        if (momentum - lambda).norm() <= (momentum + lambda).norm() {
            Sign::Plus
        } else {
            Sign::Minus
        }
    });
    let target = lambda.scale(branch.value());
    let u = local_coordinate(point, x);
    let scale = sys.position_scale();
    if u.norm() == T::zero() {
        let gap = (momentum - target).norm();
        if gap > T::lit(1e-8) * (T::one() + lambda.norm()) {
            return Err(Error::ChartMismatch { index });
        }
        let (u_prev, m_prev) =
            history.ok_or_else(|| Error::InvalidInput("x sits on the pole; a previous sample is needed".into()))?;
        let s = (m_prev - momentum) / u_prev;
        return Ok(BoundaryChart { point_index: index, branch, s, local: u, near_divisor: true });
    }
    let s = (momentum - target) / u;
    if s.norm() > opts.slope_bound {
        return Err(Error::ChartMismatch { index });
    }
    let p = momentum / u;
    let radius = match point {
        SpherePoint::Finite(_) => u.norm(),
        SpherePoint::Infinity => u.norm() * scale * scale,
    };
    let near_divisor = radius < opts.radius_tol * scale || p.norm() > opts.p_max;
    Ok(BoundaryChart { point_index: index, branch, s, local: u, near_divisor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Mat2;
    use crate::scalar::cplx;

    fn sys() -> FuchsianSystem<f64> {
        FuchsianSystem::from_finite(
            vec![cplx(0.0, 0.0), cplx(1.0, 0.0), cplx(0.3, 0.4)],
            vec![
                Mat2::diag(cplx(0.3, 0.0), cplx(-0.3, 0.0)),
                Mat2::diag(cplx(0.2, 0.0), cplx(-0.2, 0.0)),
                Mat2::diag(cplx(0.1, 0.0), cplx(-0.1, 0.0)),
            ],
            true,
            1e-10,
        )
        .unwrap()
    }

    #[test]
    fn ratio_definition() {
        let s = sys();
        let a: C<f64> = cplx(1.0, 0.0);
        let ch = boundary_chart(&s, 1, a + cplx(1e-3, 0.0), cplx(0.2 + 2e-3, 0.0), None, None, &BoundaryOptions::default())
            .unwrap();
        assert_eq!(ch.branch, Sign::Plus);
        assert!((ch.s - cplx(2.0, 0.0)).norm() < 1e-9);
        assert!(!ch.near_divisor);
    }

    #[test]
    fn far_momentum_mismatches() {
        let s = sys();
        let r = boundary_chart(&s, 0, cplx(1e-5, 0.0), cplx(0.05, 0.0), None, None, &BoundaryOptions::default());
        assert!(matches!(r, Err(Error::ChartMismatch { index: 0 })));
    }

    #[test]
    fn on_the_pole_uses_history() {
        let s = sys();
        // m(u) = -0.3 + 1.5 u along the approach
        let (u_prev, m_prev) = (cplx(2e-4, 0.0), cplx(-0.3 + 3e-4, 0.0));
        let ch = boundary_chart(&s, 0, cplx(0.0, 0.0), cplx(-0.3, 0.0), None, Some((u_prev, m_prev)), &BoundaryOptions::default())
            .unwrap();
        assert_eq!(ch.branch, Sign::Minus);
        assert!(ch.near_divisor);
        assert!((ch.s - cplx(1.5, 0.0)).norm() < 1e-9);
    }
}
