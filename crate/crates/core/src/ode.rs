//! Adaptive Dormand–Prince 5(4) integrator with PI step-size control for
//! complex-valued first-order systems on a real interval.

use crate::error::{Error, Result};
use crate::scalar::{Real, C};

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<T: Real> {
    pub rtol: T,
    pub atol: T,
    /// Smallest admissible step as a fraction of the interval length.
    pub min_step_fraction: T,
    pub max_steps: usize,
}

impl<T: Real> OdeOptions<T> {
    pub fn with_tol(tol: T) -> Self {
        OdeOptions { rtol: tol, atol: tol, min_step_fraction: T::lit(1e-13), max_steps: 2_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
    /// Largest accepted local error estimate (weighted RMS, units of tol).
    pub max_error: f64,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<T: Real>(out: &mut [C<T>], y: &[C<T>], terms: &[(T, &[C<T>])]) {
    for i in 0..y.len() {
        let mut acc = y[i];
        for (w, k) in terms {
            acc += k[i].scale(*w);
        }
        out[i] = acc;
    }
}

/// Integrates `dy/ds = f(s, y)` from `s0` to `s1` (`s1 > s0`), overwriting
/// `y`. `observer(s, y)` runs after every accepted step, including the last.
pub fn integrate<T, F, O>(mut f: F, s0: T, s1: T, y: &mut [C<T>], opts: &OdeOptions<T>, mut observer: O) -> Result<OdeStats>
where
    T: Real,
    F: FnMut(T, &[C<T>], &mut [C<T>]) -> Result<()>,
    O: FnMut(T, &[C<T>]),
{
    let n = y.len();
    let span = s1 - s0;
    let mut stats = OdeStats::default();
    if n == 0 || !(span > T::zero()) {
        observer(s1.max(s0), y);
        return Ok(stats);
    }
    let l = T::lit;
    let min_step = span * opts.min_step_fraction;
    let mut k: Vec<Vec<C<T>>> = vec![vec![C::new(T::zero(), T::zero()); n]; 7];
    let mut tmp = vec![C::new(T::zero(), T::zero()); n];
    let mut ynew = vec![C::new(T::zero(), T::zero()); n];

    f(s0, y, &mut k[0])?;
    stats.evaluations += 1;

    // initial step from the usual derivative-based heuristic
    let wnorm = |v: &[C<T>], y: &[C<T>]| -> T {
        let mut acc = T::zero();
        for i in 0..n {
            let sc = opts.atol + opts.rtol * y[i].norm();
            let r = v[i].norm() / sc;
            acc += r * r;
        }
        (acc / l(n as f64)).sqrt()
    };
    let d0 = wnorm(y, y);
    let d1 = wnorm(&k[0], y);
    let mut h = if d0 < l(1e-5) || d1 < l(1e-5) { l(1e-3) * span } else { l(0.01) * d0 / d1 };
    h = h.min(span).max(min_step * l(10.0));

    let mut s = s0;
    let mut err_prev = l(1e-4);
    let beta = l(0.04);
    let alpha = l(0.2) - beta * l(0.75);
    let mut last_rejected = false;

    while s < s1 {
        if stats.accepted + stats.rejected > opts.max_steps {
            return Err(Error::StepUnderflow { at: s.to_f64_lossy(), min_step: h.to_f64_lossy() });
        }
        let remaining = s1 - s;
        let last = h >= remaining;
        if last {
            h = remaining;
        }

        {
            let (k0, rest) = k.split_at_mut(1);
            axpy(&mut tmp, y, &[(h * l(A21), &k0[0])]);
            f(s + h * l(C2), &tmp, &mut rest[0])?;
        }
        {
            let (a, b) = k.split_at_mut(2);
            axpy(&mut tmp, y, &[(h * l(A31), &a[0]), (h * l(A32), &a[1])]);
            f(s + h * l(C3), &tmp, &mut b[0])?;
        }
        {
            let (a, b) = k.split_at_mut(3);
            axpy(&mut tmp, y, &[(h * l(A41), &a[0]), (h * l(A42), &a[1]), (h * l(A43), &a[2])]);
            f(s + h * l(C4), &tmp, &mut b[0])?;
        }
        {
            let (a, b) = k.split_at_mut(4);
            axpy(
                &mut tmp,
                y,
                &[(h * l(A51), &a[0]), (h * l(A52), &a[1]), (h * l(A53), &a[2]), (h * l(A54), &a[3])],
            );
            f(s + h * l(C5), &tmp, &mut b[0])?;
        }
        {
            let (a, b) = k.split_at_mut(5);
            axpy(
                &mut tmp,
                y,
                &[
                    (h * l(A61), &a[0]),
                    (h * l(A62), &a[1]),
                    (h * l(A63), &a[2]),
                    (h * l(A64), &a[3]),
                    (h * l(A65), &a[4]),
                ],
            );
            f(s + h, &tmp, &mut b[0])?;
        }
        axpy(
            &mut ynew,
            y,
            &[(h * l(B1), &k[0]), (h * l(B3), &k[2]), (h * l(B4), &k[3]), (h * l(B5), &k[4]), (h * l(B6), &k[5])],
        );
        let s_next = if last { s1 } else { s + h };
        {
            let (a, b) = k.split_at_mut(6);
            f(s_next, &ynew, &mut b[0])?;
            let _ = a;
        }
        stats.evaluations += 6;

        let mut acc = T::zero();
        for i in 0..n {
            let e = (k[0][i].scale(l(E1))
                + k[2][i].scale(l(E3))
                + k[3][i].scale(l(E4))
                + k[4][i].scale(l(E5))
                + k[5][i].scale(l(E6))
                + k[6][i].scale(l(E7)))
            .scale(h);
            let sc = opts.atol + opts.rtol * y[i].norm().max(ynew[i].norm());
            let r = e.norm() / sc;
            acc += r * r;
        }
        let err = (acc / l(n as f64)).sqrt();
        if !err.is_finite() {
            h = h * l(0.2);
            stats.rejected += 1;
            last_rejected = true;
            if h < min_step {
                return Err(Error::StepUnderflow { at: s.to_f64_lossy(), min_step: min_step.to_f64_lossy() });
            }
            continue;
        }

        if err <= T::one() {
            let e = err.max(l(1e-10));
            let mut fac = l(0.9) * e.powf(-alpha) * err_prev.powf(beta);
            fac = fac.max(l(0.2)).min(if last_rejected { T::one() } else { l(5.0) });
            err_prev = e;
            s = s_next;
            y.copy_from_slice(&ynew);
            k.swap(0, 6);
            stats.accepted += 1;
            stats.max_error = stats.max_error.max(err.to_f64_lossy());
            observer(s, y);
            last_rejected = false;
            h = h * fac;
        } else {
            let fac = (l(0.9) * err.powf(-alpha)).max(l(0.2));
            h = h * fac;
            stats.rejected += 1;
            last_rejected = true;
        }
        if h < min_step && s < s1 {
            return Err(Error::StepUnderflow { at: s.to_f64_lossy(), min_step: min_step.to_f64_lossy() });
        }
    }
    Ok(stats)
}
