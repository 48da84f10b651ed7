//! Rational 2x2 matrix functions stored exactly as partial fractions plus a
//! matrix polynomial. Products, derivatives and Laurent coefficients are
//! computed on the representation, never by numerical differentiation.

use crate::error::{Error, Result};
use crate::fuchsian::{FuchsianSystem, LogConnection, MatrixField};
use crate::linalg::Mat2;
use crate::scalar::{cone, czero, Real, C};

/// `Σ_k coeffs[k] / (z - center)^(k+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PoleTerm<T: Real> {
    pub center: C<T>,
    pub coeffs: Vec<Mat2<T>>,
}

impl<T: Real> PoleTerm<T> {
    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    fn eval(&self, z: C<T>) -> Mat2<T> {
        let w = (z - self.center).inv();
        let mut acc = Mat2::zero();
        let mut pw = w;
        for c in &self.coeffs {
            acc += c.scale(pw);
            pw *= w;
        }
        acc
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RationalMatrixFunction<T: Real> {
    poles: Vec<PoleTerm<T>>,
    /// Ascending powers of `z`.
    poly: Vec<Mat2<T>>,
}

impl<T: Real> Default for RationalMatrixFunction<T> {
    fn default() -> Self {
        Self::zero()
    }
}

fn binom<T: Real>(n: usize, k: usize) -> T {
    let mut acc = T::one();
    for i in 0..k {
        acc = acc * T::lit((n - i) as f64) / T::lit((i + 1) as f64);
    }
    acc
}

fn cpowi<T: Real>(z: C<T>, k: i32) -> C<T> {
    if k >= 0 {
        z.powu(k as u32)
    } else {
        z.inv().powu((-k) as u32)
    }
}

impl<T: Real> RationalMatrixFunction<T> {
    pub fn zero() -> Self {
        RationalMatrixFunction { poles: Vec::new(), poly: Vec::new() }
    }

    pub fn constant(m: Mat2<T>) -> Self {
        RationalMatrixFunction { poles: Vec::new(), poly: vec![m] }
    }

    /// `a + b z`.
    pub fn linear(a: Mat2<T>, b: Mat2<T>) -> Self {
        RationalMatrixFunction { poles: Vec::new(), poly: vec![a, b] }
    }

    /// `m / (z - center)^order`.
    pub fn pole(center: C<T>, order: usize, m: Mat2<T>) -> Self {
        assert!(order >= 1);
        let mut coeffs = vec![Mat2::zero(); order];
        coeffs[order - 1] = m;
        RationalMatrixFunction { poles: vec![PoleTerm { center, coeffs }], poly: Vec::new() }
    }

    pub fn from_log_connection(c: &LogConnection<T>) -> Self {
        let mut out = Self::zero();
        for (a, b) in c.points.iter().zip(&c.residues) {
            out.add_pole(*a, 1, *b);
        }
        out
    }

    /// `L(z)` of a Fuchsian system (finite poles only).
    pub fn from_system(sys: &FuchsianSystem<T>) -> Self {
        let mut out = Self::zero();
        for (i, a) in sys.finite_points() {
            out.add_pole(a, 1, sys.residue(i).m);
        }
        out
    }

    pub fn poles(&self) -> &[PoleTerm<T>] {
        &self.poles
    }

    pub fn polynomial(&self) -> &[Mat2<T>] {
        &self.poly
    }

    pub fn centers(&self) -> Vec<C<T>> {
        self.poles.iter().map(|p| p.center).collect()
    }

    fn term_index(&self, center: C<T>) -> Option<usize> {
        self.poles.iter().position(|p| p.center == center)
    }

    /// Adds `m / (z - center)^order`, merging with an existing term at
    /// exactly the same center.
    pub fn add_pole(&mut self, center: C<T>, order: usize, m: Mat2<T>) {
        assert!(order >= 1);
        let k = match self.term_index(center) {
            Some(k) => k,
            None => {
                self.poles.push(PoleTerm { center, coeffs: Vec::new() });
                self.poles.len() - 1
            }
        };
        let t = &mut self.poles[k];
        if t.coeffs.len() < order {
            t.coeffs.resize(order, Mat2::zero());
        }
        t.coeffs[order - 1] += m;
    }

    /// Adds `m z^k`.
    pub fn add_monomial(&mut self, k: usize, m: Mat2<T>) {
        if self.poly.len() <= k {
            self.poly.resize(k + 1, Mat2::zero());
        }
        self.poly[k] += m;
    }

    /// Adds `m (z - b)^j` expanded in powers of `z`.
    fn add_shifted_power(&mut self, b: C<T>, j: usize, m: Mat2<T>) {
        for k in 0..=j {
            let c = cpowi(-b, (j - k) as i32).scale(binom::<T>(j, k));
            self.add_monomial(k, m.scale(c));
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for p in &other.poles {
            for (k, c) in p.coeffs.iter().enumerate() {
                out.add_pole(p.center, k + 1, *c);
            }
        }
        for (k, c) in other.poly.iter().enumerate() {
            out.add_monomial(k, *c);
        }
        out
    }

    pub fn neg(&self) -> Self {
        self.scale(-cone::<T>())
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn scale(&self, s: C<T>) -> Self {
        RationalMatrixFunction {
            poles: self
                .poles
                .iter()
                .map(|p| PoleTerm { center: p.center, coeffs: p.coeffs.iter().map(|c| c.scale(s)).collect() })
                .collect(),
            poly: self.poly.iter().map(|c| c.scale(s)).collect(),
        }
    }

    /// Exact product `self(z) * other(z)`.
    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for p in &self.poles {
            for (pi, a) in p.coeffs.iter().enumerate() {
                let po = pi + 1;
                for q in &other.poles {
                    for (qi, b) in q.coeffs.iter().enumerate() {
                        out.mul_poles(p.center, po, *a, q.center, qi + 1, *b);
                    }
                }
                for (k, b) in other.poly.iter().enumerate() {
                    out.mul_pole_monomial(p.center, po, k, *a, *b, true);
                }
            }
        }
        for (k, a) in self.poly.iter().enumerate() {
            for q in &other.poles {
                for (qi, b) in q.coeffs.iter().enumerate() {
                    out.mul_pole_monomial(q.center, qi + 1, k, *b, *a, false);
                }
            }
            for (l, b) in other.poly.iter().enumerate() {
                out.add_monomial(k + l, *a * *b);
            }
        }
        out
    }

    /// Adds `A/(z-a)^p * B/(z-b)^q` in partial fractions.
    fn mul_poles(&mut self, a: C<T>, p: usize, ma: Mat2<T>, b: C<T>, q: usize, mb: Mat2<T>) {
        let m = ma * mb;
        if a == b {
            self.add_pole(a, p + q, m);
            return;
        }
        let d = a - b;
        for r in 0..p {
            let sign = if r % 2 == 0 { T::one() } else { -T::one() };
            let alpha = cpowi(d, -((q + r) as i32)).scale(sign * binom::<T>(q + r - 1, r));
            self.add_pole(a, p - r, m.scale(alpha));
        }
        for r in 0..q {
            let sign = if r % 2 == 0 { T::one() } else { -T::one() };
            let beta = cpowi(-d, -((p + r) as i32)).scale(sign * binom::<T>(p + r - 1, r));
            self.add_pole(b, q - r, m.scale(beta));
        }
    }

    /// Adds `z^k * pole` (with the pole coefficient on the left when
    /// `pole_left`) where pole = `pm/(z-c)^order`, monomial coefficient `mono`.
    fn mul_pole_monomial(&mut self, c: C<T>, order: usize, k: usize, pm: Mat2<T>, mono: Mat2<T>, pole_left: bool) {
        let m = if pole_left { pm * mono } else { mono * pm };
        // z^k = Σ_j C(k,j) c^(k-j) (z-c)^j
        for j in 0..=k {
            let w = cpowi(c, (k - j) as i32).scale(binom::<T>(k, j));
            if j < order {
                self.add_pole(c, order - j, m.scale(w));
            } else {
                self.add_shifted_power(c, j - order, m.scale(w));
            }
        }
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self::zero();
        for p in &self.poles {
            for (k, c) in p.coeffs.iter().enumerate() {
                let order = k + 1;
                out.add_pole(p.center, order + 1, c.scale_re(-T::lit(order as f64)));
            }
        }
        for (k, c) in self.poly.iter().enumerate().skip(1) {
            out.add_monomial(k - 1, c.scale_re(T::lit(k as f64)));
        }
        out
    }

    pub fn eval(&self, z: C<T>) -> Mat2<T> {
        let mut acc: Mat2<T> = self.poles.iter().map(|p| p.eval(z)).sum();
        let mut zk = cone();
        for c in &self.poly {
            acc += c.scale(zk);
            zk *= z;
        }
        acc
    }

    /// Drops coefficients with max-entry below `tol`, empty terms and
    /// trailing polynomial zeros.
    pub fn canonicalize(&self, tol: T) -> Self {
        let mut poles = Vec::new();
        for p in &self.poles {
            let mut coeffs: Vec<Mat2<T>> = p
                .coeffs
                .iter()
                .map(|c| if c.max_abs() < tol { Mat2::zero() } else { *c })
                .collect();
            while coeffs.last().is_some_and(|c| *c == Mat2::zero()) {
                coeffs.pop();
            }
            if !coeffs.is_empty() {
                poles.push(PoleTerm { center: p.center, coeffs });
            }
        }
        let mut poly: Vec<Mat2<T>> = self
            .poly
            .iter()
            .map(|c| if c.max_abs() < tol { Mat2::zero() } else { *c })
            .collect();
        while poly.last().is_some_and(|c| *c == Mat2::zero()) {
            poly.pop();
        }
        RationalMatrixFunction { poles, poly }
    }

    /// Largest pole order over all centers (0 if pole-free).
    pub fn max_pole_order(&self) -> usize {
        self.poles.iter().map(|p| p.order()).max().unwrap_or(0)
    }

    /// Laurent coefficients of orders -2, -1, 0 about `center`. Terms whose
    /// center lies within `tol` of it count as the singular part; order 0
    /// is the value of everything else at `center`.
    pub fn laurent_coefficients(&self, center: C<T>, tol: T) -> Result<[Mat2<T>; 3]> {
        let mut out = [Mat2::zero(); 3];
        for p in &self.poles {
            if (p.center - center).norm() <= tol {
                if p.order() > 2 {
                    return Err(Error::InvalidInput(format!("pole of order {} at {}", p.order(), p.center)));
                }
                out[1] += p.coeffs[0];
                if p.order() == 2 {
                    out[0] += p.coeffs[1];
                }
            } else {
                out[2] += p.eval(center);
            }
        }
        let mut zk = cone();
        for c in &self.poly {
            out[2] += c.scale(zk);
            zk *= center;
        }
        Ok(out)
    }

    /// The Fuchsian part: simple poles only and no polynomial part, as a
    /// logarithmic connection. Higher-order or polynomial parts above `tol`
    /// are rejected.
    pub fn to_log_connection(&self, tol: T) -> Result<LogConnection<T>> {
        let c = self.canonicalize(tol);
        if !c.poly.is_empty() {
            return Err(Error::InvalidInput("polynomial part present".into()));
        }
        if c.max_pole_order() > 1 {
            return Err(Error::InvalidInput("higher-order pole present".into()));
        }
        Ok(LogConnection {
            points: c.poles.iter().map(|p| p.center).collect(),
            residues: c.poles.iter().map(|p| p.coeffs[0]).collect(),
        })
    }

    /// Sum of the traces of all simple-pole coefficients.
    pub fn trace_residue_sum(&self) -> C<T> {
        self.poles
            .iter()
            .filter_map(|p| p.coeffs.first())
            .fold(czero(), |acc, c| acc + c.trace())
    }
}

impl<T: Real> MatrixField<T> for RationalMatrixFunction<T> {
    fn eval(&self, z: C<T>) -> Result<Mat2<T>> {
        if let Some(i) = self.poles.iter().position(|p| p.center == z) {
            return Err(Error::PoleEvaluation { index: i, distance: 0.0 });
        }
        Ok(RationalMatrixFunction::eval(self, z))
    }

    fn finite_poles(&self) -> Vec<C<T>> {
        self.centers()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C<f64> {
        cplx(re, im)
    }

    fn m(a: f64, b: f64, cc: f64, d: f64) -> Mat2<f64> {
        Mat2::new(c(a, 0.1 * a), c(b, -0.2), c(cc, 0.3), c(d, 0.05))
    }

    #[test]
    fn simple_pole_laurent() {
        let b = m(0.3, 1.0, 0.2, -0.3);
        let f = RationalMatrixFunction::pole(c(0.5, 0.5), 1, b);
        let [o2, o1, o0] = f.laurent_coefficients(c(0.5, 0.5), 1e-12).unwrap();
        assert_eq!(o2, Mat2::zero());
        assert_eq!(o1, b);
        assert_eq!(o0, Mat2::zero());
        let [o2, o1, _] = f.laurent_coefficients(c(2.0, 0.0), 1e-12).unwrap();
        assert_eq!(o2, Mat2::zero());
        assert_eq!(o1, Mat2::zero());
    }

    fn sample() -> (RationalMatrixFunction<f64>, RationalMatrixFunction<f64>) {
        let mut f = RationalMatrixFunction::pole(c(0.0, 0.0), 2, m(1.0, 0.5, -0.2, 0.3));
        f.add_pole(c(1.0, 0.5), 1, m(0.2, -0.4, 1.1, 0.0));
        f.add_monomial(1, m(0.1, 0.0, 0.2, -0.3));
        f.add_monomial(0, m(0.0, 1.0, 0.0, 0.0));
        let mut g = RationalMatrixFunction::pole(c(-0.5, 1.0), 1, m(0.7, 0.1, 0.2, -0.7));
        g.add_pole(c(0.0, 0.0), 1, m(-0.3, 0.2, 0.4, 0.3));
        g.add_pole(c(1.0, 0.5), 2, m(0.05, 0.0, 0.1, 0.2));
        g.add_monomial(1, m(0.0, 0.3, 0.0, 0.1));
        (f, g)
    }

    #[test]
    fn product_matches_pointwise() {
        let (f, g) = sample();
        let h = f.mul(&g);
        for z in [c(0.3, -0.7), c(2.0, 1.0), c(-1.2, 0.4)] {
            let want = f.eval(z) * g.eval(z);
            assert!((h.eval(z) - want).norm() < 1e-12 * (1.0 + want.norm()));
        }
    }

    #[test]
    fn derivative_matches_difference_quotient() {
        let (f, _) = sample();
        let d = f.derivative();
        let z = c(0.4, -0.6);
        let h = 1e-5;
        let fd = (f.eval(z + c(h, 0.0)) - f.eval(z - c(h, 0.0))).scale_re(0.5 / h);
        assert!((d.eval(z) - fd).norm() < 1e-7);
    }

    #[test]
    fn laurent_at_stored_double_pole() {
        let (f, _) = sample();
        let [o2, o1, o0] = f.laurent_coefficients(c(0.0, 0.0), 1e-12).unwrap();
        assert_eq!(o2, m(1.0, 0.5, -0.2, 0.3));
        assert_eq!(o1, Mat2::zero());
        let rest = f.eval(c(1e-4, 0.0)) - o2.scale_re(1e8);
        assert!((rest - o0).norm() < 1e-3);
    }

    proptest! {
        #[test]
        fn product_is_exact(re in -2.0f64..2.0, im in -2.0f64..2.0) {
            let (f, g) = sample();
            let z = c(re, im);
            prop_assume!(z.norm() > 0.1 && (z - c(1.0, 0.5)).norm() > 0.1 && (z - c(-0.5, 1.0)).norm() > 0.1);
            let want = g.eval(z) * f.eval(z);
            let got = g.mul(&f).eval(z);
            prop_assert!((got - want).norm() < 1e-10 * (1.0 + want.norm()));
        }
    }
}
