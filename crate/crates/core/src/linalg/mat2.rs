//! Dense 2x2 complex matrices.

use crate::scalar::{cone, czero, Real, C};
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct Mat2<T: Real> {
    pub m: [[C<T>; 2]; 2],
}

impl<T: Real> Mat2<T> {
    pub fn new(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> Self {
        Mat2 { m: [[a, b], [c, d]] }
    }

    pub fn zero() -> Self {
        let z = czero();
        Self::new(z, z, z, z)
    }

    pub fn identity() -> Self {
        Self::new(cone(), czero(), czero(), cone())
    }

    pub fn diag(a: C<T>, d: C<T>) -> Self {
        Self::new(a, czero(), czero(), d)
    }

    pub fn scalar(s: C<T>) -> Self {
        Self::diag(s, s)
    }

    /// Outer product `u v^T` (no conjugation).
    pub fn outer(u: [C<T>; 2], v: [C<T>; 2]) -> Self {
        Self::new(u[0] * v[0], u[0] * v[1], u[1] * v[0], u[1] * v[1])
    }

    /// Matrix with the given vectors as columns.
    pub fn from_cols(c0: [C<T>; 2], c1: [C<T>; 2]) -> Self {
        Self::new(c0[0], c1[0], c0[1], c1[1])
    }

    pub fn col(&self, j: usize) -> [C<T>; 2] {
        [self.m[0][j], self.m[1][j]]
    }

    pub fn trace(&self) -> C<T> {
        self.m[0][0] + self.m[1][1]
    }

    pub fn det(&self) -> C<T> {
        self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m[0][0], self.m[1][0], self.m[0][1], self.m[1][1])
    }

    pub fn adjugate(&self) -> Self {
        Self::new(self.m[1][1], -self.m[0][1], -self.m[1][0], self.m[0][0])
    }

    /// Inverse, or `None` when the determinant vanishes exactly.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == czero() {
            return None;
        }
        Some(self.adjugate().scale(d.inv()))
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Self::new(
            self.m[0][0] * s,
            self.m[0][1] * s,
            self.m[1][0] * s,
            self.m[1][1] * s,
        )
    }

    pub fn scale_re(&self, s: T) -> Self {
        self.scale(C::new(s, T::zero()))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// Traceless part `M - tr(M)/2 I`.
    /// `A - tr(A)/2 I`, with the diagonal written as `(d, -d)` so the trace
    /// is exactly zero.
    pub fn traceless_part(&self) -> Self {
        let d = (self.m[0][0] - self.m[1][1]).scale(T::lit(0.5));
        Self::new(d, self.m[0][1], self.m[1][0], -d)
    }

    pub fn apply(&self, v: [C<T>; 2]) -> [C<T>; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }

    /// Frobenius norm.
    pub fn norm(&self) -> T {
        self.iter().map(|z| z.norm_sqr()).sum::<T>().sqrt()
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> T {
        self.iter().map(|z| z.norm()).fold(T::zero(), T::max)
    }

    pub fn iter(&self) -> impl Iterator<Item = C<T>> + '_ {
        self.m.iter().flat_map(|r| r.iter().copied())
    }

    pub fn entries(&self) -> [C<T>; 4] {
        [self.m[0][0], self.m[0][1], self.m[1][0], self.m[1][1]]
    }

    pub fn from_entries(e: &[C<T>]) -> Self {
        Self::new(e[0], e[1], e[2], e[3])
    }

    /// Both eigenvalues, ordered so that the first has the larger real part
    /// (ties by imaginary part).
    pub fn eigenvalues(&self) -> [C<T>; 2] {
        let half_tr = self.trace().scale(T::lit(0.5));
        let disc = (half_tr * half_tr - self.det()).sqrt();
        let (a, b) = (half_tr + disc, half_tr - disc);
        if (a.re, a.im) >= (b.re, b.im) {
            [a, b]
        } else {
            [b, a]
        }
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Mat2<U> {
        let f = |z: C<T>| C::new(U::lit(z.re.to_f64_lossy()), U::lit(z.im.to_f64_lossy()));
        Mat2::new(f(self.m[0][0]), f(self.m[0][1]), f(self.m[1][0]), f(self.m[1][1]))
    }
}

impl<T: Real> Index<(usize, usize)> for Mat2<T> {
    type Output = C<T>;
    fn index(&self, (i, j): (usize, usize)) -> &C<T> {
        &self.m[i][j]
    }
}

impl<T: Real> IndexMut<(usize, usize)> for Mat2<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut C<T> {
        &mut self.m[i][j]
    }
}

impl<T: Real> Add for Mat2<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(
            self.m[0][0] + o.m[0][0],
            self.m[0][1] + o.m[0][1],
            self.m[1][0] + o.m[1][0],
            self.m[1][1] + o.m[1][1],
        )
    }
}

impl<T: Real> AddAssign for Mat2<T> {
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<T: Real> Sub for Mat2<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<T: Real> SubAssign for Mat2<T> {
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<T: Real> Neg for Mat2<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.m[0][0], -self.m[0][1], -self.m[1][0], -self.m[1][1])
    }
}

impl<T: Real> Mul for Mat2<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let a = &self.m;
        let b = &o.m;
        Self::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

impl<T: Real> Mul<C<T>> for Mat2<T> {
    type Output = Self;
    fn mul(self, s: C<T>) -> Self {
        self.scale(s)
    }
}

impl<T: Real> std::iter::Sum for Mat2<T> {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Self::zero(), |a, b| a + b)
    }
}
