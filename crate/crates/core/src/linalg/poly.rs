//! Complex polynomials in ascending coefficient order and their roots via
//! the companion matrix.

use crate::scalar::{cone, czero, Real, C};

/// `coeffs[k]` multiplies `z^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly<T: Real> {
    pub coeffs: Vec<C<T>>,
}

impl<T: Real> Poly<T> {
    pub fn new(coeffs: Vec<C<T>>) -> Self {
        Poly { coeffs }
    }

    pub fn constant(c: C<T>) -> Self {
        Poly { coeffs: vec![c] }
    }

    /// `z - r`
    pub fn linear_root(r: C<T>) -> Self {
        Poly { coeffs: vec![-r, cone()] }
    }

    pub fn from_roots(roots: &[C<T>]) -> Self {
        roots
            .iter()
            .fold(Self::constant(cone()), |p, &r| p.mul(&Self::linear_root(r)))
    }

    /// Formal degree (length minus one); no trimming.
    pub fn len_degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn eval(&self, z: C<T>) -> C<T> {
        self.coeffs.iter().rev().fold(czero(), |acc, &c| acc * z + c)
    }

    pub fn derivative(&self) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, &c)| c.scale(T::lit(k as f64)))
            .collect();
        Poly { coeffs }
    }

    pub fn add(&self, o: &Self) -> Self {
        let n = self.coeffs.len().max(o.coeffs.len());
        let coeffs = (0..n)
            .map(|k| {
                self.coeffs.get(k).copied().unwrap_or_else(czero)
                    + o.coeffs.get(k).copied().unwrap_or_else(czero)
            })
            .collect();
        Poly { coeffs }
    }

    pub fn mul(&self, o: &Self) -> Self {
        if self.coeffs.is_empty() || o.coeffs.is_empty() {
            return Poly { coeffs: vec![] };
        }
        let mut coeffs = vec![czero(); self.coeffs.len() + o.coeffs.len() - 1];
        for (i, &a) in self.coeffs.iter().enumerate() {
            for (j, &b) in o.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        Poly { coeffs }
    }

    pub fn scale(&self, s: C<T>) -> Self {
        Poly { coeffs: self.coeffs.iter().map(|&c| c * s).collect() }
    }

    /// Drops leading coefficients with modulus `<= tol`.
    pub fn trimmed(&self, tol: T) -> Self {
        let mut coeffs = self.coeffs.clone();
        while coeffs.last().is_some_and(|c| c.norm() <= tol) {
            coeffs.pop();
        }
        Poly { coeffs }
    }

    pub fn max_abs_coeff(&self) -> T {
        self.coeffs.iter().map(|c| c.norm()).fold(T::zero(), T::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RootError {
    ZeroLeading,
    NoConvergence,
}

/// Roots of a polynomial whose leading coefficient is nonzero, computed as
/// eigenvalues of the companion matrix (shifted complex QR) and polished by
/// a few Newton steps on the original polynomial.
pub fn roots<T: Real>(p: &Poly<T>) -> Result<Vec<C<T>>, RootError> {
    let d = p.len_degree();
    if d == 0 {
        return Ok(vec![]);
    }
    let lead = p.coeffs[d];
    if lead.norm() == T::zero() {
        return Err(RootError::ZeroLeading);
    }
    // Companion in upper Hessenberg form: first row holds -c_{d-1..0}.
    let mut h = vec![vec![czero::<T>(); d]; d];
    for j in 0..d {
        h[0][j] = -p.coeffs[d - 1 - j] / lead;
    }
    for i in 1..d {
        h[i][i - 1] = cone();
    }
    let mut rs = hessenberg_eigenvalues(h)?;
    let dp = p.derivative();
    for r in rs.iter_mut() {
        for _ in 0..3 {
            let f = p.eval(*r);
            let df = dp.eval(*r);
            if df.norm() == T::zero() {
                break;
            }
            let step = f / df;
            *r -= step;
            if step.norm() <= T::epsilon() * (T::one() + r.norm()) {
                break;
            }
        }
    }
    Ok(rs)
}

fn hessenberg_eigenvalues<T: Real>(mut h: Vec<Vec<C<T>>>) -> Result<Vec<C<T>>, RootError> {
    let n = h.len();
    let eps = T::epsilon();
    let mut out = Vec::with_capacity(n);
    let mut hi = n - 1;
    let mut iter = 0usize;
    let mut total = 0usize;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let s = h[l - 1][l - 1].norm() + h[l][l].norm();
            let s = if s == T::zero() { T::one() } else { s };
            if h[l][l - 1].norm() <= eps * s {
                h[l][l - 1] = czero();
                break;
            }
            l -= 1;
        }
        if l == hi {
            out.push(h[hi][hi]);
            hi -= 1;
            iter = 0;
            continue;
        }
        iter += 1;
        total += 1;
        if total > 100 * n {
            return Err(RootError::NoConvergence);
        }
        let mu = if iter % 11 == 10 {
            // exceptional shift
            h[hi][hi] + C::new(h[hi][hi - 1].norm(), T::zero())
        } else {
            wilkinson_shift(h[hi - 1][hi - 1], h[hi - 1][hi], h[hi][hi - 1], h[hi][hi])
        };
        for k in l..=hi {
            h[k][k] -= mu;
        }
        let mut rots = Vec::with_capacity(hi - l);
        for k in l..hi {
            let (x, y) = (h[k][k], h[k + 1][k]);
            let r = (x.norm_sqr() + y.norm_sqr()).sqrt();
            let (c, s) = if r == T::zero() {
                (cone(), czero())
            } else {
                (x.unscale(r), y.unscale(r))
            };
            for j in k..=hi {
                let (a, b) = (h[k][j], h[k + 1][j]);
                h[k][j] = c.conj() * a + s.conj() * b;
                h[k + 1][j] = -s * a + c * b;
            }
            rots.push((c, s));
        }
        for (idx, k) in (l..hi).enumerate() {
            let (c, s) = rots[idx];
            for row in h.iter_mut().take(hi.min(k + 2) + 1).skip(l) {
                let (a, b) = (row[k], row[k + 1]);
                row[k] = a * c + b * s;
                row[k + 1] = -a * s.conj() + b * c.conj();
            }
        }
        for k in l..=hi {
            h[k][k] += mu;
        }
    }
    out.push(h[0][0]);
    Ok(out)
}

fn wilkinson_shift<T: Real>(a: C<T>, b: C<T>, c: C<T>, d: C<T>) -> C<T> {
    let half = T::lit(0.5);
    let m = (a + d).scale(half);
    let disc = ((a - d).scale(half).powi(2) + b * c).sqrt();
    let (e1, e2) = (m + disc, m - disc);
    if (e1 - d).norm() <= (e2 - d).norm() {
        e1
    } else {
        e2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::cplx;

    fn sorted(mut v: Vec<C<f64>>) -> Vec<C<f64>> {
        v.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
        v
    }

    #[test]
    fn recovers_prescribed_roots() {
        let want = vec![
            cplx(0.3, -1.2),
            cplx(-2.0, 0.1),
            cplx(1.5, 0.7),
            cplx(0.0, 2.5),
            cplx(-0.4, -0.4),
            cplx(3.1, 0.0),
            cplx(-1.1, 1.9),
        ];
        let p = Poly::from_roots(&want).scale(cplx(0.7, 0.2));
        let got = sorted(roots(&p).unwrap());
        for (g, w) in got.iter().zip(sorted(want).iter()) {
            assert!((g - w).norm() < 1e-12, "{g} vs {w}");
        }
    }

    #[test]
    fn linear_and_quadratic() {
        let p: Poly<f64> = Poly::new(vec![cplx(-2.0, 0.0), cplx(4.0, 0.0)]);
        assert!((roots(&p).unwrap()[0] - cplx(0.5, 0.0)).norm() < 1e-15);
        let q: Poly<f64> = Poly::new(vec![cplx(1.0, 0.0), cplx(0.0, 0.0), cplx(1.0, 0.0)]);
        let r = sorted(roots(&q).unwrap());
        assert!((r[0] - cplx(0.0, -1.0)).norm() < 1e-14);
        assert!((r[1] - cplx(0.0, 1.0)).norm() < 1e-14);
    }

    #[test]
    fn zero_leading_is_an_error() {
        let p: Poly<f64> = Poly::new(vec![cplx(1.0, 0.0), cplx(0.0, 0.0)]);
        assert_eq!(roots(&p), Err(RootError::ZeroLeading));
    }
}
