use super::{entry_numerator, finite_data};
use crate::fuchsian::FuchsianSystem;
use crate::linalg::Poly;
use crate::scalar::{czero, Real, C};

/// `det L(z)` as `numerator(z) / Π (z - a_i)^2`, with its partial-fraction
/// data: `det L = Σ d_i/(z - a_i)^2 + Σ c_i/(z - a_i)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralCurveData<T: Real> {
    pub poles: Vec<C<T>>,
    pub numerator: Poly<T>,
    /// `d_i = det B_i`; equals `-λ_i^2` for traceless residues.
    pub double_pole: Vec<C<T>>,
    /// Accessory parameters `c_i`.
    pub accessory: Vec<C<T>>,
}

impl<T: Real> SpectralCurveData<T> {
    pub fn det_l(&self, z: C<T>) -> C<T> {
        let den = self.poles.iter().fold(C::new(T::one(), T::zero()), |acc, a| acc * (z - *a) * (z - *a));
        self.numerator.eval(z) / den
    }

    /// `R(z, μ) = det(L(z) - μ I) = μ^2 + det L(z)` (trace-free `L`).
    pub fn eval(&self, z: C<T>, mu: C<T>) -> C<T> {
        mu * mu + self.det_l(z)
    }
}

pub fn spectral_curve<T: Real>(sys: &FuchsianSystem<T>) -> SpectralCurveData<T> {
    let (a, b) = finite_data(sys);
    let n11 = entry_numerator(&a, &b, 0, 0);
    let n12 = entry_numerator(&a, &b, 0, 1);
    let n21 = entry_numerator(&a, &b, 1, 0);
    let n22 = entry_numerator(&a, &b, 1, 1);
    let numerator = n11.mul(&n22).add(&n12.mul(&n21).scale(-C::new(T::one(), T::zero())));
    let double_pole = b.iter().map(|m| m.det()).collect();
    let accessory = (0..a.len())
        .map(|i| {
            (0..a.len()).filter(|&j| j != i).fold(czero(), |acc, j| {
                // det is quadratic; its polarization gives the cross terms
                let cross = (b[i] + b[j]).det() - b[i].det() - b[j].det();
                acc + cross / (a[i] - a[j])
            })
        })
        .collect();
    SpectralCurveData { poles: a, numerator, double_pole, accessory }
}
