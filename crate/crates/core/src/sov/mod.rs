//! Separation of variables: after conjugating `B_inf` to `diag(λ_inf, -λ_inf)`
//! and fixing the torus so that the numerator of `L_12` is monic, the zeros
//! `x_k` of `L_12` and `p_k = L_11(x_k)` are Darboux coordinates.

mod apparent;
mod boundary;
mod bracket;
mod reconstruct;
mod spectral;

pub use apparent::{apparent_connection, invariant_directions, ApparentPoint, ApparentSolution};
pub use boundary::{boundary_chart, fiber_momentum, BoundaryChart, BoundaryOptions};
pub use bracket::{observable_p, observable_x, poisson_bracket, BracketOptions, Observable};
pub use reconstruct::{reconstruct, Reconstruction};
pub use spectral::{spectral_curve, SpectralCurveData};

use crate::error::{Error, Result};
use crate::fuchsian::{eigenvector, FuchsianSystem};
use crate::linalg::{roots, Mat2, Poly};
use crate::scalar::{czero, Real, C};

#[derive(Clone, Debug, PartialEq)]
pub struct SeparatedData<T: Real> {
    /// `G` with `B_i' = G B_i G^-1`.
    pub gauge: Mat2<T>,
    /// `(x_k, p_k)` sorted by `(Re x, Im x)`.
    pub pairs: Vec<(C<T>, C<T>)>,
    /// Leading coefficient of the `L_12` numerator before the torus scaling.
    pub scale: C<T>,
}

/// Finite positions and residue matrices, in point order.
pub(crate) fn finite_data<T: Real>(sys: &FuchsianSystem<T>) -> (Vec<C<T>>, Vec<Mat2<T>>) {
    let fin = sys.finite_points();
    (fin.iter().map(|p| p.1).collect(), fin.iter().map(|p| sys.residue(p.0).m).collect())
}

/// `Π_{j≠i} (z - a_j)` for every `i`.
pub(crate) fn partial_products<T: Real>(a: &[C<T>]) -> Vec<Poly<T>> {
    (0..a.len())
        .map(|i| {
            let others: Vec<C<T>> = a.iter().enumerate().filter(|(j, _)| *j != i).map(|(_, x)| *x).collect();
            Poly::from_roots(&others)
        })
        .collect()
}

/// `Σ_i (B_i)_{rc} Π_{j≠i}(z - a_j)`, the numerator of `L_{rc}` over
/// `Π (z - a_j)`.
pub(crate) fn entry_numerator<T: Real>(a: &[C<T>], b: &[Mat2<T>], r: usize, c: usize) -> Poly<T> {
    let parts = partial_products(a);
    let mut acc = Poly::new(vec![czero(); a.len().max(1)]);
    for (p, m) in parts.iter().zip(b) {
        acc = acc.add(&p.scale(m[(r, c)]));
    }
    acc
}

/// Conjugates every residue by a constant matrix so that the residue at
/// infinity becomes `diag(λ_inf, -λ_inf)` and the `L_12` numerator is monic.
/// `λ_inf` is the eigenvalue of `B_inf = -Σ B_i` nearest the stored one.
pub fn gauge_normalize<T: Real>(sys: &FuchsianSystem<T>) -> Result<(FuchsianSystem<T>, Mat2<T>)> {
    let (normalized, gauge, _) = normalize_with_scale(sys)?;
    Ok((normalized, gauge))
}

fn normalize_with_scale<T: Real>(sys: &FuchsianSystem<T>) -> Result<(FuchsianSystem<T>, Mat2<T>, C<T>)> {
    let k_inf = sys
        .infinity_index()
        .ok_or_else(|| Error::InvalidInput("separation of variables needs infinity as a marked point".into()))?;
    let tol = sys.tol_alg() * (T::one() + sys.residue_scale());
    let b_inf = sys.implied_infinity_residue();
    let [e0, e1] = b_inf.eigenvalues();
    if (e0 - e1).norm() < tol {
        return Err(Error::DegenerateInfinity);
    }
    let stored = sys.residue(k_inf).lambda;
    let (lp, lm) = if (e0 - stored).norm() <= (e1 - stored).norm() { (e0, e1) } else { (e1, e0) };
    let vp = eigenvector(&b_inf, lp, tol)?.vector();
    let vm = eigenvector(&b_inf, lm, tol)?.vector();
    let v = Mat2::from_cols(vp, vm);
    let vinv = v.inverse().ok_or(Error::DegenerateInfinity)?;
    if (v.norm() * vinv.norm()).to_f64_lossy() > 1e12 {
        return Err(Error::DegenerateInfinity);
    }
    let (a, b) = finite_data(sys);
    let conj: Vec<Mat2<T>> = b.iter().map(|m| vinv * *m * v).collect();
    // leading coefficient of the numerator after the top one cancels
    let scale = a.iter().zip(&conj).fold(czero(), |acc, (ai, m)| acc + m[(0, 1)] * *ai);
    let gauge = if a.len() < 2 {
        vinv
    } else {
        if scale.norm() < tol {
            return Err(Error::DegenerateConfiguration("L12 numerator loses degree (a separated x sits at infinity)".into()));
        }
        let t = scale.inv().sqrt();
        Mat2::diag(t, t.inv()) * vinv
    };
    let ginv = gauge.inverse().ok_or(Error::DegenerateInfinity)?;
    let ms: Vec<Mat2<T>> = sys.residues().iter().map(|r| gauge * r.m * ginv).collect();
    let mut lambdas = sys.lambdas();
    lambdas[k_inf] = lp;
    let normalized = sys.with_residue_matrices(&ms).with_lambdas(&lambdas);
    Ok((normalized, gauge, scale))
}

/// Roots of the degree `n - 3` numerator of `L_12` and the values of
/// `L_11` there, in the normalized gauge.
pub fn separated_variables<T: Real>(sys: &FuchsianSystem<T>) -> Result<SeparatedData<T>> {
    let (norm, gauge, scale) = normalize_with_scale(sys)?;
    let (a, b) = finite_data(&norm);
    let m = a.len();
    if m < 2 {
        return Ok(SeparatedData { gauge, pairs: Vec::new(), scale });
    }
    let num = entry_numerator(&a, &b, 0, 1);
    // drop the cancelled top coefficient; what remains is monic
    let coeffs = num.coeffs[..m - 1].to_vec();
    let xs = if m == 2 { Vec::new() } else { roots(&Poly::new(coeffs)).map_err(|_| Error::RootFinding)? };
    let pos_scale = sys.position_scale();
    let mut pairs = Vec::with_capacity(xs.len());
    for x in xs {
        for (i, ai) in a.iter().enumerate() {
            if (x - *ai).norm() < T::lit(1e-8) * pos_scale {
                return Err(Error::DegenerateConfiguration(format!(
                    "separated x = {x} collides with pole {i}; use a boundary chart"
                )));
            }
        }
        let p = a.iter().zip(&b).fold(czero(), |acc, (ai, bi)| acc + bi[(0, 0)] / (x - *ai));
        pairs.push((x, p));
    }
    sort_pairs(&mut pairs);
    for w in pairs.windows(2) {
        if (w[0].0 - w[1].0).norm() < T::lit(1e-12) * pos_scale {
            return Err(Error::DegenerateConfiguration("separated x values collide".into()));
        }
    }
    Ok(SeparatedData { gauge, pairs, scale })
}

pub(crate) fn sort_pairs<T: Real>(pairs: &mut [(C<T>, C<T>)]) {
    pairs.sort_by(|u, v| {
        u.0.re
            .partial_cmp(&v.0.re)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(u.0.im.partial_cmp(&v.0.im).unwrap_or(std::cmp::Ordering::Equal))
    });
}
