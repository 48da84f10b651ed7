use super::SeparatedData;
use crate::error::{Error, Result};
use crate::fuchsian::{complete_residue, FuchsianSystem, Residue, SpherePoint};
use crate::linalg::{solve_with_cond, CMatrix, Mat2};
use crate::scalar::{cone, czero, Real, C};

pub const MAX_CONDITION: f64 = 1e12;

#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction<T: Real> {
    pub system: FuchsianSystem<T>,
    /// 1-norm condition number of the accessory/diagonal linear system.
    pub cond: T,
}

/// Rebuilds the residues (in the normalized gauge) from separated data,
/// pole positions and the `λ` at every marked point.
///
/// Unknowns are the accessory parameters `c_i` of `det L` and the diagonal
/// entries `β_i = (B_i)_11`, solved together from
/// `det L(x_k) = -p_k^2`, `L_11(x_k) = p_k` and the expansion of `L` at
/// infinity up to `z^-3`.
pub fn reconstruct<T: Real>(
    sep: &SeparatedData<T>,
    poles: &[SpherePoint<T>],
    lambdas: &[C<T>],
    tol_alg: T,
) -> Result<Reconstruction<T>> {
    if poles.len() != lambdas.len() {
        return Err(Error::InvalidInput("poles and lambdas differ in length".into()));
    }
    let k_inf = poles
        .iter()
        .position(|p| p.is_infinity())
        .ok_or_else(|| Error::InvalidInput("reconstruction needs infinity as a marked point".into()))?;
    let fin: Vec<(usize, C<T>)> = poles.iter().enumerate().filter_map(|(i, p)| p.finite().map(|z| (i, z))).collect();
    let m = fin.len();
    if m < 2 || sep.pairs.len() != m - 2 {
        return Err(Error::InvalidInput(format!("{} pairs for {} marked points", sep.pairs.len(), poles.len())));
    }
    let linf = lambdas[k_inf];
    if linf.scale(T::lit(2.0)).norm() < tol_alg {
        return Err(Error::DegenerateInfinity);
    }
    let a: Vec<C<T>> = fin.iter().map(|p| p.1).collect();
    let l2: Vec<C<T>> = fin.iter().map(|p| lambdas[p.0] * lambdas[p.0]).collect();
    let sum_l2 = l2.iter().fold(czero::<T>(), |s, v| s + *v);
    let sum_l2a = l2.iter().zip(&a).fold(czero::<T>(), |s, (v, ai)| s + *v * *ai);
    for (x, _) in &sep.pairs {
        if let Some(i) = a.iter().position(|ai| (*x - *ai).norm() < tol_alg) {
            return Err(Error::DegenerateConfiguration(format!("separated x coincides with pole {}", fin[i].0)));
        }
    }

    // block lower-triangular system in (c, β)
    let dim = 2 * m;
    let mut mat = CMatrix::zeros(dim, dim);
    let mut rhs = vec![czero::<T>(); dim];
    for (k, (x, p)) in sep.pairs.iter().enumerate() {
        let mut r = -*p * *p;
        for i in 0..m {
            let w = (*x - a[i]).inv();
            mat[(k, i)] = w;
            mat[(m + k, m + i)] = w;
            r += l2[i] * w * w;
        }
        rhs[k] = r;
        rhs[m + k] = *p;
    }
    for i in 0..m {
        mat[(m - 2, i)] = cone();
        mat[(m - 1, i)] = a[i];
        mat[(2 * m - 2, m + i)] = cone();
        mat[(2 * m - 1, m + i)] = a[i];
        mat[(2 * m - 1, i)] = -(a[i] * a[i]) / (linf.scale(T::lit(2.0)));
    }
    rhs[m - 2] = czero();
    rhs[m - 1] = sum_l2 - linf * linf;
    rhs[2 * m - 2] = -linf;
    rhs[2 * m - 1] = -sum_l2a / linf;

    let solved = solve_with_cond(&mat, &rhs).ok_or(Error::SingularLinearSystem { cond: f64::INFINITY })?;
    let cond = solved.cond;
    if !(cond.to_f64_lossy() <= MAX_CONDITION) {
        return Err(Error::SingularLinearSystem { cond: cond.to_f64_lossy() });
    }
    let beta = &solved.x[m..];

    let mut ms = vec![Mat2::zero(); poles.len()];
    let mut residues = Vec::with_capacity(poles.len());
    for (slot, &(i, ai)) in fin.iter().enumerate() {
        let num = sep.pairs.iter().fold(cone::<T>(), |acc, (x, _)| acc * (ai - *x));
        let den = a.iter().enumerate().filter(|(j, _)| *j != slot).fold(cone::<T>(), |acc, (_, aj)| acc * (ai - *aj));
        let b12 = num / den;
        let done = complete_residue(beta[slot], b12, lambdas[i], tol_alg)
            .map_err(|e| Error::ResidueMismatch { index: i, detail: e.to_string() })?;
        if done.degenerate {
            return Err(Error::ResidueMismatch { index: i, detail: "degenerate completion".into() });
        }
        ms[i] = done.residue.m;
    }
    let sum: Mat2<T> = ms.iter().copied().sum();
    ms[k_inf] = -sum;
    for (i, m_i) in ms.iter().enumerate() {
        residues.push(Residue::new(*m_i, lambdas[i]));
    }
    let system = FuchsianSystem::new(poles.to_vec(), residues, tol_alg)?;

    let scale = T::one() + system.residue_scale();
    let check_tol = T::lit(1e-6) * scale;
    for (i, r) in system.residues().iter().enumerate() {
        if r.eigen_deviation() > check_tol {
            return Err(Error::ResidueMismatch { index: i, detail: format!("eigenvalues off by {:e}", r.eigen_deviation()) });
        }
    }
    let inf = &ms[k_inf];
    let off = (*inf - Mat2::diag(linf, -linf)).norm();
    if off > check_tol {
        return Err(Error::ResidueMismatch { index: k_inf, detail: format!("residue at infinity off by {off:e}") });
    }
    Ok(Reconstruction { system, cond })
}
