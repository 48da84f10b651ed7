use super::separated_variables;
use crate::error::{Error, Result};
use crate::fuchsian::FuchsianSystem;
use crate::linalg::Mat2;
use crate::scalar::{czero, Real, C};
use rayon::prelude::*;

/// A scalar function of the residues.
pub type Observable<'a, T> = dyn Fn(&FuchsianSystem<T>) -> Result<C<T>> + Sync + 'a;

/// `x_k` of the separated pairs.
pub fn observable_x<T: Real>(k: usize) -> impl Fn(&FuchsianSystem<T>) -> Result<C<T>> + Sync {
    move |s| pair_component(s, k, false)
}

/// `p_k` of the separated pairs.
pub fn observable_p<T: Real>(k: usize) -> impl Fn(&FuchsianSystem<T>) -> Result<C<T>> + Sync {
    move |s| pair_component(s, k, true)
}

fn pair_component<T: Real>(s: &FuchsianSystem<T>, k: usize, momentum: bool) -> Result<C<T>> {
    let sep = separated_variables(s)?;
    let (x, p) = *sep
        .pairs
        .get(k)
        .ok_or_else(|| Error::InvalidInput(format!("no separated pair {k}")))?;
    Ok(if momentum { p } else { x })
}

#[derive(Clone, Copy, Debug)]
pub struct BracketOptions<T: Real> {
    /// Step is `step_factor * (1 + |B_i|)`.
    pub step_factor: T,
    /// Largest accepted relative gap between the `h` and `h/2` estimates.
    pub richardson_tol: T,
}

impl<T: Real> Default for BracketOptions<T> {
    fn default() -> Self {
        BracketOptions { step_factor: T::lit(1e-6), richardson_tol: T::lit(1e-3) }
    }
}

/// Matrix gradients of `f` and `g` at every finite residue, arranged so that
/// `df = Σ tr(∇_i f · dB_i)`.
fn gradients<T: Real>(
    sys: &FuchsianSystem<T>,
    f: &Observable<'_, T>,
    g: &Observable<'_, T>,
    factor: T,
) -> Result<Vec<(Mat2<T>, Mat2<T>)>> {
    let fin = sys.finite_points();
    let base: Vec<Mat2<T>> = fin.iter().map(|(i, _)| sys.residue(*i).m).collect();
    let jobs: Vec<(usize, usize, usize)> =
        (0..fin.len()).flat_map(|s| (0..2).flat_map(move |r| (0..2).map(move |c| (s, r, c)))).collect();
    let partials: Vec<Result<(C<T>, C<T>)>> = jobs
        .par_iter()
        .map(|&(slot, r, c)| {
            let h = factor * (T::one() + base[slot].norm());
            let eval = |sign: T| -> Result<(C<T>, C<T>)> {
                let mut ms = base.clone();
                ms[slot][(r, c)] += C::new(sign * h, T::zero());
                let s = sys.with_finite_residues(&ms);
                Ok((f(&s)?, g(&s)?))
            };
            let (fp, gp) = eval(T::one())?;
            let (fm, gm) = eval(-T::one())?;
            let w = T::lit(0.5) / h;
            Ok(((fp - fm).scale(w), (gp - gm).scale(w)))
        })
        .collect();
    let mut out = vec![(Mat2::zero(), Mat2::zero()); fin.len()];
    for (job, res) in jobs.iter().zip(partials) {
        let (df, dg) = res?;
        let (slot, r, c) = *job;
        // transpose: ∇f has (c, r) entry ∂f/∂B_rc
        out[slot].0[(c, r)] = df;
        out[slot].1[(c, r)] = dg;
    }
    Ok(out)
}

fn assemble<T: Real>(sys: &FuchsianSystem<T>, grads: &[(Mat2<T>, Mat2<T>)]) -> (C<T>, T) {
    let fin = sys.finite_points();
    let mut total = czero();
    let mut reference = T::zero();
    for ((i, _), (df, dg)) in fin.iter().zip(grads) {
        let b = sys.residue(*i).m;
        total += (b * df.commutator(dg)).trace();
        reference += b.norm() * df.norm() * dg.norm();
    }
    (total, reference)
}

/// Kirillov–Kostant bracket `{f, g} = Σ_i tr(B_i [∇_i f, ∇_i g])` on the
/// finite residues (the residue at infinity follows as minus their sum),
/// by central differences at steps `h` and `h/2`. Returns the Richardson
/// extrapolation.
pub fn poisson_bracket<T: Real>(
    sys: &FuchsianSystem<T>,
    f: &Observable<'_, T>,
    g: &Observable<'_, T>,
    opts: &BracketOptions<T>,
) -> Result<C<T>> {
    let g1 = gradients(sys, f, g, opts.step_factor)?;
    let g2 = gradients(sys, f, g, opts.step_factor * T::lit(0.5))?;
    let (b1, _) = assemble(sys, &g1);
    let (b2, reference) = assemble(sys, &g2);
    let denom = b2.norm().max(reference).max(T::epsilon());
    let relative = (b1 - b2).norm() / denom;
    if relative > opts.richardson_tol {
        return Err(Error::NumericalNoise { relative: relative.to_f64_lossy() });
    }
    Ok((b2.scale(T::lit(4.0)) - b1).scale(T::one() / T::lit(3.0)))
}
