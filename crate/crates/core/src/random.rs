//! Seeded generation of valid (non-resonant, stable) systems by rejection
//! sampling.

use crate::error::{Error, Result};
use crate::fuchsian::FuchsianSystem;
use crate::linalg::Mat2;
use crate::scalar::{Real, C};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct RandomSpec {
    /// Number of marked points including infinity.
    pub n: usize,
    /// Range of the real `lambda` at the finite points.
    pub lambda_range: (f64, f64),
    /// Finite poles are drawn from the square `[-r, r]^2`.
    pub position_radius: f64,
    pub min_separation: f64,
    /// Upper bound on the condition number of each eigenbasis.
    pub max_basis_cond: f64,
    pub tol_alg: f64,
    pub max_attempts: usize,
}

impl RandomSpec {
    pub fn new(n: usize) -> Self {
        RandomSpec {
            n,
            lambda_range: (0.05, 0.45),
            position_radius: 1.5,
            min_separation: 0.5,
            max_basis_cond: 6.0,
            tol_alg: 1e-10,
            max_attempts: 10_000,
        }
    }
}

pub fn rng_from_seed(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn uniform_c<T: Real, R: Rng>(rng: &mut R, r: f64) -> C<T> {
    C::new(T::lit(rng.gen_range(-r..r)), T::lit(rng.gen_range(-r..r)))
}

/// Basis with bounded condition number (Frobenius).
pub fn random_basis<T: Real, R: Rng>(rng: &mut R, max_cond: f64) -> Mat2<T> {
    loop {
        let g = Mat2::<T>::new(uniform_c(rng, 1.0), uniform_c(rng, 1.0), uniform_c(rng, 1.0), uniform_c(rng, 1.0));
        if let Some(inv) = g.inverse() {
            if (g.norm() * inv.norm()).to_f64_lossy() < max_cond {
                return g;
            }
        }
    }
}

/// `g diag(lambda, -lambda) g^-1` for a random well-conditioned `g`.
pub fn random_residue<T: Real, R: Rng>(rng: &mut R, lambda: C<T>, max_cond: f64) -> Mat2<T> {
    let g = random_basis::<T, R>(rng, max_cond);
    let inv = g.inverse().expect("basis is invertible");
    (g * Mat2::diag(lambda, -lambda) * inv).traceless_part()
}

/// Finite positions with pairwise separation at least `min_sep`.
pub fn random_positions<T: Real, R: Rng>(rng: &mut R, m: usize, radius: f64, min_sep: f64) -> Vec<C<T>> {
    let mut out: Vec<C<T>> = Vec::with_capacity(m);
    while out.len() < m {
        let z = uniform_c::<T, R>(rng, radius);
        if out.iter().all(|w| (*w - z).norm().to_f64_lossy() >= min_sep) {
            out.push(z);
        }
    }
    out
}

/// A random valid system with `n - 1` finite poles and infinity marked last.
pub fn random_system<T: Real, R: Rng>(rng: &mut R, spec: &RandomSpec) -> Result<FuchsianSystem<T>> {
    if spec.n < 2 || spec.n > crate::fuchsian::MAX_POINTS {
        return Err(Error::InvalidInput(format!("n = {} outside 2..=12", spec.n)));
    }
    let (lo, hi) = spec.lambda_range;
    if !(lo < hi) {
        return Err(Error::InvalidInput("empty lambda range".into()));
    }
    let m = spec.n - 1;
    for _ in 0..spec.max_attempts {
        let pts = random_positions::<T, R>(rng, m, spec.position_radius, spec.min_separation);
        let res: Vec<Mat2<T>> = (0..m)
            .map(|_| {
                let l = C::new(T::lit(rng.gen_range(lo..hi)), T::zero());
                random_residue(rng, l, spec.max_basis_cond)
            })
            .collect();
        let sys = FuchsianSystem::from_finite(pts, res, true, T::lit(spec.tol_alg))?;
        let inf = sys.residue(spec.n - 1).lambda;
        // keep infinity comfortably away from resonance and degeneracy
        if inf.norm() < T::lit(0.05) || crate::scalar::dist_to_integer(inf.scale(T::lit(2.0))) < T::lit(0.05) {
            continue;
        }
        if sys.is_valid() && well_separated(&sys.lambdas()) {
            return Ok(sys);
        }
    }
    Err(Error::InvalidInput("rejection sampling exhausted its attempts".into()))
}

/// Stability with margin: every signed sum stays 1e-3 away from an integer.
fn well_separated<T: Real>(lambdas: &[C<T>]) -> bool {
    crate::fuchsian::stability_violations(lambdas, T::lit(1e-3)).is_empty()
}

/// Seeded convenience wrapper.
pub fn seeded_system<T: Real>(seed: u64, spec: &RandomSpec) -> Result<FuchsianSystem<T>> {
    random_system(&mut rng_from_seed(seed), spec)
}
