//! Numerical toolkit for rank-2 Fuchsian systems on the Riemann sphere:
//! validation, monodromy by transport, Schlesinger isomonodromic flow,
//! separation of variables, Hecke modifications and the four-point
//! Painlevé VI reduction.
//!
//! All routines are generic over the real scalar `T: Real` (`f32` or `f64`);
//! the aliases at the crate root fix `T = f64`.

pub mod error;
pub mod fuchsian;
pub mod hecke;
pub mod linalg;
pub mod pvi;
pub mod ode;
pub mod random;
pub mod rational;
pub mod scalar;
pub mod sov;
pub mod schlesinger;
pub mod transport;

pub use error::{Error, Result};
pub use fuchsian::{
    complete_residue, eigenline, eigenvector, Completion, EigenLine, LogConnection, MatrixField, Residue, Sign,
    SpherePoint, Violation,
};
pub use scalar::{cplx, Real, C};

pub type Complex64 = C<f64>;
pub type Mat2f = linalg::Mat2<f64>;
pub type System = fuchsian::FuchsianSystem<f64>;
