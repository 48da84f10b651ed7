pub mod dense;
pub mod mat2;
pub mod poly;

pub use dense::{solve_with_cond, CMatrix, Lu};
pub use mat2::Mat2;
pub use poly::{roots, Poly, RootError};
