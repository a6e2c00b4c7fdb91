//! Polynomial superlevel-set approximations of compact basic semialgebraic
//! sets, computed through a sums-of-squares hierarchy, and exact uniform
//! sampling over such sets using the approximating polynomial as a
//! dominating density.

// linked for its BLAS/LAPACK symbols, used by the solver's PSD cones
extern crate openblas_src;

pub mod approx;
pub mod certify;
pub mod cli;
pub mod error;
pub mod fixtures;
pub mod io;
pub mod moments;
pub mod poly;
pub mod rng;
pub mod sampler;
pub mod solve;

pub use error::{Error, Result};
