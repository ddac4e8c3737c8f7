//! Length spectra of compact hyperbolic 3-manifolds and Laplace eigenvalues
//! from the smoothed Selberg trace formula.

pub mod analysis;
pub mod error;
pub mod io;
pub mod lsq;
pub mod moebius;
pub mod specfun;
pub mod spectrum;
pub mod trace;

pub use error::{Error, Result};
