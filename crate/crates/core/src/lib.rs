//! Prolate spheroidal wave functions and sampled prolate filter
//! diagonalization (PFD) for line-spectrum estimation with error certificates.

pub mod error;
pub mod linalg;
pub mod pfd;
pub mod pswf;
pub mod quadrature;
pub mod sampling;
pub mod signal;
pub mod subspace;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
