//! Structure-preserving interpolatory model reduction for parametric
//! bilinear systems.
//!
//! Systems are described by affine matrix functions
//! `K(s, mu) = sum_j h_j(s, mu) K_j` whose scalar coefficients `h_j` come
//! from a small symbolic algebra ([`scalarfun`]). Reduction projects every
//! constant term while keeping the coefficients, so the reduced model has the
//! same internal structure (delays, second-order form, parameter dependence)
//! as the original.

pub mod bench;
pub mod error;
pub mod linalg;
pub mod manifest;
pub mod matfun;
pub mod mor;
pub mod scalarfun;
pub mod sim;
pub mod tf;
pub mod verify;

pub use error::{Error, Result};
