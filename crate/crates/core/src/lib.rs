//! Numerics for the twisted Laplacian on C^d: exponent calculus, Laguerre and
//! special Hermite functions, sampled fields, the spectral projector by two
//! independent routes, oscillatory integrals, lower-bound machinery and
//! resolvent sweeps.

pub mod config;
pub mod error;
pub mod extremal;
pub mod field;
pub mod hermite;
pub mod laguerre;
pub mod oscillatory;
pub mod projector;
pub mod quad;
pub mod radial;
pub mod region;
pub mod resolvent;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
