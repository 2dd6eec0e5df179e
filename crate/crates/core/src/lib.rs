//! Jost solutions, resolvent kernels and threshold diagnostics for
//! A = (−i∂ₓ)ᴺ + V on the line, V compactly supported and piecewise polynomial.
//!
//! Conventions: α = e^{2πi/N}, ζ in the sector 0 ≤ arg ζ ≤ π/N, z = ζᴺ. The
//! spectral equation (−i∂ₓ)ᴺu + Vu = zu is integrated as u^{(N)} = iᴺ(z − V)u.

pub mod bifurcation;
pub mod error;
pub mod free;
pub mod grid;
pub mod jost;
pub mod kernel;
pub mod lap;
pub mod ode;
pub mod potential;
pub mod resolvent;
pub mod special;
pub mod spectral;
pub mod threshold;
pub mod transfer;
pub mod weights;

pub type C64 = num_complex::Complex64;

pub use error::{Error, Result};
pub use grid::{CellField, Grid};
pub use potential::{Piece, Potential};
pub use spectral::SpectralParam;
pub use weights::WeightSpec;
