//! Numerical laboratory for noise-induced stabilization of the planar system
//! `dx = (w - |w|^q) n x dt + eps_x dB1`, `dy = (-w - |w|^q) m y dt + eps_y dB2`
//! with `w = h'(x^m y^n) x^(m-1) y^(n-1)`.
//!
//! The crate derives the constants of a piecewise Lyapunov construction, checks
//! each drift inequality by region sampling, simulates the SDE with a tamed
//! scheme, and measures boundedness and exponential mixing from ensembles.

pub mod cli;
pub mod ergodicity;
pub mod error;
pub mod lyapunov;
pub mod model;
pub mod sde;

pub use error::{Error, Result};
pub use model::{ModelParams, Profile, State};
