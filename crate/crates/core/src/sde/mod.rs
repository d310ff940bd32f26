//! Stochastic integration with reproducible, counter-addressed noise.

pub mod io;
pub mod ode;
pub mod rng;
pub mod scheme;

pub use ode::{ode_reference, ode_reference_with, OdeOptions};
pub use rng::NoiseStream;
pub use scheme::{
    simulate_ensemble, simulate_ensemble_from, simulate_path, simulate_path_id, step_euler, step_tamed, Ensemble,
    IntegratorConfig, Scheme, Trajectory,
};
