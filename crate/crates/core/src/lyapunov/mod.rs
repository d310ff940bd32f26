//! Local Lyapunov functions, their gluing into a global function, and numerical
//! verification of the drift inequalities region by region.

pub mod constants;
pub mod cutoff;
pub mod functions;
pub mod regions;
pub mod verify;

pub use constants::{derive_constants, derive_constants_with_rho, InvariantCheck, LyapunovConstants};
pub use cutoff::{phi, Cutoff, CutoffBounds};
pub use functions::{
    analytic_lv1, global_v, lambda_fn, v1, v2, v3, v_blend, BlendTarget, GlobalLyapunov, LyapunovValue,
};
pub use regions::{classify_region, Region, RegionLabel, RegionSampler};
pub use verify::{verify_drift_condition, verify_on_points, DriftConditionSpec, DriftFunction, ViolationReport};
