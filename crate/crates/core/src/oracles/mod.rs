//! Ground-truth solvers: classical universal-variables Lambert and direct
//! numerical integration.

mod dop853_tableau;
pub mod integrator;
pub mod propagate;
pub mod universal;

pub use integrator::{integrate, IntegratorConfig, IntegratorMethod};
pub use propagate::{
    gravity_acceleration, propagate_elements_numeric, propagate_numeric, propagate_numeric_cancellable,
    specific_energy, write_trajectory_csv, ElementTrajectory, PropagationResult,
};
pub use universal::{
    minimum_multirev_time, stumpff, universal_lambert, universal_lambert_branch, LambertBranch, UniversalSolution,
};
