//! Numerical integration of the replicator, Lotka-Volterra and chart flows,
//! and the checks that compare them with the exact identities.
//!
//! Nothing is projected back onto the simplex during integration; the
//! simplex-sum error is recorded as the `sum_diag` observable instead.

mod checks;
mod integrator;
mod trajectory;

pub use checks::{
    check_identity_2_5, check_pushforward_5_1, conservation_drift, gradient_check,
    pointwise_orthogonality, FD_STEP,
};
pub use integrator::{integrate, Flow, IntegratorConfig, Method, Status};
pub use trajectory::{
    convert_state, Drift, Observable, Trajectory, OBS_H, OBS_POSITIVITY, OBS_SIMPLEX_SUM,
};
