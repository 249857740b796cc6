//! Constants of motion for replicator and Lotka-Volterra systems.
//!
//! A system is pulled back to the chart `u ∈ ℝⁿ⁻¹`, where its field is
//! `B η_q(u)` for a constant matrix `B`. A certificate matrix `D` with `DB`
//! skew-symmetric and `DᵗQ₁(q)` diagonal yields the first integral
//! `H(u) = Σ c_i u_i + Σ g_i eᵘⁱ`. The crate searches for such `D`,
//! builds `H` in the `u`, `x` and `y` charts, classifies the structure the
//! pair `(B, D)` generates, and checks everything numerically.

// `!(v > 0.0)` is used on purpose: it also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod conservation;
pub mod dirac;
pub mod dynamics;
pub mod equilibrium;
pub mod error;
pub mod linalg;
pub mod systems;

pub use conservation::{
    certificate_from_gauge, certificate_search_general, certificate_search_reduced,
    gauge_skew_symmetrizer, make_certificate, CertificateFamily, Chart, ClassicalIntegral,
    ConservationCertificate, ConstantOfMotion, GaugeOutcome, SearchMethod,
};
pub use dirac::{classify, verify_hamiltonian_pair, ClassLabel, StructureClassification};
pub use dynamics::{integrate, Flow, IntegratorConfig, Method, Status, Trajectory};
pub use equilibrium::{
    formal_equilibrium_lv, formal_equilibrium_replicator, normalize_lv_equilibrium,
    EquilibriumResult,
};
pub use error::{Error, Result};
pub use linalg::{RealMatrix, RealVector, DEFAULT_RANK_TOL};
pub use systems::{AffinePoint, LotkaVolterraSystem, ReplicatorSystem, SimplexPoint};
