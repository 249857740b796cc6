//! System representations and the coordinate charts that relate them.
//!
//! Three state spaces appear throughout the crate:
//!
//! * the simplex (replicator states `x`),
//! * the chart `u ∈ ℝⁿ⁻¹` with `x = φ(u)` (normalized exponentials),
//! * the positive orthant (Lotka-Volterra states `y = x_{<n} / x_n`).
//!
//! Under these maps `eᵘⁱ = x_i / x_n = y_i`.

mod chart;
mod lotka_volterra;
mod replicator;

pub use chart::{
    chart_scale, dphi, eta_q, phi, phi_inv, psi, psi_inv, psi_jacobian, xtilde_field, ybold_field,
};
pub use lotka_volterra::LotkaVolterraSystem;
pub use replicator::{build_e, ProjectiveMap, ReplicatorSystem};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::RealVector;

/// Tolerance on `|Σx_i - 1|` for points on the simplex or its affine hull.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;

/// Chart coordinates `u`. Any finite vector is valid.
pub type ChartPoint = RealVector;

fn check_sum(x: &RealVector) -> Result<()> {
    if x.is_empty() {
        return Err(Error::Input(
            "point must have at least one coordinate".into(),
        ));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::Input("point contains non-finite entries".into()));
    }
    let excess = x.sum() - 1.0;
    if excess.abs() > SIMPLEX_SUM_TOL * (x.len() as f64).max(1.0) {
        return Err(Error::Domain(format!(
            "coordinates sum to 1{excess:+.3e}, not 1"
        )));
    }
    Ok(())
}

/// Point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct SimplexPoint(RealVector);

impl SimplexPoint {
    pub fn new(x: RealVector) -> Result<Self> {
        check_sum(&x)?;
        if let Some(i) = x.iter().position(|&v| v < 0.0) {
            return Err(Error::Domain(format!(
                "simplex coordinate {} is negative ({})",
                i + 1,
                x[i]
            )));
        }
        Ok(Self(x))
    }

    /// The barycenter `(1/n, …, 1/n)`.
    pub fn uniform(n: usize) -> Self {
        Self(RealVector::from_element(n, 1.0 / n as f64))
    }

    pub fn vertex(n: usize, i: usize) -> Self {
        Self(RealVector::from_fn(
            n,
            |j, _| if i == j { 1.0 } else { 0.0 },
        ))
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }

    pub fn as_vector(&self) -> &RealVector {
        &self.0
    }

    pub fn into_vector(self) -> RealVector {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<f64>> for SimplexPoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(RealVector::from_vec(v))
    }
}

impl From<SimplexPoint> for Vec<f64> {
    fn from(p: SimplexPoint) -> Self {
        p.0.as_slice().to_vec()
    }
}

/// Point on the affine hull of the simplex: coordinates sum to one but may
/// be negative. Formal equilibria live here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct AffinePoint(RealVector);

impl AffinePoint {
    pub fn new(q: RealVector) -> Result<Self> {
        check_sum(&q)?;
        Ok(Self(q))
    }

    pub fn uniform(n: usize) -> Self {
        Self(RealVector::from_element(n, 1.0 / n as f64))
    }

    pub fn as_vector(&self) -> &RealVector {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Last coordinate `q_n`.
    pub fn last(&self) -> f64 {
        self.0[self.0.len() - 1]
    }

    /// Leading `n - 1` coordinates.
    pub fn head(&self) -> RealVector {
        self.0.rows(0, self.0.len() - 1).into_owned()
    }

    pub fn is_interior(&self) -> bool {
        self.0.iter().all(|&v| v > 0.0)
    }
}

impl From<SimplexPoint> for AffinePoint {
    fn from(p: SimplexPoint) -> Self {
        Self(p.0)
    }
}

impl TryFrom<Vec<f64>> for AffinePoint {
    type Error = Error;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(RealVector::from_vec(v))
    }
}

impl From<AffinePoint> for Vec<f64> {
    fn from(p: AffinePoint) -> Self {
        p.0.as_slice().to_vec()
    }
}

/// Strictly positive point of the orthant `ℝ₊ᵐ`.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthantPoint(RealVector);

impl OrthantPoint {
    pub fn new(y: RealVector) -> Result<Self> {
        if let Some(i) = y.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "orthant coordinate {} must be positive and finite, got {}",
                i + 1,
                y[i]
            )));
        }
        Ok(Self(y))
    }

    pub fn as_vector(&self) -> &RealVector {
        &self.0
    }

    pub fn into_vector(self) -> RealVector {
        self.0
    }
}
