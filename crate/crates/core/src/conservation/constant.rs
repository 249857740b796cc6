use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::RealVector;
use crate::systems::psi;

/// State space a constant of motion is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Chart {
    /// `u ∈ ℝⁿ⁻¹`
    U,
    /// simplex interior
    X,
    /// positive orthant
    Y,
}

impl std::fmt::Display for Chart {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Chart::U => "u",
            Chart::X => "x",
            Chart::Y => "y",
        })
    }
}

/// `H(u) = Σ c_i u_i + Σ g_i eᵘⁱ`, equivalently
/// `H(x) = Σ c_i log(x_i/x_n) + Σ g_i x_i/x_n` and `H(y) = Σ c_i log y_i + Σ g_i y_i`.
///
/// `additive_constant` is carried as metadata only; the evaluators never add it.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstantOfMotion {
    pub chart: Chart,
    pub c: RealVector,
    pub g: RealVector,
    pub additive_constant: Option<f64>,
}

impl ConstantOfMotion {
    pub fn new(chart: Chart, c: RealVector, g: RealVector) -> Result<Self> {
        ensure_dim("constant of motion coefficients", c.len(), g.len())?;
        Ok(Self {
            chart,
            c,
            g,
            additive_constant: None,
        })
    }

    pub fn zero(chart: Chart, dim: usize) -> Self {
        Self {
            chart,
            c: RealVector::zeros(dim),
            g: RealVector::zeros(dim),
            additive_constant: None,
        }
    }

    /// Number of chart coordinates (`n − 1`).
    pub fn dim(&self) -> usize {
        self.c.len()
    }

    pub fn eval_u(&self, u: &RealVector) -> Result<f64> {
        ensure_dim("H_u argument", self.dim(), u.len())?;
        Ok(u.iter()
            .zip(self.c.iter().zip(self.g.iter()))
            .map(|(ui, (ci, gi))| ci * ui + gi * ui.exp())
            .sum())
    }

    pub fn eval_x(&self, x: &RealVector) -> Result<f64> {
        ensure_dim("H_x argument", self.dim() + 1, x.len())?;
        if let Some(i) = x.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!(
                "H_x needs an interior point; x_{} = {}",
                i + 1,
                x[i]
            )));
        }
        self.eval_y(&psi(x)?)
    }

    pub fn eval_y(&self, y: &RealVector) -> Result<f64> {
        ensure_dim("H_y argument", self.dim(), y.len())?;
        if let Some(i) = y.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!(
                "H_y needs a positive point; y_{} = {}",
                i + 1,
                y[i]
            )));
        }
        Ok(y.iter()
            .zip(self.c.iter().zip(self.g.iter()))
            .map(|(yi, (ci, gi))| ci * yi.ln() + gi * yi)
            .sum())
    }

    /// Evaluates in this constant's own chart.
    pub fn eval(&self, point: &RealVector) -> Result<f64> {
        match self.chart {
            Chart::U => self.eval_u(point),
            Chart::X => self.eval_x(point),
            Chart::Y => self.eval_y(point),
        }
    }

    /// `∂H/∂u_i = c_i + g_i eᵘⁱ`.
    pub fn grad_u(&self, u: &RealVector) -> Result<RealVector> {
        ensure_dim("grad H_u argument", self.dim(), u.len())?;
        Ok(RealVector::from_fn(self.dim(), |i, _| {
            self.c[i] + self.g[i] * u[i].exp()
        }))
    }

    pub fn with_chart(mut self, chart: Chart) -> Self {
        self.chart = chart;
        self
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            chart: self.chart,
            c: &self.c * factor,
            g: &self.g * factor,
            additive_constant: self.additive_constant.map(|k| k * factor),
        }
    }
}

/// `H(y) = Σ (y_j − q'_j log y_j)`, the integral of skew-symmetric
/// Lotka-Volterra systems with interior equilibrium `q'`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassicalIntegral {
    qprime: RealVector,
}

impl ClassicalIntegral {
    pub fn new(qprime: RealVector) -> Result<Self> {
        if let Some(i) = qprime.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Input(format!(
                "classical integral needs q' > 0; q'_{} = {}",
                i + 1,
                qprime[i]
            )));
        }
        Ok(Self { qprime })
    }

    pub fn eval(&self, y: &RealVector) -> Result<f64> {
        ensure_dim("classical integral argument", self.qprime.len(), y.len())?;
        if let Some(i) = y.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!(
                "classical integral needs y > 0; y_{} = {}",
                i + 1,
                y[i]
            )));
        }
        Ok(y.iter()
            .zip(self.qprime.iter())
            .map(|(yj, qj)| yj - qj * yj.ln())
            .sum())
    }

    pub fn grad(&self, y: &RealVector) -> Result<RealVector> {
        ensure_dim("classical integral argument", self.qprime.len(), y.len())?;
        Ok(RealVector::from_fn(y.len(), |i, _| {
            1.0 - self.qprime[i] / y[i]
        }))
    }

    /// As a [`ConstantOfMotion`] in the `y` chart (`c = −q'`, `g = 𝟙`).
    pub fn as_constant(&self) -> ConstantOfMotion {
        ConstantOfMotion {
            chart: Chart::Y,
            c: -&self.qprime,
            g: RealVector::from_element(self.qprime.len(), 1.0),
            additive_constant: None,
        }
    }
}
