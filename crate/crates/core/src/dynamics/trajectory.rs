use serde::Serialize;

use crate::conservation::{Chart, ConstantOfMotion};
use crate::error::{Error, Result};
use crate::linalg::RealVector;
use crate::systems::{phi, phi_inv, psi, psi_inv};

use super::integrator::Status;

/// Observable names used by the integrator and the CSV writer.
pub const OBS_H: &str = "H";
pub const OBS_SIMPLEX_SUM: &str = "sum_diag";
pub const OBS_POSITIVITY: &str = "positivity_margin";

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Drift {
    pub max_abs: f64,
    /// `max_abs / max(1, |v(0)|)`
    pub max_rel: f64,
}

impl Drift {
    pub fn of(values: &[f64]) -> Self {
        let Some(&v0) = values.first() else {
            return Self::default();
        };
        let max_abs = values.iter().map(|v| (v - v0).abs()).fold(0.0, f64::max);
        Self {
            max_abs,
            max_rel: max_abs / v0.abs().max(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observable {
    pub name: String,
    pub values: Vec<f64>,
    pub drift: Drift,
}

impl Observable {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        let drift = Drift::of(&values);
        Self {
            name: name.into(),
            values,
            drift,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub flow: &'static str,
    pub chart: Chart,
    pub times: Vec<f64>,
    pub states: Vec<RealVector>,
    pub observables: Vec<Observable>,
    pub status: Status,
    /// Accepted steps.
    pub steps: usize,
}

impl Trajectory {
    pub(crate) fn new(flow: &'static str, chart: Chart) -> Self {
        Self {
            flow,
            chart,
            times: Vec::new(),
            states: Vec::new(),
            observables: Vec::new(),
            status: Status::Completed,
            steps: 0,
        }
    }

    pub(crate) fn push(&mut self, t: f64, state: RealVector) {
        self.times.push(t);
        self.states.push(state);
    }

    /// Adds the diagnostics every trajectory carries: `Σx_i − 1` on the
    /// simplex and the smallest coordinate on the simplex and orthant.
    pub(crate) fn add_diagnostics(&mut self) {
        if self.chart == Chart::X {
            let sums = self.states.iter().map(|x| x.sum() - 1.0).collect();
            self.observables
                .push(Observable::new(OBS_SIMPLEX_SUM, sums));
        }
        if matches!(self.chart, Chart::X | Chart::Y) {
            let margins = self.states.iter().map(|x| x.min()).collect();
            self.observables
                .push(Observable::new(OBS_POSITIVITY, margins));
        }
    }

    pub fn final_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn observable(&self, name: &str) -> Option<&Observable> {
        self.observables.iter().find(|o| o.name == name)
    }

    /// Evaluates `com` along the trajectory and stores it as `H`,
    /// replacing any earlier `H` series.
    pub fn observe(&mut self, com: &ConstantOfMotion) -> Result<&Observable> {
        let values = evaluate_along(self, com)?;
        self.observables.retain(|o| o.name != OBS_H);
        self.observables.push(Observable::new(OBS_H, values));
        Ok(self.observables.last().expect("just pushed"))
    }
}

/// Rewrites a state between charts.
pub fn convert_state(state: &RealVector, from: Chart, to: Chart) -> Result<RealVector> {
    Ok(match (from, to) {
        (a, b) if a == b => state.clone(),
        (Chart::X, Chart::Y) => psi(state)?,
        (Chart::X, Chart::U) => phi_inv(state)?,
        (Chart::Y, Chart::X) => psi_inv(state),
        (Chart::Y, Chart::U) => {
            if let Some(i) = state.iter().position(|&v| !(v > 0.0)) {
                return Err(Error::Domain(format!(
                    "log chart needs y > 0; y_{} = {}",
                    i + 1,
                    state[i]
                )));
            }
            state.map(f64::ln)
        }
        (Chart::U, Chart::X) => phi(state),
        (Chart::U, Chart::Y) => state.map(f64::exp),
        _ => unreachable!("equal charts handled above"),
    })
}

pub(crate) fn evaluate_along(traj: &Trajectory, com: &ConstantOfMotion) -> Result<Vec<f64>> {
    traj.states
        .iter()
        .zip(&traj.times)
        .enumerate()
        .map(|(k, (s, t))| {
            convert_state(s, traj.chart, com.chart)
                .and_then(|p| com.eval(&p))
                .map_err(|e| match e {
                    Error::Domain(msg) => Error::Domain(format!("sample {k} (t = {t}): {msg}")),
                    other => other,
                })
        })
        .collect()
}
