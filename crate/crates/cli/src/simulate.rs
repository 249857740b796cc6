//! The `simulate` command: integrate one flow and observe `H` along it.

use std::collections::BTreeMap;

use conserva_core::conservation::make_certificate_with_tol;
use conserva_core::dynamics::{OBS_H, OBS_SIMPLEX_SUM};
use conserva_core::{
    integrate, Chart, ConstantOfMotion, Flow, IntegratorConfig, Method, RealMatrix, RealVector,
    Trajectory,
};
use log::warn;
use serde::Serialize;

use crate::analysis::{constant_for, prepare, AnalysisOptions, Equilibrium};
use crate::exit::{Failure, EXIT_INPUT, EXIT_NO_EQUILIBRIUM, EXIT_OK, EXIT_RUNTIME};
use crate::input::{System, SystemFile};
use crate::report::{ConstantReport, SCHEMA_VERSION};

#[derive(Debug, Clone, PartialEq)]
pub enum Initial {
    /// Simplex point; integrates the replicator flow.
    X(Vec<f64>),
    /// Orthant point; integrates the Lotka-Volterra flow.
    Y(Vec<f64>),
    /// Chart point; integrates `X̃_B`, or `Ỹ_B` when `rescaled`.
    U { u: Vec<f64>, rescaled: bool },
}

#[derive(Debug, Clone)]
pub struct SimulateOptions {
    pub initial: Initial,
    pub config: IntegratorConfig,
    pub observe_h: bool,
    pub certificate: Option<RealMatrix>,
    pub analysis: AnalysisOptions,
}

#[derive(Debug, Clone, Serialize)]
pub struct DriftEntry {
    pub max_abs: f64,
    pub max_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary {
    pub schema_version: u32,
    pub flow: &'static str,
    pub chart: Chart,
    pub method: Method,
    pub t_end: f64,
    pub status: String,
    pub completed: bool,
    pub final_time: f64,
    pub steps: usize,
    pub samples: usize,
    pub constant_of_motion: Option<ConstantReport>,
    pub drift: BTreeMap<String, DriftEntry>,
}

fn certificate_constant(
    file: &SystemFile,
    d: &RealMatrix,
    opts: &AnalysisOptions,
) -> Result<ConstantOfMotion, Failure> {
    match prepare(file, opts)? {
        Equilibrium::Found(p) => {
            let cert = make_certificate_with_tol(d, &p.q, &p.b, opts.certificate_tol)?;
            Ok(cert.constant_of_motion(Chart::U))
        }
        Equilibrium::Missing(_, msg) => Err(Failure::new(EXIT_NO_EQUILIBRIUM, msg)),
    }
}

pub fn build_flow(
    file: &SystemFile,
    initial: &Initial,
    opts: &AnalysisOptions,
) -> Result<(Flow, RealVector), Failure> {
    let system = file.validate()?;
    Ok(match initial {
        Initial::X(x) => {
            let sys = match &system {
                System::Replicator(s) => s.clone(),
                System::LotkaVolterra(lv) => lv.to_replicator(),
            };
            (Flow::Replicator(sys), RealVector::from_column_slice(x))
        }
        Initial::Y(y) => {
            let lv = match &system {
                System::Replicator(s) => s.to_lotka_volterra()?,
                System::LotkaVolterra(lv) => lv.clone(),
            };
            (Flow::LotkaVolterra(lv), RealVector::from_column_slice(y))
        }
        Initial::U { u, rescaled } => {
            let p = match prepare(file, opts)? {
                Equilibrium::Found(p) => p,
                Equilibrium::Missing(_, msg) => return Err(Failure::new(EXIT_NO_EQUILIBRIUM, msg)),
            };
            let (b, q) = (p.b.clone(), p.q.clone());
            let flow = if *rescaled {
                Flow::YBold { b, q }
            } else {
                Flow::XTilde { b, q }
            };
            (flow, RealVector::from_column_slice(u))
        }
    })
}

/// Integrates and attaches `H` when requested and available. The code is
/// nonzero when the run stopped early.
pub fn simulate(
    file: &SystemFile,
    opts: &SimulateOptions,
) -> Result<(Trajectory, SimulationSummary, u8), Failure> {
    let (flow, x0) = build_flow(file, &opts.initial, &opts.analysis)?;
    let mut traj = integrate(&flow, &x0, &opts.config).map_err(|e| {
        let f = Failure::from(e);
        // a bad starting point is a user input problem
        Failure::new(EXIT_INPUT, f.message)
    })?;

    let mut constant = None;
    if opts.observe_h {
        let h = match &opts.certificate {
            Some(d) => Some(certificate_constant(file, d, &opts.analysis)?),
            None => constant_for(file, &opts.analysis)?.map(|(h, _)| h),
        };
        match h {
            Some(h) => {
                let shown = h.clone().with_chart(traj.chart);
                traj.observe(&h)?;
                constant = Some(ConstantReport::from(&shown));
            }
            None => warn!("no constant of motion available; H column omitted"),
        }
    }

    let drift = traj
        .observables
        .iter()
        .filter(|o| o.name == OBS_H || o.name == OBS_SIMPLEX_SUM)
        .map(|o| {
            (
                o.name.clone(),
                DriftEntry {
                    max_abs: o.drift.max_abs,
                    max_rel: o.drift.max_rel,
                },
            )
        })
        .collect();
    let summary = SimulationSummary {
        schema_version: SCHEMA_VERSION,
        flow: flow.name(),
        chart: traj.chart,
        method: opts.config.method,
        t_end: opts.config.t_end,
        status: traj.status.to_string(),
        completed: traj.status.is_completed(),
        final_time: traj.final_time(),
        steps: traj.steps,
        samples: traj.len(),
        constant_of_motion: constant,
        drift,
    };
    let code = if traj.status.is_completed() {
        EXIT_OK
    } else {
        EXIT_RUNTIME
    };
    Ok((traj, summary, code))
}

/// Drift of `H` from a summary, if it was observed.
pub fn h_drift(summary: &SimulationSummary) -> Option<&DriftEntry> {
    summary.drift.get(OBS_H)
}
