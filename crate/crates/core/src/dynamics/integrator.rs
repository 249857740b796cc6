use serde::Serialize;

use crate::conservation::Chart;
use crate::error::{Error, Result};
use crate::linalg::{RealMatrix, RealVector};
use crate::systems::{
    xtilde_field, ybold_field, AffinePoint, LotkaVolterraSystem, ReplicatorSystem, SimplexPoint,
};

use super::trajectory::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "method", rename_all = "kebab-case")]
pub enum Method {
    FixedRk4 { step: f64 },
    AdaptiveRk45 { abs_tol: f64, rel_tol: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub t_end: f64,
    pub max_steps: usize,
    /// Record every k-th accepted step. Ignored when `output_interval` is set.
    pub record_every: usize,
    /// Record exactly on the grid `0, Δ, 2Δ, …`; steps are shortened to land on it.
    pub output_interval: Option<f64>,
    /// Stop with [`Status::Diverged`] once `‖state‖_∞` exceeds this.
    pub max_norm: f64,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            method: Method::AdaptiveRk45 {
                abs_tol: 1e-10,
                rel_tol: 1e-10,
            },
            t_end: 20.0,
            max_steps: 1_000_000,
            record_every: 1,
            output_interval: None,
            max_norm: 1e12,
        }
    }
}

impl IntegratorConfig {
    pub fn adaptive(tol: f64, t_end: f64) -> Self {
        Self {
            method: Method::AdaptiveRk45 {
                abs_tol: tol,
                rel_tol: tol,
            },
            t_end,
            ..Self::default()
        }
    }

    pub fn fixed(step: f64, t_end: f64) -> Self {
        Self {
            method: Method::FixedRk4 { step },
            t_end,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let ok = match self.method {
            Method::FixedRk4 { step } => positive(step),
            Method::AdaptiveRk45 { abs_tol, rel_tol } => positive(abs_tol) && positive(rel_tol),
        };
        if !ok {
            return Err(Error::Input("step and tolerances must be positive".into()));
        }
        if !positive(self.t_end) {
            return Err(Error::Input(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.record_every == 0 || self.max_steps == 0 {
            return Err(Error::Input(
                "record_every and max_steps must be at least 1".into(),
            ));
        }
        if let Some(dt) = self.output_interval {
            if !positive(dt) {
                return Err(Error::Input(format!(
                    "output interval must be positive, got {dt}"
                )));
            }
        }
        if !(self.max_norm > 0.0) {
            return Err(Error::Input("max_norm must be positive".into()));
        }
        Ok(())
    }
}

/// How an integration ended.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Status {
    Completed,
    /// A coordinate that must stay positive reached `≤ 0`.
    LeftDomain {
        t: f64,
        index: usize,
        value: f64,
    },
    NonFinite {
        t: f64,
    },
    Diverged {
        t: f64,
        norm: f64,
    },
    MaxSteps {
        t: f64,
    },
    StepUnderflow {
        t: f64,
        step: f64,
    },
}

impl Status {
    pub fn is_completed(&self) -> bool {
        matches!(self, Self::Completed)
    }
}

impl std::fmt::Display for Status {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Completed => write!(f, "completed"),
            Self::LeftDomain { t, index, value } => write!(
                f,
                "left the domain at t = {t}: coordinate {} = {value}",
                index + 1
            ),
            Self::NonFinite { t } => write!(f, "non-finite state at t = {t}"),
            Self::Diverged { t, norm } => write!(f, "diverged at t = {t} (norm {norm:e})"),
            Self::MaxSteps { t } => write!(f, "step limit reached at t = {t}"),
            Self::StepUnderflow { t, step } => {
                write!(f, "step size underflow at t = {t} (step {step:e})")
            }
        }
    }
}

/// The four flows: replicator on the simplex, Lotka-Volterra on the
/// orthant, and the pulled-back field `X̃_B` with its rescaling `Ỹ_B` on
/// the chart.
#[derive(Debug, Clone)]
pub enum Flow {
    Replicator(ReplicatorSystem),
    LotkaVolterra(LotkaVolterraSystem),
    XTilde { b: RealMatrix, q: AffinePoint },
    YBold { b: RealMatrix, q: AffinePoint },
}

impl Flow {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Replicator(_) => "replicator",
            Self::LotkaVolterra(_) => "lv",
            Self::XTilde { .. } => "xtilde",
            Self::YBold { .. } => "ybold",
        }
    }

    /// Coordinates the state lives in.
    pub fn chart(&self) -> Chart {
        match self {
            Self::Replicator(_) => Chart::X,
            Self::LotkaVolterra(_) => Chart::Y,
            Self::XTilde { .. } | Self::YBold { .. } => Chart::U,
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Replicator(s) => s.n(),
            Self::LotkaVolterra(s) => s.m(),
            Self::XTilde { b, .. } | Self::YBold { b, .. } => b.nrows(),
        }
    }

    pub fn eval(&self, state: &RealVector) -> Result<RealVector> {
        match self {
            Self::Replicator(s) => s.field(state),
            Self::LotkaVolterra(s) => s.field(state),
            Self::XTilde { b, q } => xtilde_field(b, q, state),
            Self::YBold { b, q } => ybold_field(b, q, state),
        }
    }

    fn positive_coordinates(&self) -> bool {
        matches!(self, Self::Replicator(_) | Self::LotkaVolterra(_))
    }

    /// Rejects initial states outside the flow's domain.
    pub fn check_initial(&self, x0: &RealVector) -> Result<()> {
        if x0.len() != self.dim() {
            return Err(Error::Dimension {
                context: "initial state",
                expected: self.dim(),
                got: x0.len(),
            });
        }
        match self {
            Self::Replicator(_) => {
                let p = SimplexPoint::new(x0.clone())?;
                if !p.is_interior() {
                    return Err(Error::Domain(
                        "replicator initial state must lie in the simplex interior".into(),
                    ));
                }
            }
            Self::LotkaVolterra(_) => {
                if let Some(i) = x0.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
                    return Err(Error::Domain(format!(
                        "Lotka-Volterra initial state must be positive; y_{} = {}",
                        i + 1,
                        x0[i]
                    )));
                }
            }
            Self::XTilde { .. } | Self::YBold { .. } => {
                if x0.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Domain("chart initial state must be finite".into()));
                }
            }
        }
        Ok(())
    }
}

// Dormand-Prince 5(4) tableau
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
/// Fifth-order weights minus fourth-order weights.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

struct Stepper<'a> {
    flow: &'a Flow,
    cfg: &'a IntegratorConfig,
    traj: Trajectory,
    accepted: usize,
    next_output: usize,
}

enum Check {
    Ok,
    Stop(Status),
}

impl<'a> Stepper<'a> {
    fn inspect(&self, t: f64, y: &RealVector) -> Check {
        if y.iter().any(|v| !v.is_finite()) {
            return Check::Stop(Status::NonFinite { t });
        }
        let norm = y.amax();
        if norm > self.cfg.max_norm {
            return Check::Stop(Status::Diverged { t, norm });
        }
        if self.flow.positive_coordinates() {
            if let Some(index) = y.iter().position(|&v| v <= 0.0) {
                return Check::Stop(Status::LeftDomain {
                    t,
                    index,
                    value: y[index],
                });
            }
        }
        Check::Ok
    }

    /// Clips a proposed step end so the next output time and `t_end` are
    /// hit exactly; the flag says whether the end was clipped to a target.
    fn clip(&self, proposed: f64) -> (f64, bool) {
        let mut target = self.cfg.t_end;
        if let Some(dt) = self.cfg.output_interval {
            target = target.min(self.next_output as f64 * dt);
        }
        if proposed >= target - 1e-12 * target.abs().max(1.0) {
            (target, true)
        } else {
            (proposed, false)
        }
    }

    fn accept(&mut self, t: f64, y: &RealVector, hit_target: bool) {
        self.accepted += 1;
        let record = match self.cfg.output_interval {
            Some(dt) => {
                if hit_target && t == self.next_output as f64 * dt {
                    self.next_output += 1;
                    true
                } else {
                    false
                }
            }
            None => self.accepted.is_multiple_of(self.cfg.record_every),
        };
        if record || t >= self.cfg.t_end {
            self.traj.push(t, y.clone());
        }
    }

    fn finish(mut self, t: f64, y: &RealVector, status: Status) -> Trajectory {
        if self.traj.times.last().copied() != Some(t) {
            self.traj.push(t, y.clone());
        }
        self.traj.status = status;
        self.traj.steps = self.accepted;
        self.traj.add_diagnostics();
        self.traj
    }
}

/// Integrates `flow` from `x0` over `[0, t_end]`. Invalid initial states
/// are errors; trouble along the way ends the run early with a status.
pub fn integrate(flow: &Flow, x0: &RealVector, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    flow.check_initial(x0)?;
    let mut st = Stepper {
        flow,
        cfg,
        traj: Trajectory::new(flow.name(), flow.chart()),
        accepted: 0,
        next_output: 1,
    };
    st.traj.push(0.0, x0.clone());
    match cfg.method {
        Method::FixedRk4 { step } => Ok(run_rk4(st, x0.clone(), step)),
        Method::AdaptiveRk45 { abs_tol, rel_tol } => {
            Ok(run_dopri(st, x0.clone(), abs_tol, rel_tol))
        }
    }
}

fn rk4_step(flow: &Flow, y: &RealVector, h: f64) -> Option<RealVector> {
    let k1 = flow.eval(y).ok()?;
    let k2 = flow.eval(&(y + &k1 * (h / 2.0))).ok()?;
    let k3 = flow.eval(&(y + &k2 * (h / 2.0))).ok()?;
    let k4 = flow.eval(&(y + &k3 * h)).ok()?;
    Some(y + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn run_rk4(mut st: Stepper<'_>, mut y: RealVector, step: f64) -> Trajectory {
    let mut t = 0.0;
    // step index, so grid times do not accumulate rounding
    let mut n = 0usize;
    while t < st.cfg.t_end {
        if st.accepted >= st.cfg.max_steps {
            return st.finish(t, &y, Status::MaxSteps { t });
        }
        let grid = (n + 1) as f64 * step;
        let (t_new, hit) = st.clip(grid);
        let Some(y_new) = rk4_step(st.flow, &y, t_new - t) else {
            return st.finish(t, &y, Status::NonFinite { t });
        };
        if let Check::Stop(status) = st.inspect(t_new, &y_new) {
            return st.finish(t, &y, status);
        }
        if t_new >= grid {
            n += 1;
        }
        t = t_new;
        y = y_new;
        st.accept(t, &y, hit);
    }
    st.finish(t, &y, Status::Completed)
}

fn error_norm(err: &RealVector, y: &RealVector, y_new: &RealVector, atol: f64, rtol: f64) -> f64 {
    let n = err.len().max(1) as f64;
    let sum: f64 = (0..err.len())
        .map(|i| {
            let sc = atol + rtol * y[i].abs().max(y_new[i].abs());
            (err[i] / sc).powi(2)
        })
        .sum();
    (sum / n).sqrt()
}

/// Starting step from the usual two-evaluation estimate.
fn initial_step(flow: &Flow, y: &RealVector, f0: &RealVector, atol: f64, rtol: f64) -> f64 {
    let scale = y.map(|v| atol + rtol * v.abs());
    let rms =
        |v: &RealVector| (v.component_div(&scale).norm_squared() / v.len().max(1) as f64).sqrt();
    let d0 = rms(y);
    let d1 = rms(f0);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    let Ok(f1) = flow.eval(&(y + f0 * h0)) else {
        return h0;
    };
    let d2 = rms(&(f1 - f0)) / h0;
    let h1 = if d1.max(d2) <= 1e-15 {
        (h0 * 1e-3).max(1e-6)
    } else {
        (0.01 / d1.max(d2)).powf(1.0 / 5.0)
    };
    (100.0 * h0).min(h1)
}

fn run_dopri(mut st: Stepper<'_>, mut y: RealVector, atol: f64, rtol: f64) -> Trajectory {
    let mut t = 0.0;
    let Ok(mut f) = st.flow.eval(&y) else {
        return st.finish(t, &y, Status::NonFinite { t });
    };
    let mut h = initial_step(st.flow, &y, &f, atol, rtol).min(st.cfg.t_end);
    let mut attempts = 0usize;
    while t < st.cfg.t_end {
        if st.accepted >= st.cfg.max_steps || attempts >= 4 * st.cfg.max_steps {
            return st.finish(t, &y, Status::MaxSteps { t });
        }
        attempts += 1;
        let (t_new, hit) = st.clip(t + h);
        let h_try = t_new - t;
        if h_try < 1e-14 * t.abs().max(1.0) {
            return st.finish(t, &y, Status::StepUnderflow { t, step: h_try });
        }
        let mut k: Vec<RealVector> = Vec::with_capacity(7);
        k.push(f.clone());
        let mut failed = false;
        for row in &A[1..7] {
            let mut ys = y.clone();
            for (j, kj) in k.iter().enumerate() {
                if row[j] != 0.0 {
                    ys += kj * (h_try * row[j]);
                }
            }
            match st.flow.eval(&ys) {
                Ok(v) if v.iter().all(|x| x.is_finite()) => k.push(v),
                _ => {
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h = h_try * MIN_FACTOR;
            continue;
        }
        // 7th stage is evaluated at the 5th-order solution (FSAL)
        let mut y_new = y.clone();
        for (j, kj) in k.iter().enumerate().take(6) {
            if A[6][j] != 0.0 {
                y_new += kj * (h_try * A[6][j]);
            }
        }
        let mut err = RealVector::zeros(y.len());
        for (j, kj) in k.iter().enumerate() {
            if E[j] != 0.0 {
                err += kj * (h_try * E[j]);
            }
        }
        let en = error_norm(&err, &y, &y_new, atol, rtol);
        if !en.is_finite() {
            h = h_try * MIN_FACTOR;
            continue;
        }
        if en <= 1.0 {
            if let Check::Stop(status) = st.inspect(t_new, &y_new) {
                return st.finish(t, &y, status);
            }
            t = t_new;
            y = y_new;
            f = k.pop().expect("seven stages");
            st.accept(t, &y, hit);
            let factor = if en == 0.0 {
                MAX_FACTOR
            } else {
                (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
            };
            // a step shortened to land on a target should not shrink the next one
            h = if hit {
                h.max(h_try * factor)
            } else {
                h_try * factor
            };
        } else {
            h = h_try * (SAFETY * en.powf(-0.2)).clamp(MIN_FACTOR, 1.0);
        }
    }
    st.finish(t, &y, Status::Completed)
}
