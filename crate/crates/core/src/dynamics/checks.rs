//! Integrator-free checks of the chart identities and of conservation.

use crate::conservation::{Chart, ConservationCertificate, ConstantOfMotion};
use crate::error::{Error, Result};
use crate::linalg::{RealMatrix, RealVector};
use crate::systems::{dphi, phi, psi, psi_jacobian, xtilde_field, ReplicatorSystem};

use super::trajectory::{evaluate_along, Drift, Trajectory};

/// Central-difference step.
pub const FD_STEP: f64 = 1e-6;

/// Drift of `com` along `traj`, measured against its value at `t = 0`.
pub fn conservation_drift(traj: &Trajectory, com: &ConstantOfMotion) -> Result<Drift> {
    Ok(Drift::of(&evaluate_along(traj, com)?))
}

/// `max ‖dφ(u) B dφ(u)ᵗ − π_A(φ(u))‖_max` over the samples.
pub fn check_identity_2_5(sys: &ReplicatorSystem, u_samples: &[RealVector]) -> Result<f64> {
    let b = sys.b_matrix();
    let mut worst = 0.0_f64;
    for u in u_samples {
        if u.len() + 1 != sys.n() {
            return Err(Error::Dimension {
                context: "chart sample",
                expected: sys.n() - 1,
                got: u.len(),
            });
        }
        let j = dphi(u);
        let lhs = &j * &b * j.transpose();
        worst = worst.max((lhs - sys.pi(&phi(u))?).amax());
    }
    Ok(worst)
}

/// `max ‖J_ψ(x) X_A(x) − x_n Y_(A',r)(ψ(x))‖_max` over interior samples.
pub fn check_pushforward_5_1(sys: &ReplicatorSystem, x_samples: &[RealVector]) -> Result<f64> {
    let lv = sys.to_lotka_volterra()?;
    let mut worst = 0.0_f64;
    for (k, x) in x_samples.iter().enumerate() {
        if let Some(i) = x.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::Domain(format!(
                "push-forward check needs interior samples; sample {k} has x_{} = {}",
                i + 1,
                x[i]
            )));
        }
        let lhs = psi_jacobian(x)? * sys.field(x)?;
        let rhs = lv.field(&psi(x)?)? * x[x.len() - 1];
        worst = worst.max((lhs - rhs).amax());
    }
    Ok(worst)
}

/// Largest relative error `|fd − ∇H| / max(1, |∇H|)` of the `u`-chart gradient.
pub fn gradient_check(com: &ConstantOfMotion, u_samples: &[RealVector]) -> Result<f64> {
    let u_chart = com.clone().with_chart(Chart::U);
    let mut worst = 0.0_f64;
    for u in u_samples {
        let grad = u_chart.grad_u(u)?;
        for i in 0..u.len() {
            let mut up = u.clone();
            let mut um = u.clone();
            up[i] += FD_STEP;
            um[i] -= FD_STEP;
            let fd = (u_chart.eval_u(&up)? - u_chart.eval_u(&um)?) / (2.0 * FD_STEP);
            worst = worst.max((fd - grad[i]).abs() / grad[i].abs().max(1.0));
        }
    }
    Ok(worst)
}

/// Largest `|⟨X̃_B, ∇H_D⟩| / ((1 + ‖X̃_B‖)(1 + ‖∇H_D‖))` over the samples.
pub fn pointwise_orthogonality(
    b: &RealMatrix,
    cert: &ConservationCertificate,
    u_samples: &[RealVector],
) -> Result<f64> {
    let h = cert.constant_of_motion(Chart::U);
    let mut worst = 0.0_f64;
    for u in u_samples {
        let field = xtilde_field(b, &cert.q, u)?;
        let grad = h.grad_u(u)?;
        let scale = (1.0 + field.norm()) * (1.0 + grad.norm());
        worst = worst.max(field.dot(&grad).abs() / scale);
    }
    Ok(worst)
}
