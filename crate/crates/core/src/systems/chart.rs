use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{RealMatrix, RealVector};

use super::AffinePoint;

/// `1 + Σ eᵘⁱ`, the scalar factor relating the chart fields.
pub fn chart_scale(u: &RealVector) -> f64 {
    1.0 + u.iter().map(|v| v.exp()).sum::<f64>()
}

/// `φ(u) = (eᵘ¹, …, eᵘⁿ⁻¹, 1) / (1 + Σ eᵘʲ)`.
pub fn phi(u: &RealVector) -> RealVector {
    let m = u.len();
    // shift by the largest exponent so large u do not overflow
    let shift = u.iter().copied().fold(0.0_f64, f64::max);
    let mut x = RealVector::zeros(m + 1);
    for i in 0..m {
        x[i] = (u[i] - shift).exp();
    }
    x[m] = (-shift).exp();
    let s = x.sum();
    x / s
}

/// `φ⁻¹(x)_i = log(x_i / x_n)`; interior points only.
pub fn phi_inv(x: &RealVector) -> Result<RealVector> {
    if x.len() < 2 {
        return Err(Error::Input("chart needs at least two coordinates".into()));
    }
    if let Some(i) = x.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::Domain(format!(
            "chart inverse needs an interior point; coordinate {} is {}",
            i + 1,
            x[i]
        )));
    }
    let m = x.len() - 1;
    let xn = x[m];
    Ok(RealVector::from_fn(m, |i, _| (x[i] / xn).ln()))
}

/// Jacobian of `φ` at `u`, an `n×(n−1)` matrix.
pub fn dphi(u: &RealVector) -> RealMatrix {
    let m = u.len();
    let x = phi(u);
    RealMatrix::from_fn(m + 1, m, |i, j| {
        let diag = if i == j { x[i] } else { 0.0 };
        diag - x[i] * x[j]
    })
}

/// `η_q(u)_i = q_i − φ(u)_i` for `i < n`, the differential of `H_q ∘ φ`.
pub fn eta_q(q: &AffinePoint, u: &RealVector) -> Result<RealVector> {
    ensure_dim("eta_q", q.len(), u.len() + 1)?;
    let x = phi(u);
    Ok(RealVector::from_fn(u.len(), |i, _| q.as_vector()[i] - x[i]))
}

/// Pulled-back replicator field `X̃_B(u) = B η_q(u)`.
pub fn xtilde_field(b: &RealMatrix, q: &AffinePoint, u: &RealVector) -> Result<RealVector> {
    ensure_dim("xtilde field", b.ncols(), u.len())?;
    ensure_dim("xtilde field", b.nrows(), u.len())?;
    Ok(b * eta_q(q, u)?)
}

/// Time-rescaled field `Ỹ_B(u) = (1 + Σ eᵘⁱ) X̃_B(u)`.
pub fn ybold_field(b: &RealMatrix, q: &AffinePoint, u: &RealVector) -> Result<RealVector> {
    Ok(xtilde_field(b, q, u)? * chart_scale(u))
}

/// `ψ(x)_i = x_i / x_n`, simplex interior to the positive orthant.
pub fn psi(x: &RealVector) -> Result<RealVector> {
    if x.len() < 2 {
        return Err(Error::Input("psi needs at least two coordinates".into()));
    }
    let m = x.len() - 1;
    let xn = x[m];
    if !(xn > 0.0) {
        return Err(Error::Domain(format!("psi needs x_n > 0, got {xn}")));
    }
    Ok(RealVector::from_fn(m, |i, _| x[i] / xn))
}

/// `ψ⁻¹(y) = (y, 1) / (1 + Σ y_j)`.
pub fn psi_inv(y: &RealVector) -> RealVector {
    let m = y.len();
    let s = 1.0 + y.sum();
    RealVector::from_fn(m + 1, |i, _| if i < m { y[i] / s } else { 1.0 / s })
}

/// Jacobian of `ψ` at `x`, an `(n−1)×n` matrix.
pub fn psi_jacobian(x: &RealVector) -> Result<RealMatrix> {
    let _ = psi(x)?;
    let m = x.len() - 1;
    let xn = x[m];
    Ok(RealMatrix::from_fn(m, m + 1, |i, j| {
        if j == m {
            -x[i] / (xn * xn)
        } else if i == j {
            1.0 / xn
        } else {
            0.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::ReplicatorSystem;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_u(rng: &mut ChaCha8Rng, m: usize) -> RealVector {
        RealVector::from_fn(m, |_, _| rng.gen_range(-3.0..3.0))
    }

    /// Payoff with zero last row and `q` as formal equilibrium.
    fn payoff_with_equilibrium(rng: &mut ChaCha8Rng, q: &RealVector) -> ReplicatorSystem {
        let n = q.len();
        let m = n - 1;
        let mut a = RealMatrix::zeros(n, n);
        for i in 0..m {
            let mut acc = 0.0;
            for j in 0..m {
                let v = rng.gen_range(-2.0..2.0);
                a[(i, j)] = v;
                acc += v * q[j];
            }
            a[(i, m)] = -acc / q[m];
        }
        ReplicatorSystem::new(a).unwrap()
    }

    fn random_interior(rng: &mut ChaCha8Rng, n: usize) -> AffinePoint {
        let v = RealVector::from_fn(n, |_, _| rng.gen_range(0.1..1.0));
        let s = v.sum();
        AffinePoint::new(v / s).unwrap()
    }

    #[test]
    fn origin_maps_to_barycenter() {
        for n in 2..7 {
            let x = phi(&RealVector::zeros(n - 1));
            assert!((x - RealVector::from_element(n, 1.0 / n as f64)).amax() < 1e-16);
        }
    }

    #[test]
    fn phi_inverse_pair() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let m = rng.gen_range(1..6);
            let u = random_u(&mut rng, m);
            let back = phi_inv(&phi(&u)).unwrap();
            assert!((back - &u).amax() < 1e-12);
        }
        assert!(phi_inv(&RealVector::from_vec(vec![0.5, 0.5, 0.0])).is_err());
    }

    #[test]
    fn dphi_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let h = 1e-6;
        for _ in 0..20 {
            let m = rng.gen_range(1..6);
            let u = random_u(&mut rng, m);
            let j = dphi(&u);
            for col in 0..m {
                assert!(j.column(col).sum().abs() < 1e-15);
                let mut up = u.clone();
                let mut um = u.clone();
                up[col] += h;
                um[col] -= h;
                let fd = (phi(&up) - phi(&um)) / (2.0 * h);
                assert!((fd - j.column(col)).amax() < 1e-8);
            }
        }
    }

    #[test]
    fn eta_vanishes_at_equilibrium_image() {
        let q = AffinePoint::uniform(4);
        assert!(eta_q(&q, &RealVector::zeros(3)).unwrap().amax() < 1e-16);
    }

    #[test]
    fn eta_matches_gradient_of_pulled_back_entropy() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let h = 1e-6;
        for _ in 0..20 {
            let n = rng.gen_range(2..7);
            let q = random_interior(&mut rng, n);
            let u = random_u(&mut rng, n - 1);
            let hq = |u: &RealVector| {
                (0..n - 1).map(|i| q.as_vector()[i] * u[i]).sum::<f64>() - chart_scale(u).ln()
            };
            let eta = eta_q(&q, &u).unwrap();
            let x = phi(&u);
            for i in 0..n - 1 {
                assert!((eta[i] - (q.as_vector()[i] - x[i])).abs() < 1e-16);
                let mut up = u.clone();
                let mut um = u.clone();
                up[i] += h;
                um[i] -= h;
                let fd = (hq(&up) - hq(&um)) / (2.0 * h);
                let rel = (fd - eta[i]).abs() / eta[i].abs().max(1e-3);
                assert!(rel < 1e-6, "rel err {rel}");
            }
        }
    }

    #[test]
    fn chart_field_pushes_forward_to_replicator_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for n in 2..7 {
            let q = random_interior(&mut rng, n);
            let sys = payoff_with_equilibrium(&mut rng, q.as_vector());
            let b = sys.b_matrix();
            // equilibrium image is a zero of the chart field
            let uq = phi_inv(q.as_vector()).unwrap();
            assert!(xtilde_field(&b, &q, &uq).unwrap().amax() < 1e-12);
            for _ in 0..20 {
                let u = random_u(&mut rng, n - 1);
                let pushed = dphi(&u) * xtilde_field(&b, &q, &u).unwrap();
                let direct = sys.field(&phi(&u)).unwrap();
                assert!((pushed - direct).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn ybold_is_scaled_xtilde() {
        let b = RealMatrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.5]);
        let q = AffinePoint::uniform(3);
        let u = RealVector::zeros(2);
        let y = ybold_field(&b, &q, &u).unwrap();
        let x = xtilde_field(&b, &q, &u).unwrap();
        assert!((y - x * 3.0).amax() < 1e-16);
    }

    #[test]
    fn identity_chart_matrix_conjugates_to_pi() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for n in 2..7 {
            let a = RealMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
            let sys = ReplicatorSystem::new(a).unwrap();
            let b = sys.b_matrix();
            for _ in 0..20 {
                let u = random_u(&mut rng, n - 1);
                let j = dphi(&u);
                let lhs = &j * &b * j.transpose();
                let rhs = sys.pi(&phi(&u)).unwrap();
                assert!((lhs - rhs).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn psi_roundtrip_and_pushforward() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        for n in 2..7 {
            let a = RealMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0));
            let sys = ReplicatorSystem::new(a).unwrap();
            let lv = sys.to_lotka_volterra().unwrap();
            for _ in 0..20 {
                let x = phi(&random_u(&mut rng, n - 1));
                let y = psi(&x).unwrap();
                assert!((psi_inv(&y) - &x).amax() < 1e-12);
                let lhs = psi_jacobian(&x).unwrap() * sys.field(&x).unwrap();
                let rhs = lv.field(&y).unwrap() * x[n - 1];
                assert!((lhs - rhs).amax() < 1e-10);
            }
        }
        assert!(psi(&RealVector::from_vec(vec![1.0, 0.0])).is_err());
    }
}
