//! Constant-coefficient structures generated by a pair `(B, D)`.
//!
//! The pair spans the subbundle `{(B α, Dᵗ α)}` scaled by the positive
//! function `1 + Σ eᵘⁱ`. Because that factor never vanishes every check
//! reduces to the constant matrices: isotropy is `DB` skew-symmetric and
//! maximality is `ker B ∩ ker Dᵗ = 0`. Closure under the Courant bracket
//! follows from isotropy for constant pairs and is not tested numerically;
//! likewise the Jacobi identity of a constant bivector holds trivially.

use serde::Serialize;

use crate::conservation::{make_certificate, Chart, CERTIFICATE_TOL};
use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{numerical_rank, skew_residual, try_inverse, RealMatrix, RealVector};
use crate::systems::{chart_scale, eta_q, xtilde_field, ybold_field, AffinePoint};

/// Central finite-difference step for gradient checks.
pub const FD_STEP: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum ClassLabel {
    #[serde(rename = "none")]
    None,
    #[serde(rename = "big-isotropic")]
    BigIsotropic,
    #[serde(rename = "Dirac")]
    Dirac,
    #[serde(rename = "Poisson")]
    Poisson,
    #[serde(rename = "presymplectic")]
    Presymplectic,
    #[serde(rename = "symplectic")]
    Symplectic,
}

impl std::fmt::Display for ClassLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::None => "none",
            Self::BigIsotropic => "big-isotropic",
            Self::Dirac => "Dirac",
            Self::Poisson => "Poisson",
            Self::Presymplectic => "presymplectic",
            Self::Symplectic => "symplectic",
        })
    }
}

#[derive(Debug, Clone)]
pub struct StructureClassification {
    pub isotropic: bool,
    /// `max |DB + BᵗDᵗ|`
    pub isotropy_residual: f64,
    pub maximal: bool,
    pub b_invertible: bool,
    pub dt_invertible: bool,
    /// Most specific label: symplectic, presymplectic, Poisson, Dirac,
    /// big-isotropic, or none when isotropy fails.
    pub class_label: ClassLabel,
    /// Every label that applies, from most general to most specific.
    pub labels: Vec<ClassLabel>,
    /// `Dᵗ B⁻¹` when `B` is invertible.
    pub presymplectic_matrix: Option<RealMatrix>,
    /// `B (Dᵗ)⁻¹` when `Dᵗ` is invertible.
    pub poisson_matrix: Option<RealMatrix>,
}

impl StructureClassification {
    pub fn has_label(&self, label: ClassLabel) -> bool {
        self.labels.contains(&label)
    }
}

/// Classifies the pair `(B, D)`. Isotropy uses the certificate tolerance
/// relative to `1 + ‖D‖‖B‖`; ranks use `rank_tol` relative to the largest
/// singular value.
pub fn classify(b: &RealMatrix, d: &RealMatrix, rank_tol: f64) -> Result<StructureClassification> {
    if !b.is_square() || !d.is_square() {
        return Err(Error::Input(format!(
            "classification needs square matrices, got B {}x{} and D {}x{}",
            b.nrows(),
            b.ncols(),
            d.nrows(),
            d.ncols()
        )));
    }
    ensure_dim("classification pair", b.nrows(), d.nrows())?;
    let m = b.nrows();
    let dt = d.transpose();

    let isotropy_residual = skew_residual(&(d * b))?;
    let isotropic = isotropy_residual <= CERTIFICATE_TOL * (1.0 + d.norm() * b.norm());

    let mut stacked = RealMatrix::zeros(2 * m, m);
    stacked.rows_mut(0, m).copy_from(b);
    stacked.rows_mut(m, m).copy_from(&dt);
    let maximal = numerical_rank(&stacked, rank_tol)? == m;

    let b_inv = try_inverse(b, rank_tol)?;
    let dt_inv = try_inverse(&dt, rank_tol)?;
    let b_invertible = b_inv.is_some();
    let dt_invertible = dt_inv.is_some();
    let presymplectic_matrix = b_inv.map(|bi| &dt * bi);
    let poisson_matrix = dt_inv.map(|di| b * di);

    let mut labels = Vec::new();
    if isotropic {
        labels.push(ClassLabel::BigIsotropic);
        if maximal {
            labels.push(ClassLabel::Dirac);
        }
        if dt_invertible {
            labels.push(ClassLabel::Poisson);
        }
        if b_invertible {
            labels.push(ClassLabel::Presymplectic);
        }
        if b_invertible && dt_invertible {
            labels.push(ClassLabel::Symplectic);
        }
    }
    let class_label = labels.iter().copied().max().unwrap_or(ClassLabel::None);

    Ok(StructureClassification {
        isotropic,
        isotropy_residual,
        maximal,
        b_invertible,
        dt_invertible,
        class_label,
        labels,
        presymplectic_matrix,
        poisson_matrix,
    })
}

/// Maximum residuals of the Hamiltonian-pair identities over the samples.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct HamiltonianPairReport {
    pub samples: usize,
    /// `Ỹ_B(u)` against `(1 + Σ eᵘⁱ) B · η_q(u)`, relative.
    pub field_residual: f64,
    /// `c + g eᵘ` against `(1 + Σ eᵘⁱ) Dᵗ η_q(u)`, relative.
    pub gradient_analytic_residual: f64,
    /// `c + g eᵘ` against central differences of `H_u`, relative.
    pub gradient_fd_residual: f64,
    /// `Ỹ_B(u) / (1 + Σ eᵘⁱ)` against `X̃_B(u)`, relative.
    pub scalar_factor_residual: f64,
}

fn rel_diff(a: &RealVector, b: &RealVector) -> f64 {
    (a - b).amax() / 1.0_f64.max(a.amax()).max(b.amax())
}

/// Checks that `(Ỹ_B, dH_D)` lies in the structure generated by `(B, D)`
/// at each sample `u`.
pub fn verify_hamiltonian_pair(
    b: &RealMatrix,
    d: &RealMatrix,
    q: &AffinePoint,
    samples: &[RealVector],
) -> Result<HamiltonianPairReport> {
    let cert = make_certificate(d, q, b)?;
    let h = cert.constant_of_motion(Chart::U);
    let dt = d.transpose();
    let mut report = HamiltonianPairReport {
        samples: samples.len(),
        ..Default::default()
    };
    for u in samples {
        let f = chart_scale(u);
        let eta = eta_q(q, u)?;
        let y_field = ybold_field(b, q, u)?;
        let y_matrix = (b * f) * &eta;
        report.field_residual = report.field_residual.max(rel_diff(&y_field, &y_matrix));

        let grad = h.grad_u(u)?;
        let pulled = (&dt * f) * &eta;
        report.gradient_analytic_residual = report
            .gradient_analytic_residual
            .max(rel_diff(&grad, &pulled));

        let mut fd = RealVector::zeros(u.len());
        for i in 0..u.len() {
            let mut up = u.clone();
            let mut um = u.clone();
            up[i] += FD_STEP;
            um[i] -= FD_STEP;
            fd[i] = (h.eval_u(&up)? - h.eval_u(&um)?) / (2.0 * FD_STEP);
        }
        report.gradient_fd_residual = report.gradient_fd_residual.max(rel_diff(&grad, &fd));

        let x_field = xtilde_field(b, q, u)?;
        report.scalar_factor_residual = report
            .scalar_factor_residual
            .max(rel_diff(&(y_field / f), &x_field));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DEFAULT_RANK_TOL;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m2(v: [f64; 4]) -> RealMatrix {
        RealMatrix::from_row_slice(2, 2, &v)
    }

    #[test]
    fn rotation_with_identity_is_symplectic() {
        let b = m2([0.0, 1.0, -1.0, 0.0]);
        let cls = classify(&b, &RealMatrix::identity(2, 2), DEFAULT_RANK_TOL).unwrap();
        assert!(cls.isotropic && cls.maximal && cls.b_invertible && cls.dt_invertible);
        assert_eq!(cls.class_label, ClassLabel::Symplectic);
        let omega = cls.presymplectic_matrix.unwrap();
        assert!((omega - m2([0.0, -1.0, 1.0, 0.0])).amax() < 1e-15);
    }

    #[test]
    fn zero_bivector_is_dirac_and_poisson() {
        let cls = classify(
            &RealMatrix::zeros(2, 2),
            &RealMatrix::identity(2, 2),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert!(cls.isotropic && cls.maximal);
        assert!(cls.has_label(ClassLabel::Dirac));
        assert!(cls.has_label(ClassLabel::Poisson));
        assert!(!cls.has_label(ClassLabel::Presymplectic));
        assert_eq!(cls.poisson_matrix.unwrap().amax(), 0.0);
        assert!(cls.presymplectic_matrix.is_none());
    }

    #[test]
    fn zero_pair_is_only_big_isotropic() {
        let z = RealMatrix::zeros(3, 3);
        let cls = classify(&z, &z, DEFAULT_RANK_TOL).unwrap();
        assert!(cls.isotropic && !cls.maximal);
        assert_eq!(cls.labels, vec![ClassLabel::BigIsotropic]);
        assert_eq!(cls.class_label, ClassLabel::BigIsotropic);
    }

    #[test]
    fn non_isotropic_pair() {
        let cls = classify(
            &RealMatrix::identity(2, 2),
            &RealMatrix::identity(2, 2),
            DEFAULT_RANK_TOL,
        )
        .unwrap();
        assert!(!cls.isotropic);
        assert_eq!(cls.class_label, ClassLabel::None);
        assert!(cls.labels.is_empty());
    }

    #[test]
    fn size_mismatch_is_input_error() {
        assert!(classify(&RealMatrix::zeros(2, 2), &RealMatrix::zeros(3, 3), 1e-10).is_err());
        assert!(classify(&RealMatrix::zeros(2, 3), &RealMatrix::zeros(2, 3), 1e-10).is_err());
    }

    #[test]
    fn predator_prey_pair_is_poisson() {
        let b = m2([-1.0, -2.0, 2.0, 1.0]);
        let d = m2([2.0, 1.0, 1.0, 2.0]);
        let cls = classify(&b, &d, DEFAULT_RANK_TOL).unwrap();
        assert!(cls.has_label(ClassLabel::Poisson));
        let pi = cls.poisson_matrix.unwrap();
        assert!(skew_residual(&pi).unwrap() < 1e-10);
    }

    #[test]
    fn reductions_are_skew_and_labels_scale_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        for _ in 0..30 {
            let m = rng.gen_range(1..5);
            // D B = S skew with D, S random gives an isotropic pair
            let g = RealMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
            let s = &g - g.transpose();
            let d = RealMatrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0))
                + RealMatrix::identity(m, m) * 3.0;
            let b = d.clone().try_inverse().unwrap() * s;
            let cls = classify(&b, &d, DEFAULT_RANK_TOL).unwrap();
            assert!(cls.isotropic);
            for red in [&cls.presymplectic_matrix, &cls.poisson_matrix]
                .into_iter()
                .flatten()
            {
                assert!(skew_residual(red).unwrap() < 1e-10 * (1.0 + red.amax()));
            }
            for lambda in [0.5, 2.0, 10.0] {
                let scaled = classify(&(&b * lambda), &(&d * lambda), DEFAULT_RANK_TOL).unwrap();
                assert_eq!(scaled.labels, cls.labels);
            }
        }
    }

    fn predator_prey() -> (RealMatrix, RealMatrix, AffinePoint) {
        (
            m2([-1.0, -2.0, 2.0, 1.0]),
            m2([2.0, 1.0, 1.0, 2.0]),
            AffinePoint::uniform(3),
        )
    }

    #[test]
    fn hamiltonian_pair_predator_prey() {
        let (b, d, q) = predator_prey();
        let u = RealVector::from_vec(vec![0.3, -0.2]);
        let rep = verify_hamiltonian_pair(&b, &d, &q, std::slice::from_ref(&u)).unwrap();
        assert!(rep.field_residual < 1e-12);
        assert!(rep.gradient_analytic_residual < 1e-10);
        assert!(rep.gradient_fd_residual < 1e-6);
        assert!(rep.scalar_factor_residual < 1e-12);

        // independent evaluation of c_i + g_i eᵘⁱ with c = 𝟙, g = −𝟙
        let expected = u.map(|v| 1.0 - v.exp());
        let f = chart_scale(&u);
        let via_eta = d.transpose() * eta_q(&q, &u).unwrap() * f;
        assert!((expected - via_eta).amax() < 1e-12);
    }

    #[test]
    fn hamiltonian_pair_at_equilibrium_image() {
        let (b, d, q) = predator_prey();
        // φ(0) is the barycenter, which is q
        let rep = verify_hamiltonian_pair(&b, &d, &q, &[RealVector::zeros(2)]).unwrap();
        assert!(rep.field_residual == 0.0 && rep.gradient_analytic_residual < 1e-15);
        assert!(eta_q(&q, &RealVector::zeros(2)).unwrap().amax() < 1e-16);
    }

    #[test]
    fn hamiltonian_pair_random_samples() {
        let (b, d, q) = predator_prey();
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let samples: Vec<RealVector> = (0..50)
            .map(|_| RealVector::from_fn(2, |_, _| rng.gen_range(-3.0..3.0)))
            .collect();
        let rep = verify_hamiltonian_pair(&b, &d, &q, &samples).unwrap();
        assert_eq!(rep.samples, 50);
        assert!(rep.field_residual < 1e-12);
        assert!(rep.scalar_factor_residual < 1e-12);
        assert!(rep.gradient_fd_residual < 1e-6);
    }

    #[test]
    fn invalid_certificate_rejected() {
        let (b, _, q) = predator_prey();
        let err = verify_hamiltonian_pair(&b, &RealMatrix::identity(2, 2), &q, &[]).unwrap_err();
        assert!(matches!(err, Error::InvalidCertificate { .. }));
    }
}
