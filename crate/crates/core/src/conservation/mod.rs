//! Certificate search and the constants of motion it produces.
//!
//! A certificate is a constant matrix `D` with
//!
//! 1. `D B` skew-symmetric, and
//! 2. `Dᵗ Q₁(q)` diagonal,
//!
//! where `B = −E A Eᵗ` is the chart matrix of a replicator system and `q` a
//! formal equilibrium. Any such `D` yields the first integral
//! `H_D(u) = Σ c_i u_i + Σ g_i eᵘⁱ` with `c = Dᵗ q_{<n}` and `g_i = c_i − d_ii`.

mod constant;
mod gauge;
mod search;

pub use constant::{Chart, ClassicalIntegral, ConstantOfMotion};
pub use gauge::{certificate_from_gauge, gauge_skew_symmetrizer, GaugeFailure, GaugeOutcome};
pub use search::{
    certificate_matrix_from_coefficients, certificate_search_general, certificate_search_reduced,
    condition_residuals, make_certificate, make_certificate_with_tol, CertificateFamily,
    ConditionResiduals, ConservationCertificate, SearchMethod, CERTIFICATE_TOL,
};

use crate::error::{Error, Result};
use crate::linalg::RealMatrix;
use crate::systems::AffinePoint;

/// `Q₁` with entries `q_i − δ_ij`, size `(n−1)×(n−1)`.
pub fn build_q1(q: &AffinePoint) -> RealMatrix {
    let m = q.len() - 1;
    let qv = q.as_vector();
    RealMatrix::from_fn(m, m, |i, j| qv[i] - if i == j { 1.0 } else { 0.0 })
}

/// `Q₂` with entries `(q_n δ_ij + q_i) / q_n`.
pub fn build_q2(q: &AffinePoint) -> Result<RealMatrix> {
    let m = q.len() - 1;
    let qn = q.last();
    if qn == 0.0 {
        return Err(Error::UnsupportedEquilibrium("Q2 divides by q_n"));
    }
    let qv = q.as_vector();
    Ok(RealMatrix::from_fn(m, m, |i, j| {
        (if i == j { qn } else { 0.0 } + qv[i]) / qn
    }))
}

/// `Q̄₁`: ones off the diagonal, `(q_i + q_n)/q_i` on it, so that `Q̄₁ᵗ Q₁`
/// is diagonal. A column with `q_i = 0` is the unit vector `e_i`.
pub fn build_qbar1(q: &AffinePoint) -> Result<RealMatrix> {
    let m = q.len() - 1;
    let qn = q.last();
    if qn == 0.0 {
        return Err(Error::UnsupportedEquilibrium(
            "the closed-form column structure needs q_n != 0",
        ));
    }
    let qv = q.as_vector();
    Ok(RealMatrix::from_fn(m, m, |i, j| {
        if qv[j] == 0.0 {
            if i == j {
                1.0
            } else {
                0.0
            }
        } else if i == j {
            (qv[j] + qn) / qv[j]
        } else {
            1.0
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{offdiag_residual, RealVector};
    use proptest::prelude::*;

    #[test]
    fn uniform_q_matrices() {
        for n in 2..7 {
            let q = AffinePoint::uniform(n);
            let expected = RealMatrix::from_fn(n - 1, n - 1, |i, j| if i == j { 2.0 } else { 1.0 });
            assert!((build_qbar1(&q).unwrap() - &expected).amax() < 1e-14);
            // direct substitution into the entrywise formula: Q2 = Q̄1 for uniform q
            assert!((build_q2(&q).unwrap() - &expected).amax() < 1e-14);
        }
    }

    #[test]
    fn two_strategy_q1() {
        let q = AffinePoint::new(RealVector::from_vec(vec![0.3, 0.7])).unwrap();
        let q1 = build_q1(&q);
        assert_eq!(q1.shape(), (1, 1));
        assert!((q1[(0, 0)] - (0.3 - 1.0)).abs() < 1e-16);
    }

    #[test]
    fn vanishing_last_coordinate_rejected() {
        let q = AffinePoint::new(RealVector::from_vec(vec![0.5, 0.5, 0.0])).unwrap();
        assert!(matches!(
            build_q2(&q),
            Err(Error::UnsupportedEquilibrium(_))
        ));
        assert!(matches!(
            build_qbar1(&q),
            Err(Error::UnsupportedEquilibrium(_))
        ));
    }

    #[test]
    fn zero_coordinate_gives_unit_column() {
        let q = AffinePoint::new(RealVector::from_vec(vec![0.0, 0.4, 0.6])).unwrap();
        let qbar = build_qbar1(&q).unwrap();
        assert_eq!(qbar.column(0).as_slice(), &[1.0, 0.0]);
        assert!(offdiag_residual(&(qbar.transpose() * build_q1(&q))).unwrap() < 1e-15);
    }

    proptest! {
        #[test]
        fn qbar1_diagonalizes_q1(raw in proptest::collection::vec(-2.0f64..2.0, 2..7)) {
            // points on the affine hull with q_n bounded away from 0
            let n = raw.len() + 1;
            let mut v = RealVector::zeros(n);
            for (i, x) in raw.iter().enumerate() {
                v[i] = *x;
            }
            let head: f64 = raw.iter().sum();
            v[n - 1] = 1.0 - head;
            prop_assume!(v[n - 1].abs() > 1e-3);
            prop_assume!(raw.iter().all(|x| x.abs() > 1e-3));
            let q = AffinePoint::new(v).unwrap();
            let prod = build_qbar1(&q).unwrap().transpose() * build_q1(&q);
            prop_assert!(offdiag_residual(&prod).unwrap() < 1e-12 * (1.0 + prod.amax()));
        }
    }
}
