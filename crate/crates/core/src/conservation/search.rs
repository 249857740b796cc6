use serde::{Deserialize, Serialize};

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{
    nullspace_basis, offdiag_residual, orthonormal_span, projection_residual, skew_residual,
    unvec_row_major, vec_row_major, RealMatrix, RealVector,
};
use crate::systems::AffinePoint;

use super::{build_q1, build_q2, build_qbar1, Chart, ConstantOfMotion};

/// Relative tolerance on both certificate conditions.
pub const CERTIFICATE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchMethod {
    /// Nullspace over all `(n−1)²` entries of `D`.
    General,
    /// `D = Q̄₁ diag(d)`, nullspace over `d ∈ ℝⁿ⁻¹`.
    Reduced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConditionResiduals {
    /// `max |DB + (DB)ᵗ|`
    pub skew: f64,
    /// largest off-diagonal entry of `Dᵗ Q₁`
    pub offdiag: f64,
}

impl ConditionResiduals {
    pub fn within(&self, d: &RealMatrix, b: &RealMatrix, tol: f64) -> bool {
        let dn = d.norm();
        self.skew <= tol * (1.0 + dn * b.norm()) && self.offdiag <= tol * (1.0 + dn)
    }
}

pub fn condition_residuals(
    d: &RealMatrix,
    b: &RealMatrix,
    q: &AffinePoint,
) -> Result<ConditionResiduals> {
    let m = q.len() - 1;
    ensure_dim("certificate rows", m, d.nrows())?;
    ensure_dim("certificate cols", m, d.ncols())?;
    ensure_dim("chart matrix", m, b.nrows())?;
    Ok(ConditionResiduals {
        skew: skew_residual(&(d * b))?,
        offdiag: offdiag_residual(&(d.transpose() * build_q1(q)))?,
    })
}

/// Linear space of certificate matrices found by one search method.
/// An empty family means the method found nothing, which does not rule out
/// other constants of motion.
#[derive(Debug, Clone)]
pub struct CertificateFamily {
    pub method: SearchMethod,
    /// Certificate matrices spanning the family. Orthonormal in the
    /// Frobenius inner product for the general method; lifted `Q̄₁ diag(d)`
    /// for the reduced one.
    pub basis: Vec<RealMatrix>,
    /// Reduced method only: the unit `d` vectors behind `basis`.
    pub coefficients: Vec<RealVector>,
    pub residuals: Vec<ConditionResiduals>,
    pub rank_tolerance: f64,
}

impl CertificateFamily {
    pub fn dimension(&self) -> usize {
        self.basis.len()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.is_empty()
    }

    /// Orthonormal basis of the family as vectors in `ℝ^{(n−1)²}` (row-major).
    pub fn span(&self) -> Vec<RealVector> {
        let flat: Vec<RealVector> = self.basis.iter().map(vec_row_major).collect();
        orthonormal_span(&flat, self.rank_tolerance)
    }

    /// Relative distance of `d` from the family's span.
    pub fn projection_residual(&self, d: &RealMatrix) -> f64 {
        projection_residual(&vec_row_major(d), &self.span())
    }

    /// Default certificate: the basis element with the largest `‖Dᵗq‖`,
    /// rescaled so that the first largest-magnitude entry of `c` equals one,
    /// with entries below `SNAP_TOL` relative set to zero.
    pub fn representative(&self, q: &AffinePoint) -> Option<RealMatrix> {
        let head = q.head();
        let best = self
            .basis
            .iter()
            .map(|d| (d, (d.transpose() * &head).norm()))
            .fold(None::<(&RealMatrix, f64)>, |acc, (d, s)| match acc {
                Some((_, best)) if best >= s => acc,
                _ => Some((d, s)),
            })?
            .0;
        let c = best.transpose() * &head;
        let peak = c.amax();
        let mut d = if peak > 1e-12 * (1.0 + best.amax()) {
            let lead = c
                .iter()
                .copied()
                .find(|v| v.abs() >= peak * (1.0 - 1e-9))
                .expect("peak entry exists");
            best / lead
        } else {
            best.clone()
        };
        // basis round-off, which `log y` and `y` terms would amplify far
        // from the equilibrium
        let floor = SNAP_TOL * d.amax();
        d.apply(|v| {
            if v.abs() < floor {
                *v = 0.0
            }
        });
        Some(d)
    }
}

/// Representative entries smaller than this fraction of the largest are
/// set to zero.
pub const SNAP_TOL: f64 = 1e-13;

/// Searches all `D` satisfying both certificate conditions.
///
/// Condition 1 contributes the `(n−1)n/2` entries of `DB + (DB)ᵗ` on and
/// above the diagonal, condition 2 the `(n−1)(n−2)` off-diagonal entries of
/// `DᵗQ₁`. Each block is scaled by its largest coefficient before the
/// nullspace is taken.
pub fn certificate_search_general(
    b: &RealMatrix,
    q: &AffinePoint,
    rank_tol: f64,
) -> Result<CertificateFamily> {
    let m = q.len() - 1;
    ensure_dim("chart matrix rows", m, b.nrows())?;
    ensure_dim("chart matrix cols", m, b.ncols())?;
    let q1 = build_q1(q);
    let unknowns = m * m;
    let idx = |r: usize, c: usize| r * m + c;

    let n_skew = m * (m + 1) / 2;
    let n_diag = m * m.saturating_sub(1);
    let mut sys = RealMatrix::zeros(n_skew + n_diag, unknowns);

    let b_scale = if b.amax() > 0.0 { 1.0 / b.amax() } else { 1.0 };
    let mut row = 0;
    for i in 0..m {
        for j in i..m {
            // (DB)_ij + (DB)_ji = Σ_k D_ik B_kj + Σ_k D_jk B_ki
            for k in 0..m {
                sys[(row, idx(i, k))] += b[(k, j)] * b_scale;
                sys[(row, idx(j, k))] += b[(k, i)] * b_scale;
            }
            row += 1;
        }
    }
    let q_scale = 1.0 / q1.amax().max(f64::MIN_POSITIVE);
    for i in 0..m {
        for j in 0..m {
            if i == j {
                continue;
            }
            // (DᵗQ₁)_ij = Σ_k D_ki Q1_kj
            for k in 0..m {
                sys[(row, idx(k, i))] += q1[(k, j)] * q_scale;
            }
            row += 1;
        }
    }
    debug_assert_eq!(row, sys.nrows());

    let ns = nullspace_basis(&sys, rank_tol)?;
    let basis: Vec<RealMatrix> = ns.basis.iter().map(|v| unvec_row_major(v, m, m)).collect();
    finish(SearchMethod::General, basis, Vec::new(), b, q, rank_tol)
}

/// Searches `D = Q̄₁ diag(d)` such that `Q̄₁ diag(d) A_sub Q₂` is
/// skew-symmetric. Requires `q_n ≠ 0`.
///
/// With `A_sub` the leading block of a payoff that has a zero last row and
/// `q` as formal equilibrium, the chart matrix is `B = −A_sub Q₂`, which is
/// what the returned residuals are measured against.
pub fn certificate_search_reduced(
    a_sub: &RealMatrix,
    q: &AffinePoint,
    rank_tol: f64,
) -> Result<CertificateFamily> {
    let m = q.len() - 1;
    ensure_dim("payoff block rows", m, a_sub.nrows())?;
    ensure_dim("payoff block cols", m, a_sub.ncols())?;
    let qbar = build_qbar1(q)?;
    let q2 = build_q2(q)?;
    let aq = a_sub * &q2;

    // M(d) = Σ_k d_k (Q̄₁ e_k)(e_kᵗ A_sub Q₂)
    let pieces: Vec<RealMatrix> = (0..m).map(|k| qbar.column(k) * aq.row(k)).collect();
    let mut sys = RealMatrix::zeros(m * (m + 1) / 2, m);
    let mut row = 0;
    for i in 0..m {
        for j in i..m {
            for (k, p) in pieces.iter().enumerate() {
                sys[(row, k)] = p[(i, j)] + p[(j, i)];
            }
            row += 1;
        }
    }

    let ns = nullspace_basis(&sys, rank_tol)?;
    let basis: Vec<RealMatrix> = ns
        .basis
        .iter()
        .map(|d| &qbar * RealMatrix::from_diagonal(d))
        .collect();
    let b = -aq;
    finish(SearchMethod::Reduced, basis, ns.basis, &b, q, rank_tol)
}

fn finish(
    method: SearchMethod,
    basis: Vec<RealMatrix>,
    coefficients: Vec<RealVector>,
    b: &RealMatrix,
    q: &AffinePoint,
    rank_tol: f64,
) -> Result<CertificateFamily> {
    let residuals = basis
        .iter()
        .map(|d| condition_residuals(d, b, q))
        .collect::<Result<Vec<_>>>()?;
    Ok(CertificateFamily {
        method,
        basis,
        coefficients,
        residuals,
        rank_tolerance: rank_tol,
    })
}

/// A validated certificate together with the coefficients of its first
/// integral.
#[derive(Debug, Clone)]
pub struct ConservationCertificate {
    pub d: RealMatrix,
    pub q: AffinePoint,
    /// `c_i = Σ_k d_ki q_k`
    pub c: RealVector,
    /// `g_i = c_i − d_ii`
    pub g: RealVector,
    pub residuals: ConditionResiduals,
}

impl ConservationCertificate {
    pub fn constant_of_motion(&self, chart: Chart) -> ConstantOfMotion {
        ConstantOfMotion::new(chart, self.c.clone(), self.g.clone())
            .expect("coefficient vectors share a length")
    }
}

/// Checks both conditions against `b` and computes `(c, g)`.
pub fn make_certificate(
    d: &RealMatrix,
    q: &AffinePoint,
    b: &RealMatrix,
) -> Result<ConservationCertificate> {
    make_certificate_with_tol(d, q, b, CERTIFICATE_TOL)
}

/// [`make_certificate`] with an explicit relative tolerance.
pub fn make_certificate_with_tol(
    d: &RealMatrix,
    q: &AffinePoint,
    b: &RealMatrix,
    tol: f64,
) -> Result<ConservationCertificate> {
    let residuals = condition_residuals(d, b, q)?;
    if !residuals.within(d, b, tol) {
        return Err(Error::InvalidCertificate {
            skew: residuals.skew,
            offdiag: residuals.offdiag,
        });
    }
    let c = d.transpose() * q.head();
    let g = &c - d.diagonal();
    Ok(ConservationCertificate {
        d: d.clone(),
        q: q.clone(),
        c,
        g,
        residuals,
    })
}

/// `D = Q̄₁ diag(c)`, the certificate whose integral has linear
/// coefficients `c`. Valid for equilibria with no zero coordinate, where
/// condition 2 forces this column structure.
pub fn certificate_matrix_from_coefficients(c: &RealVector, q: &AffinePoint) -> Result<RealMatrix> {
    ensure_dim("coefficient vector", q.len() - 1, c.len())?;
    if q.as_vector().iter().any(|&v| v == 0.0) {
        return Err(Error::UnsupportedEquilibrium(
            "coefficient lift needs every q_i != 0",
        ));
    }
    Ok(build_qbar1(q)? * RealMatrix::from_diagonal(c))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::ReplicatorSystem;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-10;

    fn m(rows: usize, cols: usize, v: &[f64]) -> RealMatrix {
        RealMatrix::from_row_slice(rows, cols, v)
    }

    #[test]
    fn scalar_case_has_no_certificate() {
        let q = AffinePoint::new(RealVector::from_vec(vec![0.4, 0.6])).unwrap();
        let fam = certificate_search_general(&m(1, 1, &[2.5]), &q, TOL).unwrap();
        assert_eq!(fam.dimension(), 0);
    }

    #[test]
    fn zero_chart_matrix_frees_every_column() {
        for n in 2..6 {
            let q = AffinePoint::uniform(n);
            let fam =
                certificate_search_general(&RealMatrix::zeros(n - 1, n - 1), &q, TOL).unwrap();
            assert_eq!(fam.dimension(), n - 1);
            let red =
                certificate_search_reduced(&RealMatrix::zeros(n - 1, n - 1), &q, TOL).unwrap();
            assert_eq!(red.dimension(), n - 1);
        }
    }

    #[test]
    fn normalized_rock_paper_scissors_is_empty() {
        let sys =
            ReplicatorSystem::from_rows(&[&[1.0, -2.0, 1.0], &[2.0, -1.0, -1.0], &[0.0, 0.0, 0.0]])
                .unwrap();
        let q = AffinePoint::uniform(3);
        let general = certificate_search_general(&sys.b_matrix(), &q, TOL).unwrap();
        assert_eq!(general.dimension(), 0);
        let reduced = certificate_search_reduced(&sys.sub_block(), &q, TOL).unwrap();
        assert_eq!(reduced.dimension(), 0);
        assert!(general.representative(&q).is_none());
    }

    #[test]
    fn predator_prey_reduced_family() {
        let q = AffinePoint::uniform(3);
        let a_sub = m(2, 2, &[0.0, 1.0, -1.0, 0.0]);
        let fam = certificate_search_reduced(&a_sub, &q, TOL).unwrap();
        assert_eq!(fam.dimension(), 1);
        let d = &fam.coefficients[0];
        assert!((d[0] - d[1]).abs() < 1e-12);
        let lifted = &fam.basis[0] / fam.basis[0][(0, 0)] * 2.0;
        assert!((lifted - m(2, 2, &[2.0, 1.0, 1.0, 2.0])).amax() < 1e-12);

        // agrees with the general search
        let sys =
            ReplicatorSystem::from_rows(&[&[0.0, 1.0, -1.0], &[-1.0, 0.0, 1.0], &[0.0, 0.0, 0.0]])
                .unwrap();
        let general = certificate_search_general(&sys.b_matrix(), &q, TOL).unwrap();
        assert_eq!(general.dimension(), 1);
        assert!(crate::linalg::mutual_projection_residual(&general.span(), &fam.span()) < 1e-8);
    }

    #[test]
    fn lambda_family_contains_known_direction() {
        let (l1, l2) = (1.0, 1.0);
        let a_sub = m(
            4,
            4,
            &[
                0.0, l1, 0.0, 0.0, //
                l2, 0.0, 0.0, 0.0, //
                0.0, 0.0, 1.0, 2.0, //
                0.0, 0.0, 3.0, 1.0,
            ],
        );
        let q = AffinePoint::uniform(5);
        let fam = certificate_search_reduced(&a_sub, &q, TOL).unwrap();
        assert_eq!(fam.dimension(), 1);
        let target = RealVector::from_vec(vec![l2, -l1, 0.0, 0.0]);
        let span: Vec<RealVector> = fam.coefficients.clone();
        assert!(projection_residual(&target, &span) < 1e-8);
    }

    #[test]
    fn make_certificate_coefficients() {
        let q = AffinePoint::uniform(3);
        let b = -(m(2, 2, &[0.0, 1.0, -1.0, 0.0]) * build_q2(&q).unwrap());
        let cert = make_certificate(&m(2, 2, &[2.0, 1.0, 1.0, 2.0]), &q, &b).unwrap();
        assert!((cert.c.clone() - RealVector::from_vec(vec![1.0, 1.0])).amax() < 1e-15);
        assert!((cert.g.clone() - RealVector::from_vec(vec![-1.0, -1.0])).amax() < 1e-15);

        let zero = make_certificate(&RealMatrix::zeros(2, 2), &q, &b).unwrap();
        assert_eq!(zero.c.amax(), 0.0);
        assert_eq!(zero.g.amax(), 0.0);

        let err = make_certificate(&RealMatrix::identity(2, 2), &q, &b).unwrap_err();
        assert!(matches!(err, Error::InvalidCertificate { .. }));
    }

    #[test]
    fn uniform_reduction_coefficients() {
        // with uniform q and D = Q̄₁ diag(d): c = d and g = −d
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for n in 2..7 {
            let q = AffinePoint::uniform(n);
            let d = RealVector::from_fn(n - 1, |_, _| rng.gen_range(-2.0..2.0));
            let dm = build_qbar1(&q).unwrap() * RealMatrix::from_diagonal(&d);
            let c = dm.transpose() * q.head();
            let g = &c - dm.diagonal();
            assert!((&c - &d).amax() < 1e-14);
            assert!((&g + &d).amax() < 1e-14);
            assert_eq!(certificate_matrix_from_coefficients(&d, &q).unwrap(), dm);
        }
    }

    #[test]
    fn reduced_rejects_vanishing_last_coordinate() {
        let q = AffinePoint::new(RealVector::from_vec(vec![0.5, 0.5, 0.0])).unwrap();
        assert!(matches!(
            certificate_search_reduced(&RealMatrix::zeros(2, 2), &q, TOL),
            Err(Error::UnsupportedEquilibrium(_))
        ));
        // the general search accepts it
        assert!(certificate_search_general(&RealMatrix::zeros(2, 2), &q, TOL).is_ok());
    }

    #[test]
    fn families_satisfy_conditions() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        for _ in 0..20 {
            let n = rng.gen_range(2..6);
            let v = RealVector::from_fn(n, |_, _| rng.gen_range(0.1..1.0));
            let q = AffinePoint::new(&v / v.sum()).unwrap();
            // skew-ish chart matrix so families are typically nonempty
            let s = RealMatrix::from_fn(n - 1, n - 1, |_, _| rng.gen_range(-1.0..1.0));
            let b = &s - s.transpose();
            let fam = certificate_search_general(&b, &q, TOL).unwrap();
            for (d, r) in fam.basis.iter().zip(&fam.residuals) {
                assert!(r.within(d, &b, CERTIFICATE_TOL));
            }
        }
    }
}
