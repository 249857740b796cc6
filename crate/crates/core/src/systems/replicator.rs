use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{check_finite, check_finite_vec, RealMatrix, RealVector};

use super::LotkaVolterraSystem;

/// Replicator equation `ẋ_i = x_i((Ax)_i − xᵗAx)` on the simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicatorSystem {
    payoff: RealMatrix,
}

/// `E = [−I | 𝟙]`, the `(n−1)×n` matrix relating the payoff to the chart matrix `B`.
pub fn build_e(n: usize) -> RealMatrix {
    assert!(n >= 2, "E is defined for n >= 2");
    RealMatrix::from_fn(n - 1, n, |i, j| {
        if j == n - 1 {
            1.0
        } else if i == j {
            -1.0
        } else {
            0.0
        }
    })
}

impl ReplicatorSystem {
    pub fn new(payoff: RealMatrix) -> Result<Self> {
        if !payoff.is_square() || payoff.nrows() == 0 {
            return Err(Error::Input(format!(
                "payoff matrix must be square and nonempty, got {}x{}",
                payoff.nrows(),
                payoff.ncols()
            )));
        }
        check_finite(&payoff, "payoff matrix")?;
        Ok(Self { payoff })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Input("payoff rows must all have length n".into()));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(RealMatrix::from_row_slice(n, n, &flat))
    }

    /// Number of strategies.
    pub fn n(&self) -> usize {
        self.payoff.nrows()
    }

    pub fn payoff(&self) -> &RealMatrix {
        &self.payoff
    }

    /// Subtract the last row from every row. The vector field on the simplex
    /// is unchanged and the result has a zero last row.
    pub fn normalized(&self) -> Self {
        let n = self.n();
        let last = self.payoff.row(n - 1).into_owned();
        let mut payoff = self.payoff.clone();
        for mut row in payoff.row_iter_mut() {
            row -= &last;
        }
        Self { payoff }
    }

    pub fn has_zero_last_row(&self) -> bool {
        self.payoff.row(self.n() - 1).iter().all(|&v| v == 0.0)
    }

    pub fn field(&self, x: &RealVector) -> Result<RealVector> {
        ensure_dim("replicator field", self.n(), x.len())?;
        let ax = &self.payoff * x;
        let mean = x.dot(&ax);
        Ok(x.zip_map(&ax, |xi, axi| xi * (axi - mean)))
    }

    /// `π_A(x) = −T_x D_x A D_x T_xᵗ` with `T_x = x𝟙ᵗ − I`.
    pub fn pi(&self, x: &RealVector) -> Result<RealMatrix> {
        let n = self.n();
        ensure_dim("pi_A", n, x.len())?;
        let t = x * RealVector::from_element(n, 1.0).transpose() - RealMatrix::identity(n, n);
        let dx = RealMatrix::from_diagonal(x);
        let td = &t * &dx;
        Ok(-(&td * &self.payoff * td.transpose()))
    }

    /// `B = −E A Eᵗ`, the constant matrix of the pulled-back field in the chart.
    pub fn b_matrix(&self) -> RealMatrix {
        let n = self.n();
        if n < 2 {
            return RealMatrix::zeros(0, 0);
        }
        let e = build_e(n);
        -(&e * &self.payoff * e.transpose())
    }

    /// Leading `(n−1)×(n−1)` block of the payoff.
    pub fn sub_block(&self) -> RealMatrix {
        let m = self.n() - 1;
        self.payoff.view((0, 0), (m, m)).into_owned()
    }

    /// Equivalent Lotka-Volterra system in `n − 1` species:
    /// `a'_ij = a_ij − a_nj`, `r_i = a_in − a_nn`.
    pub fn to_lotka_volterra(&self) -> Result<LotkaVolterraSystem> {
        let n = self.n();
        if n < 2 {
            return Err(Error::Input(
                "a replicator system needs at least two strategies to have an LV equivalent".into(),
            ));
        }
        let a = &self.normalized().payoff;
        let m = n - 1;
        let interaction = a.view((0, 0), (m, m)).into_owned();
        let growth = a.view((0, m), (m, 1)).column(0).into_owned();
        LotkaVolterraSystem::new(interaction, growth)
    }

    /// Restriction to the face spanned by the `kept` vertices (order preserved
    /// as given).
    pub fn restrict_to_face(&self, kept: &[usize]) -> Result<Self> {
        if kept.is_empty() {
            return Err(Error::Input("face must keep at least one vertex".into()));
        }
        let n = self.n();
        if let Some(&bad) = kept.iter().find(|&&i| i >= n) {
            return Err(Error::Input(format!(
                "face index {bad} out of range for n = {n}"
            )));
        }
        let mut seen = vec![false; n];
        for &i in kept {
            if std::mem::replace(&mut seen[i], true) {
                return Err(Error::Input(format!("face index {i} repeated")));
            }
        }
        let k = kept.len();
        let payoff = RealMatrix::from_fn(k, k, |i, j| self.payoff[(kept[i], kept[j])]);
        Ok(Self { payoff })
    }

    /// Projective change of variables `x̄_i = c_i x_i / Σ c_j x_j`.
    ///
    /// Returns the transformed system with payoff `A diag(1/c)` together with
    /// the point map. The push-forward of this field equals
    /// `ProjectiveMap::time_factor(x̄)` times the transformed field.
    pub fn projective_transform(&self, c: &RealVector) -> Result<(Self, ProjectiveMap)> {
        ensure_dim("projective transform weights", self.n(), c.len())?;
        check_finite_vec(c, "projective weights")?;
        if let Some(i) = c.iter().position(|&v| v <= 0.0) {
            return Err(Error::Input(format!(
                "projective weight c_{} must be positive, got {}",
                i + 1,
                c[i]
            )));
        }
        let inv = c.map(|v| 1.0 / v);
        let payoff = &self.payoff * RealMatrix::from_diagonal(&inv);
        Ok((Self { payoff }, ProjectiveMap { weights: c.clone() }))
    }
}

/// The map `x ↦ x̄` with `x̄_i = c_i x_i / Σ_j c_j x_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct ProjectiveMap {
    weights: RealVector,
}

impl ProjectiveMap {
    pub fn weights(&self) -> &RealVector {
        &self.weights
    }

    pub fn apply(&self, x: &RealVector) -> Result<RealVector> {
        ensure_dim("projective map", self.weights.len(), x.len())?;
        let cx = self.weights.component_mul(x);
        let s = cx.sum();
        Ok(cx / s)
    }

    pub fn jacobian(&self, x: &RealVector) -> Result<RealMatrix> {
        ensure_dim("projective map jacobian", self.weights.len(), x.len())?;
        let c = &self.weights;
        let s = c.dot(x);
        let cx = c.component_mul(x);
        Ok(RealMatrix::from_diagonal(c) / s - (&cx * c.transpose()) / (s * s))
    }

    /// `1 / Σ_j c_j⁻¹ x̄_j`, the time re-parametrization factor at `x̄`.
    pub fn time_factor(&self, xbar: &RealVector) -> f64 {
        let s: f64 = xbar
            .iter()
            .zip(self.weights.iter())
            .map(|(x, c)| x / c)
            .sum();
        1.0 / s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_simplex(rng: &mut ChaCha8Rng, n: usize) -> RealVector {
        let v = RealVector::from_fn(n, |_, _| -rng.gen_range(1e-3f64..1.0).ln());
        let s = v.sum();
        v / s
    }

    fn random_matrix(rng: &mut ChaCha8Rng, n: usize) -> RealMatrix {
        RealMatrix::from_fn(n, n, |_, _| rng.gen_range(-2.0..2.0))
    }

    fn rps() -> ReplicatorSystem {
        ReplicatorSystem::from_rows(&[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]])
            .unwrap()
    }

    #[test]
    fn normalize_subtracts_last_row() {
        let got = rps().normalized();
        let want =
            RealMatrix::from_row_slice(3, 3, &[1.0, -2.0, 1.0, 2.0, -1.0, -1.0, 0.0, 0.0, 0.0]);
        assert_eq!(got.payoff(), &want);

        // same field at random simplex points (the oracle for the example)
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..10 {
            let x = random_simplex(&mut rng, 3);
            let d = rps().field(&x).unwrap() - got.field(&x).unwrap();
            assert!(d.amax() < 1e-15);
        }
    }

    #[test]
    fn normalize_fixed_points() {
        let a = RealMatrix::from_row_slice(2, 2, &[1.0, 2.0, 0.0, 0.0]);
        let sys = ReplicatorSystem::new(a.clone()).unwrap();
        assert_eq!(sys.normalized().payoff(), &a);
        let ones = ReplicatorSystem::new(RealMatrix::from_element(3, 3, 1.0)).unwrap();
        assert_eq!(ones.normalized().payoff(), &RealMatrix::zeros(3, 3));
    }

    #[test]
    fn vertices_are_equilibria() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sys = ReplicatorSystem::new(random_matrix(&mut rng, 4)).unwrap();
        for i in 0..4 {
            let e = RealVector::from_fn(4, |j, _| if i == j { 1.0 } else { 0.0 });
            assert_eq!(sys.field(&e).unwrap().amax(), 0.0);
        }
    }

    #[test]
    fn equal_rows_give_zero_field() {
        let row = [0.3, -1.2, 2.0];
        let sys = ReplicatorSystem::from_rows(&[&row, &row, &row]).unwrap();
        let x = RealVector::from_vec(vec![0.2, 0.5, 0.3]);
        assert!(sys.field(&x).unwrap().amax() < 1e-15);
    }

    #[test]
    fn cyclic_uniform_equilibrium() {
        let sys =
            ReplicatorSystem::from_rows(&[&[0.0, 1.0, -1.0], &[-1.0, 0.0, 1.0], &[0.0, 0.0, 0.0]])
                .unwrap();
        let x = RealVector::from_element(3, 1.0 / 3.0);
        assert!(sys.field(&x).unwrap().amax() < 1e-16);
        assert!(sys.field(&RealVector::zeros(2)).is_err());
    }

    #[test]
    fn field_is_tangent_and_kernel_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for n in 2..7 {
            let a = random_matrix(&mut rng, n);
            let row = RealVector::from_fn(n, |_, _| rng.gen_range(-3.0..3.0));
            let c = RealMatrix::from_fn(n, n, |_, j| row[j]);
            let s1 = ReplicatorSystem::new(a.clone()).unwrap();
            let s2 = ReplicatorSystem::new(a + c).unwrap();
            for _ in 0..20 {
                let x = random_simplex(&mut rng, n);
                let v = s1.field(&x).unwrap();
                assert!(v.sum().abs() < 1e-12);
                assert!((v - s2.field(&x).unwrap()).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn e_matrix_pattern() {
        assert_eq!(build_e(2), RealMatrix::from_row_slice(1, 2, &[-1.0, 1.0]));
        assert_eq!(
            build_e(3),
            RealMatrix::from_row_slice(2, 3, &[-1.0, 0.0, 1.0, 0.0, -1.0, 1.0])
        );
        for n in 2..8 {
            assert_eq!((build_e(n) * RealVector::from_element(n, 1.0)).amax(), 0.0);
        }
    }

    #[test]
    fn b_matrix_two_strategy_hand_case() {
        // −EAEᵗ = −a₁₁ + a₁₂ + a₂₁ − a₂₂ = −a(1 + q1/q2) = −a/q2 since q1 + q2 = 1
        let (a, q1, q2) = (1.7, 0.3, 0.7);
        let sys = ReplicatorSystem::from_rows(&[&[a, -(q1 / q2) * a], &[0.0, 0.0]]).unwrap();
        let b = sys.b_matrix();
        assert_eq!(b.shape(), (1, 1));
        assert!((b[(0, 0)] + a / q2).abs() < 1e-14);
        assert_eq!(
            ReplicatorSystem::new(RealMatrix::zeros(3, 3))
                .unwrap()
                .b_matrix(),
            RealMatrix::zeros(2, 2)
        );
    }

    #[test]
    fn pi_of_zero_payoff_vanishes() {
        let sys = ReplicatorSystem::new(RealMatrix::zeros(3, 3)).unwrap();
        let x = RealVector::from_vec(vec![0.2, 0.3, 0.5]);
        assert_eq!(sys.pi(&x).unwrap().amax(), 0.0);
    }

    #[test]
    fn pi_at_last_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_matrix(&mut rng, 3);
        let sys = ReplicatorSystem::new(a.clone()).unwrap();
        let e = RealVector::from_vec(vec![0.0, 0.0, 1.0]);
        let t = &e * RealVector::from_element(3, 1.0).transpose() - RealMatrix::identity(3, 3);
        let d = RealMatrix::from_diagonal(&e);
        let want = -(&t * &d * &a * &d * t.transpose());
        assert!((sys.pi(&e).unwrap() - want).amax() < 1e-15);
    }

    #[test]
    fn lv_conversion_roundtrip() {
        let pp =
            LotkaVolterraSystem::from_parts(&[&[0.0, 1.0], &[-1.0, 0.0]], &[-1.0, 1.0]).unwrap();
        let rep = pp.to_replicator();
        assert_eq!(
            rep.payoff(),
            &RealMatrix::from_row_slice(3, 3, &[0.0, 1.0, -1.0, -1.0, 0.0, 1.0, 0.0, 0.0, 0.0])
        );
        assert_eq!(rep.to_lotka_volterra().unwrap(), pp);
    }

    #[test]
    fn face_restriction() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sys = ReplicatorSystem::new(random_matrix(&mut rng, 5)).unwrap();
        assert_eq!(sys.restrict_to_face(&[0, 1, 2, 3, 4]).unwrap(), sys);
        assert!(sys.restrict_to_face(&[]).is_err());
        assert!(sys.restrict_to_face(&[0, 0]).is_err());
        assert!(sys.restrict_to_face(&[7]).is_err());

        let vertex = sys.restrict_to_face(&[3]).unwrap();
        assert_eq!(vertex.n(), 1);
        assert_eq!(
            vertex.field(&RealVector::from_element(1, 1.0)).unwrap()[0],
            0.0
        );

        let kept = [0usize, 2, 4];
        let face = sys.restrict_to_face(&kept).unwrap();
        for _ in 0..10 {
            let xf = random_simplex(&mut rng, 3);
            let mut full = RealVector::zeros(5);
            for (k, &i) in kept.iter().enumerate() {
                full[i] = xf[k];
            }
            let vf = face.field(&xf).unwrap();
            let vfull = sys.field(&full).unwrap();
            for (k, &i) in kept.iter().enumerate() {
                assert!((vf[k] - vfull[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn projective_transform_identity_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let sys = ReplicatorSystem::new(random_matrix(&mut rng, 4)).unwrap();
        let (t, map) = sys
            .projective_transform(&RealVector::from_element(4, 1.0))
            .unwrap();
        assert_eq!(t, sys);
        let x = random_simplex(&mut rng, 4);
        assert!((map.apply(&x).unwrap() - &x).amax() < 1e-15);
        assert!(sys
            .projective_transform(&RealVector::from_vec(vec![1.0, 0.0, 1.0, 1.0]))
            .is_err());
    }

    #[test]
    fn projective_pushforward() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for n in 2..7 {
            let sys = ReplicatorSystem::new(random_matrix(&mut rng, n)).unwrap();
            let c = RealVector::from_fn(n, |_, _| rng.gen_range(0.2..5.0));
            let (t, map) = sys.projective_transform(&c).unwrap();
            for _ in 0..20 {
                let x = random_simplex(&mut rng, n);
                let xbar = map.apply(&x).unwrap();
                let lhs = map.jacobian(&x).unwrap() * sys.field(&x).unwrap();
                let rhs = t.field(&xbar).unwrap() * map.time_factor(&xbar);
                assert!((lhs - rhs).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn projective_transport_of_equilibrium_to_barycenter() {
        // LV-derived system with positive equilibrium q' and c_i = (1+Σq')/q'_i, c_n = 1+Σq'
        let qp = RealVector::from_vec(vec![0.5, 2.0, 1.5]);
        let s = 1.0 + qp.sum();
        let q = RealVector::from_fn(4, |i, _| if i < 3 { qp[i] / s } else { 1.0 / s });
        let c = RealVector::from_fn(4, |i, _| if i < 3 { s / qp[i] } else { s });
        let sys = ReplicatorSystem::new(RealMatrix::identity(4, 4)).unwrap();
        let (_, map) = sys.projective_transform(&c).unwrap();
        let image = map.apply(&q).unwrap();
        assert!((image - RealVector::from_element(4, 0.25)).amax() < 1e-15);
    }
}
