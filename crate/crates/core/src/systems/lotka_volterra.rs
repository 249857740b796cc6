use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{check_finite, check_finite_vec, RealMatrix, RealVector};

use super::ReplicatorSystem;

/// Lotka-Volterra system `ẏ_i = y_i (r_i + (A'y)_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LotkaVolterraSystem {
    interaction: RealMatrix,
    growth: RealVector,
}

impl LotkaVolterraSystem {
    pub fn new(interaction: RealMatrix, growth: RealVector) -> Result<Self> {
        if !interaction.is_square() || interaction.nrows() == 0 {
            return Err(Error::Input(format!(
                "interaction matrix must be square and nonempty, got {}x{}",
                interaction.nrows(),
                interaction.ncols()
            )));
        }
        ensure_dim("growth vector", interaction.nrows(), growth.len())?;
        check_finite(&interaction, "interaction matrix")?;
        check_finite_vec(&growth, "growth vector")?;
        Ok(Self {
            interaction,
            growth,
        })
    }

    pub fn from_parts(rows: &[&[f64]], growth: &[f64]) -> Result<Self> {
        let m = rows.len();
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::Input(
                "interaction rows must all have length m".into(),
            ));
        }
        let flat: Vec<f64> = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self::new(
            RealMatrix::from_row_slice(m, m, &flat),
            RealVector::from_column_slice(growth),
        )
    }

    /// Number of species.
    pub fn m(&self) -> usize {
        self.growth.len()
    }

    pub fn interaction(&self) -> &RealMatrix {
        &self.interaction
    }

    pub fn growth(&self) -> &RealVector {
        &self.growth
    }

    /// Evaluates the field on all of `ℝᵐ` (the trivial extension).
    pub fn field(&self, y: &RealVector) -> Result<RealVector> {
        ensure_dim("Lotka-Volterra field", self.m(), y.len())?;
        let fitness = &self.growth + &self.interaction * y;
        Ok(y.component_mul(&fitness))
    }

    /// Equivalent replicator payoff `[[A', r], [0, 0]]` in `m + 1` strategies.
    pub fn to_replicator(&self) -> ReplicatorSystem {
        let m = self.m();
        let mut a = RealMatrix::zeros(m + 1, m + 1);
        a.view_mut((0, 0), (m, m)).copy_from(&self.interaction);
        a.view_mut((0, m), (m, 1)).copy_from(&self.growth);
        ReplicatorSystem::new(a).expect("finite block matrix is a valid payoff")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn predator_prey() -> LotkaVolterraSystem {
        LotkaVolterraSystem::from_parts(&[&[0.0, 1.0], &[-1.0, 0.0]], &[-1.0, 1.0]).unwrap()
    }

    #[test]
    fn origin_is_fixed() {
        assert_eq!(
            predator_prey().field(&RealVector::zeros(2)).unwrap().amax(),
            0.0
        );
    }

    #[test]
    fn predator_prey_equilibrium() {
        let v = predator_prey()
            .field(&RealVector::from_vec(vec![1.0, 1.0]))
            .unwrap();
        assert_eq!(v.amax(), 0.0);
    }

    #[test]
    fn faces_invariant() {
        let sys = LotkaVolterraSystem::from_parts(
            &[&[0.3, 1.0, -2.0], &[-1.0, 0.5, 0.1], &[2.0, 0.0, -1.0]],
            &[1.0, -0.5, 0.25],
        )
        .unwrap();
        let y = RealVector::from_vec(vec![0.7, 0.0, 1.3]);
        assert_eq!(sys.field(&y).unwrap()[1], 0.0);
    }

    #[test]
    fn dimension_checks() {
        assert!(predator_prey().field(&RealVector::zeros(3)).is_err());
        assert!(LotkaVolterraSystem::new(RealMatrix::zeros(2, 2), RealVector::zeros(3)).is_err());
    }
}
