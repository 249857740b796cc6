//! Formal equilibria: affine solution sets of the linear systems whose
//! solutions make all payoffs (replicator) or all fitnesses (Lotka-Volterra)
//! coincide.
//!
//! For Lotka-Volterra systems the solver requires `A'q' + r = 0`. A literal
//! reading of "equilibrium of the trivial extension" would also admit points
//! where a coordinate vanishes while its fitness does not, but such points do
//! not map to formal equilibria of the equivalent replicator equation, so they
//! are not reported.

use crate::error::{Error, Result};
use crate::linalg::{min_norm_solve, RealMatrix, RealVector};
use crate::systems::{AffinePoint, LotkaVolterraSystem, ReplicatorSystem};

/// Residual bound (relative to the system scale) below which a least-squares
/// solution counts as an exact solution.
pub const FEASIBILITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
pub struct EquilibriumResult {
    /// Minimum-norm solution (least-squares point when infeasible).
    pub representative: RealVector,
    /// `max |M q − b|` of the defining system.
    pub residual: f64,
    /// Dimension of the solution set.
    pub degrees_of_freedom: usize,
    /// Orthonormal directions spanning the solution set.
    pub basis: Vec<RealVector>,
    /// `max(1, ‖M‖·‖q‖, ‖b‖)`, the scale `residual` is compared against.
    pub scale: f64,
    /// `residual ≤ FEASIBILITY_TOL · scale`
    pub feasible: bool,
}

impl EquilibriumResult {
    pub fn feasible_within(&self, tol: f64) -> bool {
        self.residual <= tol * self.scale
    }
}

fn solve(m: &RealMatrix, b: &RealVector, rank_tol: f64) -> Result<EquilibriumResult> {
    let ls = min_norm_solve(m, b, rank_tol)?;
    let scale = 1.0_f64.max(m.amax() * ls.solution.amax()).max(b.amax());
    let feasible = ls.residual <= FEASIBILITY_TOL * scale;
    Ok(EquilibriumResult {
        representative: ls.solution,
        residual: ls.residual,
        degrees_of_freedom: ls.nullspace.dimension,
        basis: ls.nullspace.basis,
        scale,
        feasible,
    })
}

/// Solves `(row_i(A) − row_n(A))·q = 0` for `i < n` together with `𝟙ᵗq = 1`.
pub fn formal_equilibrium_replicator(
    sys: &ReplicatorSystem,
    rank_tol: f64,
) -> Result<EquilibriumResult> {
    let n = sys.n();
    let a = sys.payoff();
    let mut m = RealMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let row = a.row(i) - a.row(n - 1);
        m.row_mut(i).copy_from(&row);
    }
    m.row_mut(n - 1).fill(1.0);
    let mut b = RealVector::zeros(n);
    b[n - 1] = 1.0;
    solve(&m, &b, rank_tol)
}

/// Solves `A'q' = −r`; `q'` may have entries of any sign.
pub fn formal_equilibrium_lv(
    sys: &LotkaVolterraSystem,
    rank_tol: f64,
) -> Result<EquilibriumResult> {
    solve(sys.interaction(), &(-sys.growth()), rank_tol)
}

/// `q = (q', 1) / (1 + Σ q'_j)`, the replicator formal equilibrium induced
/// by a Lotka-Volterra one.
pub fn normalize_lv_equilibrium(qprime: &RealVector) -> Result<AffinePoint> {
    let s = 1.0 + qprime.sum();
    if s.abs() < 1e-14 || !s.is_finite() {
        return Err(Error::Domain(format!(
            "1 + Σq' = {s:e}; the induced replicator equilibrium is undefined"
        )));
    }
    let m = qprime.len();
    let q = RealVector::from_fn(m + 1, |i, _| if i < m { qprime[i] / s } else { 1.0 / s });
    AffinePoint::new(q)
}
