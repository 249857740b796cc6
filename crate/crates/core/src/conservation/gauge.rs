//! The classical route to conservative Lotka-Volterra systems: a positive
//! diagonal `D'` with `A'D'` skew-symmetric.

use std::collections::VecDeque;

use crate::error::{ensure_dim, Error, Result};
use crate::linalg::{RealMatrix, RealVector};

use super::{Chart, ConstantOfMotion};

/// Relative mismatch tolerated when a cycle revisits a node.
const CYCLE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub enum GaugeFailure {
    /// `a'_ii ≠ 0`; skew-symmetry with `d'_i > 0` needs a zero diagonal.
    NonzeroDiagonal { index: usize },
    /// Exactly one of `a'_ij`, `a'_ji` vanishes, forcing a zero weight.
    OneSided { i: usize, j: usize },
    /// `a'_ij` and `a'_ji` have the same sign, forcing a negative ratio.
    SameSign { i: usize, j: usize },
    /// Propagated weights disagree around a cycle.
    InconsistentCycle { i: usize, j: usize, mismatch: f64 },
}

impl std::fmt::Display for GaugeFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::NonzeroDiagonal { index } => {
                write!(f, "nonzero diagonal entry a'_{0}{0}", index + 1)
            }
            Self::OneSided { i, j } => write!(
                f,
                "one-sided interaction between species {} and {}",
                i + 1,
                j + 1
            ),
            Self::SameSign { i, j } => write!(
                f,
                "a'_ij and a'_ji have the same sign for species {} and {}",
                i + 1,
                j + 1
            ),
            Self::InconsistentCycle { i, j, mismatch } => write!(
                f,
                "weights inconsistent around a cycle through species {} and {} (relative mismatch {:.3e})",
                i + 1,
                j + 1,
                mismatch
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GaugeOutcome {
    /// Diagonal of `D'`, normalized to 1 at the lowest index of each
    /// connected component of the interaction graph.
    Found(RealVector),
    Failed(GaugeFailure),
}

impl GaugeOutcome {
    pub fn weights(&self) -> Option<&RealVector> {
        match self {
            Self::Found(d) => Some(d),
            Self::Failed(_) => None,
        }
    }
}

/// Finds `d' > 0` with `a'_ij d'_j = −a'_ji d'_i` for all `i, j` by
/// propagating ratios along the graph with an edge wherever `a'_ij` or
/// `a'_ji` is nonzero.
pub fn gauge_skew_symmetrizer(aprime: &RealMatrix) -> GaugeOutcome {
    let m = aprime.nrows();
    if let Some(index) = (0..m).find(|&i| aprime[(i, i)] != 0.0) {
        return GaugeOutcome::Failed(GaugeFailure::NonzeroDiagonal { index });
    }
    let mut weights = vec![0.0_f64; m];
    let mut queue = VecDeque::new();
    for root in 0..m {
        if weights[root] > 0.0 {
            continue;
        }
        weights[root] = 1.0;
        queue.push_back(root);
        while let Some(i) = queue.pop_front() {
            for j in 0..m {
                if j == i {
                    continue;
                }
                let (aij, aji) = (aprime[(i, j)], aprime[(j, i)]);
                match (aij == 0.0, aji == 0.0) {
                    (true, true) => continue,
                    (true, false) | (false, true) => {
                        return GaugeOutcome::Failed(GaugeFailure::OneSided {
                            i: i.min(j),
                            j: i.max(j),
                        })
                    }
                    (false, false) => {}
                }
                let ratio = -aji / aij;
                if ratio <= 0.0 {
                    return GaugeOutcome::Failed(GaugeFailure::SameSign {
                        i: i.min(j),
                        j: i.max(j),
                    });
                }
                let wanted = ratio * weights[i];
                if weights[j] == 0.0 {
                    weights[j] = wanted;
                    queue.push_back(j);
                } else {
                    let mismatch = (weights[j] - wanted).abs() / weights[j].max(wanted);
                    if mismatch > CYCLE_TOL {
                        return GaugeOutcome::Failed(GaugeFailure::InconsistentCycle {
                            i: i.min(j),
                            j: i.max(j),
                            mismatch,
                        });
                    }
                }
            }
        }
    }
    GaugeOutcome::Found(RealVector::from_vec(weights))
}

/// First integral from a gauge: `c_i = q'_i / d'_i`, `g_i = −1 / d'_i` in the
/// `y` chart, with `−Σ (q'_i/d'_i) log q'_i` reported as the additive constant.
pub fn certificate_from_gauge(
    qprime: &RealVector,
    dprime: &RealVector,
) -> Result<ConstantOfMotion> {
    ensure_dim("gauge weights", qprime.len(), dprime.len())?;
    for (name, v) in [("q'", qprime), ("d'", dprime)] {
        if let Some(i) = v.iter().position(|&x| !(x > 0.0 && x.is_finite())) {
            return Err(Error::Input(format!(
                "{name} must be positive; entry {} is {}",
                i + 1,
                v[i]
            )));
        }
    }
    let c = qprime.component_div(dprime);
    let g = dprime.map(|d| -1.0 / d);
    let additive = -c
        .iter()
        .zip(qprime.iter())
        .map(|(ci, qi)| ci * qi.ln())
        .sum::<f64>();
    let mut h = ConstantOfMotion::new(Chart::Y, c, g)?;
    h.additive_constant = Some(additive);
    Ok(h)
}
