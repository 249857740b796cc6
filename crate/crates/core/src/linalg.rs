//! Dense linear algebra used by the certificate searches and the structure
//! classifier: SVD-based nullspaces, minimum-norm solves and a couple of
//! structural residuals.
//!
//! Everything here works on small dense matrices (a few dozen rows at most);
//! the heavy lifting is delegated to `nalgebra`'s SVD.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type RealMatrix = DMatrix<f64>;
pub type RealVector = DVector<f64>;

/// Default relative singular-value threshold.
pub const DEFAULT_RANK_TOL: f64 = 1e-10;

/// Orthonormal basis of the kernel of a matrix.
#[derive(Debug, Clone)]
pub struct Nullspace {
    pub dimension: usize,
    pub basis: Vec<RealVector>,
    pub rank_tolerance: f64,
    /// Largest singular value of the input.
    pub sigma_max: f64,
    /// Numerical rank (`cols - dimension`).
    pub rank: usize,
}

pub fn check_finite(m: &RealMatrix, what: &str) -> Result<()> {
    if m.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} contains non-finite entries")))
    }
}

pub fn check_finite_vec(v: &RealVector, what: &str) -> Result<()> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::Input(format!("{what} contains non-finite entries")))
    }
}

fn check_square(m: &RealMatrix, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::Input(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

/// Flip the sign so that the first entry of largest magnitude is positive.
pub fn canonical_sign(mut v: RealVector) -> RealVector {
    let peak = v.amax();
    if peak == 0.0 {
        return v;
    }
    let cutoff = peak * (1.0 - 1e-9);
    if let Some(lead) = v.iter().copied().find(|x| x.abs() >= cutoff) {
        if lead < 0.0 {
            v.neg_mut();
        }
    }
    v
}

/// Kernel of `m` using the relative threshold `rank_tol * sigma_max`.
///
/// Basis vectors are unit norm, mutually orthogonal, and sign-normalized
/// with [`canonical_sign`]. A zero matrix yields the standard basis.
pub fn nullspace_basis(m: &RealMatrix, rank_tol: f64) -> Result<Nullspace> {
    check_finite(m, "matrix")?;
    if !(rank_tol > 0.0 && rank_tol.is_finite()) {
        return Err(Error::Input(format!(
            "rank tolerance must be positive and finite, got {rank_tol}"
        )));
    }
    let cols = m.ncols();
    if cols == 0 {
        return Ok(Nullspace {
            dimension: 0,
            basis: Vec::new(),
            rank_tolerance: rank_tol,
            sigma_max: 0.0,
            rank: 0,
        });
    }

    let sigma_scale = m.amax();
    if sigma_scale == 0.0 {
        let basis: Vec<RealVector> = (0..cols)
            .map(|i| RealVector::from_fn(cols, |j, _| if i == j { 1.0 } else { 0.0 }))
            .collect();
        return Ok(Nullspace {
            dimension: cols,
            basis,
            rank_tolerance: rank_tol,
            sigma_max: 0.0,
            rank: 0,
        });
    }

    // Pad with zero rows so the SVD returns a full set of right singular vectors.
    let rows = m.nrows().max(cols);
    let mut padded = RealMatrix::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);

    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors requested");
    let sigma_max = svd.singular_values.max();
    let threshold = rank_tol * sigma_max;

    let mut basis = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= threshold {
            let v = v_t.row(i).transpose();
            let v = &v / v.norm();
            basis.push(canonical_sign(v));
        }
    }
    let dimension = basis.len();
    Ok(Nullspace {
        dimension,
        basis,
        rank_tolerance: rank_tol,
        sigma_max,
        rank: cols - dimension,
    })
}

/// Numerical rank with the same relative threshold as [`nullspace_basis`].
pub fn numerical_rank(m: &RealMatrix, rank_tol: f64) -> Result<usize> {
    nullspace_basis(m, rank_tol).map(|ns| ns.rank)
}

/// `max |M + M^t|`.
pub fn skew_residual(m: &RealMatrix) -> Result<f64> {
    check_square(m, "skew residual input")?;
    Ok((m + m.transpose()).amax())
}

/// Largest off-diagonal magnitude.
pub fn offdiag_residual(m: &RealMatrix) -> Result<f64> {
    check_square(m, "off-diagonal residual input")?;
    let mut worst = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i != j {
                worst = worst.max(m[(i, j)].abs());
            }
        }
    }
    Ok(worst)
}

/// Row-major flattening.
pub fn vec_row_major(m: &RealMatrix) -> RealVector {
    RealVector::from_iterator(m.len(), m.transpose().iter().copied())
}

pub fn unvec_row_major(v: &RealVector, rows: usize, cols: usize) -> RealMatrix {
    assert_eq!(v.len(), rows * cols, "length does not match shape");
    RealMatrix::from_row_slice(rows, cols, v.as_slice())
}

/// Relative distance from `v` to the span of an orthonormal `basis`.
///
/// Returns 0 for the zero vector, 1 when the basis is empty and `v != 0`.
pub fn projection_residual(v: &RealVector, basis: &[RealVector]) -> f64 {
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut rest = v.clone();
    for b in basis {
        let coeff = b.dot(v);
        rest.axpy(-coeff, b, 1.0);
    }
    rest.norm() / norm
}

/// Orthonormal basis of the span of `vectors`, dropping directions whose
/// singular value falls below `rank_tol * sigma_max`.
pub fn orthonormal_span(vectors: &[RealVector], rank_tol: f64) -> Vec<RealVector> {
    if vectors.is_empty() {
        return Vec::new();
    }
    let dim = vectors[0].len();
    let stacked = RealMatrix::from_columns(vectors);
    if stacked.amax() == 0.0 {
        return Vec::new();
    }
    let svd = stacked.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let threshold = rank_tol * svd.singular_values.max();
    let mut out = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s > threshold {
            let col = u.column(i).into_owned();
            debug_assert_eq!(col.len(), dim);
            out.push(canonical_sign(&col / col.norm()));
        }
    }
    out
}

/// Largest relative projection residual of either basis onto the other.
/// Bases of different dimension are reported as 1.
pub fn mutual_projection_residual(a: &[RealVector], b: &[RealVector]) -> f64 {
    if a.len() != b.len() {
        return 1.0;
    }
    a.iter()
        .map(|v| projection_residual(v, b))
        .chain(b.iter().map(|v| projection_residual(v, a)))
        .fold(0.0, f64::max)
}

/// Result of a minimum-norm least-squares solve.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    pub solution: RealVector,
    /// `max |M x - b|`.
    pub residual: f64,
    pub nullspace: Nullspace,
}

/// Minimum-norm least-squares solution of `m x = b` via the pseudo-inverse.
pub fn min_norm_solve(m: &RealMatrix, b: &RealVector, rank_tol: f64) -> Result<LeastSquares> {
    check_finite(m, "system matrix")?;
    check_finite_vec(b, "right-hand side")?;
    if m.nrows() != b.len() {
        return Err(Error::Dimension {
            context: "min_norm_solve",
            expected: m.nrows(),
            got: b.len(),
        });
    }
    let nullspace = nullspace_basis(m, rank_tol)?;
    let solution = if nullspace.sigma_max == 0.0 {
        RealVector::zeros(m.ncols())
    } else {
        let svd = m.clone().svd(true, true);
        let eps = rank_tol * nullspace.sigma_max;
        svd.solve(b, eps)
            .map_err(|e| Error::Input(format!("pseudo-inverse solve failed: {e}")))?
    };
    let residual = if b.is_empty() {
        0.0
    } else {
        (m * &solution - b).amax()
    };
    Ok(LeastSquares {
        solution,
        residual,
        nullspace,
    })
}

/// Inverse when the matrix has full numerical rank.
pub fn try_inverse(m: &RealMatrix, rank_tol: f64) -> Result<Option<RealMatrix>> {
    check_square(m, "inverse input")?;
    if m.nrows() == 0 {
        return Ok(Some(m.clone()));
    }
    let ns = nullspace_basis(m, rank_tol)?;
    if ns.dimension > 0 {
        return Ok(None);
    }
    Ok(m.clone().try_inverse())
}
