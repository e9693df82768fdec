//! Dense matrix/vector helpers shared by every other module.
//!
//! All matrices are `nalgebra` dynamic matrices with **column-major**
//! storage; `vectorize` stacks columns top to bottom, which keeps the
//! identity `vec(AXB) = (Bᵀ ⊗ A) vec(X)` valid throughout the crate.
//!
//! Tolerances are relative to the matrix scale (largest absolute entry)
//! with an absolute floor of `1e-12`.

use thiserror::Error;

pub type Matrix = nalgebra::DMatrix<f64>;
pub type Vector = nalgebra::DVector<f64>;

/// Relative pivot threshold below which an LU factorization is rejected.
pub const SINGULAR_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("singular matrix: pivot magnitude {pivot:.3e} below tolerance {tol:.3e}")]
    Singular { pivot: f64, tol: f64 },
    #[error("matrix contains a non-finite entry")]
    NonFinite,
}

/// Largest absolute entry, 0.0 for empty matrices.
pub fn max_abs(m: &Matrix) -> f64 {
    m.iter().fold(0.0_f64, |acc, &x| acc.max(x.abs()))
}

/// Rejects NaN/Inf entries; every matrix entering the toolkit goes
/// through this at its construction boundary.
pub fn ensure_finite(m: &Matrix) -> Result<(), NumericsError> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(NumericsError::NonFinite)
    }
}

/// Kronecker product, dims (a.rows·b.rows) × (a.cols·b.cols).
pub fn kron(a: &Matrix, b: &Matrix) -> Matrix {
    a.kronecker(b)
}

/// Stacks the columns of `m` into a single column vector.
pub fn vectorize(m: &Matrix) -> Vector {
    Vector::from_column_slice(m.as_slice())
}

/// Inverse of [`vectorize`]: rebuilds a `rows × cols` matrix from
/// column-stacked data.
pub fn unvectorize(v: &Vector, rows: usize, cols: usize) -> Matrix {
    assert_eq!(v.len(), rows * cols, "unvectorize: length mismatch");
    Matrix::from_column_slice(rows, cols, v.as_slice())
}

fn lu_with_check(a: &Matrix) -> Result<nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>, NumericsError> {
    assert_eq!(a.nrows(), a.ncols(), "lu_solve: matrix must be square");
    let tol = SINGULAR_TOL * max_abs(a).max(1.0);
    let lu = a.clone().lu();
    let min_pivot = lu
        .u()
        .diagonal()
        .iter()
        .fold(f64::INFINITY, |acc, &x| acc.min(x.abs()));
    if min_pivot < tol {
        return Err(NumericsError::Singular {
            pivot: min_pivot,
            tol,
        });
    }
    Ok(lu)
}

/// Solves `a · x = b` by LU with partial pivoting.
///
/// Fails with [`NumericsError::Singular`] when a pivot falls below
/// `1e-12 · max(1, scale)`; in the LP context that signals a degenerate
/// basis.
pub fn lu_solve(a: &Matrix, b: &Vector) -> Result<Vector, NumericsError> {
    let lu = lu_with_check(a)?;
    lu.solve(b).ok_or(NumericsError::Singular {
        pivot: 0.0,
        tol: SINGULAR_TOL,
    })
}

/// Same as [`lu_solve`] but with a matrix right-hand side (one solve per
/// column).
pub fn lu_solve_matrix(a: &Matrix, b: &Matrix) -> Result<Matrix, NumericsError> {
    let lu = lu_with_check(a)?;
    lu.solve(b).ok_or(NumericsError::Singular {
        pivot: 0.0,
        tol: SINGULAR_TOL,
    })
}
