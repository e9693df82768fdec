//! V-representation polytopes and their Minkowski functional.
//!
//! A polytope is the convex hull of the columns of an `n × m` vertex
//! matrix `V`. Such sets are always bounded; the second standing
//! requirement — the origin in the interior — is decidable by LP and
//! exposed as [`VPolytope::is_absorbing`]. When it holds, the Minkowski
//! functional `Ψ_V` is a finite, positively homogeneous, positive
//! definite function (an asymmetric norm) whose unit ball is the
//! polytope, and is evaluated here through its primal and dual LPs.

use crate::numerics::{ensure_finite, max_abs, Matrix, Vector};
use crate::simplex::{solve_with_inequalities, GeneralLp, Relation, SimplexError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PolytopeError {
    #[error("vertex matrix contains non-finite entries")]
    NonFinite,
    #[error("vertex matrix must be non-empty")]
    Empty,
    #[error("Minkowski LP infeasible: vertex matrix is not full row rank")]
    LpInfeasible,
    #[error("Minkowski LP unbounded: vertex columns do not positively span space")]
    LpUnbounded,
    #[error("vertex count must be at least dimension + 1 (got m = {m}, n = {n})")]
    TooFewVertices { n: usize, m: usize },
    #[error("{retries} consecutive random draws failed the interior-point test")]
    DegenerateSample { retries: usize },
}

fn lp_error(e: SimplexError) -> PolytopeError {
    match e {
        SimplexError::Unbounded => PolytopeError::LpUnbounded,
        _ => PolytopeError::LpInfeasible,
    }
}

/// Convex hull of the columns of an `n × m` vertex matrix.
///
/// Construction only validates finiteness; geometric requirements are
/// checked by [`VPolytope::is_absorbing`] so that degenerate candidates
/// (as produced by an over-aggressive search step) can still be built and
/// inspected. Redundant vertices are legal everywhere.
#[derive(Debug, Clone, PartialEq)]
pub struct VPolytope {
    v: Matrix,
}

impl VPolytope {
    pub fn new(v: Matrix) -> Result<Self, PolytopeError> {
        if v.nrows() == 0 || v.ncols() == 0 {
            return Err(PolytopeError::Empty);
        }
        ensure_finite(&v).map_err(|_| PolytopeError::NonFinite)?;
        Ok(VPolytope { v })
    }

    pub fn from_columns(n: usize, columns: &[f64]) -> Result<Self, PolytopeError> {
        assert_eq!(columns.len() % n, 0);
        Self::new(Matrix::from_column_slice(n, columns.len() / n, columns))
    }

    /// State dimension `n`.
    pub fn dim(&self) -> usize {
        self.v.nrows()
    }

    /// Vertex count `m`.
    pub fn vertex_count(&self) -> usize {
        self.v.ncols()
    }

    pub fn vertices(&self) -> &Matrix {
        &self.v
    }

    pub fn vertex(&self, i: usize) -> Vector {
        self.v.column(i).clone_owned()
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.v)
    }

    /// Tests whether the origin lies in the interior of the hull, i.e.
    /// whether a strictly positive `p₊` with `V p₊ = 0` exists. The open
    /// condition `p₊ > 0` is normalized to the LP-expressible `q ≥ 1`
    /// (valid because `Vq = 0` is homogeneous): with `q = 1 + s`, the test
    /// is feasibility of `Vs = −V·1, s ≥ 0`.
    pub fn is_absorbing(&self) -> bool {
        let m = self.vertex_count();
        let ones = Vector::from_element(m, 1.0);
        let rhs = -(&self.v * ones);
        let mut lp = GeneralLp::new(m);
        for r in 0..self.dim() {
            let coeffs: Vec<f64> = (0..m).map(|j| self.v[(r, j)]).collect();
            lp.push_row(coeffs, Relation::Eq, rhs[r]);
        }
        solve_with_inequalities(&lp).is_ok()
    }

    /// `Ψ_V(x)` through the primal LP `min{1ᵀp : x = Vp, p ≥ 0}`.
    ///
    /// Requires [`Self::is_absorbing`]; infeasibility then signals a
    /// corrupted input.
    pub fn minkowski_primal(&self, x: &Vector) -> Result<f64, PolytopeError> {
        assert_eq!(x.len(), self.dim());
        let m = self.vertex_count();
        let mut lp = GeneralLp::new(m);
        for j in 0..m {
            lp.objective[j] = -1.0;
        }
        for r in 0..self.dim() {
            let coeffs: Vec<f64> = (0..m).map(|j| self.v[(r, j)]).collect();
            lp.push_row(coeffs, Relation::Eq, x[r]);
        }
        let sol = solve_with_inequalities(&lp).map_err(lp_error)?;
        Ok(-sol.objective)
    }

    /// `Ψ_V(x)` through the dual LP `max{hᵀx : hᵀV ≤ 1ᵀ}`, returning the
    /// maximizing `h`, which is a subgradient of `Ψ_V` at `x`.
    pub fn minkowski_dual(&self, x: &Vector) -> Result<(f64, Subgradient), PolytopeError> {
        assert_eq!(x.len(), self.dim());
        let n = self.dim();
        let mut lp = GeneralLp::new(n);
        for r in 0..n {
            lp.objective[r] = x[r];
            lp.free[r] = true;
        }
        for j in 0..self.vertex_count() {
            let coeffs: Vec<f64> = (0..n).map(|r| self.v[(r, j)]).collect();
            lp.push_row(coeffs, Relation::Le, 1.0);
        }
        let sol = solve_with_inequalities(&lp).map_err(lp_error)?;
        let h = Vector::from_column_slice(&sol.x);
        Ok((sol.objective, Subgradient { h }))
    }

    /// Largest directional derivative of `Ψ_V` at `x` along the flow
    /// `ẋ = Ax`: `sup{hᵀAx : hᵀx = Ψ_V(x), hᵀV ≤ 1ᵀ}`.
    pub fn subgradient_max_decay(&self, a: &Matrix, x: &Vector) -> Result<f64, PolytopeError> {
        assert_eq!(a.nrows(), self.dim());
        assert_eq!(a.ncols(), self.dim());
        let n = self.dim();
        let (psi, _) = self.minkowski_dual(x)?;
        let ax = a * x;
        let mut lp = GeneralLp::new(n);
        for r in 0..n {
            lp.objective[r] = ax[r];
            lp.free[r] = true;
        }
        for j in 0..self.vertex_count() {
            let coeffs: Vec<f64> = (0..n).map(|r| self.v[(r, j)]).collect();
            lp.push_row(coeffs, Relation::Le, 1.0);
        }
        lp.push_row(x.iter().copied().collect(), Relation::Eq, psi);
        let sol = solve_with_inequalities(&lp).map_err(lp_error)?;
        Ok(sol.objective)
    }
}

/// A supporting linear functional `h` with `hᵀx = Ψ_V(x)` and
/// `hᵀV ≤ 1ᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Subgradient {
    pub h: Vector,
}

impl Subgradient {
    /// Checks the defining membership conditions at `x` within `tol`.
    pub fn supports(&self, polytope: &VPolytope, x: &Vector, psi: f64, tol: f64) -> bool {
        let bound_ok = (self.h.transpose() * polytope.vertices())
            .iter()
            .all(|&v| v <= 1.0 + tol);
        bound_ok && (self.h.dot(x) - psi).abs() <= tol * (1.0 + psi.abs())
    }
}

/// Random initial polytope: `m − 1` standard-normal columns normalized to
/// unit Euclidean length, plus a final column equal to minus their sum,
/// again normalized. The construction yields a positive combination of
/// all vertices summing to zero, so the interior condition holds for any
/// non-degenerate draw; degenerate draws are retried with the next seed,
/// at most 100 times.
pub fn random_init(n: usize, m: usize, seed: u64) -> Result<VPolytope, PolytopeError> {
    if m < n + 1 {
        return Err(PolytopeError::TooFewVertices { n, m });
    }
    const MAX_RETRIES: usize = 100;
    for attempt in 0..MAX_RETRIES {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(attempt as u64));
        let mut v = Matrix::zeros(n, m);
        let mut ok = true;
        let mut sum = Vector::zeros(n);
        for j in 0..m - 1 {
            let col = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
            let norm = col.norm();
            if norm < 1e-12 {
                ok = false;
                break;
            }
            let unit = col / norm;
            sum += &unit;
            v.set_column(j, &unit);
        }
        if !ok {
            continue;
        }
        let norm = sum.norm();
        if norm < 1e-12 {
            continue;
        }
        v.set_column(m - 1, &(-sum / norm));
        let candidate = VPolytope::new(v)?;
        if candidate.is_absorbing() {
            return Ok(candidate);
        }
    }
    Err(PolytopeError::DegenerateSample {
        retries: MAX_RETRIES,
    })
}
