//! Contraction-gap estimation and certificate checking.
//!
//! A polytope `C_V(V)` is contracting for `ẋ = Ax` with rate `η` exactly
//! when some Metzler `M` satisfies `AV = VM` and `1ᵀM = −η 1ᵀ`. For a
//! differential inclusion `ẋ ∈ conv{A_i} x` the same conditions hold with
//! one `M_i` per hull vertex and a shared rate. The largest such `η` (the
//! contraction gap) is a single LP; `η > 0` certifies global exponential
//! stability with that rate.

use crate::numerics::{max_abs, Matrix, Vector};
use crate::polytope::VPolytope;
use crate::simplex::{solve_with_inequalities, GeneralLp, Relation, SimplexError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

/// Residual tolerance on the certificate equalities.
pub const EQUALITY_TOL: f64 = 1e-8;
/// Lower tolerance on off-diagonal (Metzler) entries.
pub const METZLER_TOL: f64 = 1e-9;
/// Slack allowed in the sampled decay inequality.
pub const DECAY_MARGIN: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum ContractionError {
    #[error("gap LP unbounded: polytope violates the interior condition")]
    LpUnbounded,
    #[error("gap LP infeasible: vertex matrix is not full row rank")]
    LpInfeasible,
    #[error("pivot limit exceeded in the gap LP")]
    PivotLimit,
    #[error("plant dimension {plant} does not match polytope dimension {polytope}")]
    DimensionMismatch { plant: usize, polytope: usize },
}

impl From<SimplexError> for ContractionError {
    fn from(e: SimplexError) -> Self {
        match e {
            SimplexError::Unbounded => ContractionError::LpUnbounded,
            SimplexError::Infeasible => ContractionError::LpInfeasible,
            SimplexError::PivotLimit => ContractionError::PivotLimit,
        }
    }
}

/// A (candidate) proof of contraction: the polytope, one `M` per plant
/// vertex, the shared rate, and the feedback gain when the certificate
/// came out of a synthesis run.
#[derive(Debug, Clone)]
pub struct ContractionCertificate {
    pub v: VPolytope,
    pub m_list: Vec<Matrix>,
    pub eta: f64,
    pub gain: Option<Matrix>,
}

fn check_dims(v: &VPolytope, plants: &[Matrix]) -> Result<(), ContractionError> {
    let n = v.dim();
    for a in plants {
        if a.nrows() != n || a.ncols() != n {
            return Err(ContractionError::DimensionMismatch {
                plant: a.nrows(),
                polytope: n,
            });
        }
    }
    Ok(())
}

/// Builds the gap LP over variables `[vec(M_0), …, vec(M_{N−1}), η]`,
/// with off-diagonal `M` entries sign-constrained and an optional fixed
/// rate instead of the `η` variable.
fn gap_lp(v: &VPolytope, plants: &[Matrix], fixed_rate: Option<f64>) -> GeneralLp {
    let n = v.dim();
    let m = v.vertex_count();
    let blocks = plants.len();
    let num_vars = blocks * m * m + usize::from(fixed_rate.is_none());
    let eta_var = blocks * m * m;
    let mvar = |b: usize, i: usize, j: usize| b * m * m + j * m + i;

    let mut lp = GeneralLp::new(num_vars);
    for b in 0..blocks {
        for i in 0..m {
            lp.free[mvar(b, i, i)] = true;
        }
    }
    if fixed_rate.is_none() {
        lp.free[eta_var] = true;
        lp.objective[eta_var] = 1.0;
    }

    for (b, a) in plants.iter().enumerate() {
        let av = a * v.vertices();
        // AV = VM, entry by entry.
        for j in 0..m {
            for r in 0..n {
                let mut coeffs = vec![0.0; num_vars];
                for s in 0..m {
                    coeffs[mvar(b, s, j)] = v.vertices()[(r, s)];
                }
                lp.push_row(coeffs, Relation::Eq, av[(r, j)]);
            }
        }
        // Column sums: 1ᵀM_b = −η 1ᵀ.
        for j in 0..m {
            let mut coeffs = vec![0.0; num_vars];
            for i in 0..m {
                coeffs[mvar(b, i, j)] = 1.0;
            }
            let rhs = match fixed_rate {
                Some(rate) => -rate,
                None => {
                    coeffs[eta_var] = 1.0;
                    0.0
                }
            };
            lp.push_row(coeffs, Relation::Eq, rhs);
        }
    }
    lp
}

/// Maximizes the shared contraction rate over all plant vertices and
/// returns the optimal certificate. The rate may be ≤ 0; a finite
/// optimum always exists when the interior condition holds.
pub fn contraction_gap(
    v: &VPolytope,
    plants: &[Matrix],
) -> Result<ContractionCertificate, ContractionError> {
    assert!(!plants.is_empty(), "plant list must be non-empty");
    check_dims(v, plants)?;
    let m = v.vertex_count();
    let lp = gap_lp(v, plants, None);
    let sol = solve_with_inequalities(&lp)?;
    let mut m_list = Vec::with_capacity(plants.len());
    for b in 0..plants.len() {
        let mut mm = Matrix::zeros(m, m);
        for j in 0..m {
            for i in 0..m {
                mm[(i, j)] = sol.x[b * m * m + j * m + i];
            }
        }
        m_list.push(mm);
    }
    let eta = sol.x[plants.len() * m * m];
    Ok(ContractionCertificate {
        v: v.clone(),
        m_list,
        eta,
        gain: None,
    })
}

/// Feasibility of the contraction conditions at a fixed rate.
pub fn rate_feasible(
    v: &VPolytope,
    plants: &[Matrix],
    eta: f64,
) -> Result<bool, ContractionError> {
    check_dims(v, plants)?;
    let lp = gap_lp(v, plants, Some(eta));
    match solve_with_inequalities(&lp) {
        Ok(_) => Ok(true),
        Err(SimplexError::Infeasible) => Ok(false),
        Err(e) => Err(e.into()),
    }
}

/// Best rate achievable for vertex `i` alone:
/// `max −1ᵀp  s.t.  A[V]_i = Vp, p_{j≠i} ≥ 0`.
///
/// The minimum over `i` upper-bounds the joint gap; useful as a
/// worst-vertex diagnostic.
pub fn column_gap(v: &VPolytope, a: &Matrix, i: usize) -> Result<f64, ContractionError> {
    check_dims(v, std::slice::from_ref(a))?;
    let m = v.vertex_count();
    assert!(i < m, "vertex index out of range");
    let mut lp = GeneralLp::new(m);
    for j in 0..m {
        lp.objective[j] = -1.0;
    }
    lp.free[i] = true;
    let target = a * v.vertex(i);
    for r in 0..v.dim() {
        let coeffs: Vec<f64> = (0..m).map(|j| v.vertices()[(r, j)]).collect();
        lp.push_row(coeffs, Relation::Eq, target[r]);
    }
    let sol = solve_with_inequalities(&lp)?;
    Ok(sol.objective)
}

/// Independent re-validation of a certificate against a closed-loop
/// plant list: rate rows within [`EQUALITY_TOL`], equality residuals
/// within `EQUALITY_TOL` relative to the data scale, off-diagonal
/// entries above `−`[`METZLER_TOL`]. Does not re-run any search.
pub fn verify_certificate(cert: &ContractionCertificate, plants: &[Matrix]) -> bool {
    let m = cert.v.vertex_count();
    if plants.len() != cert.m_list.len() || plants.is_empty() {
        return false;
    }
    if check_dims(&cert.v, plants).is_err() {
        return false;
    }
    for (a, mm) in plants.iter().zip(&cert.m_list) {
        if mm.nrows() != m || mm.ncols() != m {
            return false;
        }
        // 1ᵀM = −η·1ᵀ
        for j in 0..m {
            let colsum: f64 = (0..m).map(|i| mm[(i, j)]).sum();
            if (colsum + cert.eta).abs() > EQUALITY_TOL {
                return false;
            }
        }
        // AV = VM up to the data scale.
        let av = a * cert.v.vertices();
        let vm = cert.v.vertices() * mm;
        let scale = max_abs(&av).max(max_abs(&vm)).max(1.0);
        if (&av - &vm).amax() > EQUALITY_TOL * scale {
            return false;
        }
        // Metzler.
        for i in 0..m {
            for j in 0..m {
                if i != j && mm[(i, j)] < -METZLER_TOL {
                    return false;
                }
            }
        }
    }
    true
}

/// Draws `samples` points uniformly on the unit sphere and checks the
/// Lyapunov-side decay inequality
/// `sup_{h ∈ ∂Ψ_V(x)} hᵀAx ≤ −η Ψ_V(x)` for every plant vertex, within
/// [`DECAY_MARGIN`]. Degenerate zero draws are skipped (both sides
/// vanish).
pub fn sampled_decay_check(
    cert: &ContractionCertificate,
    plants: &[Matrix],
    samples: usize,
    seed: u64,
) -> bool {
    let n = cert.v.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let raw = Vector::from_fn(n, |_, _| StandardNormal.sample(&mut rng));
        let norm = raw.norm();
        if norm < 1e-12 {
            continue;
        }
        let x = raw / norm;
        let psi = match cert.v.minkowski_primal(&x) {
            Ok(p) => p,
            Err(_) => return false,
        };
        for a in plants {
            let decay = match cert.v.subgradient_max_decay(a, &x) {
                Ok(d) => d,
                Err(_) => return false,
            };
            if decay > -cert.eta * psi + DECAY_MARGIN {
                return false;
            }
        }
    }
    true
}
