//! Plant models: single matrices, vertex lists for polytopic differential
//! inclusions, output-feedback synthesis tuples, and interval-matrix
//! corner enumeration for parameterized families such as the DC-motor
//! benchmarks.

use crate::numerics::{ensure_finite, Matrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum PlantError {
    #[error("plant matrices must be square and share one dimension")]
    DimensionMismatch,
    #[error("hull vertex list must be non-empty")]
    EmptyHull,
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("interval bounds must satisfy lower ≤ upper entrywise")]
    InvertedBounds,
    #[error("too many uncertain entries: {count} would produce 2^{count} corners")]
    TooManyCorners { count: usize },
    #[error("perturbation factor gamma must be ≥ 1 (got {0})")]
    BadGamma(f64),
    #[error("synthesis model requires a feedback gain")]
    MissingGain,
    #[error("gain dimensions do not match B and C")]
    BadGainShape,
}

/// Output-feedback synthesis data: `ẋ = A x + B u`, `y = C x`,
/// `u = K y`, with `A` and `B` ranging over vertex lists.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthesisModel {
    pub a_list: Vec<Matrix>,
    pub b_list: Vec<Matrix>,
    pub c: Matrix,
}

impl SynthesisModel {
    /// Gain row count `q` (input dimension).
    pub fn gain_rows(&self) -> usize {
        self.b_list[0].ncols()
    }

    /// Gain column count `r` (output dimension).
    pub fn gain_cols(&self) -> usize {
        self.c.nrows()
    }
}

/// The system whose stability is being certified.
#[derive(Debug, Clone, PartialEq)]
pub enum PlantModel {
    /// One autonomous linear system `ẋ = Ax`.
    Single(Matrix),
    /// A polytopic differential inclusion `ẋ ∈ conv{A_i} x`.
    Hull(Vec<Matrix>),
    /// A stabilization problem over `conv{A_i}`, `conv{B_j}`.
    Synthesis(SynthesisModel),
}

impl PlantModel {
    pub fn validate(&self) -> Result<(), PlantError> {
        let check_square = |list: &[Matrix]| -> Result<usize, PlantError> {
            let first = list.first().ok_or(PlantError::EmptyHull)?;
            let n = first.nrows();
            for a in list {
                ensure_finite(a).map_err(|_| PlantError::NonFinite)?;
                if a.nrows() != n || a.ncols() != n {
                    return Err(PlantError::DimensionMismatch);
                }
            }
            Ok(n)
        };
        match self {
            PlantModel::Single(a) => {
                check_square(std::slice::from_ref(a))?;
            }
            PlantModel::Hull(list) => {
                check_square(list)?;
            }
            PlantModel::Synthesis(syn) => {
                let n = check_square(&syn.a_list)?;
                let q = syn
                    .b_list
                    .first()
                    .ok_or(PlantError::EmptyHull)?
                    .ncols();
                for b in &syn.b_list {
                    ensure_finite(b).map_err(|_| PlantError::NonFinite)?;
                    if b.nrows() != n || b.ncols() != q {
                        return Err(PlantError::DimensionMismatch);
                    }
                }
                ensure_finite(&syn.c).map_err(|_| PlantError::NonFinite)?;
                if syn.c.ncols() != n {
                    return Err(PlantError::DimensionMismatch);
                }
            }
        }
        Ok(())
    }

    pub fn state_dim(&self) -> usize {
        match self {
            PlantModel::Single(a) => a.nrows(),
            PlantModel::Hull(list) => list[0].nrows(),
            PlantModel::Synthesis(syn) => syn.a_list[0].nrows(),
        }
    }

    /// Closed-loop vertex matrices: the plant list itself for analysis
    /// models, and `A_i + B_j K C` over all hull pairs `(i, j)` for
    /// synthesis models.
    pub fn closed_loop(&self, gain: Option<&Matrix>) -> Result<Vec<Matrix>, PlantError> {
        match self {
            PlantModel::Single(a) => Ok(vec![a.clone()]),
            PlantModel::Hull(list) => Ok(list.clone()),
            PlantModel::Synthesis(syn) => {
                let k = gain.ok_or(PlantError::MissingGain)?;
                if k.nrows() != syn.gain_rows() || k.ncols() != syn.gain_cols() {
                    return Err(PlantError::BadGainShape);
                }
                let mut out = Vec::with_capacity(syn.a_list.len() * syn.b_list.len());
                for a in &syn.a_list {
                    for b in &syn.b_list {
                        out.push(a + b * k * &syn.c);
                    }
                }
                Ok(out)
            }
        }
    }
}

/// Entrywise interval bounds on a matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct IntervalMatrix {
    pub lower: Matrix,
    pub upper: Matrix,
}

impl IntervalMatrix {
    pub fn new(lower: Matrix, upper: Matrix) -> Result<Self, PlantError> {
        ensure_finite(&lower).map_err(|_| PlantError::NonFinite)?;
        ensure_finite(&upper).map_err(|_| PlantError::NonFinite)?;
        if lower.nrows() != upper.nrows() || lower.ncols() != upper.ncols() {
            return Err(PlantError::DimensionMismatch);
        }
        if lower.iter().zip(upper.iter()).any(|(lo, up)| lo > up) {
            return Err(PlantError::InvertedBounds);
        }
        Ok(IntervalMatrix { lower, upper })
    }
}

/// All corner matrices of an interval matrix: every entry with
/// `lower < upper` independently takes one of its two bounds, fixed
/// entries keep their common value. Corners are emitted in binary
/// counting order over the non-degenerate entries scanned column-major
/// (entry `t` takes its upper bound in corner `c` iff bit `t` of `c` is
/// set), so the output order is deterministic.
pub fn corners(im: &IntervalMatrix) -> Result<Vec<Matrix>, PlantError> {
    let mut varying = Vec::new();
    for j in 0..im.lower.ncols() {
        for i in 0..im.lower.nrows() {
            if im.lower[(i, j)] < im.upper[(i, j)] {
                varying.push((i, j));
            }
        }
    }
    let q = varying.len();
    if q > 20 {
        return Err(PlantError::TooManyCorners { count: q });
    }
    let mut out = Vec::with_capacity(1 << q);
    for counter in 0..(1_usize << q) {
        let mut corner = im.lower.clone();
        for (t, &(i, j)) in varying.iter().enumerate() {
            if counter >> t & 1 == 1 {
                corner[(i, j)] = im.upper[(i, j)];
            }
        }
        out.push(corner);
    }
    Ok(out)
}

/// Nominal DC-motor parameters: inertia, friction, emf constant,
/// resistance, inductance.
pub const MOTOR_J0: f64 = 0.01;
pub const MOTOR_B0: f64 = 0.1;
pub const MOTOR_K0: f64 = 0.01;
pub const MOTOR_R0: f64 = 1.0;
pub const MOTOR_L0: f64 = 0.5;

/// Interval for `num/den` with `num ∈ [num_lo, num_hi]` and
/// `den ∈ [den_lo, den_hi]`, both intervals strictly positive.
fn pos_ratio_interval(num_lo: f64, num_hi: f64, den_lo: f64, den_hi: f64) -> (f64, f64) {
    debug_assert!(num_lo > 0.0 && den_lo > 0.0);
    (num_lo / den_hi, num_hi / den_lo)
}

/// DC-motor speed model `d/dt (ω, i)` with parameters `J`, `b`, `K`
/// perturbed by a factor `γ` around their nominal values (`R`, `L`
/// fixed). The parameter box is converted to entrywise intervals on the
/// system matrix and then to the corner hull; this over-approximates the
/// parameterized family, so any certificate found is valid for it a
/// fortiori.
pub fn motor_speed_model(gamma_s: f64) -> Result<PlantModel, PlantError> {
    if !(gamma_s >= 1.0) {
        return Err(PlantError::BadGamma(gamma_s));
    }
    let (j_lo, j_hi) = (MOTOR_J0 / gamma_s, MOTOR_J0 * gamma_s);
    let (b_lo, b_hi) = (MOTOR_B0 / gamma_s, MOTOR_B0 * gamma_s);
    let (k_lo, k_hi) = (MOTOR_K0 / gamma_s, MOTOR_K0 * gamma_s);

    let (bj_lo, bj_hi) = pos_ratio_interval(b_lo, b_hi, j_lo, j_hi);
    let (kj_lo, kj_hi) = pos_ratio_interval(k_lo, k_hi, j_lo, j_hi);
    let (kl_lo, kl_hi) = pos_ratio_interval(k_lo, k_hi, MOTOR_L0, MOTOR_L0);

    let lower = Matrix::from_row_slice(2, 2, &[-bj_hi, kj_lo, -kl_hi, -MOTOR_R0 / MOTOR_L0]);
    let upper = Matrix::from_row_slice(2, 2, &[-bj_lo, kj_hi, -kl_lo, -MOTOR_R0 / MOTOR_L0]);
    let hull = corners(&IntervalMatrix::new(lower, upper)?)?;
    Ok(PlantModel::Hull(hull))
}

/// DC-motor position model `d/dt (θ, ω, i)` with `J`, `K` perturbed by a
/// factor `γ` (`b`, `R`, `L` fixed), a single input column `(0, 0, 1/L)ᵀ`
/// and measured outputs `θ` and `i`. Returned as a synthesis model.
pub fn motor_position_model(gamma_p: f64) -> Result<PlantModel, PlantError> {
    if !(gamma_p >= 1.0) {
        return Err(PlantError::BadGamma(gamma_p));
    }
    let (j_lo, j_hi) = (MOTOR_J0 / gamma_p, MOTOR_J0 * gamma_p);
    let (k_lo, k_hi) = (MOTOR_K0 / gamma_p, MOTOR_K0 * gamma_p);

    let (bj_lo, bj_hi) = pos_ratio_interval(MOTOR_B0, MOTOR_B0, j_lo, j_hi);
    let (kj_lo, kj_hi) = pos_ratio_interval(k_lo, k_hi, j_lo, j_hi);
    let (kl_lo, kl_hi) = pos_ratio_interval(k_lo, k_hi, MOTOR_L0, MOTOR_L0);
    let rl = MOTOR_R0 / MOTOR_L0;

    let lower = Matrix::from_row_slice(
        3,
        3,
        &[
            0.0, 1.0, 0.0, //
            0.0, -bj_hi, kj_lo, //
            0.0, -kl_hi, -rl,
        ],
    );
    let upper = Matrix::from_row_slice(
        3,
        3,
        &[
            0.0, 1.0, 0.0, //
            0.0, -bj_lo, kj_hi, //
            0.0, -kl_lo, -rl,
        ],
    );
    let a_list = corners(&IntervalMatrix::new(lower, upper)?)?;
    let b = Matrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0 / MOTOR_L0]);
    let c = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 0.0, 1.0]);
    Ok(PlantModel::Synthesis(SynthesisModel {
        a_list,
        b_list: vec![b],
        c,
    }))
}
