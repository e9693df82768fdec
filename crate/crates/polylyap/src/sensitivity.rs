//! Standard-form transformation of the gap LP and implicit
//! differentiation of its optimum with respect to the vertex matrix.
//!
//! The gap LP is rewritten as `max ĉᵀx̂ s.t. Âx̂ = b̂, x̂ ≥ 0` with
//! variables `x̂ = [vec(P); −δ; η₊; η₋]`, where `M = P + δI` splits each
//! Metzler `M` into a non-negative part and a non-positive diagonal
//! shift, and `η = η₊ − η₋`. One `(P, δ)` block per closed-loop plant
//! vertex is stacked with a shared rate; synthesis adds `vec(K₊)`,
//! `vec(K₋)` columns entering the equalities through
//! `vec(BKCV) = ((CV)ᵀ ⊗ B) vec(K)`, plus slack columns for the gain box
//! `|K_ij| ≤ κ`.
//!
//! Around an optimal basic solution, the equality constraints define
//! `ŷ = [x̂_i]_{i ∈ B}` implicitly as a function of `V`; since the basis
//! matrix is nonsingular, `∇_{vec(V)} ŷ = −B̂⁻¹Ĝ` where `Ĝ` is the
//! derivative of the constraint residual in `V` at fixed `x̂`
//! (`Mᵀ ⊗ I_n − I_m ⊗ A` per equality block, zero for rate and box
//! rows). Variables outside the basis have derivative zero.

use crate::contraction::ContractionCertificate;
use crate::numerics::{kron, lu_solve_matrix, unvectorize, Matrix, Vector};
use crate::plants::{PlantModel, SynthesisModel};
use crate::polytope::VPolytope;
use crate::simplex::{BasicSolution, StandardFormLP};
use thiserror::Error;

/// Default half-width of the gain box keeping the synthesis LP bounded.
pub const DEFAULT_KAPPA: f64 = 1e3;

#[derive(Debug, Error)]
pub enum SensitivityError {
    #[error("basis matrix is singular; re-solve at a perturbed vertex matrix")]
    SingularBasis,
    #[error("basic solution does not match the program layout")]
    LayoutMismatch,
}

/// What a standard-form column stands for.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarKind {
    /// Entry `(row, col)` of the non-negative part `P` of block `block`.
    P { block: usize, row: usize, col: usize },
    /// `−δ` of block `block` (non-negative since `δ ≤ 0`).
    NegDelta { block: usize },
    EtaPlus,
    EtaMinus,
    GainPlus { row: usize, col: usize },
    GainMinus { row: usize, col: usize },
    /// Slack of the box row for gain entry `(row, col)`.
    BoxSlack { row: usize, col: usize },
}

/// Index bookkeeping for the standard form: a bijection between column
/// indices and [`VarKind`]s, plus the row layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GapLayout {
    pub state_dim: usize,
    pub vertex_count: usize,
    pub blocks: usize,
    /// `(q, r)` = gain shape for synthesis programs.
    pub gain: Option<(usize, usize)>,
    pub kappa: f64,
}

impl GapLayout {
    fn block_width(&self) -> usize {
        self.vertex_count * self.vertex_count + 1
    }

    pub fn num_cols(&self) -> usize {
        let gain_cols = self.gain.map_or(0, |(q, r)| 3 * q * r);
        self.blocks * self.block_width() + 2 + gain_cols
    }

    pub fn num_rows(&self) -> usize {
        let (n, m) = (self.state_dim, self.vertex_count);
        self.blocks * (n * m + m) + self.gain.map_or(0, |(q, r)| q * r)
    }

    pub fn p_col(&self, block: usize, row: usize, col: usize) -> usize {
        block * self.block_width() + col * self.vertex_count + row
    }

    pub fn delta_col(&self, block: usize) -> usize {
        block * self.block_width() + self.vertex_count * self.vertex_count
    }

    pub fn eta_plus_col(&self) -> usize {
        self.blocks * self.block_width()
    }

    pub fn eta_minus_col(&self) -> usize {
        self.eta_plus_col() + 1
    }

    pub fn gain_plus_col(&self, row: usize, col: usize) -> usize {
        let (q, _) = self.gain.expect("analysis layout has no gain columns");
        self.eta_minus_col() + 1 + col * q + row
    }

    pub fn gain_minus_col(&self, row: usize, col: usize) -> usize {
        let (q, r) = self.gain.expect("analysis layout has no gain columns");
        self.gain_plus_col(row, col) + q * r
    }

    pub fn slack_col(&self, row: usize, col: usize) -> usize {
        let (q, r) = self.gain.expect("analysis layout has no gain columns");
        self.gain_plus_col(row, col) + 2 * q * r
    }

    pub fn eq_row(&self, block: usize, row: usize, col: usize) -> usize {
        let (n, m) = (self.state_dim, self.vertex_count);
        block * n * m + col * n + row
    }

    pub fn rate_row(&self, block: usize, col: usize) -> usize {
        let (n, m) = (self.state_dim, self.vertex_count);
        self.blocks * n * m + block * m + col
    }

    pub fn box_row(&self, row: usize, col: usize) -> usize {
        let (n, m) = (self.state_dim, self.vertex_count);
        let (q, _) = self.gain.expect("analysis layout has no box rows");
        self.blocks * (n * m + m) + col * q + row
    }

    /// Inverse of the column maps; total on `0..num_cols()`.
    pub fn var_kind(&self, idx: usize) -> VarKind {
        let m = self.vertex_count;
        let bw = self.block_width();
        let gain_base = self.blocks * bw + 2;
        if idx < self.blocks * bw {
            let block = idx / bw;
            let within = idx % bw;
            if within == m * m {
                VarKind::NegDelta { block }
            } else {
                VarKind::P {
                    block,
                    row: within % m,
                    col: within / m,
                }
            }
        } else if idx == gain_base - 2 {
            VarKind::EtaPlus
        } else if idx == gain_base - 1 {
            VarKind::EtaMinus
        } else {
            let (q, r) = self.gain.expect("column index beyond analysis layout");
            let off = idx - gain_base;
            let (group, rem) = (off / (q * r), off % (q * r));
            let (row, col) = (rem % q, rem / q);
            match group {
                0 => VarKind::GainPlus { row, col },
                1 => VarKind::GainMinus { row, col },
                2 => VarKind::BoxSlack { row, col },
                _ => panic!("column index {idx} out of range"),
            }
        }
    }

    /// Recovers `(M_list, η, K)` from a standard-form solution.
    pub fn extract(&self, v: &VPolytope, sol: &BasicSolution) -> ContractionCertificate {
        assert_eq!(sol.x.len(), self.num_cols(), "layout mismatch");
        let m = self.vertex_count;
        let mut m_list = Vec::with_capacity(self.blocks);
        for b in 0..self.blocks {
            let delta = -sol.x[self.delta_col(b)];
            let mut mm = Matrix::zeros(m, m);
            for j in 0..m {
                for i in 0..m {
                    mm[(i, j)] = sol.x[self.p_col(b, i, j)] + if i == j { delta } else { 0.0 };
                }
            }
            m_list.push(mm);
        }
        let eta = sol.x[self.eta_plus_col()] - sol.x[self.eta_minus_col()];
        let gain = self.gain.map(|(q, r)| {
            Matrix::from_fn(q, r, |i, j| {
                sol.x[self.gain_plus_col(i, j)] - sol.x[self.gain_minus_col(i, j)]
            })
        });
        ContractionCertificate {
            v: v.clone(),
            m_list,
            eta,
            gain,
        }
    }

    /// Forward map used by tests: embeds `(M_list, η, K)` as a feasible
    /// `x̂` with `δ = min(0, min_i M_ii)` and `P = M − δI`.
    pub fn embed(&self, m_list: &[Matrix], eta: f64, gain: Option<&Matrix>) -> Vector {
        assert_eq!(m_list.len(), self.blocks);
        let m = self.vertex_count;
        let mut x = Vector::zeros(self.num_cols());
        for (b, mm) in m_list.iter().enumerate() {
            let delta = (0..m).map(|i| mm[(i, i)]).fold(0.0_f64, f64::min);
            x[self.delta_col(b)] = -delta;
            for j in 0..m {
                for i in 0..m {
                    x[self.p_col(b, i, j)] = mm[(i, j)] - if i == j { delta } else { 0.0 };
                }
            }
        }
        x[self.eta_plus_col()] = eta.max(0.0);
        x[self.eta_minus_col()] = (-eta).max(0.0);
        if let Some((q, r)) = self.gain {
            let k = gain.expect("synthesis layout needs a gain");
            for j in 0..r {
                for i in 0..q {
                    x[self.gain_plus_col(i, j)] = k[(i, j)].max(0.0);
                    x[self.gain_minus_col(i, j)] = (-k[(i, j)]).max(0.0);
                    x[self.slack_col(i, j)] = self.kappa - k[(i, j)].abs();
                }
            }
        }
        x
    }
}

/// Closed-loop equality blocks of a model: the open-loop `A` of each
/// block and, for synthesis, the paired `B`.
fn block_pairs(model: &PlantModel) -> Vec<(Matrix, Option<Matrix>)> {
    match model {
        PlantModel::Single(a) => vec![(a.clone(), None)],
        PlantModel::Hull(list) => list.iter().map(|a| (a.clone(), None)).collect(),
        PlantModel::Synthesis(syn) => {
            let mut out = Vec::with_capacity(syn.a_list.len() * syn.b_list.len());
            for a in &syn.a_list {
                for b in &syn.b_list {
                    out.push((a.clone(), Some(b.clone())));
                }
            }
            out
        }
    }
}

/// Builds the standard-form gap program for any plant model, together
/// with its layout. `kappa` is the gain box half-width, ignored for
/// analysis models.
pub fn gap_program(v: &VPolytope, model: &PlantModel, kappa: f64) -> (StandardFormLP, GapLayout) {
    let n = v.dim();
    let m = v.vertex_count();
    let pairs = block_pairs(model);
    let gain = match model {
        PlantModel::Synthesis(syn) => Some((syn.gain_rows(), syn.gain_cols())),
        _ => None,
    };
    let layout = GapLayout {
        state_dim: n,
        vertex_count: m,
        blocks: pairs.len(),
        gain,
        kappa,
    };

    let k = layout.num_rows();
    let l = layout.num_cols();
    let mut a_hat = Matrix::zeros(k, l);
    let mut b_hat = Vector::zeros(k);
    let mut c_hat = Vector::zeros(l);
    c_hat[layout.eta_plus_col()] = 1.0;
    c_hat[layout.eta_minus_col()] = -1.0;

    let cv = match model {
        PlantModel::Synthesis(syn) => Some(&syn.c * v.vertices()),
        _ => None,
    };

    for (b, (a, b_input)) in pairs.iter().enumerate() {
        let av = a * v.vertices();
        for j in 0..m {
            for r in 0..n {
                let row = layout.eq_row(b, r, j);
                for s in 0..m {
                    a_hat[(row, layout.p_col(b, s, j))] = v.vertices()[(r, s)];
                }
                a_hat[(row, layout.delta_col(b))] = -v.vertices()[(r, j)];
                b_hat[row] = av[(r, j)];
            }
        }
        if let (Some(bmat), Some(cv)) = (b_input, cv.as_ref()) {
            // vec(BKCV) = ((CV)ᵀ ⊗ B) vec(K); K₊ enters negatively.
            let gkron = kron(&cv.transpose(), bmat);
            let (q, r) = layout.gain.unwrap();
            for j in 0..m {
                for row_n in 0..n {
                    let row = layout.eq_row(b, row_n, j);
                    for u in 0..r {
                        for aa in 0..q {
                            let coeff = gkron[(j * n + row_n, u * q + aa)];
                            a_hat[(row, layout.gain_plus_col(aa, u))] = -coeff;
                            a_hat[(row, layout.gain_minus_col(aa, u))] = coeff;
                        }
                    }
                }
            }
        }
        for j in 0..m {
            let row = layout.rate_row(b, j);
            for i in 0..m {
                a_hat[(row, layout.p_col(b, i, j))] = 1.0;
            }
            a_hat[(row, layout.delta_col(b))] = -1.0;
            a_hat[(row, layout.eta_plus_col())] = 1.0;
            a_hat[(row, layout.eta_minus_col())] = -1.0;
        }
    }
    if let Some((q, r)) = layout.gain {
        for u in 0..r {
            for aa in 0..q {
                let row = layout.box_row(aa, u);
                a_hat[(row, layout.gain_plus_col(aa, u))] = 1.0;
                a_hat[(row, layout.gain_minus_col(aa, u))] = 1.0;
                a_hat[(row, layout.slack_col(aa, u))] = 1.0;
                b_hat[row] = kappa;
            }
        }
    }
    (StandardFormLP::new(a_hat, b_hat, c_hat), layout)
}

/// Standard form of the single-plant gap LP (`x̂ = [vec(P); −δ; η₊; η₋]`,
/// `nm + m` rows, `m² + 3` columns).
pub fn to_standard_form(v: &VPolytope, a: &Matrix) -> StandardFormLP {
    gap_program(v, &PlantModel::Single(a.clone()), DEFAULT_KAPPA).0
}

/// Standard form of the output-feedback gap LP with gain box `κ`.
pub fn synthesis_standard_form(v: &VPolytope, syn: &SynthesisModel, kappa: f64) -> StandardFormLP {
    gap_program(v, &PlantModel::Synthesis(syn.clone()), kappa).0
}

/// Linear maps `δV ↦ δη` and `δV ↦ δM` at a fixed optimal basis.
#[derive(Debug, Clone)]
pub struct GapDerivatives {
    /// Coefficients of the rate derivative: `(D_V η)(δV) = Σ d_eta ∘ δV`.
    pub d_eta: Matrix,
    /// Per block, the basic off-diagonal entries `(i, j)` of `M` with
    /// their gradient matrices; entries absent here have derivative zero.
    pub d_m: Vec<Vec<((usize, usize), Matrix)>>,
    /// The basis the derivatives were computed at.
    pub basis: Vec<usize>,
}

impl GapDerivatives {
    /// Directional derivative of the rate along `δV`.
    pub fn eta_directional(&self, dv: &Matrix) -> f64 {
        self.d_eta.zip_fold(dv, 0.0, |acc, g, d| acc + g * d)
    }
}

/// Derivative of the constraint residual in `V` at fixed `x̂`:
/// `Mᵀ ⊗ I_n − I_m ⊗ A_cl` per equality block, zero rows elsewhere.
fn constraint_jacobian(
    layout: &GapLayout,
    closed_loop: &[Matrix],
    m_list: &[Matrix],
) -> Matrix {
    let (n, m) = (layout.state_dim, layout.vertex_count);
    let eye_n = Matrix::identity(n, n);
    let eye_m = Matrix::identity(m, m);
    let mut g = Matrix::zeros(layout.num_rows(), n * m);
    for b in 0..layout.blocks {
        let block = kron(&m_list[b].transpose(), &eye_n) - kron(&eye_m, &closed_loop[b]);
        g.view_mut((b * n * m, 0), (n * m, n * m)).copy_from(&block);
    }
    g
}

/// Implicitly differentiates the gap optimum at `sol`, for any plant
/// model. The rows of `Ĝ` matching rows dropped by the simplex are
/// removed before solving `−B̂⁻¹Ĝ`, so the system stays square.
pub fn gap_derivatives_model(
    v: &VPolytope,
    model: &PlantModel,
    sol: &BasicSolution,
    layout: &GapLayout,
) -> Result<GapDerivatives, SensitivityError> {
    if sol.x.len() != layout.num_cols() {
        return Err(SensitivityError::LayoutMismatch);
    }
    let (n, m) = (layout.state_dim, layout.vertex_count);
    let cert = layout.extract(v, sol);
    let closed_loop = model
        .closed_loop(cert.gain.as_ref())
        .map_err(|_| SensitivityError::LayoutMismatch)?;
    let g = constraint_jacobian(layout, &closed_loop, &cert.m_list);

    let (a_hat, _) = {
        let (lp, _) = gap_program(v, model, layout.kappa);
        (lp.a_hat, ())
    };
    let retained = sol.retained_rows(layout.num_rows());
    let kk = sol.basis.len();
    if retained.len() != kk {
        return Err(SensitivityError::LayoutMismatch);
    }
    let mut basis_matrix = Matrix::zeros(kk, kk);
    let mut g_retained = Matrix::zeros(kk, n * m);
    for (ri, &r) in retained.iter().enumerate() {
        for (ci, &c) in sol.basis.iter().enumerate() {
            basis_matrix[(ri, ci)] = a_hat[(r, c)];
        }
        for c in 0..n * m {
            g_retained[(ri, c)] = g[(r, c)];
        }
    }
    let jac = -lu_solve_matrix(&basis_matrix, &g_retained)
        .map_err(|_| SensitivityError::SingularBasis)?;

    let row_of = |var: usize| -> Option<usize> { sol.basis.binary_search(&var).ok() };
    let grad_of = |var: usize| -> Matrix {
        match row_of(var) {
            Some(t) => unvectorize(&jac.row(t).transpose(), n, m),
            None => Matrix::zeros(n, m),
        }
    };

    let d_eta = grad_of(layout.eta_plus_col()) - grad_of(layout.eta_minus_col());
    let mut d_m = Vec::with_capacity(layout.blocks);
    for b in 0..layout.blocks {
        let mut entries = Vec::new();
        for j in 0..m {
            for i in 0..m {
                if i != j {
                    if let Some(t) = row_of(layout.p_col(b, i, j)) {
                        entries.push(((i, j), unvectorize(&jac.row(t).transpose(), n, m)));
                    }
                }
            }
        }
        d_m.push(entries);
    }
    Ok(GapDerivatives {
        d_eta,
        d_m,
        basis: sol.basis.clone(),
    })
}

/// Single-plant derivative entry point matching [`to_standard_form`].
pub fn gap_derivatives(
    v: &VPolytope,
    a: &Matrix,
    sol: &BasicSolution,
) -> Result<GapDerivatives, SensitivityError> {
    let model = PlantModel::Single(a.clone());
    let layout = GapLayout {
        state_dim: v.dim(),
        vertex_count: v.vertex_count(),
        blocks: 1,
        gain: None,
        kappa: DEFAULT_KAPPA,
    };
    gap_derivatives_model(v, &model, sol, &layout)
}
