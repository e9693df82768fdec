//! The two-step iterated search: estimate the contraction gap of the
//! current polytope, then move the vertices to reduce the gap, until the
//! rate turns positive or the budget runs out.
//!
//! Two gap-reduction steps are provided. The full step re-linearizes the
//! contraction conditions around the current `(V, M, η)` and optimizes
//! over `(δV, δM, δη)` jointly. The fast step restricts the move to the
//! tangent directions compatible with the current optimal basis, using
//! the implicit derivatives of the gap LP, and optimizes over `δV`
//! alone. Both steps bound `‖δV‖₁` (entrywise sum of absolute values)
//! by a trust radius `ε` that shrinks on rejected steps and recovers on
//! accepted ones.

use crate::contraction::{verify_certificate, ContractionCertificate};
use crate::numerics::Matrix;
use crate::plants::PlantModel;
use crate::polytope::{random_init, VPolytope};
use crate::sensitivity::{gap_derivatives_model, gap_program, GapDerivatives, GapLayout};
use crate::simplex::{solve, solve_with_inequalities, BasicSolution, GeneralLp, Relation};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("find_polyhedron needs a single or hull model; use synthesize for synthesis models")]
    ExpectedAnalysisModel,
    #[error("synthesize needs a synthesis model")]
    ExpectedSynthesisModel,
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("plant model invalid: {0}")]
    Plant(#[from] crate::plants::PlantError),
    #[error("step LP failed: {0}")]
    StepLp(#[from] crate::simplex::SimplexError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepMode {
    /// Joint `(δV, δM, δη)` step.
    Full,
    /// Derivative-based `δV` step at a fixed basis.
    Fast,
}

/// Search parameters. `restarts` is the total number of attempts, each
/// from a fresh random initialization with a seed derived from `seed`.
/// `epsilon0 = None` picks `0.05 ·` (largest vertex entry) per attempt.
#[derive(Debug, Clone)]
pub struct SearchConfig {
    pub vertex_count: usize,
    pub max_iter: usize,
    pub epsilon0: Option<f64>,
    pub eps_shrink: f64,
    pub eps_grow: f64,
    pub eta_tol: f64,
    pub seed: u64,
    pub step_mode: StepMode,
    pub restarts: usize,
    /// Gain box half-width for synthesis runs.
    pub kappa: f64,
}

impl SearchConfig {
    pub fn new(vertex_count: usize) -> Self {
        SearchConfig {
            vertex_count,
            max_iter: 500,
            epsilon0: None,
            eps_shrink: 0.5,
            eps_grow: 1.5,
            eta_tol: 1e-7,
            seed: 0,
            step_mode: StepMode::Fast,
            restarts: 10,
            kappa: 1e3,
        }
    }

    fn validate(&self, n: usize) -> Result<(), SearchError> {
        if self.vertex_count < n + 1 {
            return Err(SearchError::BadConfig(format!(
                "vertex count {} below dimension + 1 = {}",
                self.vertex_count,
                n + 1
            )));
        }
        if let Some(e) = self.epsilon0 {
            if !(e > 0.0) {
                return Err(SearchError::BadConfig("epsilon0 must be positive".into()));
            }
        }
        if !(self.eps_shrink > 0.0 && self.eps_shrink < 1.0) {
            return Err(SearchError::BadConfig("eps_shrink must lie in (0,1)".into()));
        }
        if !(self.eps_grow >= 1.0) {
            return Err(SearchError::BadConfig("eps_grow must be ≥ 1".into()));
        }
        if !(self.eta_tol >= 0.0) {
            return Err(SearchError::BadConfig("eta_tol must be ≥ 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchStatus {
    Certified,
    MaxIter,
    Stalled,
}

#[derive(Debug, Clone, Copy)]
pub struct TraceEntry {
    pub iteration: usize,
    pub eta: f64,
    pub epsilon: f64,
    pub step_norm: f64,
    pub basis_changed: bool,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub status: SearchStatus,
    pub certificate: Option<ContractionCertificate>,
    pub trace: Vec<TraceEntry>,
    /// 0-based index of the attempt that produced this report.
    pub restart_index: usize,
    pub restarts_used: usize,
}

/// Result of the full gap-reduction step.
#[derive(Debug, Clone)]
pub struct FullStep {
    pub delta_v: Matrix,
    pub delta_m: Vec<Matrix>,
    pub delta_eta: f64,
    pub delta_gain: Option<Matrix>,
}

fn l1_norm(m: &Matrix) -> f64 {
    m.iter().map(|x| x.abs()).sum()
}

/// The full step LP around `cert`: maximize `δη` subject to the
/// linearized contraction conditions, the Metzler margin on `M + δM`,
/// and `‖δV‖₁ ≤ ε`, `‖δM_i‖₁ ≤ ε` (and `‖δK‖₁ ≤ ε` in synthesis mode).
/// `δV = 0` is always feasible, so the LP cannot be infeasible.
pub fn step_full(
    cert: &ContractionCertificate,
    model: &PlantModel,
    eps: f64,
) -> Result<FullStep, SearchError> {
    let v = &cert.v;
    let n = v.dim();
    let m = v.vertex_count();
    let nm = n * m;
    let closed = model.closed_loop(cert.gain.as_ref())?;
    let blocks = closed.len();
    assert_eq!(blocks, cert.m_list.len(), "certificate/model mismatch");

    let (bk_mats, cv) = match model {
        PlantModel::Synthesis(syn) => {
            // One B per closed-loop block, in (A_i, B_j) pair order.
            let mut bs = Vec::with_capacity(blocks);
            for _ in &syn.a_list {
                for b in &syn.b_list {
                    bs.push(b.clone());
                }
            }
            (Some(bs), Some(&syn.c * v.vertices()))
        }
        _ => (None, None),
    };
    let gain_len = match model {
        PlantModel::Synthesis(syn) => syn.gain_rows() * syn.gain_cols(),
        _ => 0,
    };

    // Variable layout: δV split, per-block δM split, δη, δK split.
    let u_plus = |e: usize| e;
    let u_minus = |e: usize| nm + e;
    let w_plus = |b: usize, e: usize| 2 * nm + b * 2 * m * m + e;
    let w_minus = |b: usize, e: usize| 2 * nm + b * 2 * m * m + m * m + e;
    let eta_var = 2 * nm + blocks * 2 * m * m;
    let z_plus = |e: usize| eta_var + 1 + e;
    let z_minus = |e: usize| eta_var + 1 + gain_len + e;
    let num_vars = eta_var + 1 + 2 * gain_len;

    let mut lp = GeneralLp::new(num_vars);
    lp.free[eta_var] = true;
    lp.objective[eta_var] = 1.0;

    for (b, a_cl) in closed.iter().enumerate() {
        let mb = &cert.m_list[b];
        // A_cl δV + B δK C V = δV M + V δM, entry (r, j).
        for j in 0..m {
            for r in 0..n {
                let mut coeffs = vec![0.0; num_vars];
                for s in 0..m {
                    // (δV M)[r,j] − (A_cl δV)[r,j] contributions of δV[r',s'].
                    let c_v = mb[(s, j)];
                    coeffs[u_plus(s * n + r)] -= c_v;
                    coeffs[u_minus(s * n + r)] += c_v;
                }
                for s in 0..n {
                    let c_a = a_cl[(r, s)];
                    coeffs[u_plus(j * n + s)] += c_a;
                    coeffs[u_minus(j * n + s)] -= c_a;
                }
                for s in 0..m {
                    let c_m = v.vertices()[(r, s)];
                    coeffs[w_plus(b, j * m + s)] -= c_m;
                    coeffs[w_minus(b, j * m + s)] += c_m;
                }
                if let (Some(bs), Some(cv)) = (&bk_mats, &cv) {
                    // (B δK C V)[r,j] = Σ_{a,u} B[r,a] δK[a,u] (CV)[u,j]
                    let bmat = &bs[b];
                    let q = bmat.ncols();
                    for u in 0..cv.nrows() {
                        for aa in 0..q {
                            let c_k = bmat[(r, aa)] * cv[(u, j)];
                            coeffs[z_plus(u * q + aa)] += c_k;
                            coeffs[z_minus(u * q + aa)] -= c_k;
                        }
                    }
                }
                lp.push_row(coeffs, Relation::Eq, 0.0);
            }
        }
        // Rate rows: 1ᵀδM_b = −δη 1ᵀ.
        for j in 0..m {
            let mut coeffs = vec![0.0; num_vars];
            for i in 0..m {
                coeffs[w_plus(b, j * m + i)] = 1.0;
                coeffs[w_minus(b, j * m + i)] = -1.0;
            }
            coeffs[eta_var] = 1.0;
            lp.push_row(coeffs, Relation::Eq, 0.0);
        }
        // Metzler margin; the bound is clamped so δM = 0 stays feasible
        // even when M carries a tolerance-level negative entry.
        for j in 0..m {
            for i in 0..m {
                if i != j {
                    let mut coeffs = vec![0.0; num_vars];
                    coeffs[w_plus(b, j * m + i)] = 1.0;
                    coeffs[w_minus(b, j * m + i)] = -1.0;
                    lp.push_row(coeffs, Relation::Ge, -mb[(i, j)].max(0.0));
                }
            }
        }
        // ‖δM_b‖₁ ≤ ε.
        let mut coeffs = vec![0.0; num_vars];
        for e in 0..m * m {
            coeffs[w_plus(b, e)] = 1.0;
            coeffs[w_minus(b, e)] = 1.0;
        }
        lp.push_row(coeffs, Relation::Le, eps);
    }
    // ‖δV‖₁ ≤ ε.
    let mut coeffs = vec![0.0; num_vars];
    for e in 0..nm {
        coeffs[u_plus(e)] = 1.0;
        coeffs[u_minus(e)] = 1.0;
    }
    lp.push_row(coeffs, Relation::Le, eps);
    if gain_len > 0 {
        let mut coeffs = vec![0.0; num_vars];
        for e in 0..gain_len {
            coeffs[z_plus(e)] = 1.0;
            coeffs[z_minus(e)] = 1.0;
        }
        lp.push_row(coeffs, Relation::Le, eps);
    }

    let sol = solve_with_inequalities(&lp)?;
    let delta_v = Matrix::from_fn(n, m, |r, j| {
        sol.x[u_plus(j * n + r)] - sol.x[u_minus(j * n + r)]
    });
    let delta_m = (0..blocks)
        .map(|b| {
            Matrix::from_fn(m, m, |i, j| {
                sol.x[w_plus(b, j * m + i)] - sol.x[w_minus(b, j * m + i)]
            })
        })
        .collect();
    let delta_gain = match model {
        PlantModel::Synthesis(syn) => {
            let q = syn.gain_rows();
            Some(Matrix::from_fn(q, syn.gain_cols(), |i, j| {
                sol.x[z_plus(j * q + i)] - sol.x[z_minus(j * q + i)]
            }))
        }
        _ => None,
    };
    Ok(FullStep {
        delta_v,
        delta_m,
        delta_eta: sol.x[eta_var],
        delta_gain,
    })
}

/// The fast step LP: maximize the rate derivative along `δV` subject to
/// `‖δV‖₁ ≤ ε` and the first-order Metzler margin on every basic
/// off-diagonal `M` entry. When the rate derivative vanishes (rate
/// variables outside the basis) the zero step is returned directly.
pub fn step_fast(
    cert: &ContractionCertificate,
    der: &GapDerivatives,
    eps: f64,
) -> Result<Matrix, SearchError> {
    let n = cert.v.dim();
    let m = cert.v.vertex_count();
    let nm = n * m;
    if der.d_eta.iter().all(|&g| g == 0.0) {
        return Ok(Matrix::zeros(n, m));
    }

    let mut lp = GeneralLp::new(2 * nm);
    for e in 0..nm {
        let g = der.d_eta[(e % n, e / n)];
        lp.objective[e] = g;
        lp.objective[nm + e] = -g;
    }
    let mut budget = vec![0.0; 2 * nm];
    budget.iter_mut().for_each(|c| *c = 1.0);
    lp.push_row(budget, Relation::Le, eps);
    for (b, entries) in der.d_m.iter().enumerate() {
        for ((i, j), grad) in entries {
            let mut coeffs = vec![0.0; 2 * nm];
            for e in 0..nm {
                let g = grad[(e % n, e / n)];
                coeffs[e] = g;
                coeffs[nm + e] = -g;
            }
            lp.push_row(coeffs, Relation::Ge, -cert.m_list[b][(*i, *j)].max(0.0));
        }
    }
    let sol = solve_with_inequalities(&lp)?;
    Ok(Matrix::from_fn(n, m, |r, j| {
        sol.x[j * n + r] - sol.x[nm + j * n + r]
    }))
}

fn solve_gap(
    v: &VPolytope,
    model: &PlantModel,
    kappa: f64,
) -> Option<(ContractionCertificate, BasicSolution, GapLayout)> {
    let (lp, layout) = gap_program(v, model, kappa);
    let sol = solve(&lp).ok()?;
    let cert = layout.extract(v, &sol);
    Some((cert, sol, layout))
}

enum AttemptOutcome {
    Certified(ContractionCertificate),
    MaxIter,
    Stalled,
}

fn run_attempt(
    model: &PlantModel,
    cfg: &SearchConfig,
    attempt_seed: u64,
    trace: &mut Vec<TraceEntry>,
) -> AttemptOutcome {
    let n = model.state_dim();
    let Ok(mut v) = random_init(n, cfg.vertex_count, attempt_seed) else {
        return AttemptOutcome::Stalled;
    };
    let eps_cap = cfg
        .epsilon0
        .unwrap_or_else(|| 0.05 * v.max_abs_entry())
        .max(f64::MIN_POSITIVE);
    let mut eps = eps_cap;
    let mut jitter_rng = ChaCha8Rng::seed_from_u64(attempt_seed ^ 0x9e37_79b9_7f4a_7c15);

    let Some((mut cert, mut sol, layout)) = solve_gap(&v, model, cfg.kappa) else {
        return AttemptOutcome::Stalled;
    };
    trace.push(TraceEntry {
        iteration: 0,
        eta: cert.eta,
        epsilon: eps,
        step_norm: 0.0,
        basis_changed: false,
    });

    for iteration in 1..=cfg.max_iter {
        debug_assert_eq!(v.vertex_count(), cfg.vertex_count);
        if cert.eta > cfg.eta_tol {
            let Ok(closed) = model.closed_loop(cert.gain.as_ref()) else {
                return AttemptOutcome::Stalled;
            };
            if verify_certificate(&cert, &closed) {
                return AttemptOutcome::Certified(cert);
            }
            return AttemptOutcome::Stalled;
        }

        let derivatives = match cfg.step_mode {
            StepMode::Fast => match gap_derivatives_model(&v, model, &sol, &layout) {
                Ok(d) => Some(d),
                Err(_) => {
                    // Degenerate basis: re-solve at a slightly perturbed
                    // polytope (deterministic jitter) and try again next
                    // iteration.
                    let scale = 1e-9 * v.max_abs_entry().max(1.0);
                    let jitter = Matrix::from_fn(n, cfg.vertex_count, |_, _| {
                        jitter_rng.random_range(-scale..scale)
                    });
                    let Ok(vj) = VPolytope::new(v.vertices() + &jitter) else {
                        return AttemptOutcome::Stalled;
                    };
                    if !vj.is_absorbing() {
                        return AttemptOutcome::Stalled;
                    }
                    let Some((cj, sj, _)) = solve_gap(&vj, model, cfg.kappa) else {
                        return AttemptOutcome::Stalled;
                    };
                    let basis_changed = sj.basis != sol.basis;
                    v = vj;
                    cert = cj;
                    sol = sj;
                    trace.push(TraceEntry {
                        iteration,
                        eta: cert.eta,
                        epsilon: eps,
                        step_norm: l1_norm(&jitter),
                        basis_changed,
                    });
                    continue;
                }
            },
            StepMode::Full => None,
        };

        let accepted;
        let mut shrinks = 0;
        loop {
            let delta_v = match cfg.step_mode {
                StepMode::Fast => step_fast(&cert, derivatives.as_ref().unwrap(), eps),
                StepMode::Full => step_full(&cert, model, eps).map(|s| s.delta_v),
            };
            let Ok(delta_v) = delta_v else {
                return AttemptOutcome::Stalled;
            };
            let step_norm = l1_norm(&delta_v);
            if step_norm <= 1e-14 {
                // Stationary non-contracting point.
                return AttemptOutcome::Stalled;
            }
            let trial = VPolytope::new(v.vertices() + &delta_v)
                .ok()
                .filter(|t| t.is_absorbing())
                .and_then(|t| solve_gap(&t, model, cfg.kappa).map(|r| (t, r)));
            if let Some((vt, (ct, st, _))) = trial {
                if ct.eta >= cert.eta - 1e-12 {
                    accepted = (vt, ct, st, step_norm);
                    break;
                }
            }
            shrinks += 1;
            if shrinks > 30 {
                return AttemptOutcome::Stalled;
            }
            eps *= cfg.eps_shrink;
        }
        let (vt, ct, st, step_norm) = accepted;
        let basis_changed = st.basis != sol.basis;
        v = vt;
        cert = ct;
        sol = st;
        eps = (eps * cfg.eps_grow).min(eps_cap);
        trace.push(TraceEntry {
            iteration,
            eta: cert.eta,
            epsilon: eps,
            step_norm,
            basis_changed,
        });
    }

    if cert.eta > cfg.eta_tol {
        if let Ok(closed) = model.closed_loop(cert.gain.as_ref()) {
            if verify_certificate(&cert, &closed) {
                return AttemptOutcome::Certified(cert);
            }
        }
    }
    AttemptOutcome::MaxIter
}

fn run_search(model: &PlantModel, cfg: &SearchConfig) -> Result<SearchReport, SearchError> {
    model.validate()?;
    cfg.validate(model.state_dim())?;
    let attempts = cfg.restarts.max(1);
    let mut last = (SearchStatus::Stalled, Vec::new(), 0);
    for attempt in 0..attempts {
        // Wide seed spacing keeps attempt streams disjoint from the
        // retry window inside random_init.
        let attempt_seed = cfg.seed.wrapping_add((attempt as u64) << 32);
        let mut trace = Vec::new();
        match run_attempt(model, cfg, attempt_seed, &mut trace) {
            AttemptOutcome::Certified(cert) => {
                return Ok(SearchReport {
                    status: SearchStatus::Certified,
                    certificate: Some(cert),
                    trace,
                    restart_index: attempt,
                    restarts_used: attempt + 1,
                });
            }
            AttemptOutcome::MaxIter => last = (SearchStatus::MaxIter, trace, attempt),
            AttemptOutcome::Stalled => last = (SearchStatus::Stalled, trace, attempt),
        }
    }
    Ok(SearchReport {
        status: last.0,
        certificate: None,
        trace: last.1,
        restart_index: last.2,
        restarts_used: attempts,
    })
}

/// Searches for a contracting polytope with `cfg.vertex_count` vertices
/// for a single plant or a hull of plants. Failure is a status, not an
/// error; errors only flag invalid inputs.
pub fn find_polyhedron(model: &PlantModel, cfg: &SearchConfig) -> Result<SearchReport, SearchError> {
    if matches!(model, PlantModel::Synthesis(_)) {
        return Err(SearchError::ExpectedAnalysisModel);
    }
    run_search(model, cfg)
}

/// Searches for a polytope and a static output-feedback gain certifying
/// the closed loop over all hull pairs; the certificate carries the gain.
pub fn synthesize(model: &PlantModel, cfg: &SearchConfig) -> Result<SearchReport, SearchError> {
    if !matches!(model, PlantModel::Synthesis(_)) {
        return Err(SearchError::ExpectedSynthesisModel);
    }
    run_search(model, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::contraction::{contraction_gap, sampled_decay_check};
    use crate::plants::SynthesisModel;

    fn cross_polytope() -> VPolytope {
        VPolytope::from_columns(2, &[1.0, 0.0, 0.0, 1.0, -1.0, 0.0, 0.0, -1.0]).unwrap()
    }

    fn rotation() -> Matrix {
        Matrix::from_row_slice(2, 2, &[0.0, 1.0, -1.0, 0.0])
    }

    pub(crate) fn assert_monotone(trace: &[TraceEntry]) {
        for pair in trace.windows(2) {
            assert!(
                pair[1].eta >= pair[0].eta - 1e-12,
                "trace rate decreased: {} -> {}",
                pair[0].eta,
                pair[1].eta
            );
        }
    }

    #[test]
    fn negated_identity_certifies_on_first_iteration() {
        let model = PlantModel::Single(-Matrix::identity(2, 2));
        for seed in 0..10 {
            let mut cfg = SearchConfig::new(4);
            cfg.seed = seed;
            cfg.max_iter = 50;
            cfg.restarts = 1;
            let report = find_polyhedron(&model, &cfg).unwrap();
            assert_eq!(report.status, SearchStatus::Certified, "seed {seed}");
            let cert = report.certificate.unwrap();
            assert!(cert.eta >= 1.0 - 1e-6, "η = {}", cert.eta);
            assert_eq!(report.trace.len(), 1, "should certify immediately");
            let closed = model.closed_loop(None).unwrap();
            assert!(verify_certificate(&cert, &closed));
            assert_monotone(&report.trace);
        }
    }

    #[test]
    fn rotation_never_certifies() {
        let model = PlantModel::Single(rotation());
        let mut cfg = SearchConfig::new(4);
        cfg.eta_tol = 0.0;
        cfg.max_iter = 15;
        cfg.restarts = 2;
        let report = find_polyhedron(&model, &cfg).unwrap();
        assert_ne!(report.status, SearchStatus::Certified);
        assert!(report.certificate.is_none());
        assert_monotone(&report.trace);
    }

    #[test]
    fn full_step_with_zero_budget_is_zero() {
        let v = cross_polytope();
        let model = PlantModel::Single(-Matrix::identity(2, 2));
        let cert = contraction_gap(&v, &[-Matrix::identity(2, 2)]).unwrap();
        let step = step_full(&cert, &model, 0.0).unwrap();
        assert_eq!(l1_norm(&step.delta_v), 0.0);
        assert_eq!(step.delta_eta, 0.0);
    }

    #[test]
    fn full_step_improvement_is_nonnegative() {
        let v = cross_polytope();
        let a = -Matrix::identity(2, 2);
        let cert = contraction_gap(&v, &[a.clone()]).unwrap();
        let step = step_full(&cert, &PlantModel::Single(a), 0.05).unwrap();
        assert!(step.delta_eta >= -1e-10, "δη = {}", step.delta_eta);
    }

    #[test]
    fn rotation_rate_has_zero_ceiling() {
        // The re-solved rate after any full step stays non-positive: no
        // polytope contracts under a marginally stable rotation.
        let v = cross_polytope();
        let rot = rotation();
        let model = PlantModel::Single(rot.clone());
        let cert = contraction_gap(&v, &[rot.clone()]).unwrap();
        let step = step_full(&cert, &model, 0.05).unwrap();
        assert!(step.delta_eta >= -1e-10);
        let moved = VPolytope::new(v.vertices() + &step.delta_v).unwrap();
        let re_solved = contraction_gap(&moved, &[rot]).unwrap();
        assert!(re_solved.eta <= 1e-6, "η after step = {}", re_solved.eta);
    }

    #[test]
    fn fast_step_with_zero_budget_is_zero() {
        let v = random_init(2, 4, 3).unwrap();
        let a = Matrix::from_row_slice(2, 2, &[-0.2, 1.0, -1.0, -0.2]);
        let model = PlantModel::Single(a.clone());
        let (lp, layout) = gap_program(&v, &model, 1e3);
        let sol = solve(&lp).unwrap();
        let cert = layout.extract(&v, &sol);
        let der = gap_derivatives_model(&v, &model, &sol, &layout).unwrap();
        let dv = step_fast(&cert, &der, 0.0).unwrap();
        assert_eq!(l1_norm(&dv), 0.0);
    }

    #[test]
    fn fast_step_zero_derivative_returns_zero_step() {
        let v = random_init(2, 4, 5).unwrap();
        let a = Matrix::zeros(2, 2);
        let model = PlantModel::Single(a.clone());
        let (lp, layout) = gap_program(&v, &model, 1e3);
        let sol = solve(&lp).unwrap();
        let cert = layout.extract(&v, &sol);
        let der = gap_derivatives_model(&v, &model, &sol, &layout).unwrap();
        if der.d_eta.iter().all(|&g| g == 0.0) {
            let dv = step_fast(&cert, &der, 0.1).unwrap();
            assert_eq!(l1_norm(&dv), 0.0);
        }
    }

    #[test]
    fn fast_step_prediction_is_achieved_for_small_radius() {
        let mut found = false;
        for seed in [11_u64, 12, 13] {
            let v = random_init(2, 4, seed).unwrap();
            let a = Matrix::from_row_slice(2, 2, &[0.1, 1.0, -1.0, -0.4]);
            let model = PlantModel::Single(a.clone());
            let (lp, layout) = gap_program(&v, &model, 1e3);
            let sol = solve(&lp).unwrap();
            let cert = layout.extract(&v, &sol);
            if cert.eta > 0.0 {
                continue;
            }
            let der = gap_derivatives_model(&v, &model, &sol, &layout).unwrap();
            let mut eps = 0.05;
            for _ in 0..25 {
                let dv = step_fast(&cert, &der, eps).unwrap();
                let predicted = der.eta_directional(&dv);
                if predicted <= 1e-12 {
                    break;
                }
                let moved = VPolytope::new(v.vertices() + &dv).unwrap();
                if moved.is_absorbing() {
                    let actual = contraction_gap(&moved, &[a.clone()]).unwrap().eta - cert.eta;
                    if actual >= 0.5 * predicted {
                        found = true;
                        break;
                    }
                }
                eps *= 0.5;
            }
            if found {
                break;
            }
        }
        assert!(found, "no instance achieved half the predicted improvement");
    }

    #[test]
    fn random_stable_plants_certify_in_both_modes() {
        for seed in 0..3_u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(1000 + seed);
            let mut a = Matrix::from_fn(2, 2, |_, _| rng.random_range(-1.0..1.0));
            a[(0, 0)] -= 2.0;
            a[(1, 1)] -= 2.0;
            let model = PlantModel::Single(a.clone());
            for mode in [StepMode::Fast, StepMode::Full] {
                let mut cfg = SearchConfig::new(5);
                cfg.seed = seed;
                cfg.max_iter = 60;
                cfg.restarts = 3;
                cfg.step_mode = mode;
                let report = find_polyhedron(&model, &cfg).unwrap();
                assert_eq!(
                    report.status,
                    SearchStatus::Certified,
                    "seed {seed} mode {mode:?}"
                );
                assert_monotone(&report.trace);
                let cert = report.certificate.unwrap();
                assert!(verify_certificate(&cert, &[a.clone()]));
                assert!(sampled_decay_check(&cert, &[a.clone()], 200, 42));
                assert_eq!(cert.v.vertex_count(), 5);
            }
        }
    }

    #[test]
    fn hull_of_one_equals_single_plant_path() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 0.5, -0.5, -1.0]);
        let mut cfg = SearchConfig::new(4);
        cfg.max_iter = 40;
        cfg.restarts = 2;
        let r1 = find_polyhedron(&PlantModel::Single(a.clone()), &cfg).unwrap();
        let r2 = find_polyhedron(&PlantModel::Hull(vec![a]), &cfg).unwrap();
        assert_eq!(r1.status, r2.status);
        let (c1, c2) = (r1.certificate.unwrap(), r2.certificate.unwrap());
        assert_eq!(c1.eta.to_bits(), c2.eta.to_bits());
        assert_eq!(c1.v.vertices(), c2.v.vertices());
        assert_eq!(c1.m_list[0], c2.m_list[0]);
    }

    #[test]
    fn synthesize_with_zero_input_matches_analysis() {
        let a = Matrix::from_row_slice(2, 2, &[-1.0, 0.4, -0.4, -1.2]);
        let syn = PlantModel::Synthesis(SynthesisModel {
            a_list: vec![a.clone()],
            b_list: vec![Matrix::zeros(2, 1)],
            c: Matrix::identity(2, 2),
        });
        let mut cfg = SearchConfig::new(4);
        cfg.max_iter = 40;
        cfg.restarts = 3;
        let syn_report = synthesize(&syn, &cfg).unwrap();
        assert_eq!(syn_report.status, SearchStatus::Certified);
        let cert = syn_report.certificate.unwrap();
        assert!(cert.gain.is_some());
        let closed = syn.closed_loop(cert.gain.as_ref()).unwrap();
        assert!(verify_certificate(&cert, &closed));

        let analysis = find_polyhedron(&PlantModel::Single(a), &cfg).unwrap();
        assert_eq!(analysis.status, SearchStatus::Certified);
    }

    #[test]
    fn model_variant_guards() {
        let cfg = SearchConfig::new(4);
        let syn = PlantModel::Synthesis(SynthesisModel {
            a_list: vec![Matrix::identity(2, 2)],
            b_list: vec![Matrix::zeros(2, 1)],
            c: Matrix::identity(2, 2),
        });
        assert!(matches!(
            find_polyhedron(&syn, &cfg),
            Err(SearchError::ExpectedAnalysisModel)
        ));
        let single = PlantModel::Single(Matrix::identity(2, 2));
        assert!(matches!(
            synthesize(&single, &cfg),
            Err(SearchError::ExpectedSynthesisModel)
        ));
    }

    #[test]
    fn config_validation() {
        let model = PlantModel::Single(-Matrix::identity(2, 2));
        let mut cfg = SearchConfig::new(2);
        assert!(matches!(
            find_polyhedron(&model, &cfg),
            Err(SearchError::BadConfig(_))
        ));
        cfg = SearchConfig::new(4);
        cfg.epsilon0 = Some(0.0);
        assert!(matches!(
            find_polyhedron(&model, &cfg),
            Err(SearchError::BadConfig(_))
        ));
    }
}
