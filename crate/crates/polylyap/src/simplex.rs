//! Standard-form LP solver returning an optimal basic feasible solution
//! together with its basis.
//!
//! The solver is a dense two-phase simplex on the full tableau. Dantzig's
//! rule is used for speed until `10·l` pivots, after which Bland's rule
//! takes over to guarantee termination. Rows are equilibrated (scaled to
//! unit max coefficient) before solving; this does not change the
//! solution, the basis, or any derivative computed from the basis.
//!
//! Redundant equality rows are handled at the end of phase 1: artificial
//! variables that remain basic at zero are pivoted out where possible, and
//! rows whose artificials cannot be pivoted out are dropped (and reported),
//! so the returned basis is always square and nonsingular on the retained
//! rows.

use crate::numerics::{ensure_finite, Matrix, Vector};
use thiserror::Error;

/// Feasibility tolerance on `x̂ ≥ 0`.
pub const FEASIBILITY_TOL: f64 = 1e-9;
/// Optimality tolerance on reduced costs.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Minimum magnitude accepted for a ratio-test pivot element.
const PIVOT_TOL: f64 = 1e-9;
/// Phase-1 infeasibility threshold on the artificial-variable sum.
const PHASE1_TOL: f64 = 1e-7;

/// `max ĉᵀx̂  s.t.  Âx̂ = b̂, x̂ ≥ 0` with `Â` of size k×l.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardFormLP {
    pub a_hat: Matrix,
    pub b_hat: Vector,
    pub c_hat: Vector,
}

impl StandardFormLP {
    pub fn new(a_hat: Matrix, b_hat: Vector, c_hat: Vector) -> Self {
        assert_eq!(a_hat.nrows(), b_hat.len(), "row count mismatch");
        assert_eq!(a_hat.ncols(), c_hat.len(), "column count mismatch");
        debug_assert!(ensure_finite(&a_hat).is_ok());
        StandardFormLP {
            a_hat,
            b_hat,
            c_hat,
        }
    }

    pub fn num_rows(&self) -> usize {
        self.a_hat.nrows()
    }

    pub fn num_cols(&self) -> usize {
        self.a_hat.ncols()
    }
}

/// An optimal basic feasible solution.
///
/// `basis` is the ordered (ascending) set of basic column indices,
/// 0-based, with one entry per *retained* row. `dropped_rows` lists the
/// original row indices removed as linearly redundant; `x` still
/// satisfies those rows because phase 1 proved them consistent.
#[derive(Debug, Clone)]
pub struct BasicSolution {
    pub x: Vector,
    pub basis: Vec<usize>,
    pub objective: f64,
    pub dropped_rows: Vec<usize>,
}

impl BasicSolution {
    /// Original row indices kept in the basis system, ascending.
    pub fn retained_rows(&self, total_rows: usize) -> Vec<usize> {
        (0..total_rows)
            .filter(|r| !self.dropped_rows.contains(r))
            .collect()
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum SimplexError {
    #[error("LP is infeasible (phase-1 optimum positive)")]
    Infeasible,
    #[error("LP is unbounded (entering column has no blocking ratio)")]
    Unbounded,
    #[error("pivot limit exceeded (cycling guard failed)")]
    PivotLimit,
}

struct Tableau {
    /// Row-major, width = total_cols + 1; last column is the rhs.
    data: Vec<f64>,
    width: usize,
    rows: usize,
    total_cols: usize,
    /// Basic variable of each tableau row.
    basic: Vec<usize>,
    /// Original constraint index of each tableau row.
    orig_row: Vec<usize>,
    /// Reduced-cost row, width entries (rhs slot unused).
    cost: Vec<f64>,
    pivots: usize,
    pivot_limit: usize,
    bland_after: usize,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.data[r * self.width + self.total_cols]
    }

    fn pivot(&mut self, pr: usize, pc: usize) -> Result<(), SimplexError> {
        self.pivots += 1;
        if self.pivots > self.pivot_limit {
            return Err(SimplexError::PivotLimit);
        }
        let w = self.width;
        let piv = self.data[pr * w + pc];
        let inv = 1.0 / piv;
        for j in 0..w {
            self.data[pr * w + j] *= inv;
        }
        self.data[pr * w + pc] = 1.0;
        for r in 0..self.rows {
            if r == pr {
                continue;
            }
            let factor = self.data[r * w + pc];
            if factor == 0.0 {
                continue;
            }
            for j in 0..w {
                self.data[r * w + j] -= factor * self.data[pr * w + j];
            }
            self.data[r * w + pc] = 0.0;
        }
        let factor = self.cost[pc];
        if factor != 0.0 {
            for j in 0..w {
                self.cost[j] -= factor * self.data[pr * w + j];
            }
            self.cost[pc] = 0.0;
        }
        self.basic[pr] = pc;
        Ok(())
    }

    /// Entering column among `0..limit`, or None when optimal.
    fn entering(&self, limit: usize) -> Option<usize> {
        if self.pivots >= self.bland_after {
            // Bland: smallest improving index.
            (0..limit).find(|&j| self.cost[j] > OPTIMALITY_TOL)
        } else {
            // Dantzig: most positive reduced cost, ties to smallest index.
            let mut best: Option<(usize, f64)> = None;
            for j in 0..limit {
                let rc = self.cost[j];
                if rc > OPTIMALITY_TOL && best.map_or(true, |(_, b)| rc > b) {
                    best = Some((j, rc));
                }
            }
            best.map(|(j, _)| j)
        }
    }

    /// Ratio test: leaving row for entering column `pc`, ties broken by
    /// smallest basic variable index (Bland-compatible, deterministic).
    fn leaving(&self, pc: usize) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let coeff = self.at(r, pc);
            if coeff > PIVOT_TOL {
                let ratio = self.rhs(r).max(0.0) / coeff;
                let better = match best {
                    None => true,
                    Some((br, bratio)) => {
                        ratio < bratio - 1e-12
                            || (ratio < bratio + 1e-12 && self.basic[r] < self.basic[br])
                    }
                };
                if better {
                    best = Some((r, ratio));
                }
            }
        }
        best.map(|(r, _)| r)
    }

    fn iterate(&mut self, limit: usize) -> Result<(), SimplexError> {
        while let Some(pc) = self.entering(limit) {
            let pr = self.leaving(pc).ok_or(SimplexError::Unbounded)?;
            self.pivot(pr, pc)?;
        }
        Ok(())
    }

    /// Rebuilds the reduced-cost row for objective `c` over all columns.
    fn load_costs(&mut self, c: &[f64]) {
        self.cost[..c.len()].copy_from_slice(c);
        for j in c.len()..self.width {
            self.cost[j] = 0.0;
        }
        for r in 0..self.rows {
            let cb = if self.basic[r] < c.len() {
                c[self.basic[r]]
            } else {
                0.0
            };
            if cb != 0.0 {
                for j in 0..self.width {
                    self.cost[j] -= cb * self.data[r * self.width + j];
                }
            }
        }
        // Basic columns have zero reduced cost by construction.
        for r in 0..self.rows {
            self.cost[self.basic[r]] = 0.0;
        }
    }

    fn drop_row(&mut self, r: usize) {
        let w = self.width;
        self.data.drain(r * w..(r + 1) * w);
        self.basic.remove(r);
        self.orig_row.remove(r);
        self.rows -= 1;
    }
}

/// Solves the LP, returning an optimal BFS.
pub fn solve(lp: &StandardFormLP) -> Result<BasicSolution, SimplexError> {
    let k = lp.num_rows();
    let l = lp.num_cols();
    assert!(k >= 1, "LP must have at least one constraint row");

    let total = l + k;
    let width = total + 1;
    let mut t = Tableau {
        data: vec![0.0; k * width],
        width,
        rows: k,
        total_cols: total,
        basic: (l..l + k).collect(),
        orig_row: (0..k).collect(),
        cost: vec![0.0; width],
        pivots: 0,
        pivot_limit: 50 * l.max(1),
        bland_after: 10 * l.max(1),
    };

    // Row equilibration + sign flip for b ≥ 0; artificial identity block.
    for r in 0..k {
        let mut scale = 0.0_f64;
        for j in 0..l {
            scale = scale.max(lp.a_hat[(r, j)].abs());
        }
        if scale == 0.0 {
            scale = 1.0;
        }
        let flip = if lp.b_hat[r] < 0.0 { -1.0 } else { 1.0 };
        let factor = flip / scale;
        for j in 0..l {
            t.data[r * width + j] = lp.a_hat[(r, j)] * factor;
        }
        t.data[r * width + total] = lp.b_hat[r] * factor;
        t.data[r * width + l + r] = 1.0;
    }

    // Phase 1: maximize minus the sum of artificials.
    let mut phase1_cost = vec![0.0; total];
    for j in l..total {
        phase1_cost[j] = -1.0;
    }
    t.load_costs(&phase1_cost);
    t.iterate(total)?;

    let artificial_sum: f64 = (0..t.rows)
        .filter(|&r| t.basic[r] >= l)
        .map(|r| t.rhs(r).max(0.0))
        .sum();
    if artificial_sum > PHASE1_TOL {
        return Err(SimplexError::Infeasible);
    }

    // Drive artificials out of the basis; drop rows where impossible.
    let mut dropped_rows = Vec::new();
    let mut r = 0;
    while r < t.rows {
        if t.basic[r] >= l {
            let mut pivot_col = None;
            for j in 0..l {
                if t.at(r, j).abs() > 1e-7 {
                    pivot_col = Some(j);
                    break;
                }
            }
            match pivot_col {
                Some(j) => {
                    t.pivot(r, j)?;
                    r += 1;
                }
                None => {
                    dropped_rows.push(t.orig_row[r]);
                    t.drop_row(r);
                }
            }
        } else {
            r += 1;
        }
    }

    // Phase 2 with the original objective, artificial columns excluded.
    let mut phase2_cost = vec![0.0; total];
    for j in 0..l {
        phase2_cost[j] = lp.c_hat[j];
    }
    t.load_costs(&phase2_cost);
    t.iterate(l)?;

    let mut x = Vector::zeros(l);
    for r in 0..t.rows {
        x[t.basic[r]] = t.rhs(r);
    }
    let mut basis = t.basic.clone();
    basis.sort_unstable();
    let objective = lp.c_hat.dot(&x);
    Ok(BasicSolution {
        x,
        basis,
        objective,
        dropped_rows,
    })
}

/// Relation of a general inequality/equality row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

/// A maximization problem with free or non-negative variables and
/// mixed-relation rows; converted to standard form via slack variables
/// and ± splits of the free variables.
#[derive(Debug, Clone)]
pub struct GeneralLp {
    pub objective: Vec<f64>,
    /// `free[j]` marks variable `j` as sign-unconstrained; otherwise
    /// `x_j ≥ 0`.
    pub free: Vec<bool>,
    pub rows: Vec<(Vec<f64>, Relation, f64)>,
}

impl GeneralLp {
    pub fn new(num_vars: usize) -> Self {
        GeneralLp {
            objective: vec![0.0; num_vars],
            free: vec![false; num_vars],
            rows: Vec::new(),
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn push_row(&mut self, coeffs: Vec<f64>, rel: Relation, rhs: f64) {
        assert_eq!(coeffs.len(), self.num_vars());
        self.rows.push((coeffs, rel, rhs));
    }
}

/// Solution of a [`GeneralLp`], mapped back to the original variables.
#[derive(Debug, Clone)]
pub struct GeneralSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// The underlying standard-form BFS.
    pub standard: BasicSolution,
}

/// Solves a mixed equality/inequality/free-variable problem by reduction
/// to standard form.
pub fn solve_with_inequalities(lp: &GeneralLp) -> Result<GeneralSolution, SimplexError> {
    let n = lp.num_vars();
    let k = lp.rows.len();

    // Column layout: each variable gets one column, or a (plus, minus)
    // pair when free; one slack column per inequality row.
    let mut col_of = Vec::with_capacity(n);
    let mut l = 0;
    for &f in &lp.free {
        if f {
            col_of.push((l, Some(l + 1)));
            l += 2;
        } else {
            col_of.push((l, None));
            l += 1;
        }
    }
    let num_slacks = lp
        .rows
        .iter()
        .filter(|(_, rel, _)| *rel != Relation::Eq)
        .count();
    let total = l + num_slacks;

    let mut a = Matrix::zeros(k, total);
    let mut b = Vector::zeros(k);
    let mut c = Vector::zeros(total);
    for (v, &(plus, minus)) in col_of.iter().enumerate() {
        c[plus] = lp.objective[v];
        if let Some(m) = minus {
            c[m] = -lp.objective[v];
        }
    }
    let mut slack = l;
    for (r, (coeffs, rel, rhs)) in lp.rows.iter().enumerate() {
        for (v, &cf) in coeffs.iter().enumerate() {
            if cf == 0.0 {
                continue;
            }
            let (plus, minus) = col_of[v];
            a[(r, plus)] = cf;
            if let Some(m) = minus {
                a[(r, m)] = -cf;
            }
        }
        b[r] = *rhs;
        match rel {
            Relation::Le => {
                a[(r, slack)] = 1.0;
                slack += 1;
            }
            Relation::Ge => {
                a[(r, slack)] = -1.0;
                slack += 1;
            }
            Relation::Eq => {}
        }
    }

    let standard = solve(&StandardFormLP::new(a, b, c))?;
    let mut x = vec![0.0; n];
    for (v, &(plus, minus)) in col_of.iter().enumerate() {
        x[v] = standard.x[plus] - minus.map_or(0.0, |m| standard.x[m]);
    }
    let objective = standard.objective;
    Ok(GeneralSolution {
        x,
        objective,
        standard,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lp(a: &[&[f64]], b: &[f64], c: &[f64]) -> StandardFormLP {
        let rows = a.len();
        let cols = a[0].len();
        let flat: Vec<f64> = a.iter().flat_map(|r| r.iter().copied()).collect();
        StandardFormLP::new(
            Matrix::from_row_slice(rows, cols, &flat),
            Vector::from_column_slice(b),
            Vector::from_column_slice(c),
        )
    }

    fn assert_valid_bfs(lp: &StandardFormLP, sol: &BasicSolution) {
        if let Err(msg) = oracle::check_bfs_conditions(lp, sol) {
            panic!("BFS conditions violated: {msg}");
        }
    }

    #[test]
    fn one_pivot_problem() {
        let p = lp(&[&[1.0, 1.0]], &[1.0], &[1.0, 0.0]);
        let sol = solve(&p).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
        assert_eq!(sol.basis, vec![0]);
        assert!((sol.x[0] - 1.0).abs() < 1e-12 && sol.x[1].abs() < 1e-12);
        assert_valid_bfs(&p, &sol);
    }

    #[test]
    fn infeasible_detected() {
        // max 0 s.t. x1 = −1, x ≥ 0.
        let p = lp(&[&[1.0]], &[-1.0], &[0.0]);
        assert!(matches!(solve(&p), Err(SimplexError::Infeasible)));
    }

    #[test]
    fn unbounded_detected() {
        // max x1 s.t. x1 − x2 = 1: x2 can grow without bound.
        let p = lp(&[&[1.0, -1.0]], &[1.0], &[1.0, 0.0]);
        assert!(matches!(solve(&p), Err(SimplexError::Unbounded)));
    }

    #[test]
    fn redundant_rows_are_dropped() {
        let p = lp(
            &[&[1.0, 1.0], &[2.0, 2.0]],
            &[1.0, 2.0],
            &[1.0, 0.0],
        );
        let sol = solve(&p).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-9);
        assert_eq!(sol.dropped_rows.len(), 1);
        assert_eq!(sol.basis.len(), 1);
        assert_valid_bfs(&p, &sol);
    }

    #[test]
    fn determinism_same_bytes_same_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..10 {
            let p = oracle::random_bounded_lp(&mut rng, 3, 6);
            let s1 = solve(&p).unwrap();
            let s2 = solve(&p).unwrap();
            assert_eq!(s1.basis, s2.basis);
            assert_eq!(s1.x, s2.x);
        }
    }

    #[test]
    fn matches_enumeration_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..30 {
            let p = oracle::random_bounded_lp(&mut rng, 3, 6);
            let sol = solve(&p).unwrap();
            let (best, _) = oracle::enumerate_basic_optimum(&p).expect("oracle found no vertex");
            assert!(
                (sol.objective - best).abs() <= 1e-7 * (1.0 + best.abs()),
                "simplex {} vs oracle {}",
                sol.objective,
                best
            );
            assert_valid_bfs(&p, &sol);
        }
    }

    #[test]
    fn free_variable_lower_bound() {
        // max −y s.t. y ≥ 3, y free → y = 3.
        let mut g = GeneralLp::new(1);
        g.objective[0] = -1.0;
        g.free[0] = true;
        g.push_row(vec![1.0], Relation::Ge, 3.0);
        let sol = solve_with_inequalities(&g).unwrap();
        assert!((sol.x[0] - 3.0).abs() < 1e-9);
        assert!((sol.objective + 3.0).abs() < 1e-9);
    }

    #[test]
    fn upper_bounded_variable() {
        // max x s.t. x ≤ 5, x ≥ 0 → 5 with zero slack.
        let mut g = GeneralLp::new(1);
        g.objective[0] = 1.0;
        g.push_row(vec![1.0], Relation::Le, 5.0);
        let sol = solve_with_inequalities(&g).unwrap();
        assert!((sol.x[0] - 5.0).abs() < 1e-9);
    }

    #[test]
    fn general_solution_satisfies_original_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let mut g = GeneralLp::new(3);
            for v in 0..3 {
                g.objective[v] = rng.random_range(-1.0..1.0);
                g.free[v] = rng.random_bool(0.5);
            }
            // Box rows keep it bounded and feasible.
            for v in 0..3 {
                let mut row = vec![0.0; 3];
                row[v] = 1.0;
                g.push_row(row.clone(), Relation::Le, 2.0);
                g.push_row(row, Relation::Ge, -2.0);
            }
            let coeffs: Vec<f64> = (0..3).map(|_| rng.random_range(-1.0..1.0)).collect();
            g.push_row(coeffs, Relation::Le, 1.0);
            let sol = solve_with_inequalities(&g).unwrap();
            for (coeffs, rel, rhs) in &g.rows {
                let lhs: f64 = coeffs.iter().zip(&sol.x).map(|(c, x)| c * x).sum();
                match rel {
                    Relation::Le => assert!(lhs <= rhs + 1e-8),
                    Relation::Ge => assert!(lhs >= rhs - 1e-8),
                    Relation::Eq => assert!((lhs - rhs).abs() <= 1e-8),
                }
            }
        }
    }

    #[test]
    fn weak_duality_on_constructed_dual_point() {
        // max cᵀx s.t. Ax = b, x ≥ 0: any y with Aᵀy ≥ c gives bᵀy ≥ optimum.
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..10 {
            let p = oracle::random_bounded_lp(&mut rng, 3, 6);
            let sol = solve(&p).unwrap();
            // Build a dual-feasible y by solving for the basis rows and
            // lifting: y = B̂⁻ᵀ c_B is dual feasible at optimality.
            let rows = sol.retained_rows(p.num_rows());
            let kk = sol.basis.len();
            let mut bt = Matrix::zeros(kk, kk);
            for (ci, &c) in sol.basis.iter().enumerate() {
                for (ri, &r) in rows.iter().enumerate() {
                    bt[(ci, ri)] = p.a_hat[(r, c)];
                }
            }
            let cb = Vector::from_iterator(kk, sol.basis.iter().map(|&j| p.c_hat[j]));
            let y = match crate::numerics::lu_solve(&bt, &cb) {
                Ok(y) => y,
                Err(_) => continue,
            };
            // Check dual feasibility before using the bound.
            let mut feasible = true;
            for j in 0..p.num_cols() {
                let aj: f64 = rows
                    .iter()
                    .enumerate()
                    .map(|(ri, &r)| p.a_hat[(r, j)] * y[ri])
                    .sum();
                if aj < p.c_hat[j] - 1e-7 {
                    feasible = false;
                    break;
                }
            }
            if feasible {
                let bound: f64 = rows
                    .iter()
                    .enumerate()
                    .map(|(ri, &r)| p.b_hat[r] * y[ri])
                    .sum();
                assert!(sol.objective <= bound + 1e-7);
            }
        }
    }
}
