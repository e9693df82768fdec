//! Brute-force reference routines used to cross-check the solvers in
//! tests. Everything here is exponential in the problem size and must
//! stay independent of the simplex pivoting path: candidate bases are
//! enumerated exhaustively and resolved by LU factorization alone.

use crate::numerics::{lu_solve, Matrix, Vector};
use crate::simplex::{StandardFormLP, FEASIBILITY_TOL};
use rand::Rng;

/// Visits all `size`-subsets of `0..n` in lexicographic order.
fn for_each_combination(n: usize, size: usize, mut f: impl FnMut(&[usize])) {
    if size > n {
        return;
    }
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        f(&idx);
        // Advance to the next combination.
        let mut i = size;
        loop {
            if i == 0 {
                return;
            }
            i -= 1;
            if idx[i] != i + n - size {
                break;
            }
            if i == 0 {
                return;
            }
        }
        idx[i] += 1;
        for j in i + 1..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Exhaustive vertex enumeration: tries every nonsingular k-subset of
/// columns as a basis, keeps feasible ones, and returns the best
/// objective with its basis. `None` when no feasible basis exists.
pub fn enumerate_basic_optimum(lp: &StandardFormLP) -> Option<(f64, Vec<usize>)> {
    let k = lp.num_rows();
    let l = lp.num_cols();
    let mut best: Option<(f64, Vec<usize>)> = None;
    for_each_combination(l, k, |cols| {
        let mut bmat = Matrix::zeros(k, k);
        for (ci, &c) in cols.iter().enumerate() {
            for r in 0..k {
                bmat[(r, ci)] = lp.a_hat[(r, c)];
            }
        }
        let xb = match lu_solve(&bmat, &lp.b_hat) {
            Ok(x) => x,
            Err(_) => return,
        };
        if xb.iter().any(|&v| v < -FEASIBILITY_TOL) {
            return;
        }
        let obj: f64 = cols.iter().zip(xb.iter()).map(|(&c, &v)| lp.c_hat[c] * v).sum();
        if best.as_ref().map_or(true, |(b, _)| obj > *b) {
            best = Some((obj, cols.to_vec()));
        }
    });
    best
}

/// Checks the four defining conditions of a basic feasible solution:
/// feasibility of the equalities and sign constraints, basis size equal
/// to the retained row count, zero non-basic variables, and a
/// nonsingular basis matrix (via LU success).
pub fn check_bfs_conditions(
    lp: &StandardFormLP,
    sol: &crate::simplex::BasicSolution,
) -> Result<(), String> {
    let resid = (&lp.a_hat * &sol.x - &lp.b_hat).amax();
    if resid > 1e-8 * (1.0 + lp.b_hat.amax()) {
        return Err(format!("equality residual {resid}"));
    }
    if sol.x.min() < -FEASIBILITY_TOL {
        return Err(format!("negative variable {}", sol.x.min()));
    }
    let retained = sol.retained_rows(lp.num_rows());
    if sol.basis.len() != retained.len() {
        return Err(format!(
            "basis size {} != retained rows {}",
            sol.basis.len(),
            retained.len()
        ));
    }
    for (i, xi) in sol.x.iter().enumerate() {
        if *xi != 0.0 && !sol.basis.contains(&i) {
            return Err(format!("nonbasic variable {i} has value {xi}"));
        }
    }
    let kk = sol.basis.len();
    let mut bmat = Matrix::zeros(kk, kk);
    for (ri, &r) in retained.iter().enumerate() {
        for (ci, &c) in sol.basis.iter().enumerate() {
            bmat[(ri, ci)] = lp.a_hat[(r, c)];
        }
    }
    lu_solve(&bmat, &Vector::zeros(kk))
        .map(|_| ())
        .map_err(|e| format!("basis matrix singular: {e}"))
}

/// Random standard-form LP with a bounded, nonempty feasible set: the
/// first row is `1ᵀx = 1ᵀx₀` for a random interior point `x₀ ≥ 0`, which
/// caps every coordinate; the remaining rows are random and consistent
/// with `x₀` by construction.
pub fn random_bounded_lp(rng: &mut impl Rng, k: usize, l: usize) -> StandardFormLP {
    assert!(k >= 1 && l >= k);
    let x0 = Vector::from_fn(l, |_, _| rng.random_range(0.1..1.0));
    let mut a = Matrix::from_fn(k, l, |_, _| rng.random_range(-1.0..1.0));
    for j in 0..l {
        a[(0, j)] = 1.0;
    }
    let b = &a * &x0;
    let c = Vector::from_fn(l, |_, _| rng.random_range(-1.0..1.0));
    StandardFormLP::new(a, b, c)
}
