//! Small-scale geometry for plot output: angular ordering of planar
//! vertex sets and gift-wrapping facet enumeration for 3-D ones.

use crate::numerics::{max_abs, Matrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum HullError {
    #[error("gift wrapping expects at most {limit} vertices (got {got})")]
    TooManyVertices { limit: usize, got: usize },
    #[error("points are degenerate (collinear or coplanar); no 3-D hull exists")]
    Degenerate,
}

/// Vertex indices ordered counter-clockwise by angle in `[0, 2π)`,
/// starting from the smallest angle. Expects a `2 × m` matrix.
pub fn angular_order(v: &Matrix) -> Vec<usize> {
    assert_eq!(v.nrows(), 2, "angular_order expects planar points");
    let mut idx: Vec<usize> = (0..v.ncols()).collect();
    let angle = |j: usize| -> f64 {
        let a = v[(1, j)].atan2(v[(0, j)]);
        if a < 0.0 {
            a + 2.0 * std::f64::consts::PI
        } else {
            a
        }
    };
    idx.sort_by(|&a, &b| angle(a).partial_cmp(&angle(b)).unwrap().then(a.cmp(&b)));
    idx
}

const GIFT_WRAP_LIMIT: usize = 16;

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Outward normal of the triangle if every point lies on its non-positive
/// side (within `tol`); `None` when the triangle does not support the set.
fn supporting_normal(pts: &[[f64; 3]], t: [usize; 3], tol: f64) -> Option<[f64; 3]> {
    let n = cross(sub(pts[t[1]], pts[t[0]]), sub(pts[t[2]], pts[t[0]]));
    let len = dot(n, n).sqrt();
    if len < tol {
        return None;
    }
    let mut lo = 0.0_f64;
    let mut hi = 0.0_f64;
    for (i, p) in pts.iter().enumerate() {
        if t.contains(&i) {
            continue;
        }
        let side = dot(n, sub(*p, pts[t[0]])) / len;
        lo = lo.min(side);
        hi = hi.max(side);
    }
    if hi <= tol {
        Some(n)
    } else if lo >= -tol {
        Some([-n[0], -n[1], -n[2]])
    } else {
        None
    }
}

/// Hull facets of a `3 × m` vertex matrix as index triples, found by
/// gift wrapping: an initial supporting triangle is located by scanning
/// triples, then the hull is traversed by pivoting around the boundary
/// edges of known facets. Faces with more than three coplanar vertices
/// come out triangulated. Deterministic for a fixed input.
pub fn gift_wrap_facets(v: &Matrix) -> Result<Vec<[usize; 3]>, HullError> {
    assert_eq!(v.nrows(), 3, "gift_wrap_facets expects 3-D points");
    let m = v.ncols();
    if m > GIFT_WRAP_LIMIT {
        return Err(HullError::TooManyVertices {
            limit: GIFT_WRAP_LIMIT,
            got: m,
        });
    }
    if m < 4 {
        return Err(HullError::Degenerate);
    }
    let pts: Vec<[f64; 3]> = (0..m).map(|j| [v[(0, j)], v[(1, j)], v[(2, j)]]).collect();
    let tol = 1e-9 * max_abs(v).max(1.0);

    // Full-dimensionality: some point must sit strictly off the plane of
    // a non-collinear triple, otherwise the set is flat.
    let mut full_dimensional = false;
    'flat: for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                let n = cross(sub(pts[j], pts[i]), sub(pts[k], pts[i]));
                if dot(n, n).sqrt() < tol {
                    continue;
                }
                let len = dot(n, n).sqrt();
                if pts
                    .iter()
                    .any(|p| dot(n, sub(*p, pts[i])).abs() / len > tol)
                {
                    full_dimensional = true;
                }
                break 'flat;
            }
        }
    }
    if !full_dimensional {
        return Err(HullError::Degenerate);
    }

    // Initial facet: first supporting triangle in lexicographic order.
    let mut first: Option<[usize; 3]> = None;
    'outer: for i in 0..m {
        for j in i + 1..m {
            for k in j + 1..m {
                if supporting_normal(&pts, [i, j, k], tol).is_some() {
                    first = Some([i, j, k]);
                    break 'outer;
                }
            }
        }
    }
    let first = first.ok_or(HullError::Degenerate)?;

    let canonical = |mut t: [usize; 3]| {
        t.sort_unstable();
        t
    };
    let mut facets: Vec<[usize; 3]> = vec![canonical(first)];
    let mut queue: Vec<(usize, usize)> =
        vec![(first[0], first[1]), (first[1], first[2]), (first[0], first[2])];
    let mut guard = 0;
    while let Some((a, b)) = queue.pop() {
        guard += 1;
        if guard > 4 * m * m {
            break;
        }
        // Each undirected edge borders at most two facets; once both are
        // known it needs no further pivoting.
        let borders = facets
            .iter()
            .filter(|f| f.contains(&a) && f.contains(&b))
            .count();
        if borders >= 2 {
            continue;
        }
        for d in 0..m {
            if d == a || d == b {
                continue;
            }
            let t = canonical([a, b, d]);
            if facets.contains(&t) {
                continue;
            }
            if supporting_normal(&pts, t, tol).is_some() {
                facets.push(t);
                queue.push((a, d));
                queue.push((b, d));
                queue.push((a, b));
                break;
            }
        }
    }
    if facets.len() < 4 {
        return Err(HullError::Degenerate);
    }
    facets.sort_unstable();
    Ok(facets)
}
