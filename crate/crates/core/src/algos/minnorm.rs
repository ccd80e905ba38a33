//! Minimum-norm element of the convex hull of a few vectors.
//!
//! By Carathéodory the minimiser lies in the hull of at most `n + 1` of the
//! points, and on that face it is the affine-constrained least-squares point.
//! Enumerating every subset of size `≤ n + 1` and keeping the feasible solutions
//! is exact and cheap for the sizes used here (`n ≤ 3`, at most 9 points).

use nalgebra::{DMatrix, DVector};

/// Returns the min-norm point and its convex weights.
pub fn min_norm_hull(points: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    assert!(!points.is_empty(), "min_norm_hull needs at least one point");
    let n = points[0].len();
    let m = points.len();
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let max_size = (n + 1).min(m);
    let mut consider = |subset: &[usize]| {
        let Some(weights) = solve_face(points, subset) else {
            return;
        };
        if weights.iter().any(|w| *w < -1e-12) {
            return;
        }
        let mut full = vec![0.0; m];
        let mut p = vec![0.0; n];
        for (&i, &w) in subset.iter().zip(&weights) {
            let w = w.max(0.0);
            full[i] = w;
            for (pk, gk) in p.iter_mut().zip(&points[i]) {
                *pk += w * gk;
            }
        }
        let total: f64 = full.iter().sum();
        for w in &mut full {
            *w /= total;
        }
        for pk in &mut p {
            *pk /= total;
        }
        let norm2: f64 = p.iter().map(|t| t * t).sum();
        if best.as_ref().is_none_or(|(b, ..)| norm2 < *b) {
            best = Some((norm2, p, full));
        }
    };
    for size in 1..=max_size {
        for_each_subset(m, size, &mut consider);
    }
    let (_, p, w) = best.expect("singletons are always feasible");
    (p, w)
}

/// Weights `λ` minimising `‖Σ λ_i g_i‖²` subject to `Σ λ_i = 1` on the given subset,
/// via the KKT system. `None` when the face is degenerate.
fn solve_face(points: &[Vec<f64>], subset: &[usize]) -> Option<Vec<f64>> {
    let k = subset.len();
    if k == 1 {
        return Some(vec![1.0]);
    }
    let mut a = DMatrix::<f64>::zeros(k + 1, k + 1);
    for (r, &i) in subset.iter().enumerate() {
        for (c, &j) in subset.iter().enumerate() {
            a[(r, c)] = points[i].iter().zip(&points[j]).map(|(x, y)| x * y).sum();
        }
        a[(r, k)] = 1.0;
        a[(k, r)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(k + 1);
    b[k] = 1.0;
    let scale = a.amax().max(1.0);
    let lu = a.lu();
    let det = lu.determinant();
    if det.abs() <= 1e-14 * scale.powi(k as i32) {
        return None;
    }
    let x = lu.solve(&b)?;
    let w: Vec<f64> = x.iter().take(k).copied().collect();
    w.iter().all(|v| v.is_finite()).then_some(w)
}

fn for_each_subset(m: usize, size: usize, f: &mut impl FnMut(&[usize])) {
    let mut idx: Vec<usize> = (0..size).collect();
    loop {
        f(&idx);
        let mut i = size;
        while i > 0 && idx[i - 1] == m - size + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return;
        }
        idx[i - 1] += 1;
        for j in i..size {
            idx[j] = idx[j - 1] + 1;
        }
    }
}
