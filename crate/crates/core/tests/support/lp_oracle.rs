//! Brute-force joint-distribution oracle, independent of the library solver.
//!
//! A linear system `M p = b, p ≥ 0` is feasible iff it has a basic feasible
//! solution, so it is enough to try every nonsingular square subset of the
//! 16 columns and check the solved weights for nonnegativity.

#![allow(dead_code)]

/// Outcomes of assignment `k`: bit 0 → a, bit 1 → b, bit 2 → c, bit 3 → d,
/// a set bit meaning −1. (Deliberately not the library's bit order.)
pub fn outcomes(k: usize) -> [f64; 4] {
    [0, 1, 2, 3].map(|bit| if k >> bit & 1 == 1 { -1.0 } else { 1.0 })
}

/// Column of assignment `k`: `[1, ab, bc, cd, ad]` plus `[a, b, c, d]`.
pub fn column(k: usize, with_marginals: bool) -> Vec<f64> {
    let [a, b, c, d] = outcomes(k);
    let mut col = vec![1.0, a * b, b * c, c * d, a * d];
    if with_marginals {
        col.extend([a, b, c, d]);
    }
    col
}

fn solve(mut m: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() < 1e-12 {
            return None;
        }
        m.swap(col, pivot);
        rhs.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            for k in col..n {
                m[row][k] -= f * m[col][k];
            }
            rhs[row] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let s: f64 = (row + 1..n).map(|k| m[row][k] * x[k]).sum();
        x[row] = (rhs[row] - s) / m[row][row];
    }
    Some(x)
}

fn next_subset(idx: &mut [usize], n: usize) -> bool {
    let m = idx.len();
    let mut i = m;
    while i > 0 {
        i -= 1;
        if idx[i] < n - m + i {
            idx[i] += 1;
            for j in i + 1..m {
                idx[j] = idx[j - 1] + 1;
            }
            return true;
        }
    }
    false
}

/// A nonnegative distribution over the 16 assignments (in this module's
/// order) reproducing `corr = [ab, bc, cd, ad]` and, if given, the means.
pub fn basic_feasible_solution(corr: [f64; 4], marginals: Option<[f64; 4]>) -> Option<[f64; 16]> {
    let with_m = marginals.is_some();
    let mut b = vec![1.0];
    b.extend(corr);
    if let Some(m) = marginals {
        b.extend(m);
    }
    let rows = b.len();
    let cols: Vec<Vec<f64>> = (0..16).map(|k| column(k, with_m)).collect();
    let mut idx: Vec<usize> = (0..rows).collect();
    loop {
        let m: Vec<Vec<f64>> = (0..rows).map(|r| idx.iter().map(|&k| cols[k][r]).collect()).collect();
        if let Some(x) = solve(m, b.clone()) {
            if x.iter().all(|v| *v >= -1e-9) {
                let mut p = [0.0; 16];
                for (&k, v) in idx.iter().zip(x) {
                    p[k] = v.max(0.0);
                }
                return Some(p);
            }
        }
        if !next_subset(&mut idx, 16) {
            return None;
        }
    }
}

pub fn oracle_feasible(corr: [f64; 4], marginals: Option<[f64; 4]>) -> bool {
    basic_feasible_solution(corr, marginals).is_some()
}

/// Correlations and means of a distribution given in this module's order.
pub fn moments(p: &[f64; 16]) -> [f64; 9] {
    let mut out = [0.0; 9];
    for (k, w) in p.iter().enumerate() {
        for (o, v) in out.iter_mut().zip(column(k, true)) {
            *o += w * v;
        }
    }
    out
}
