//! Dense phase-one simplex for `A x = b, x >= 0` feasibility.
//!
//! Minimizes the sum of artificial variables, entering by lowest index with
//! a Harris ratio test. Sizes here are desk scale, so a full tableau is fine.

use crate::error::{Error, Result};

/// Largest tableau (cells) the solver will allocate.
pub const MAX_TABLEAU_CELLS: usize = 1 << 26;

const PIVOT_EPS: f64 = 1e-9;
const HARRIS_DELTA: f64 = 1e-12;

#[derive(Debug, Clone)]
pub(crate) struct PhaseOne {
    /// Basic solution for the original variables.
    pub x: Vec<f64>,
    /// L1 residual of `x`; at optimality the least over `x >= 0`.
    pub objective: f64,
    /// Farkas multipliers: `Aᵀy <= 0` and `bᵀy = objective` at optimality.
    pub dual: Vec<f64>,
    pub finished: bool,
}

pub(crate) fn phase_one(a: &[Vec<f64>], b: &[f64]) -> Result<PhaseOne> {
    let n = a.first().map_or(0, |r| r.len());
    let cells = (a.len() as u128 + 1) * (n + a.len() + 1) as u128;
    if cells > MAX_TABLEAU_CELLS as u128 {
        return Err(Error::Capacity {
            what: "simplex tableau cells",
            requested: cells,
            limit: MAX_TABLEAU_CELLS as u128,
        });
    }
    // Overlapping tables make many rows redundant. Left in, they keep
    // artificials basic at zero and invite pivots on round-off.
    let keep = independent_rows(a, b);
    let ra: Vec<&[f64]> = keep.iter().map(|&i| a[i].as_slice()).collect();
    let rb: Vec<f64> = keep.iter().map(|&i| b[i]).collect();
    let (x, reduced_dual, mut finished) = solve(&ra, &rb, n);

    let mut dual = vec![0.0; a.len()];
    for (&i, y) in keep.iter().zip(reduced_dual) {
        dual[i] = y;
    }
    let objective: f64 = a
        .iter()
        .zip(b)
        .map(|(row, &bi)| (row.iter().zip(&x).map(|(c, v)| c * v).sum::<f64>() - bi).abs())
        .sum();
    if finished && objective > 1e-9 && !certifies(a, b, &dual) {
        finished = false;
    }
    Ok(PhaseOne {
        x,
        objective,
        dual,
        finished,
    })
}

/// Indices of a maximal set of linearly independent rows, found by
/// Gram-Schmidt. A dependent row is dropped only when its right-hand side
/// agrees with the same combination of kept rows; otherwise it stays so that
/// the contradiction is visible to the solver.
fn independent_rows(a: &[Vec<f64>], b: &[f64]) -> Vec<usize> {
    let mut basis: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut keep = Vec::new();
    for (i, row) in a.iter().enumerate() {
        let norm0 = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = row.clone();
        let mut rhs = b[i];
        for _ in 0..2 {
            for (q, qb) in &basis {
                let d: f64 = v.iter().zip(q).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(q) {
                    *x -= d * y;
                }
                rhs -= d * qb;
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 * norm0.max(1.0) {
            for x in v.iter_mut() {
                *x /= norm;
            }
            basis.push((v, rhs / norm));
            keep.push(i);
        } else if rhs.abs() > 1e-12 {
            keep.push(i);
        }
    }
    keep
}

/// Checks `Aᵀy <= 0` and `bᵀy > 0` up to round-off.
fn certifies(a: &[Vec<f64>], b: &[f64], y: &[f64]) -> bool {
    let ymax = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if ymax == 0.0 {
        return false;
    }
    let n = a.first().map_or(0, |r| r.len());
    let mut aty = vec![0.0; n];
    for (row, yi) in a.iter().zip(y) {
        for (s, c) in aty.iter_mut().zip(row) {
            *s += c * yi;
        }
    }
    let by: f64 = b.iter().zip(y).map(|(b, y)| b * y).sum();
    aty.iter().all(|&v| v <= 1e-9 * ymax) && by > 1e-9 * ymax
}

fn solve(a: &[&[f64]], b: &[f64], n: usize) -> (Vec<f64>, Vec<f64>, bool) {
    let m = a.len();
    let cols = n + m + 1;
    let rhs = n + m;
    let mut t = vec![0.0; (m + 1) * cols];
    let sign: Vec<f64> = b.iter().map(|&v| if v < 0.0 { -1.0 } else { 1.0 }).collect();
    for i in 0..m {
        for j in 0..n {
            t[i * cols + j] = sign[i] * a[i][j];
        }
        t[i * cols + n + i] = 1.0;
        t[i * cols + rhs] = sign[i] * b[i];
    }
    let obj = m * cols;
    for i in 0..m {
        for j in 0..n {
            t[obj + j] -= t[i * cols + j];
        }
        t[obj + rhs] -= t[i * cols + rhs];
    }
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_pivots = 50 * (n + m) + 1000;
    let mut finished = false;
    for _ in 0..max_pivots {
        let Some(enter) = (0..n + m).find(|&j| t[obj + j] < -PIVOT_EPS) else {
            finished = true;
            break;
        };
        // Harris ratio test: bound the step with slightly relaxed ratios,
        // then take the largest pivot among rows within that bound.
        let mut bound = f64::INFINITY;
        for i in 0..m {
            let piv = t[i * cols + enter];
            if piv > PIVOT_EPS {
                bound = bound.min((t[i * cols + rhs].max(0.0) + HARRIS_DELTA) / piv);
            }
        }
        let mut leave: Option<usize> = None;
        let mut best = 0.0;
        for i in 0..m {
            let piv = t[i * cols + enter];
            if piv > PIVOT_EPS && t[i * cols + rhs].max(0.0) / piv <= bound && piv > best {
                best = piv;
                leave = Some(i);
            }
        }
        // Phase one is bounded below by zero, so a column without a
        // positive entry only appears through round-off.
        let Some(r) = leave else {
            t[obj + enter] = 0.0;
            continue;
        };
        pivot(&mut t, cols, m + 1, r, enter);
        basis[r] = enter;
        // Clamp the small negatives that the relaxed ratio test allows.
        for i in 0..m {
            if t[i * cols + rhs] < 0.0 {
                t[i * cols + rhs] = 0.0;
            }
        }
    }

    let mut x = vec![0.0; n];
    for (i, &bv) in basis.iter().enumerate() {
        if bv < n {
            x[bv] = t[i * cols + rhs].max(0.0);
        }
    }
    // Reduced cost of artificial i is 1 - y'_i.
    let dual = (0..m).map(|i| sign[i] * (1.0 - t[obj + n + i])).collect();
    (x, dual, finished)
}

fn pivot(t: &mut [f64], cols: usize, rows: usize, r: usize, c: usize) {
    let p = t[r * cols + c];
    for j in 0..cols {
        t[r * cols + j] /= p;
    }
    for i in 0..rows {
        if i == r {
            continue;
        }
        let f = t[i * cols + c];
        if f != 0.0 {
            for j in 0..cols {
                t[i * cols + j] -= f * t[r * cols + j];
            }
        }
    }
}
