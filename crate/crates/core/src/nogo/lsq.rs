//! Least squares with nonnegativity bounds on a subset of the variables.
//!
//! Primal active-set method: the iterate stays feasible, each inner step
//! solves the unconstrained problem on the free set (minimum-norm solution,
//! so rank deficiency is harmless), and a ratio test pulls the step back to
//! the boundary when it would leave the feasible region.

use nalgebra::{DMatrix, DVector};

pub(crate) struct LsqOutcome {
    pub z: DVector<f64>,
    pub converged: bool,
}

fn solve_free_svd(a: &DMatrix<f64>, r: &DVector<f64>, free: &[usize]) -> DVector<f64> {
    let mut out = DVector::zeros(a.ncols());
    if free.is_empty() {
        return out;
    }
    let cols: Vec<_> = free.iter().map(|&j| a.column(j).clone_owned()).collect();
    let sub = DMatrix::from_columns(&cols);
    let svd = sub.svd(true, true);
    let eps = svd.singular_values.max() * 1e-12;
    let y = svd.solve(r, eps).expect("both factors were computed");
    for (k, &j) in free.iter().enumerate() {
        out[j] = y[k];
    }
    out
}

/// Normal-equation solve on the free set by a Cholesky factorization that
/// skips columns nearly dependent on the ones before them.
///
/// Skipped columns get the value zero, which yields a basic solution; the
/// active-set loop then moves them back to their bound.
fn solve_free(gram: &DMatrix<f64>, atr: &DVector<f64>, free: &[usize], p: usize) -> DVector<f64> {
    let k = free.len();
    let mut l = vec![vec![0.0; k]; k];
    let mut kept: Vec<usize> = Vec::with_capacity(k);
    for (jj, &j) in free.iter().enumerate() {
        let m = kept.len();
        let mut row = vec![0.0; m + 1];
        for q in 0..m {
            let i = free[kept[q]];
            let mut v = gram[(j, i)];
            for t in 0..q {
                v -= row[t] * l[q][t];
            }
            row[q] = v / l[q][q];
        }
        let d = gram[(j, j)] - row[..m].iter().map(|v| v * v).sum::<f64>();
        if d > 1e-11 * gram[(j, j)] && d > 0.0 {
            row[m] = d.sqrt();
            l[m][..=m].copy_from_slice(&row);
            kept.push(jj);
        }
    }
    let m = kept.len();
    let mut y = vec![0.0; m];
    for q in 0..m {
        let mut v = atr[free[kept[q]]];
        for t in 0..q {
            v -= l[q][t] * y[t];
        }
        y[q] = v / l[q][q];
    }
    for q in (0..m).rev() {
        let mut v = y[q];
        for t in q + 1..m {
            v -= l[t][q] * y[t];
        }
        y[q] = v / l[q][q];
    }
    let mut out = DVector::zeros(p);
    for (q, &jj) in kept.iter().enumerate() {
        out[free[jj]] = y[q];
    }
    out
}

/// Minimizes `‖A z − r‖²` subject to `z_j ≥ 0` wherever `bounded[j]`.
///
/// `start` must be feasible. Variables that are zero at the start begin in
/// the active set.
pub(crate) fn bounded_lsq(
    a: &DMatrix<f64>,
    r: &DVector<f64>,
    bounded: &[bool],
    start: DVector<f64>,
    max_iters: usize,
) -> LsqOutcome {
    let p = a.ncols();
    let scale = a.norm().max(1.0) * r.norm().max(1.0);
    let kkt_tol = 1e-12 * scale;
    let gram = a.transpose() * a;
    let atr = a.transpose() * r;
    let mut z = start;
    let mut free: Vec<bool> = (0..p).map(|j| !bounded[j] || z[j] > 0.0).collect();
    for _ in 0..max_iters {
        let idx: Vec<usize> = (0..p).filter(|&j| free[j]).collect();
        let y = solve_free(&gram, &atr, &idx, p);
        let blocked = idx.iter().any(|&j| bounded[j] && y[j] <= 0.0);
        if !blocked {
            z = y;
            let g = a.transpose() * (a * &z - r);
            // most negative gradient among active bounds enters the free set
            let entering = (0..p)
                .filter(|&j| !free[j] && g[j] < -kkt_tol)
                .min_by(|&i, &j| g[i].total_cmp(&g[j]));
            match entering {
                Some(j) => free[j] = true,
                None => {
                    // final solve through the SVD for full accuracy
                    let idx: Vec<usize> = (0..p).filter(|&j| free[j]).collect();
                    let y = solve_free_svd(a, r, &idx);
                    if idx.iter().all(|&j| !bounded[j] || y[j] >= 0.0) {
                        z = y;
                    }
                    return LsqOutcome { z, converged: true };
                }
            }
            continue;
        }
        let mut alpha = 1.0f64;
        for &j in &idx {
            if bounded[j] && y[j] <= 0.0 {
                let denom = z[j] - y[j];
                if denom > 0.0 {
                    alpha = alpha.min(z[j] / denom);
                }
            }
        }
        z += (&y - &z) * alpha;
        for &j in &idx {
            if bounded[j] && z[j] <= 1e-14 {
                z[j] = 0.0;
                free[j] = false;
            }
        }
    }
    LsqOutcome { z, converged: false }
}
