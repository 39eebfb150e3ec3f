//! Limited-memory BFGS with Armijo backtracking.

use std::collections::VecDeque;

pub(crate) struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub iters: usize,
}

fn dotv(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Minimizes `f`, which returns the value and writes the gradient.
///
/// Stops after `max_iters` iterations, when the gradient vanishes, or when
/// the decrease over an iteration falls below `ftol · max(1, |f|)`.
pub(crate) fn minimize<F>(mut f: F, x0: Vec<f64>, max_iters: usize, ftol: f64) -> LbfgsOutcome
where
    F: FnMut(&[f64], &mut [f64]) -> f64,
{
    const MEMORY: usize = 10;
    let n = x0.len();
    let mut x = x0;
    let mut g = vec![0.0; n];
    let mut fx = f(&x, &mut g);
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(MEMORY);
    let mut x_new = vec![0.0; n];
    let mut g_new = vec![0.0; n];
    let mut iters = 0;
    let mut stalls = 0;

    while iters < max_iters {
        if g.iter().all(|v| v.abs() < 1e-15) {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dotv(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alphas.push(a);
        }
        if let Some((s, y, _)) = history.back() {
            let gamma = dotv(s, y) / dotv(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        } else {
            let gn = dotv(&g, &g).sqrt();
            q.iter_mut().for_each(|v| *v /= gn.max(1.0));
        }
        for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
            let b = rho * dotv(y, &q);
            for (qi, si) in q.iter_mut().zip(s) {
                *qi += (a - b) * si;
            }
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dotv(&g, &dir);
        if slope >= 0.0 {
            history.clear();
            dir = g.iter().map(|v| -v).collect();
            slope = dotv(&g, &dir);
        }

        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..50 {
            for i in 0..n {
                x_new[i] = x[i] + step * dir[i];
            }
            let f_new = f(&x_new, &mut g_new);
            if f_new <= fx + 1e-4 * step * slope {
                let s: Vec<f64> = (0..n).map(|i| x_new[i] - x[i]).collect();
                let y: Vec<f64> = (0..n).map(|i| g_new[i] - g[i]).collect();
                let sy = dotv(&s, &y);
                if sy > 1e-300 {
                    if history.len() == MEMORY {
                        history.pop_front();
                    }
                    history.push_back((s, y, 1.0 / sy));
                }
                let decrease = fx - f_new;
                std::mem::swap(&mut x, &mut x_new);
                std::mem::swap(&mut g, &mut g_new);
                fx = f_new;
                accepted = true;
                if decrease <= ftol * fx.abs().max(1.0) {
                    stalls += 1;
                } else {
                    stalls = 0;
                }
                break;
            }
            step *= 0.5;
        }
        iters += 1;
        if !accepted || stalls >= 5 {
            break;
        }
    }
    LbfgsOutcome { x, iters }
}
