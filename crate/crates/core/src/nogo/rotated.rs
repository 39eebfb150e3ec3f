//! The exact-measurement system for a rotated measured basis.
//!
//! For the basis `αψ₀ + βψ₁`, `−β̄ψ₀ + ᾱψ₁` the isometry acting on `ψ₀ξ`,
//! `ψ₁ξ` is still graded, so the sector relations keep the same shape but
//! the pointer conditions mix `σ` and `τ` with weights depending on
//! `δ = |α|² − |β|²` and `κ = 2|αβ|`. Because `s, t, a + ib` are Gram entries
//! of two sector vectors, the variables now also obey `a² + b² ≤ s t`. The
//! minimization runs over a factorization that satisfies that cone
//! automatically:
//!
//! `s = p₁²`, `t = p₂² + p₃² + p₄²`, `a = p₁p₂`, `b = p₁p₃`, `x = q²`,
//!
//! with Levenberg–Marquardt from seeded random starts.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use super::{derive_witness, linear_system, start_rng, ExactSchemeData, InfeasibilityCertificate, LinearSystem, STARTS};
use crate::error::{Error, Result};
use crate::graded::ObjectState;

const LM_ITERS: usize = 3000;

struct Factorized<'a> {
    sys: &'a LinearSystem,
    n: usize,
}

impl Factorized<'_> {
    /// Parameter count: `q` for `1..=n`, then `p₁..p₄` for `0..=n+1`.
    fn len(&self) -> usize {
        self.n + 4 * (self.n + 2)
    }

    fn p(&self, k: usize, nu: usize) -> usize {
        self.n + 4 * nu + k
    }

    fn variables(&self, theta: &DVector<f64>) -> DVector<f64> {
        let l = &self.sys.layout;
        let mut z = DVector::zeros(l.len());
        for nu in 1..=self.n {
            z[l.x(nu as i64).unwrap()] = theta[nu - 1].powi(2);
        }
        for nu in 0..self.n + 2 {
            let [p1, p2, p3, p4] = [0, 1, 2, 3].map(|k| theta[self.p(k, nu)]);
            let i = nu as i64;
            z[l.s(i).unwrap()] = p1 * p1;
            z[l.t(i).unwrap()] = p2 * p2 + p3 * p3 + p4 * p4;
            z[l.a(i).unwrap()] = p1 * p2;
            z[l.b(i).unwrap()] = p1 * p3;
        }
        z
    }

    /// `∂z/∂θ`, sparse but small enough to keep dense.
    fn variables_jacobian(&self, theta: &DVector<f64>) -> DMatrix<f64> {
        let l = &self.sys.layout;
        let mut j = DMatrix::zeros(l.len(), self.len());
        for nu in 1..=self.n {
            j[(l.x(nu as i64).unwrap(), nu - 1)] = 2.0 * theta[nu - 1];
        }
        for nu in 0..self.n + 2 {
            let idx = [0, 1, 2, 3].map(|k| self.p(k, nu));
            let [p1, p2, p3, p4] = idx.map(|k| theta[k]);
            let i = nu as i64;
            let (s, t, a, b) = (l.s(i).unwrap(), l.t(i).unwrap(), l.a(i).unwrap(), l.b(i).unwrap());
            j[(s, idx[0])] = 2.0 * p1;
            j[(t, idx[1])] = 2.0 * p2;
            j[(t, idx[2])] = 2.0 * p3;
            j[(t, idx[3])] = 2.0 * p4;
            j[(a, idx[0])] = p2;
            j[(a, idx[1])] = p1;
            j[(b, idx[0])] = p3;
            j[(b, idx[2])] = p1;
        }
        j
    }

    fn residual(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.sys.a * self.variables(theta) - &self.sys.r
    }
}

fn levenberg_marquardt(f: &Factorized<'_>, mut theta: DVector<f64>) -> (DVector<f64>, f64) {
    let mut r = f.residual(&theta);
    let mut cost = r.norm_squared();
    let mut lambda = 1e-3;
    for _ in 0..LM_ITERS {
        let jac = &f.sys.a * f.variables_jacobian(&theta);
        let g = jac.transpose() * &r;
        if g.amax() < 1e-15 {
            break;
        }
        let jtj = jac.transpose() * &jac;
        let mut improved = false;
        for _ in 0..30 {
            let mut m = jtj.clone();
            for k in 0..m.nrows() {
                m[(k, k)] += lambda * (1.0 + jtj[(k, k)]);
            }
            let Some(chol) = m.cholesky() else {
                lambda *= 4.0;
                continue;
            };
            let step = chol.solve(&(-&g));
            let trial = &theta + &step;
            let rt = f.residual(&trial);
            let ct = rt.norm_squared();
            if ct < cost {
                let rel = (cost - ct) / cost.max(1e-300);
                theta = trial;
                r = rt;
                cost = ct;
                lambda = (lambda / 3.0).max(1e-15);
                improved = rel > 1e-15;
                break;
            }
            lambda *= 4.0;
        }
        if !improved {
            break;
        }
    }
    (theta, cost)
}

/// Minimal violation of the exact system for the basis defined by `obj`
/// and its orthogonal partner.
///
/// Depends on `obj` only through `|amp0|²` and `|amp0 · amp1|`, so it is
/// invariant under phases of either amplitude. Returns zero when `obj` is
/// a charge eigenstate.
pub fn rotated_basis_residual(n: usize, obj: ObjectState) -> Result<InfeasibilityCertificate> {
    obj.require_normalized(1e-10)?;
    if n == 0 {
        return Err(Error::domain("support size must be at least 1"));
    }
    let delta = obj.amp0.norm_sqr() - obj.amp1.norm_sqr();
    let kappa = 2.0 * obj.amp0.norm() * obj.amp1.norm();
    let sys = linear_system(n, delta, kappa);
    let f = Factorized { sys: &sys, n };

    let mut best: Option<(f64, usize, DVector<f64>)> = None;
    for k in 0..STARTS {
        let mut rng = start_rng(k);
        let scale = (1.0 / n as f64).sqrt();
        let theta0 = DVector::from_fn(f.len(), |_, _| rng.gen_range(-scale..scale));
        let (theta, cost) = levenberg_marquardt(&f, theta0);
        if best.as_ref().map_or(true, |(c, _, _)| cost < *c) {
            best = Some((cost, k, theta));
        }
    }
    let (_, _, theta) = best.expect("at least one start");
    let z = f.variables(&theta);
    let minimizer = ExactSchemeData::from_vector(n, &z);
    let min_violation = (&sys.a * &z - &sys.r).norm_squared();

    let witness = if delta.abs() < 1e-12 {
        derive_witness(n).steps
    } else {
        vec![
            format!("rotated basis with |alpha|^2 - |beta|^2 = {delta}, 2|alpha beta| = {kappa}"),
            "violation obtained numerically over the Gram cone a^2 + b^2 <= s t".to_string(),
        ]
    };
    Ok(InfeasibilityCertificate { n, min_violation, minimizer, witness })
}
