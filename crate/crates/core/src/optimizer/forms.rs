//! Sesquilinear forms over the stacked components of a scheme.
//!
//! Every constraint and the objective is `const + Σ κ (u_a, u_b)` where the
//! `u` are sector vectors of `σ`, `τ`, `ρ`. Storing them this way gives
//! values, penalty gradients and Jacobian rows from one routine.

use crate::graded::{dot, C64};

#[derive(Debug, Clone, Default)]
pub(crate) struct Form {
    pub constant: C64,
    pub terms: Vec<(usize, usize, C64)>,
}

impl Form {
    pub fn constant(c: f64) -> Self {
        Self { constant: C64::new(c, 0.0), terms: Vec::new() }
    }

    /// Adds `k (u_a, u_b)`.
    pub fn add(&mut self, a: usize, b: usize, k: f64) {
        self.terms.push((a, b, C64::new(k, 0.0)));
    }

    pub fn eval(&self, z: &[C64], d: usize) -> C64 {
        self.constant
            + self
                .terms
                .iter()
                .map(|&(a, b, k)| k * dot(&z[a * d..(a + 1) * d], &z[b * d..(b + 1) * d]))
                .sum::<C64>()
    }

    /// Adds the gradient of `Re(conj(w) · form)` to `grad`.
    ///
    /// The gradient of a real function `F` of a complex vector is stored as
    /// `∂F/∂Re + i ∂F/∂Im` per component.
    pub fn add_gradient(&self, z: &[C64], d: usize, w: C64, grad: &mut [C64]) {
        for &(a, b, k) in &self.terms {
            let ca = w.conj() * k;
            let cb = w * k.conj();
            for i in 0..d {
                let (ua, ub) = (z[a * d + i], z[b * d + i]);
                grad[a * d + i] += ca * ub;
                grad[b * d + i] += cb * ua;
            }
        }
    }
}
