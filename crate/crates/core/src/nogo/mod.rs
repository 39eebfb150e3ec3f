//! The exact-measurement constraint system and its infeasibility.
//!
//! An exact measurement would send `ψ₀ξ` and `ψ₁ξ` to states whose pointer
//! parts separate `ψ₀ ± ψ₁` perfectly. Writing the sector norms and overlaps
//! of the apparatus components as real sequences `x, s, t, a, b`, unitarity,
//! normalization and pointer orthogonality become a linear system with
//! nonnegativity bounds on `x, s, t`. That system has no solution for any
//! finite support; this module measures how far it is from solvable and
//! records the symbolic reason.

mod lsq;
mod rotated;
mod witness;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{BestIterate, Error, Result};
use crate::report::ConstraintReport;

pub use rotated::rotated_basis_residual;
pub use witness::{derive_witness, ParityClass, Witness};

/// Number of seeded starts for every minimization in this module.
pub const STARTS: usize = 16;
const SEED: u64 = 0x6e6f_676f;
const MAX_ITERS: usize = 5000;

/// Sector norms and overlaps of an exact scheme.
///
/// `x` covers sectors `1..=n`; `s`, `t`, `a`, `b` cover `0..=n+1`, which is
/// where `σ` and `τ` can be nonzero for an input supported on `1..=n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSchemeData {
    pub n: usize,
    pub x: Vec<f64>,
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl ExactSchemeData {
    pub fn zeros(n: usize) -> Self {
        let w = n + 2;
        Self { n, x: vec![0.0; n], s: vec![0.0; w], t: vec![0.0; w], a: vec![0.0; w], b: vec![0.0; w] }
    }

    pub fn x_at(&self, nu: i64) -> f64 {
        if nu >= 1 && nu <= self.n as i64 {
            self.x[(nu - 1) as usize]
        } else {
            0.0
        }
    }

    fn wide(v: &[f64], nu: i64) -> f64 {
        usize::try_from(nu).ok().and_then(|i| v.get(i)).copied().unwrap_or(0.0)
    }

    pub fn s_at(&self, nu: i64) -> f64 {
        Self::wide(&self.s, nu)
    }

    pub fn t_at(&self, nu: i64) -> f64 {
        Self::wide(&self.t, nu)
    }

    pub fn a_at(&self, nu: i64) -> f64 {
        Self::wide(&self.a, nu)
    }

    pub fn b_at(&self, nu: i64) -> f64 {
        Self::wide(&self.b, nu)
    }

    fn check(&self) -> Result<()> {
        let w = self.n + 2;
        if self.n == 0 {
            return Err(Error::structural("support size must be at least 1"));
        }
        if self.x.len() != self.n || [&self.s, &self.t, &self.a, &self.b].iter().any(|v| v.len() != w) {
            return Err(Error::structural(format!(
                "sequence lengths must be x: {}, s/t/a/b: {w}",
                self.n
            )));
        }
        for (name, v, off) in [("x", &self.x, 1), ("s", &self.s, 0), ("t", &self.t, 0)] {
            if let Some(i) = v.iter().position(|&e| e < 0.0) {
                return Err(Error::domain(format!(
                    "{name}[{}] = {} is negative but is a squared norm",
                    i + off,
                    v[i]
                )));
            }
        }
        Ok(())
    }

    fn to_vector(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.n + 4 * (self.n + 2),
            self.x.iter().chain(&self.s).chain(&self.t).chain(&self.a).chain(&self.b).copied(),
        )
    }

    fn from_vector(n: usize, z: &DVector<f64>) -> Self {
        let w = n + 2;
        let take = |k: usize, len: usize| z.rows(k, len).iter().copied().collect::<Vec<_>>();
        Self {
            n,
            x: take(0, n),
            s: take(n, w),
            t: take(n + w, w),
            a: take(n + 2 * w, w),
            b: take(n + 3 * w, w),
        }
    }
}

/// Column positions of the variables in the stacked vector.
pub(crate) struct Layout {
    pub n: usize,
}

impl Layout {
    pub fn len(&self) -> usize {
        self.n + 4 * (self.n + 2)
    }

    fn wide(&self, block: usize, nu: i64) -> Option<usize> {
        (0..=self.n as i64 + 1).contains(&nu).then(|| self.n + block * (self.n + 2) + nu as usize)
    }

    pub fn x(&self, nu: i64) -> Option<usize> {
        (1..=self.n as i64).contains(&nu).then(|| (nu - 1) as usize)
    }

    pub fn s(&self, nu: i64) -> Option<usize> {
        self.wide(0, nu)
    }

    pub fn t(&self, nu: i64) -> Option<usize> {
        self.wide(1, nu)
    }

    pub fn a(&self, nu: i64) -> Option<usize> {
        self.wide(2, nu)
    }

    pub fn b(&self, nu: i64) -> Option<usize> {
        self.wide(3, nu)
    }

    pub fn bounded(&self) -> Vec<bool> {
        (0..self.len()).map(|j| j < self.n + 2 * (self.n + 2)).collect()
    }
}

/// The linear system `A z = r` with one row per named constraint.
pub(crate) struct LinearSystem {
    pub ids: Vec<String>,
    pub a: DMatrix<f64>,
    pub r: DVector<f64>,
    pub layout: Layout,
}

/// Assembles the constraint rows for the measured basis `αψ₀ + βψ₁`,
/// `−β̄ψ₀ + ᾱψ₁`, entering only through `delta = |α|² − |β|²` and
/// `kappa = 2|αβ|`. `delta = 0, kappa = 1` is the `ψ₀ ± ψ₁` case.
pub(crate) fn linear_system(n: usize, delta: f64, kappa: f64) -> LinearSystem {
    let layout = Layout { n };
    let p = layout.len();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut ids = Vec::new();
    let mut rhs = Vec::new();
    let d2 = delta * delta;
    let hi = n as i64 + 2;
    let mut row = |id: String, terms: &[(Option<usize>, f64)], value: f64| {
        let mut r = vec![0.0; p];
        for (j, c) in terms {
            if let Some(j) = j {
                r[*j] += c;
            }
        }
        rows.push(r);
        ids.push(id);
        rhs.push(value);
    };
    let l = &layout;
    for nu in 0..=hi {
        row(
            format!("balance-upper[{nu}]"),
            &[
                (l.x(nu), 1.0),
                (l.s(nu), -0.5),
                (l.t(nu), -0.5 * d2),
                (l.a(nu), -delta),
                (l.t(nu - 1), -0.5 * (1.0 - d2)),
            ],
            0.0,
        );
        row(
            format!("balance-lower[{nu}]"),
            &[
                (l.x(nu - 1), 1.0),
                (l.t(nu), -0.5 * (1.0 - d2)),
                (l.s(nu - 1), -0.5),
                (l.t(nu - 1), -0.5 * d2),
                (l.a(nu - 1), delta),
            ],
            0.0,
        );
    }
    for nu in 0..=hi {
        row(
            format!("cross-re[{nu}]"),
            &[
                (l.a(nu), kappa),
                (l.a(nu - 1), kappa),
                (l.t(nu), kappa * delta),
                (l.t(nu - 1), -kappa * delta),
            ],
            0.0,
        );
        row(format!("cross-im[{nu}]"), &[(l.b(nu - 1), kappa), (l.b(nu), -kappa)], 0.0);
    }
    let all = |f: &dyn Fn(i64) -> Option<usize>| -> Vec<(Option<usize>, f64)> {
        (0..=n as i64 + 1).map(|nu| (f(nu), 1.0)).collect()
    };
    row("sum-x".into(), &all(&|nu| l.x(nu)), 1.0);
    row("sum-s".into(), &all(&|nu| l.s(nu)), 1.0);
    row("sum-t".into(), &all(&|nu| l.t(nu)), 1.0);
    row("sum-a".into(), &all(&|nu| l.a(nu)), 0.0);
    row("sum-b".into(), &all(&|nu| l.b(nu)), 0.0);

    let m = rows.len();
    let a = DMatrix::from_fn(m, p, |i, j| rows[i][j]);
    LinearSystem { ids, a, r: DVector::from_vec(rhs), layout }
}

fn report_from(sys: &LinearSystem, z: &DVector<f64>) -> ConstraintReport {
    let res = &sys.a * z - &sys.r;
    let mut report = ConstraintReport::new();
    for (id, v) in sys.ids.iter().zip(res.iter()) {
        report.push(id.clone(), *v);
    }
    report
}

/// Violation of every equation of the exact system.
///
/// Entries: `balance-upper[ν]` is `x[ν] − s[ν]/2 − t[ν−1]/2`,
/// `balance-lower[ν]` is `x[ν−1] − t[ν]/2 − s[ν−1]/2`, `cross-re[ν]` and
/// `cross-im[ν]` are the real and imaginary parts of
/// `a[ν] − i b[ν] + a[ν−1] + i b[ν−1]`, for `ν = 0..=n+2`; then `sum-x`,
/// `sum-s`, `sum-t` (each against 1) and `sum-a`, `sum-b` (against 0).
pub fn exact_constraint_residual(data: &ExactSchemeData) -> Result<ConstraintReport> {
    data.check()?;
    let sys = linear_system(data.n, 0.0, 1.0);
    Ok(report_from(&sys, &data.to_vector()))
}

/// Sum of squared residuals, the quantity minimized by the certificate.
pub fn violation(report: &ConstraintReport) -> f64 {
    report.sum_of_squares()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InfeasibilityCertificate {
    pub n: usize,
    pub min_violation: f64,
    pub minimizer: ExactSchemeData,
    pub witness: Vec<String>,
}

pub(crate) fn random_start(layout: &Layout, rng: &mut ChaCha8Rng) -> DVector<f64> {
    let bounded = layout.bounded();
    let scale = 1.0 / layout.n as f64;
    DVector::from_iterator(
        layout.len(),
        bounded.iter().map(|&b| {
            if b {
                if rng.gen_bool(0.25) {
                    rng.gen_range(0.0..2.0 * scale)
                } else {
                    0.0
                }
            } else {
                rng.gen_range(-scale..scale)
            }
        }),
    )
}

/// Seed for start `k`; start 0 is always the zero vector.
pub(crate) fn start_rng(k: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(SEED ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Independent blocks of `A`: rows and columns linked through nonzero entries.
fn components(a: &DMatrix<f64>) -> Vec<(Vec<usize>, Vec<usize>)> {
    let (m, p) = a.shape();
    let mut parent: Vec<usize> = (0..m + p).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..m {
        for j in 0..p {
            if a[(i, j)] != 0.0 {
                let (ri, rj) = (find(&mut parent, i), find(&mut parent, m + j));
                if ri != rj {
                    parent[ri.max(rj)] = ri.min(rj);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, (Vec<usize>, Vec<usize>)> = Default::default();
    for i in 0..m {
        let root = find(&mut parent, i);
        groups.entry(root).or_default().0.push(i);
    }
    for j in 0..p {
        let root = find(&mut parent, m + j);
        groups.entry(root).or_default().1.push(j);
    }
    groups.into_values().collect()
}

/// One start: each independent block solved on its own.
fn solve_blocks(
    sys: &LinearSystem,
    blocks: &[(Vec<usize>, Vec<usize>)],
    bounded: &[bool],
    start: &DVector<f64>,
) -> (DVector<f64>, f64, bool) {
    let mut z = DVector::zeros(sys.layout.len());
    let mut converged = true;
    for (rows, cols) in blocks {
        if cols.is_empty() {
            continue;
        }
        let sub = DMatrix::from_fn(rows.len(), cols.len(), |i, j| sys.a[(rows[i], cols[j])]);
        let r = DVector::from_fn(rows.len(), |i, _| sys.r[rows[i]]);
        let b: Vec<bool> = cols.iter().map(|&j| bounded[j]).collect();
        let s0 = DVector::from_fn(cols.len(), |j, _| start[cols[j]]);
        let out = lsq::bounded_lsq(&sub, &r, &b, s0, MAX_ITERS);
        converged &= out.converged;
        for (k, &j) in cols.iter().enumerate() {
            z[j] = out.z[k];
        }
    }
    let value = (&sys.a * &z - &sys.r).norm_squared();
    (z, value, converged)
}

fn minimize_system(sys: &LinearSystem) -> Result<(DVector<f64>, f64)> {
    let bounded = sys.layout.bounded();
    let blocks = components(&sys.a);
    let runs: Vec<_> = (0..STARTS)
        .into_par_iter()
        .map(|k| {
            let start = if k == 0 {
                DVector::zeros(sys.layout.len())
            } else {
                random_start(&sys.layout, &mut start_rng(k))
            };
            solve_blocks(sys, &blocks, &bounded, &start)
        })
        .collect();
    let best = runs
        .iter()
        .enumerate()
        .filter(|(_, o)| o.2)
        .min_by(|(i, x), (j, y)| x.1.total_cmp(&y.1).then(i.cmp(j)))
        .map(|(_, o)| o);
    match best {
        Some(o) => Ok((o.0.clone(), o.1)),
        None => {
            let o = runs.iter().min_by(|x, y| x.1.total_cmp(&y.1)).expect("at least one start");
            Err(Error::NoConvergence {
                message: format!("no start reached the optimality conditions in {MAX_ITERS} steps"),
                best: Box::new(BestIterate::Exact(ExactSchemeData::from_vector(sys.layout.n, &o.0))),
                residual: o.1,
            })
        }
    }
}

/// Minimal least-squares violation of the exact system at support `n`,
/// the minimizer, and the symbolic reason the violation cannot be zero.
pub fn infeasibility_certificate(n: usize) -> Result<InfeasibilityCertificate> {
    if n == 0 {
        return Err(Error::domain("support size must be at least 1"));
    }
    let sys = linear_system(n, 0.0, 1.0);
    let (z, _) = minimize_system(&sys)?;
    let minimizer = ExactSchemeData::from_vector(n, &z);
    let min_violation = violation(&exact_constraint_residual(&minimizer)?);
    Ok(InfeasibilityCertificate { n, min_violation, minimizer, witness: derive_witness(n).steps })
}

/// Balance weight at which the parity structure of `t` is checked.
///
/// Large enough to push the balance residuals below 1e-8 up to `n = 64`,
/// small enough that the normal equations stay well conditioned.
pub const PARITY_WEIGHT: f64 = 7e4;

/// Minimizer with the balance rows weighted by `weight`.
///
/// Large weights drive the balance residuals toward zero, which is the regime
/// where the per-parity constancy of `t` becomes numerically visible.
pub fn balance_weighted_minimizer(n: usize, weight: f64) -> Result<ExactSchemeData> {
    if n == 0 {
        return Err(Error::domain("support size must be at least 1"));
    }
    let mut sys = linear_system(n, 0.0, 1.0);
    for (i, id) in sys.ids.iter().enumerate() {
        if id.starts_with("balance") {
            let mut row = sys.a.row_mut(i);
            row *= weight;
        }
    }
    let (z, _) = minimize_system(&sys)?;
    Ok(ExactSchemeData::from_vector(n, &z))
}

/// Largest spread of `t` within each parity class of the window.
pub fn parity_spread(data: &ExactSchemeData) -> f64 {
    let mut spread: f64 = 0.0;
    for parity in 0..2 {
        let vals: Vec<f64> = data.t.iter().skip(parity).step_by(2).copied().collect();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !vals.is_empty() {
            spread = spread.max(hi - lo);
        }
    }
    spread
}
