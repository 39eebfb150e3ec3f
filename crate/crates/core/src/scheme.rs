//! Approximate measurement schemes with an undetermined third outcome.
//!
//! A scheme of apparatus size `n` is the image of the two inputs `ψ₀ξ` and
//! `ψ₁ξ`:
//!
//! ```text
//! ψ₀ξ → ψ₀σ + ψ₁ρ
//! ψ₁ξ → ψ₀τ + ψ₁σ
//! ```
//!
//! with `ξ, σ` on sectors `1..=n`, `ρ` on `0..n−1` and `τ` on `2..=n+1`.
//! The pointer states are `χ = σ + (ρ+τ)/2`, `χ′ = σ − (ρ+τ)/2`, and
//! `η = (τ−ρ)/2` carries the weight of the undetermined outcome.

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::blockmap::{check_conserving, BlockMap, TOL};
use crate::error::{Error, Result};
use crate::graded::{dot, inner, join_parts, GradedVector, ObjectState, C64};
use crate::report::ConstraintReport;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ApproxScheme {
    pub n: usize,
    pub d: usize,
    /// Mean of `‖σ_ν‖²` over `1..=n`.
    pub c: f64,
    /// Mean of `‖ρ_ν‖²` over `0..n−1`.
    pub cprime: f64,
    pub xi: GradedVector,
    pub sigma: GradedVector,
    pub tau: GradedVector,
    pub rho: GradedVector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DerivedPointers {
    pub chi: GradedVector,
    pub chiprime: GradedVector,
    pub eta: GradedVector,
}

fn real(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn ratio_f64(r: Ratio<i128>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// `(c, c′)` solving `n(c + c′) = 1` and `4nc = 4(n−1)c′` exactly.
pub fn wigner_coefficients(n: usize) -> Result<(Ratio<i128>, Ratio<i128>)> {
    if n == 0 {
        return Err(Error::structural("apparatus size must be at least 1"));
    }
    let n = n as i128;
    // [n      n    ] [c ]   [1]
    // [4n  −4(n−1) ] [c′] = [0]
    let (a11, a12, a21, a22) = (n, n, 4 * n, -4 * (n - 1));
    let det = a11 * a22 - a12 * a21;
    let c = Ratio::new(a22, det);
    let cprime = Ratio::new(-a21, det);
    Ok((c, cprime))
}

/// `1/(2n−1)` as an exact fraction.
pub fn wigner_error_exact(n: usize) -> Result<Ratio<i128>> {
    Ok(wigner_coefficients(n)?.1)
}

impl ApproxScheme {
    /// Assembles a scheme from its components; `c` and `cprime` are the
    /// mean squared norms of `σ` and `ρ`.
    pub fn from_parts(
        n: usize,
        xi: GradedVector,
        sigma: GradedVector,
        tau: GradedVector,
        rho: GradedVector,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::structural("apparatus size must be at least 1"));
        }
        let d = xi.dim();
        for (name, v) in [("sigma", &sigma), ("tau", &tau), ("rho", &rho)] {
            if v.dim() != d {
                return Err(Error::structural(format!("{name} has dimension {} but xi has {d}", v.dim())));
            }
        }
        let c = sigma.norm_sqr() / n as f64;
        let cprime = rho.norm_sqr() / n as f64;
        Ok(Self { n, d, c, cprime, xi, sigma, tau, rho })
    }

    /// Reads a scheme written by `serde_json` and checks that `n` is positive
    /// and every component has dimension `d`.
    pub fn from_json(text: &str) -> Result<Self> {
        let s: Self = serde_json::from_str(text)?;
        if s.n == 0 {
            return Err(Error::structural("apparatus size must be at least 1"));
        }
        for (name, v) in [("xi", &s.xi), ("sigma", &s.sigma), ("tau", &s.tau), ("rho", &s.rho)] {
            if v.dim() != s.d {
                return Err(Error::structural(format!("{name} has dimension {} but d = {}", v.dim(), s.d)));
            }
        }
        Ok(s)
    }

    pub fn xi_window(&self) -> (i64, i64) {
        (1, self.n as i64)
    }

    pub fn sigma_window(&self) -> (i64, i64) {
        (1, self.n as i64)
    }

    pub fn rho_window(&self) -> (i64, i64) {
        (0, self.n as i64 - 1)
    }

    pub fn tau_window(&self) -> (i64, i64) {
        (2, self.n as i64 + 1)
    }

    /// Sectors touched by any component.
    pub fn full_window(&self) -> (i64, i64) {
        (0, self.n as i64 + 1)
    }

    /// The interaction as a block map on the joint space.
    ///
    /// Block `N` has the two domain columns `ψ₀ξ_N` and `ψ₁ξ_{N−1}` (either
    /// may be zero) and their images `ψ₀σ_N + ψ₁ρ_{N−1}`, `ψ₀τ_N + ψ₁σ_{N−1}`.
    pub fn interaction_map(&self) -> Result<BlockMap> {
        let zero = GradedVector::zero(self.d)?;
        let mut cols = Vec::new();
        for big_n in 1..=self.n as i64 + 1 {
            let xi_n = self.xi.restrict(|nu| nu == big_n);
            let xi_prev = self.xi.restrict(|nu| nu == big_n - 1);
            let sig_n = self.sigma.restrict(|nu| nu == big_n);
            let sig_prev = self.sigma.restrict(|nu| nu == big_n - 1);
            let rho_prev = self.rho.restrict(|nu| nu == big_n - 1);
            let tau_n = self.tau.restrict(|nu| nu == big_n);
            let mut in0 = join_parts(&xi_n, &zero)?;
            let mut in1 = join_parts(&zero, &xi_prev)?;
            // keep zero columns in their block so both labels always appear
            for v in [&mut in0, &mut in1] {
                if v.sector(big_n).is_none() {
                    v.set_sector(big_n, vec![real(0.0); 2 * self.d])?;
                }
            }
            cols.push((format!("psi0.xi[{big_n}]"), in0, join_parts(&sig_n, &rho_prev)?));
            cols.push((format!("psi1.xi[{}]", big_n - 1), in1, join_parts(&tau_n, &sig_prev)?));
        }
        BlockMap::from_columns(2 * self.d, cols)
    }
}

/// The canonical scheme with `σ` along basis direction 0 and `ρ`, `τ` along
/// direction 1.
///
/// `‖σ_ν‖² = c` on `1..=n`, `‖ρ_ν‖² = c′` on `0..n−1`, `‖τ_ν‖² = c′` on
/// `2..=n+1` (so `ρ_ν = τ_ν` on the overlap `2..n−1`), and
/// `‖ξ_ν‖² = c + c′`, with `c′ = 1/(2n−1)` and `c = (n−1)/(n(2n−1))`.
pub fn build_wigner_scheme(n: usize, d: usize) -> Result<ApproxScheme> {
    if d < 2 {
        return Err(Error::structural(format!(
            "per-sector dimension {d} leaves no room for sigma orthogonal to tau"
        )));
    }
    let (c, cprime) = wigner_coefficients(n)?;
    let (cf, cpf) = (ratio_f64(c), ratio_f64(cprime));
    let along = |k: usize, norm_sq: f64| {
        let mut v = vec![real(0.0); d];
        v[k] = real(norm_sq.sqrt());
        v
    };
    let n_i = n as i64;
    let xi = GradedVector::from_sectors(d, (1..=n_i).map(|nu| (nu, along(0, ratio_f64(c + cprime)))))?;
    let sigma = GradedVector::from_sectors(d, (1..=n_i).map(|nu| (nu, along(0, cf))))?;
    let rho = GradedVector::from_sectors(d, (0..n_i).map(|nu| (nu, along(1, cpf))))?;
    let tau = GradedVector::from_sectors(d, (2..=n_i + 1).map(|nu| (nu, along(1, cpf))))?;
    Ok(ApproxScheme { n, d, c: cf, cprime: cpf, xi, sigma, tau, rho })
}

/// `χ`, `χ′` and `η` from `σ`, `ρ`, `τ`.
pub fn derived_pointers(s: &ApproxScheme) -> DerivedPointers {
    let h = real(0.5);
    let one = real(1.0);
    let comb = |terms: &[(C64, &GradedVector)]| {
        GradedVector::lin_comb(terms).expect("scheme components share their dimension")
    };
    DerivedPointers {
        chi: comb(&[(one, &s.sigma), (h, &s.rho), (h, &s.tau)]),
        chiprime: comb(&[(one, &s.sigma), (-h, &s.rho), (-h, &s.tau)]),
        eta: comb(&[(h, &s.tau), (-h, &s.rho)]),
    }
}

/// Probability of the undetermined outcome, `(η, η) = ¼ Σ ‖τ_ν − ρ_ν‖²`.
pub fn scheme_error(s: &ApproxScheme) -> f64 {
    let (lo, hi) = s.full_window();
    (lo..=hi)
        .map(|nu| {
            let t = s.tau.sector_or_zero(nu);
            let r = s.rho.sector_or_zero(nu);
            t.iter().zip(&r).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
        })
        .sum::<f64>()
        / 4.0
}

fn outside(v: &GradedVector, (lo, hi): (i64, i64)) -> f64 {
    v.restrict(|nu| nu < lo || nu > hi).norm()
}

/// Residuals of the scheme's defining relations.
///
/// Entries:
/// - `orthogonality[ν]`: `|(σ_ν,τ_ν) + (ρ_{ν−1},σ_{ν−1})|` for `ν = 1..=n+1`;
/// - `normalization-rho[ν]`, `normalization-tau[ν]`:
///   `|‖ξ_ν‖² − ‖σ_ν‖² − ‖ρ_{ν−1}‖²|` and `|‖ξ_ν‖² − ‖σ_ν‖² − ‖τ_{ν+1}‖²|`
///   for `ν = 1..=n`;
/// - `apparatus-norm`: `|Σ‖ξ_ν‖² − 1|`;
/// - `pointer-overlap`: `|4(χ,χ′)|`, whose real part is
///   `4Σ‖σ‖² − Σ‖ρ+τ‖²`;
/// - `sigma-eta`: `|Σ(σ_ν, τ_ν − ρ_ν)|`;
/// - `sum-difference`: `|Σ(τ_ν+ρ_ν, τ_ν−ρ_ν)|`;
/// - `window`: norm of all components outside their sector windows;
/// - `map/…`: the grading and isometry checks of [`ApproxScheme::interaction_map`].
pub fn validate_scheme(s: &ApproxScheme) -> ConstraintReport {
    let mut r = ConstraintReport::new();
    let n = s.n as i64;
    let sec = |v: &GradedVector, nu: i64| v.sector_or_zero(nu);
    for nu in 1..=n + 1 {
        let v = dot(&sec(&s.sigma, nu), &sec(&s.tau, nu)) + dot(&sec(&s.rho, nu - 1), &sec(&s.sigma, nu - 1));
        r.push(format!("orthogonality[{nu}]"), v.norm());
    }
    for nu in 1..=n {
        let x = s.xi.sector_norm_sqr(nu);
        let sg = s.sigma.sector_norm_sqr(nu);
        r.push(format!("normalization-rho[{nu}]"), x - sg - s.rho.sector_norm_sqr(nu - 1));
        r.push(format!("normalization-tau[{nu}]"), x - sg - s.tau.sector_norm_sqr(nu + 1));
    }
    r.push("apparatus-norm", s.xi.norm_sqr() - 1.0);

    let p = derived_pointers(s);
    let (lo, hi) = s.full_window();
    let overlap = inner(&p.chi, &p.chiprime).unwrap_or(real(f64::NAN)) * 4.0;
    r.push("pointer-overlap", overlap.norm());
    let mut sigma_eta = real(0.0);
    let mut sum_diff = real(0.0);
    for nu in lo..=hi {
        let (sg, t, rh) = (sec(&s.sigma, nu), sec(&s.tau, nu), sec(&s.rho, nu));
        let diff: Vec<C64> = t.iter().zip(&rh).map(|(a, b)| a - b).collect();
        let sum: Vec<C64> = t.iter().zip(&rh).map(|(a, b)| a + b).collect();
        sigma_eta += dot(&sg, &diff);
        sum_diff += dot(&sum, &diff);
    }
    r.push("sigma-eta", sigma_eta.norm());
    r.push("sum-difference", sum_diff.norm());

    let stray = [
        outside(&s.xi, s.xi_window()),
        outside(&s.sigma, s.sigma_window()),
        outside(&s.rho, s.rho_window()),
        outside(&s.tau, s.tau_window()),
    ];
    r.push("window", stray.iter().map(|x| x * x).sum::<f64>().sqrt());

    match s.interaction_map() {
        Ok(m) => r.extend_prefixed("map", &check_conserving(&m)),
        Err(_) => r.push("map/construction", f64::INFINITY),
    }
    r
}

/// Joint output `amp0 (ψ₀σ + ψ₁ρ) + amp1 (ψ₀τ + ψ₁σ)`.
pub fn apply_interaction(s: &ApproxScheme, obj: ObjectState) -> Result<GradedVector> {
    obj.require_normalized(TOL)?;
    let part0 = GradedVector::lin_comb(&[(obj.amp0, &s.sigma), (obj.amp1, &s.tau)])?;
    let part1 = GradedVector::lin_comb(&[(obj.amp0, &s.rho), (obj.amp1, &s.sigma)])?;
    join_parts(&part0, &part1)
}
