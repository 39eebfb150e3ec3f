//! Product-form final states with a sharp-charge apparatus.
//!
//! The apparatus starts at charge 0 and the object in a superposition of
//! charges 0 and 1, so the plus and minus branches
//!
//! ```text
//! (ψ₀ + ψ₁) ξ → (Σ ψ′_μ)(Σ χ′_λ)
//! (ψ₀ − ψ₁) ξ → (Σ ψ″_μ)(Σ χ″_λ)
//! ```
//!
//! may only populate total charges 0 and 1. Each product term `ψ_μ χ_λ`
//! lives in its own orthogonal subspace, so a forbidden total is clean only
//! when every term in it vanishes. What remains are two patterns: two object
//! sectors against one apparatus sector (the object keeps the charge), or
//! one object sector against two apparatus sectors (the charge moves into
//! the apparatus).
//!
//! Linearity adds the cross conditions: the sum of the branches is the
//! image of `2ψ₀ξ` and must sit at total 0, the difference is the image of
//! `2ψ₁ξ` and must sit at total 1.

use std::collections::BTreeSet;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::graded::{inner, GradedVector, C64};

/// Amplitude norm, relative to the normalized factor, above which a sector
/// counts as populated.
pub const FINITE_THRESHOLD: f64 = 1e-9;

/// Cross-condition residual above which a verdict is infeasible.
pub const CROSS_TOLERANCE: f64 = 1e-9;

/// One branch `(Σ ψ_μ)(Σ χ_λ)`; both parts may use any dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchSpec {
    pub object_part: GradedVector,
    pub apparatus_part: GradedVector,
}

impl BranchSpec {
    pub fn new(object_part: GradedVector, apparatus_part: GradedVector) -> Self {
        Self { object_part, apparatus_part }
    }

    pub fn norm(&self) -> f64 {
        self.object_part.norm() * self.apparatus_part.norm()
    }

    /// Both factors scaled to unit norm, or `None` for a vanishing branch.
    fn normalized(&self) -> Option<(GradedVector, GradedVector)> {
        let (no, na) = (self.object_part.norm(), self.apparatus_part.norm());
        if no == 0.0 || na == 0.0 {
            return None;
        }
        Some((
            self.object_part.scale(C64::new(1.0 / no, 0.0)),
            self.apparatus_part.scale(C64::new(1.0 / na, 0.0)),
        ))
    }

    /// Populated `(object, apparatus)` sectors after normalization.
    fn pattern(&self) -> (Vec<i64>, Vec<i64>) {
        match self.normalized() {
            Some((o, a)) => (o.support(FINITE_THRESHOLD), a.support(FINITE_THRESHOLD)),
            None => (Vec::new(), Vec::new()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    fn label(self) -> &'static str {
        match self {
            Branch::Plus => "plus",
            Branch::Minus => "minus",
        }
    }
}

/// Populated term `ψ_μ χ_{ν−μ}` at a forbidden total charge `ν`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Violation {
    pub branch: Branch,
    pub nu: i64,
    pub mu: i64,
}

impl Violation {
    pub fn lambda(&self) -> i64 {
        self.nu - self.mu
    }
}

impl Serialize for Violation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        [self.nu, self.mu].serialize(s)
    }
}

/// Every populated product term with total charge outside `{0, 1}`, plus
/// branch first, then by `(ν, μ)`.
pub fn support_check(plus: &BranchSpec, minus: &BranchSpec) -> Vec<Violation> {
    let mut out = Vec::new();
    for (branch, spec) in [(Branch::Plus, plus), (Branch::Minus, minus)] {
        let (obj, app) = spec.pattern();
        let mut found = BTreeSet::new();
        for &mu in &obj {
            for &lambda in &app {
                let nu = mu + lambda;
                if nu != 0 && nu != 1 {
                    found.insert((nu, mu));
                }
            }
        }
        out.extend(found.into_iter().map(|(nu, mu)| Violation { branch, nu, mu }));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseKind {
    /// Two object sectors, one apparatus sector.
    Case1,
    /// One object sector, two apparatus sectors: charge exchange.
    Case2,
    Infeasible,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CaseVerdict {
    pub kind: CaseKind,
    /// Labels like `plus.psi0`, `minus.chi1` for every populated sector.
    pub finite_components: Vec<String>,
    /// `max(‖(P+M) off total 0‖, ‖(P−M) off total 1‖)` for the normalized
    /// branches `P`, `M`.
    pub cross_condition_residual: f64,
    pub violations: Vec<Violation>,
    /// `|(P, M)|`; unitarity needs it to vanish, but it does not enter `kind`.
    #[serde(skip)]
    pub branch_overlap: f64,
}

/// `‖Σ_i c_i x_i ⊗ y_i‖²`, summed entrywise so that nearly cancelling
/// terms leave a residual at rounding level rather than its square root.
fn product_sum_norm_sqr(terms: &[(f64, &[C64], &[C64])]) -> f64 {
    let Some(&(_, x0, y0)) = terms.first() else { return 0.0 };
    let mut sq = 0.0;
    for i in 0..x0.len() {
        for j in 0..y0.len() {
            let z: C64 = terms.iter().map(|&(c, x, y)| x[i] * y[j] * c).sum();
            sq += z.norm_sqr();
        }
    }
    sq
}

fn check_dims(plus: &BranchSpec, minus: &BranchSpec) -> Result<()> {
    if plus.object_part.dim() != minus.object_part.dim() || plus.apparatus_part.dim() != minus.apparatus_part.dim() {
        return Err(Error::structural("plus and minus branches use different dimensions"));
    }
    Ok(())
}

/// `‖x⊗y + sign·u⊗v‖²` restricted to total charges where `keep` holds.
fn pair_norm_sqr(
    (x, y): (&GradedVector, &GradedVector),
    (u, v): (&GradedVector, &GradedVector),
    sign: f64,
    keep: impl Fn(i64) -> bool,
) -> f64 {
    let mut mus: BTreeSet<i64> = x.sectors().map(|(mu, _)| mu).collect();
    mus.extend(u.sectors().map(|(mu, _)| mu));
    let mut lambdas: BTreeSet<i64> = y.sectors().map(|(l, _)| l).collect();
    lambdas.extend(v.sectors().map(|(l, _)| l));
    let mut sq = 0.0;
    for &mu in &mus {
        for &lambda in &lambdas {
            if !keep(mu + lambda) {
                continue;
            }
            let (xo, ya) = (x.sector_or_zero(mu), y.sector_or_zero(lambda));
            let (uo, va) = (u.sector_or_zero(mu), v.sector_or_zero(lambda));
            sq += product_sum_norm_sqr(&[(1.0, &xo, &ya), (sign, &uo, &va)]);
        }
    }
    sq
}

/// Norm of the sum (`sign = 1`) or difference (`sign = −1`) of the
/// normalized branches outside the total charge `allowed`.
fn off_total_norm(
    p: &(GradedVector, GradedVector),
    m: &(GradedVector, GradedVector),
    sign: f64,
    allowed: i64,
) -> f64 {
    pair_norm_sqr((&p.0, &p.1), (&m.0, &m.1), sign, |nu| nu != allowed).sqrt()
}

/// Which pattern a single branch shows, if any.
fn branch_case(obj: &[i64], app: &[i64]) -> Option<CaseKind> {
    match (obj.len(), app.len()) {
        (2, 1) => Some(CaseKind::Case1),
        (1, 2) => Some(CaseKind::Case2),
        _ => None,
    }
}

/// Support check, populated sectors and cross conditions in one verdict.
///
/// The case follows the plus branch, or the minus branch when the plus
/// branch is a single product term. Branches that are both single terms
/// pass the cross conditions only by coinciding, and are reported
/// infeasible.
pub fn classify(plus: &BranchSpec, minus: &BranchSpec) -> Result<CaseVerdict> {
    check_dims(plus, minus)?;
    let violations = support_check(plus, minus);
    let mut finite_components = Vec::new();
    let mut patterns = Vec::new();
    for (branch, spec) in [(Branch::Plus, plus), (Branch::Minus, minus)] {
        let (obj, app) = spec.pattern();
        finite_components.extend(obj.iter().map(|mu| format!("{}.psi{mu}", branch.label())));
        finite_components.extend(app.iter().map(|l| format!("{}.chi{l}", branch.label())));
        patterns.push(branch_case(&obj, &app));
    }

    let (Some(p), Some(m)) = (plus.normalized(), minus.normalized()) else {
        return Ok(CaseVerdict {
            kind: CaseKind::Infeasible,
            finite_components,
            cross_condition_residual: 1.0,
            violations,
            branch_overlap: 0.0,
        });
    };
    let residual = off_total_norm(&p, &m, 1.0, 0).max(off_total_norm(&p, &m, -1.0, 1));
    let branch_overlap = (inner(&p.0, &m.0)? * inner(&p.1, &m.1)?).norm();

    let kind = if !violations.is_empty() || residual > CROSS_TOLERANCE {
        CaseKind::Infeasible
    } else {
        patterns[0].or(patterns[1]).unwrap_or(CaseKind::Infeasible)
    };
    Ok(CaseVerdict { kind, finite_components, cross_condition_residual: residual, violations, branch_overlap })
}

/// The charge-exchange form `ψ(χ₀ ± χ₁)` of a pair of branches.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeForm {
    /// Unit object vector shared by both branches.
    pub object: GradedVector,
    pub chi0: GradedVector,
    pub chi1: GradedVector,
}

impl ExchangeForm {
    /// `ψ ⊗ (χ₀ + sign χ₁)` as a branch.
    pub fn branch(&self, sign: f64) -> Result<BranchSpec> {
        let app = GradedVector::lin_comb(&[(C64::new(1.0, 0.0), &self.chi0), (C64::new(sign, 0.0), &self.chi1)])?;
        Ok(BranchSpec::new(self.object.clone(), app))
    }

    /// Largest distance between a rebuilt branch and the given one, compared
    /// as product vectors.
    pub fn reproduction_residual(&self, plus: &BranchSpec, minus: &BranchSpec) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for (sign, given) in [(1.0, plus), (-1.0, minus)] {
            let rebuilt = self.branch(sign)?;
            worst = worst.max(product_distance(&rebuilt, given)?);
        }
        Ok(worst)
    }

    /// `|(χ₀, χ₁)|`.
    pub fn chi_overlap(&self) -> f64 {
        inner(&self.chi0, &self.chi1).map(|z| z.norm()).unwrap_or(f64::NAN)
    }
}

/// `‖x⊗y − u⊗v‖` for two branches.
pub fn product_distance(a: &BranchSpec, b: &BranchSpec) -> Result<f64> {
    check_dims(a, b)?;
    Ok(pair_norm_sqr((&a.object_part, &a.apparatus_part), (&b.object_part, &b.apparatus_part), -1.0, |_| true).sqrt())
}

/// Splits Case2 branches into `ψ(χ₀ + χ₁)` and `ψ(χ₀ − χ₁)`.
///
/// `ψ` is the plus object part scaled to unit norm; the minus branch is
/// projected onto it, which loses nothing when the cross conditions hold.
pub fn exchange_form(verdict: &CaseVerdict, plus: &BranchSpec, minus: &BranchSpec) -> Result<ExchangeForm> {
    if verdict.kind != CaseKind::Case2 {
        return Err(Error::domain(format!("exchange form needs a Case2 verdict, got {:?}", verdict.kind)));
    }
    check_dims(plus, minus)?;
    let no = plus.object_part.norm();
    let object = plus.object_part.scale(C64::new(1.0 / no, 0.0));
    let p = plus.apparatus_part.scale(C64::new(no, 0.0));
    let m = minus.apparatus_part.scale(inner(&object, &minus.object_part)?);
    let half = C64::new(0.5, 0.0);
    let chi0 = GradedVector::lin_comb(&[(half, &p), (half, &m)])?;
    let chi1 = GradedVector::lin_comb(&[(half, &p), (-half, &m)])?;
    Ok(ExchangeForm { object, chi0, chi1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn gv(d: usize, sectors: &[(i64, Vec<C64>)]) -> GradedVector {
        GradedVector::from_sectors(d, sectors.iter().cloned()).unwrap()
    }

    fn exchange_instance() -> (BranchSpec, BranchSpec, GradedVector, GradedVector) {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi = gv(2, &[(0, vec![c(0.6, 0.0), c(0.0, 0.8)])]);
        let chi0 = gv(2, &[(0, vec![c(h, 0.0), c(0.0, 0.0)])]);
        let chi1 = gv(2, &[(1, vec![c(0.0, 0.0), c(0.0, h)])]);
        let plus = BranchSpec::new(psi.clone(), chi0.add(&chi1).unwrap());
        let minus = BranchSpec::new(psi, chi0.sub(&chi1).unwrap());
        (plus, minus, chi0, chi1)
    }

    #[test]
    fn support_patterns() {
        let one = vec![c(1.0, 0.0)];
        let obj01 = gv(1, &[(0, one.clone()), (1, one.clone())]);
        let obj0 = gv(1, &[(0, one.clone())]);
        let app0 = gv(1, &[(0, one.clone())]);
        let app01 = gv(1, &[(0, one.clone()), (1, one.clone())]);
        let clean1 = BranchSpec::new(obj01.clone(), app0.clone());
        let clean2 = BranchSpec::new(obj0.clone(), app01.clone());
        assert!(support_check(&clean1, &clean1).is_empty());
        assert!(support_check(&clean2, &clean2).is_empty());
        let bad = BranchSpec::new(obj01, app01);
        let v = support_check(&bad, &clean1);
        assert_eq!(v, vec![Violation { branch: Branch::Plus, nu: 2, mu: 1 }]);
        assert_eq!(v[0].lambda(), 1);
        assert_eq!(serde_json::to_string(&v).unwrap(), "[[2,1]]");
    }

    #[test]
    fn exchange_instance_is_case2() {
        let (plus, minus, chi0, chi1) = exchange_instance();
        let v = classify(&plus, &minus).unwrap();
        assert_eq!(v.kind, CaseKind::Case2);
        assert!(v.cross_condition_residual < 1e-14);
        assert!(v.branch_overlap < 1e-14);
        assert_eq!(v.finite_components, ["plus.psi0", "plus.chi0", "plus.chi1", "minus.psi0", "minus.chi0", "minus.chi1"]);
        let e = exchange_form(&v, &plus, &minus).unwrap();
        assert!(e.reproduction_residual(&plus, &minus).unwrap() < 1e-14);
        // the object vector is already normalized, so χ₀, χ₁ come back as given
        assert!(e.chi0.approx_eq(&chi0, 1e-14) && e.chi1.approx_eq(&chi1, 1e-14));
    }

    #[test]
    fn object_keeping_charge_is_case1() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let psi0 = gv(1, &[(0, vec![c(h, 0.0)])]);
        let psi1 = gv(1, &[(1, vec![c(0.0, h)])]);
        let chi = gv(3, &[(0, vec![c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)])]);
        let plus = BranchSpec::new(psi0.add(&psi1).unwrap(), chi.clone());
        let minus = BranchSpec::new(psi0.sub(&psi1).unwrap(), chi);
        let v = classify(&plus, &minus).unwrap();
        assert_eq!(v.kind, CaseKind::Case1);
        assert!(v.cross_condition_residual < 1e-14);
        assert!(matches!(exchange_form(&v, &plus, &minus), Err(Error::Domain(_))));
    }

    #[test]
    fn wrong_relative_sign_breaks_cross_condition() {
        let (plus, _, chi0, chi1) = exchange_instance();
        // minus branch equal to the plus one: the difference vanishes, the sum leaks
        let minus = BranchSpec::new(plus.object_part.clone(), chi0.add(&chi1).unwrap());
        let v = classify(&plus, &minus).unwrap();
        assert_eq!(v.kind, CaseKind::Infeasible);
        assert!(v.violations.is_empty());
        assert!((v.cross_condition_residual - 2.0f64.sqrt()).abs() < 1e-12, "{}", v.cross_condition_residual);
    }

    #[test]
    fn support_violation_is_infeasible() {
        let one = vec![c(1.0, 0.0)];
        let both = gv(1, &[(0, one.clone()), (1, one.clone())]);
        let b = BranchSpec::new(both.clone(), both);
        let v = classify(&b, &b).unwrap();
        assert_eq!(v.kind, CaseKind::Infeasible);
        assert_eq!(v.violations.len(), 2);
        let json = serde_json::to_value(&v).unwrap();
        assert_eq!(json["kind"], "Infeasible");
        assert_eq!(json["violations"], serde_json::json!([[2, 1], [2, 1]]));
    }

    #[test]
    fn common_phase_carries_through() {
        let (plus, minus, _, _) = exchange_instance();
        let ph = C64::from_polar(1.0, 0.7);
        let rot = |b: &BranchSpec| BranchSpec::new(b.object_part.clone(), b.apparatus_part.scale(ph));
        let v = classify(&rot(&plus), &rot(&minus)).unwrap();
        assert_eq!(v.kind, CaseKind::Case2);
        let base = exchange_form(&classify(&plus, &minus).unwrap(), &plus, &minus).unwrap();
        let e = exchange_form(&v, &rot(&plus), &rot(&minus)).unwrap();
        assert!(e.chi0.approx_eq(&base.chi0.scale(ph), 1e-14));
        assert!(e.chi1.approx_eq(&base.chi1.scale(ph), 1e-14));
    }

    #[test]
    fn unequal_pointer_norms_still_extract() {
        let psi = gv(1, &[(0, vec![c(1.0, 0.0)])]);
        let chi0 = gv(1, &[(0, vec![c(0.8, 0.0)])]);
        let chi1 = gv(1, &[(1, vec![c(0.6, 0.0)])]);
        let plus = BranchSpec::new(psi.clone(), chi0.add(&chi1).unwrap());
        let minus = BranchSpec::new(psi, chi0.sub(&chi1).unwrap());
        let v = classify(&plus, &minus).unwrap();
        assert_eq!(v.kind, CaseKind::Case2);
        // (χ₀+χ₁, χ₀−χ₁) = 0.64 − 0.36
        assert!((v.branch_overlap - 0.28).abs() < 1e-12);
        let e = exchange_form(&v, &plus, &minus).unwrap();
        assert!(e.reproduction_residual(&plus, &minus).unwrap() < 1e-14);
    }
}
