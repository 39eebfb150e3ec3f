//! Outcome probabilities, post-measurement states and seeded sampling.
//!
//! Sampling uses ChaCha8 (`rand_chacha` 0.3) seeded through
//! `SeedableRng::seed_from_u64`, one `WeightedIndex` draw per shot over the
//! outcome probabilities in their listed order.

use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::distributions::{Distribution, WeightedIndex};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blockmap::TOL;
use crate::error::{Error, Result};
use crate::graded::{dot, inner, join_parts, norm_sqr, split_joint, GradedVector, ObjectState, C64};
use crate::scheme::{apply_interaction, derived_pointers, validate_scheme, ApproxScheme};

/// Component of the state outside every eigenspace above which an
/// `outside-span` outcome is reported.
pub const SPAN_TOL: f64 = 1e-10;

/// Largest `validate_scheme` residual accepted by [`three_outcome_stats`].
pub const SCHEME_TOL: f64 = 1e-8;

pub const OUTSIDE_SPAN: &str = "outside-span";

/// Observable with discrete spectrum: eigenvalue `q_ν` and an orthonormal
/// family `ψ_νκ` spanning its eigenspace.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observable {
    eigenvalues: Vec<f64>,
    eigenspaces: Vec<Vec<Vec<C64>>>,
    dim: usize,
}

impl Observable {
    /// Checks that the families are nonempty, share one dimension, are
    /// orthonormal across the whole observable, and that eigenvalues are
    /// distinct.
    pub fn new(eigenvalues: Vec<f64>, eigenspaces: Vec<Vec<Vec<C64>>>) -> Result<Self> {
        if eigenvalues.len() != eigenspaces.len() || eigenvalues.is_empty() {
            return Err(Error::structural(format!(
                "{} eigenvalues for {} eigenspaces",
                eigenvalues.len(),
                eigenspaces.len()
            )));
        }
        let dim = eigenspaces[0].first().map(Vec::len).unwrap_or(0);
        if eigenspaces.iter().any(Vec::is_empty) || dim == 0 {
            return Err(Error::structural("empty eigenspace family"));
        }
        for (i, a) in eigenvalues.iter().enumerate() {
            if eigenvalues[..i].contains(a) {
                return Err(Error::structural(format!("eigenvalue {a} listed twice")));
            }
        }
        let all: Vec<&Vec<C64>> = eigenspaces.iter().flatten().collect();
        if all.iter().any(|v| v.len() != dim) {
            return Err(Error::structural("eigenvectors of different dimensions"));
        }
        for (i, u) in all.iter().enumerate() {
            for (j, v) in all.iter().enumerate().skip(i) {
                let expect = if i == j { 1.0 } else { 0.0 };
                let g = dot(u, v);
                if (g - C64::new(expect, 0.0)).norm() > TOL {
                    return Err(Error::structural(format!(
                        "eigenvectors {i} and {j} have inner product {g}, expected {expect}"
                    )));
                }
            }
        }
        Ok(Self { eigenvalues, eigenspaces, dim })
    }

    /// Spectral decomposition of a Hermitian matrix; eigenvalues closer than
    /// `tol` share an eigenspace.
    pub fn from_hermitian(m: &DMatrix<C64>, tol: f64) -> Result<Self> {
        if !m.is_square() || m.nrows() == 0 {
            return Err(Error::structural("observable matrix must be square and nonempty"));
        }
        let herm = (m - m.adjoint()).camax();
        if herm > TOL * m.camax().max(1.0) {
            return Err(Error::domain(format!("matrix is not Hermitian (defect {herm:e})")));
        }
        let eig = SymmetricEigen::new(m.clone());
        let mut order: Vec<usize> = (0..m.nrows()).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let mut values: Vec<f64> = Vec::new();
        let mut spaces: Vec<Vec<Vec<C64>>> = Vec::new();
        let mut anchor = f64::NEG_INFINITY;
        for k in order {
            let q = eig.eigenvalues[k];
            let v: Vec<C64> = eig.eigenvectors.column(k).iter().copied().collect();
            if q - anchor <= tol {
                spaces.last_mut().expect("anchor set").push(v);
            } else {
                anchor = q;
                values.push(q);
                spaces.push(vec![v]);
            }
        }
        Self::new(values, spaces)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenspaces(&self) -> &[Vec<Vec<C64>>] {
        &self.eigenspaces
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome<S> {
    pub label: String,
    pub probability: f64,
    /// Normalized post-measurement state; `None` when the probability is zero.
    pub post_state: Option<S>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeDistribution<S> {
    pub outcomes: Vec<Outcome<S>>,
}

impl<S> OutcomeDistribution<S> {
    pub fn probability(&self, label: &str) -> Option<f64> {
        self.outcomes.iter().find(|o| o.label == label).map(|o| o.probability)
    }

    pub fn total(&self) -> f64 {
        self.outcomes.iter().map(|o| o.probability).sum()
    }
}

fn normalized(v: Vec<C64>, w: f64) -> Option<Vec<C64>> {
    (w > 0.0).then(|| v.into_iter().map(|z| z / w.sqrt()).collect())
}

/// `w_ν = Σ_κ |(ψ_νκ, φ)|²` with post state `Σ_κ w_ν^{−1/2} (ψ_νκ, φ) ψ_νκ`.
///
/// Labels are the eigenvalues printed with `{}`. When the eigenspaces miss a
/// part of `φ` of norm at least [`SPAN_TOL`], an `outside-span` outcome
/// carries it.
pub fn born_distribution(obs: &Observable, phi: &[C64]) -> Result<OutcomeDistribution<Vec<C64>>> {
    if phi.len() != obs.dim {
        return Err(Error::structural(format!("state of dimension {} for observable of dimension {}", phi.len(), obs.dim)));
    }
    let total = norm_sqr(phi);
    if (total - 1.0).abs() > TOL {
        return Err(Error::domain(format!("state is not normalized: norm squared {total}")));
    }
    let mut outcomes = Vec::with_capacity(obs.eigenvalues.len() + 1);
    let mut rest = phi.to_vec();
    for (q, family) in obs.eigenvalues.iter().zip(&obs.eigenspaces) {
        let mut proj = vec![C64::new(0.0, 0.0); obs.dim];
        let mut w = 0.0;
        for psi in family {
            let a = dot(psi, phi);
            w += a.norm_sqr();
            for (p, (x, r)) in proj.iter_mut().zip(psi.iter().zip(rest.iter_mut())) {
                *p += a * x;
                *r -= a * x;
            }
        }
        outcomes.push(Outcome { label: format!("{q}"), probability: w, post_state: normalized(proj, w) });
    }
    let w_rest = norm_sqr(&rest);
    if w_rest.sqrt() >= SPAN_TOL {
        outcomes.push(Outcome { label: OUTSIDE_SPAN.into(), probability: w_rest, post_state: normalized(rest, w_rest) });
    }
    Ok(OutcomeDistribution { outcomes })
}

/// Labels of [`three_outcome_stats`].
pub const THREE_OUTCOMES: [&str; 3] = ["plus", "minus", "undetermined"];

/// Pointer readout after the interaction: the apparatus factor is projected
/// onto `χ/‖χ‖` (`plus`), `χ′/‖χ′‖` (`minus`) and the remainder
/// (`undetermined`). Post states are joint states.
pub fn three_outcome_stats(s: &ApproxScheme, obj: ObjectState) -> Result<OutcomeDistribution<GradedVector>> {
    let report = validate_scheme(s);
    if !report.passes(SCHEME_TOL) {
        let worst: Vec<String> = report.worst(3).iter().map(|(id, v)| format!("{id} = {v:e}")).collect();
        return Err(Error::domain(format!("scheme fails validation: {}", worst.join(", "))));
    }
    let joint = apply_interaction(s, obj)?;
    let (a0, a1) = split_joint(&joint)?;
    let p = derived_pointers(s);
    let unit = |v: &GradedVector| -> Result<GradedVector> {
        let nv = v.norm();
        if nv == 0.0 {
            return Err(Error::domain("pointer state vanishes"));
        }
        Ok(v.scale(C64::new(1.0 / nv, 0.0)))
    };
    let pointers = [unit(&p.chi)?, unit(&p.chiprime)?];

    let mut parts: Vec<(GradedVector, GradedVector)> = Vec::with_capacity(3);
    let (mut r0, mut r1) = (a0.clone(), a1.clone());
    for e in &pointers {
        let (c0, c1) = (inner(e, &a0)?, inner(e, &a1)?);
        let (p0, p1) = (e.scale(c0), e.scale(c1));
        r0 = r0.sub(&p0)?;
        r1 = r1.sub(&p1)?;
        parts.push((p0, p1));
    }
    parts.push((r0, r1));

    let outcomes = THREE_OUTCOMES
        .iter()
        .zip(parts)
        .map(|(label, (p0, p1))| {
            let w = p0.norm_sqr() + p1.norm_sqr();
            let post = if w > 0.0 {
                Some(join_parts(&p0, &p1)?.scale(C64::new(1.0 / w.sqrt(), 0.0)).canonical())
            } else {
                None
            };
            Ok(Outcome { label: label.to_string(), probability: w, post_state: post })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OutcomeDistribution { outcomes })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountRow {
    pub label: String,
    pub count: u64,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Counts {
    pub shots: u64,
    pub rows: Vec<CountRow>,
}

impl Counts {
    pub fn count(&self, label: &str) -> Option<u64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.count)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        w.write_record(["label", "count", "probability"])?;
        for r in &self.rows {
            w.write_record([r.label.clone(), r.count.to_string(), format!("{:.16e}", r.probability)])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii output")
    }
}

/// Multinomial draw of `shots` outcomes, deterministic in `seed`.
pub fn sample_outcomes<S>(dist: &OutcomeDistribution<S>, shots: u64, seed: u64) -> Counts {
    let mut rows: Vec<CountRow> = dist
        .outcomes
        .iter()
        .map(|o| CountRow { label: o.label.clone(), count: 0, probability: o.probability })
        .collect();
    let weights: Vec<f64> = dist.outcomes.iter().map(|o| o.probability.max(0.0)).collect();
    if let Ok(index) = WeightedIndex::new(&weights) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..shots {
            rows[index.sample(&mut rng)].count += 1;
        }
    }
    Counts { shots, rows }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scheme::{build_wigner_scheme, scheme_error};

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn basis(dim: usize, k: usize) -> Vec<C64> {
        (0..dim).map(|i| c(if i == k { 1.0 } else { 0.0 })).collect()
    }

    #[test]
    fn eigenstate_is_certain() {
        let obs = Observable::new(vec![1.0, 2.0], vec![vec![basis(2, 0)], vec![basis(2, 1)]]).unwrap();
        let d = born_distribution(&obs, &basis(2, 1)).unwrap();
        assert_eq!(d.probability("2"), Some(1.0));
        assert_eq!(d.probability("1"), Some(0.0));
        assert_eq!(d.outcomes[1].post_state.as_deref(), Some(&basis(2, 1)[..]));
        assert!(d.outcomes[0].post_state.is_none());
    }

    #[test]
    fn degenerate_eigenspace_sums_over_family() {
        // ψ₁₁, ψ₁₂ span q = 1, ψ₂ is q = 2; φ = (ψ₁₁ + ψ₁₂ + √2 ψ₂)/2
        let obs = Observable::new(vec![1.0, 2.0], vec![vec![basis(3, 0), basis(3, 1)], vec![basis(3, 2)]]).unwrap();
        let phi = vec![c(0.5), c(0.5), c(2f64.sqrt() / 2.0)];
        let d = born_distribution(&obs, &phi).unwrap();
        assert!((d.probability("1").unwrap() - 0.5).abs() < 1e-15);
        let post = d.outcomes[0].post_state.as_ref().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(post.iter().zip([h, h, 0.0]).all(|(a, b)| (a - c(b)).norm() < 1e-15));
        assert!((d.total() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn outside_span_outcome() {
        let obs = Observable::new(vec![0.0], vec![vec![basis(2, 0)]]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let d = born_distribution(&obs, &[c(h), c(h)]).unwrap();
        assert_eq!(d.outcomes.len(), 2);
        assert!((d.probability(OUTSIDE_SPAN).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(born_distribution(&obs, &[c(1.0), c(1.0)]), Err(Error::Domain(_))));
    }

    #[test]
    fn rejects_non_orthonormal_families() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let tilted = vec![c(h), c(h)];
        assert!(Observable::new(vec![0.0, 1.0], vec![vec![basis(2, 0)], vec![tilted]]).is_err());
        assert!(Observable::new(vec![0.0, 0.0], vec![vec![basis(2, 0)], vec![basis(2, 1)]]).is_err());
        assert!(Observable::new(vec![0.0], vec![vec![]]).is_err());
    }

    #[test]
    fn hermitian_decomposition_groups_degenerate_values() {
        let m = DMatrix::from_row_slice(3, 3, &[c(2.0), c(0.0), c(0.0), c(0.0), c(2.0), c(0.0), c(0.0), c(0.0), c(-1.0)]);
        let obs = Observable::from_hermitian(&m, 1e-9).unwrap();
        assert_eq!(obs.eigenvalues().len(), 2);
        assert_eq!(obs.eigenspaces()[1].len(), 2);
    }

    #[test]
    fn three_outcomes_at_three() {
        let s = build_wigner_scheme(3, 2).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        for (obj, expect) in [(ObjectState::real(h, h), [0.8, 0.0, 0.2]), (ObjectState::real(h, -h), [0.0, 0.8, 0.2])] {
            let d = three_outcome_stats(&s, obj).unwrap();
            for (o, e) in d.outcomes.iter().zip(expect) {
                assert!((o.probability - e).abs() < 1e-12, "{}: {}", o.label, o.probability);
            }
            assert!((d.probability("undetermined").unwrap() - scheme_error(&s)).abs() < 1e-12);
            for o in &d.outcomes {
                if let Some(p) = &o.post_state {
                    assert!((p.norm() - 1.0).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn unvalidated_scheme_is_rejected() {
        let s = build_wigner_scheme(1, 2).unwrap();
        assert!(matches!(three_outcome_stats(&s, ObjectState::plus()), Err(Error::Domain(_))));
    }

    #[test]
    fn sampling_is_deterministic_and_exact_on_certain_outcomes() {
        let dist = OutcomeDistribution::<()> {
            outcomes: vec![
                Outcome { label: "a".into(), probability: 0.0, post_state: None },
                Outcome { label: "b".into(), probability: 1.0, post_state: None },
            ],
        };
        let counts = sample_outcomes(&dist, 100, 7);
        assert_eq!(counts.count("b"), Some(100));
        assert_eq!(counts, sample_outcomes(&dist, 100, 7));
        assert_eq!(counts.to_csv_string(), "label,count,probability\na,0,0.0000000000000000e0\nb,100,1.0000000000000000e0\n");
    }
}
