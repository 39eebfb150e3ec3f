//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero when any criterion fails.

mod common;

use std::time::{Duration, Instant};

use num_rational::Ratio;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use waylab::blockmap::{max_abs_diff, orthogonality_transfer_check};
use waylab::born::{born_distribution, sample_outcomes, three_outcome_stats, Observable};
use waylab::generalized::{classify, exchange_form, BranchSpec, CaseKind};
use waylab::graded::{inner, GradedVector, ObjectState};
use waylab::nogo::{
    balance_weighted_minimizer, exact_constraint_residual, infeasibility_certificate, parity_spread, PARITY_WEIGHT,
};
use waylab::optimizer::{fit_scaling, sweep, OptimizerOptions};
use waylab::scheme::{build_wigner_scheme, scheme_error, validate_scheme, wigner_error_exact};

use common::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let out = f();
    let elapsed = start.elapsed();
    let in_time = elapsed <= budget;
    let pass = out.pass && in_time;
    let timing = if in_time { String::new() } else { format!(" [over budget {budget:?}]") };
    println!(
        "{} {name}: {} ({:.2?}){timing}",
        if pass { "PASS" } else { "FAIL" },
        out.detail,
        elapsed
    );
    pass
}

fn error_law() -> Outcome {
    let mut failures = Vec::new();
    for n in [1usize, 2, 3, 10, 100, 1000, 10000] {
        let exact = wigner_error_exact(n).unwrap();
        if exact != Ratio::new(1, 2 * n as i128 - 1) {
            failures.push(format!("n={n}: exact value {exact}"));
        }
        let e = scheme_error(&build_wigner_scheme(n, 2).unwrap());
        let want = 1.0 / (2.0 * n as f64 - 1.0);
        if (e - want).abs() > 1e-12 {
            failures.push(format!("n={n}: error {e} vs {want}"));
        }
    }
    Outcome { pass: failures.is_empty(), detail: summary(failures, "1/(2n-1) at n in {1,2,3,10,100,1000,10000}") }
}

fn constraint_suite() -> Outcome {
    let mut failures = Vec::new();
    let mut worst: f64 = 0.0;
    for n in [1usize, 2, 3, 4, 7, 10, 100, 1000, 10000] {
        let r = validate_scheme(&build_wigner_scheme(n, 2).unwrap());
        if r.max_residual >= 1e-10 {
            let w = r.worst(1);
            failures.push(format!("n={n}: {} = {:e}", w[0].0, w[0].1));
        } else {
            worst = worst.max(r.max_residual);
        }
    }
    Outcome { pass: failures.is_empty(), detail: summary(failures, &format!("all residuals < 1e-10 (worst {worst:e})")) }
}

fn no_go() -> Outcome {
    let mut failures = Vec::new();
    let mut prev = f64::INFINITY;
    let mut certs = Vec::new();
    for n in 1..=64usize {
        let c = infeasibility_certificate(n).unwrap();
        if !(c.min_violation > 0.0) {
            failures.push(format!("n={n}: violation {}", c.min_violation));
        }
        if c.min_violation > prev * (1.0 + 1e-9) {
            failures.push(format!("n={n}: {} exceeds previous {prev}", c.min_violation));
        }
        let ab = c.minimizer.a.iter().chain(&c.minimizer.b).fold(0.0f64, |m, v| m.max(v.abs()));
        if ab > 1e-8 {
            failures.push(format!("n={n}: |a|,|b| up to {ab:e}"));
        }
        let w = balance_weighted_minimizer(n, PARITY_WEIGHT).unwrap();
        let r = exact_constraint_residual(&w).unwrap();
        let balance = r.matching("balance").map(|(_, v)| v).fold(0.0, f64::max);
        let spread = parity_spread(&w);
        if balance >= 1e-8 || spread >= 1e-6 {
            failures.push(format!("n={n}: balance {balance:e}, parity spread {spread:e}"));
        }
        prev = c.min_violation;
        certs.push(c.min_violation);
    }
    for n in 1..=4usize {
        let oracle = oracle_min_violation(n);
        let rel = (certs[n - 1] - oracle).abs() / oracle;
        if rel > 1e-4 {
            failures.push(format!("n={n}: {} vs oracle {oracle} (rel {rel:e})", certs[n - 1]));
        }
    }
    Outcome {
        pass: failures.is_empty(),
        detail: summary(
            failures,
            &format!("positive and non-increasing for n <= 64 (n=1: {:.7}, n=64: {:.4e}), oracle agrees for n <= 4", certs[0], certs[63]),
        ),
    }
}

fn scaling() -> Outcome {
    let ns = [4usize, 8, 16, 32, 64];
    let opts = OptimizerOptions::default();
    let table = sweep(&ns, 2, &opts).unwrap();
    let mut failures = Vec::new();
    for r in &table.rows {
        if let Some(note) = &r.note {
            failures.push(format!("n={}: {note}", r.n));
        } else if r.error_optimized > r.error_wigner + opts.tol_objective {
            failures.push(format!("n={}: {} above baseline {}", r.n, r.error_optimized, r.error_wigner));
        }
    }
    let slope = fit_scaling(&table).map(|f| f.slope).unwrap_or(f64::NAN);
    if !(slope <= -1.7) {
        failures.push(format!("slope {slope}"));
    }
    let errs: Vec<String> = table.rows.iter().map(|r| format!("{:.4e}", r.error_optimized)).collect();
    Outcome { pass: failures.is_empty(), detail: summary(failures, &format!("slope {slope:.4}, errors [{}]", errs.join(", "))) }
}

fn three_outcomes() -> Outcome {
    let s = build_wigner_scheme(3, 2).unwrap();
    let shots = 100_000u64;
    let mut failures = Vec::new();
    for (obj, expect, seed) in [(ObjectState::plus(), [0.8, 0.0, 0.2], 11u64), (ObjectState::minus(), [0.0, 0.8, 0.2], 12)] {
        let d = three_outcome_stats(&s, obj).unwrap();
        let counts = sample_outcomes(&d, shots, seed);
        for ((o, e), row) in d.outcomes.iter().zip(expect).zip(&counts.rows) {
            if (o.probability - e).abs() > 1e-10 {
                failures.push(format!("{}: probability {} vs {e}", o.label, o.probability));
            }
            let freq = row.count as f64 / shots as f64;
            let band = 4.0 * (e * (1.0 - e) / shots as f64).sqrt();
            if (freq - e).abs() > band {
                failures.push(format!("{}: frequency {freq} outside {e} +- {band}", o.label));
            }
        }
    }
    Outcome { pass: failures.is_empty(), detail: summary(failures, "exact (0.8, 0, 0.2) and (0, 0.8, 0.2); frequencies within 4 sigma") }
}

fn classifier() -> Outcome {
    let mut failures = Vec::new();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    // ψ′₀(χ₀ ± χ₁) with orthonormal χ₀, χ₁ rescaled so each branch has norm 1
    let psi = GradedVector::from_sectors(2, [(0, vec![c(0.0, 1.0), c(0.0, 0.0)])]).unwrap();
    let chi0 = GradedVector::from_sectors(3, [(0, vec![c(h * 0.6, 0.0), c(0.0, h * 0.8), c(0.0, 0.0)])]).unwrap();
    let chi1 = GradedVector::from_sectors(3, [(1, vec![c(0.0, 0.0), c(h, 0.0), c(0.0, 0.0)])]).unwrap();
    let plus = BranchSpec::new(psi.clone(), chi0.add(&chi1).unwrap());
    let minus = BranchSpec::new(psi, chi0.sub(&chi1).unwrap());
    let v = classify(&plus, &minus).unwrap();
    if v.kind != CaseKind::Case2 || v.cross_condition_residual >= 1e-10 {
        failures.push(format!("exchange instance: {:?}, residual {:e}", v.kind, v.cross_condition_residual));
    } else {
        let e = exchange_form(&v, &plus, &minus).unwrap();
        // one phase for both: (χ₀, χ₀_extracted) fixes it
        let ph = inner(&e.chi0, &chi0).unwrap();
        let ph = ph / ph.norm();
        let d0 = e.chi0.scale(ph).sub(&chi0).unwrap().norm();
        let d1 = e.chi1.scale(ph).sub(&chi1).unwrap().norm();
        if d0.max(d1) > 1e-10 {
            failures.push(format!("extracted pointers differ by {:e}", d0.max(d1)));
        }
    }

    let one = vec![c(1.0, 0.0)];
    let both = GradedVector::from_sectors(1, [(0, one.clone()), (1, one.clone())]).unwrap();
    let far = GradedVector::from_sectors(1, [(2, one.clone())]).unwrap();
    let bad_plus = BranchSpec::new(both.clone(), both.clone());
    let bad_minus = BranchSpec::new(both, far);
    let v = classify(&bad_plus, &bad_minus).unwrap();
    let pairs: Vec<(i64, i64)> = v.violations.iter().map(|x| (x.nu, x.mu)).collect();
    if v.kind != CaseKind::Infeasible || pairs != [(2, 1), (2, 0), (3, 1)] {
        failures.push(format!("support violation: {:?} with pairs {pairs:?}", v.kind));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(0xca5e);
    let mut wrong = 0;
    for _ in 0..1000 {
        let (p, m, expect) = random_clean_instance(&mut rng);
        if classify(&p, &m).unwrap().kind != expect {
            wrong += 1;
        }
    }
    if wrong > 0 {
        failures.push(format!("{wrong} of 1000 random instances misclassified"));
    }
    Outcome { pass: failures.is_empty(), detail: summary(failures, "exchange instance Case2, violations exact, 1000 random instances classified") }
}

fn postulate() -> Outcome {
    let mut failures = Vec::new();
    let basis = |k: usize| (0..3).map(|i| c(if i == k { 1.0 } else { 0.0 }, 0.0)).collect::<Vec<_>>();
    let obs = Observable::new(vec![1.0, 2.0], vec![vec![basis(0), basis(1)], vec![basis(2)]]).unwrap();
    let phi = vec![c(0.5, 0.0), c(0.5, 0.0), c(2f64.sqrt() / 2.0, 0.0)];
    let d = born_distribution(&obs, &phi).unwrap();
    let w1 = d.outcomes[0].probability;
    let post = d.outcomes[0].post_state.clone().unwrap();
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let post_err = post.iter().zip([h, h, 0.0]).map(|(a, b)| (a - c(b, 0.0)).norm()).fold(0.0, f64::max);
    if (w1 - 0.5).abs() > 1e-12 || post_err > 1e-12 {
        failures.push(format!("degenerate example: w1 = {w1}, post-state error {post_err:e}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(0xb02);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (obs, phi) = random_observable(&mut rng);
        worst = worst.max((born_distribution(&obs, &phi).unwrap().total() - 1.0).abs());
    }
    if worst > 1e-12 {
        failures.push(format!("probability sums off by {worst:e}"));
    }
    Outcome { pass: failures.is_empty(), detail: summary(failures, &format!("w1 = 1/2 with post state (e1+e2)/sqrt2; sums within {worst:.1e}")) }
}

fn orthogonality_transfer() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f7);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (map, inputs) = random_isometry(&mut rng, 3, -1, 2, 4);
        let (pre, post) = orthogonality_transfer_check(&map, &inputs).unwrap();
        worst = worst.max(max_abs_diff(&pre, &post));
    }
    Outcome { pass: worst <= 1e-10, detail: format!("Gram matrices agree to {worst:.1e} over 1000 isometries") }
}

fn summary(failures: Vec<String>, ok: &str) -> String {
    if failures.is_empty() {
        ok.to_string()
    } else {
        failures.join("; ")
    }
}

fn main() {
    let secs = Duration::from_secs;
    let results = [
        check("headline error law", secs(1), error_law),
        check("constraint suite", secs(10), constraint_suite),
        check("no-go certificate", secs(120), no_go),
        check("scaling of the optimized error", secs(600), scaling),
        check("three-outcome statistics", secs(5), three_outcomes),
        check("product-form classifier", secs(30), classifier),
        check("degenerate-eigenvalue rule", secs(30), postulate),
        check("orthogonality transfer", secs(30), orthogonality_transfer),
    ];
    let failed = results.iter().filter(|p| !**p).count();
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
