//! The canonical approximate scheme: its exact error, its defining relations
//! and the pointer states it produces.

use std::error::Error;

use waylab::graded::inner;
use waylab::scheme::{build_wigner_scheme, derived_pointers, scheme_error, validate_scheme, wigner_coefficients, wigner_error_exact};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    println!("{:>6} {:>12} {:>14} {:>12}", "n", "exact", "error", "worst");
    for n in [2, 3, 5, 10, 100] {
        let s = build_wigner_scheme(n, 2)?;
        let report = validate_scheme(&s);
        println!("{n:>6} {:>12} {:>14.6e} {:>12.2e}", wigner_error_exact(n)?.to_string(), scheme_error(&s), report.max_residual);
    }

    let (c, cprime) = wigner_coefficients(4)?;
    println!("\nn = 4: c = {c}, c' = {cprime}");
    let s = build_wigner_scheme(4, 2)?;
    let p = derived_pointers(&s);
    println!("(chi, chi') = {:.3e}", inner(&p.chi, &p.chiprime)?.norm());
    println!("|eta|^2 = {:.6}", p.eta.norm_sqr());
    for (id, r) in validate_scheme(&s).worst(3) {
        println!("  {id}: {r:.1e}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
