//! No exact measurement exists under the conservation law: the least-squares
//! violation of the exact relations stays positive for every support size.

use std::error::Error;

use waylab::graded::{ObjectState, C64};
use waylab::nogo::{balance_weighted_minimizer, derive_witness, infeasibility_certificate, parity_spread, rotated_basis_residual, PARITY_WEIGHT};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    for n in [1, 2, 4, 8, 16] {
        let cert = infeasibility_certificate(n)?;
        println!("n = {n:>2}: min violation {:.6e}", cert.min_violation);
    }

    let w = derive_witness(3);
    println!("\nwhy n = 3 fails (conflict: {}):", w.conflict);
    for step in &w.steps {
        println!("  {step}");
    }

    let data = balance_weighted_minimizer(8, PARITY_WEIGHT)?;
    println!("\nweighted minimizer at n = 8: t spread within parity {:.2e}", parity_spread(&data));

    let h = std::f64::consts::FRAC_1_SQRT_2;
    let tilted = ObjectState::new(C64::new(h, 0.0), C64::new(0.0, h));
    let cert = rotated_basis_residual(4, tilted)?;
    println!("rotated basis, n = 4: min violation {:.6e}", cert.min_violation);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
