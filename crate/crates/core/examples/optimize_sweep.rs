//! Searching for schemes that beat the canonical one, and the power law of
//! the best error found.

use std::error::Error;

use waylab::optimizer::{fit_scaling, optimize_scheme_detailed, sweep, OptimizerOptions};

pub fn run_example() -> Result<(), Box<dyn Error>> {
    let opts = OptimizerOptions { starts: 3, ..OptimizerOptions::default() };

    let o = optimize_scheme_detailed(5, 2, &opts)?;
    println!("n = 5: error {:.6e} (canonical {:.6e}), residual {:.1e}, start {}", o.objective, 1.0 / 9.0, o.constraint_residual, o.start);

    let table = sweep(&[4, 8, 16], 2, &opts)?;
    print!("\n{}", table.to_csv_string());
    let fit = fit_scaling(&table)?;
    println!("slope {:.4}, intercept {:.4}, r2 {:.5}", fit.slope, fit.intercept, fit.r2);
    Ok(())
}

#[allow(dead_code)]
fn main() -> Result<(), Box<dyn Error>> {
    run_example()
}
